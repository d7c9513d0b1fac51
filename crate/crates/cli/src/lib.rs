//! Batch front end for the `domino-core` numerics: TOML configuration,
//! experiment subcommands and CSV/JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod validate;

pub use config::{RouteSel, RunConfig};
pub use error::{CliError, CliResult};
