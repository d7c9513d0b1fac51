use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use domino_cli::commands::{compute_infinite, compute_radiate, compute_resolvent};
use domino_cli::output::{report, write_json};
use domino_cli::validate::{parse_only, run_checks, summary};
use domino_cli::{CliError, CliResult, RouteSel, RunConfig};

/// Experiments on the quantum-domino chain and its radiating extension.
#[derive(Debug, Parser)]
#[command(name = "domino", version)]
struct Cli {
    /// TOML configuration; built-in defaults are used for anything missing.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path (validate writes JSON here). A `.json` report is
    /// written next to each CSV.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the route from the configuration.
    #[arg(long, global = true, value_enum)]
    route: Option<RouteSel>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Flip probabilities of the semi-infinite chain and their decay fit.
    Infinite,
    /// Resolvent boundary values on a p grid, after the pre-flight scan.
    Resolvent,
    /// Emission probability of the radiating chain over time.
    Radiate,
    /// Runs the invariant suite and reports pass/fail as JSON.
    Validate {
        /// Restrict to a check group (repeatable).
        #[arg(long)]
        only: Vec<String>,
    },
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::defaults()?,
    };
    if let Some(r) = cli.route {
        cfg.set_route(r);
    }
    Ok(cfg)
}

fn out_path(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Infinite => {
            let out = out_path(cli, "infinite.csv");
            compute_infinite(&cfg)?.write(&cfg, &out)?;
            announce(&out);
        }
        Command::Resolvent => {
            let out = out_path(cli, "resolvent.csv");
            compute_resolvent(&cfg, Some(&out))?.write(&cfg, &out)?;
            announce(&out);
        }
        Command::Radiate => {
            let out = out_path(cli, "radiate.csv");
            compute_radiate(&cfg, Some(&out))?.write(&cfg, &out)?;
            announce(&out);
        }
        Command::Validate { only } => {
            let groups = parse_only(only)?;
            let out = out_path(cli, "validate.json");
            let checks = run_checks(&cfg, &groups)?;
            for c in &checks {
                let verdict = if c.passed { "pass" } else { "FAIL" };
                let value = c.value.map_or("error".to_string(), |v| format!("{v:.3e}"));
                println!("{verdict} {}/{} = {value} (limit {:e}) {}", c.group, c.name, c.tolerance, c.detail);
            }
            write_json(&out, &report("validate", &cfg.snapshot, summary(&checks)))?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::Validation(failed));
            }
        }
    }
    Ok(())
}

fn announce(out: &Path) {
    eprintln!("wrote {} and {}", out.display(), out.with_extension("json").display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("domino: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
