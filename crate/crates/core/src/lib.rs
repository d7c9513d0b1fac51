//! Numerics for the quantum-domino spin chain and its radiating extension.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs or an immutable precomputed table, so values can be
//! shared freely between threads.
//!
//! Layout:
//! - [`bessel`]: Sommerfeld-integral Bessel functions and their finite sums.
//! - [`chain`]: closed-form spectrum and propagators of the open chain.
//! - [`field`]: form factor, spectral density and the energy quadrature grid.
//! - [`resolvent`]: resolvent matrix elements and their boundary values.
//! - [`propagator`]: Fourier and discretized routes to the time evolution.
//! - [`fit`]: windowed decay fits.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bessel;
pub mod chain;
pub mod error;
pub mod field;
pub mod filon;
pub mod fit;
pub mod math;
pub mod propagator;
pub mod quadrature;
pub mod resolvent;
pub mod tridiag;

pub use error::{Error, Result};
pub use num_complex::Complex64;
