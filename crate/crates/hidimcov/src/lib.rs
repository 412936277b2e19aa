//! Inference for high-dimensional covariance matrices of vector time series
//! whose coordinates are causal linear processes driven by one shared
//! innovation stream.
//!
//! The crate covers the full pipeline at desk scale:
//!
//! * [`model`] — coefficient schemes, innovation families, panel simulation
//!   and the exact population covariance of the truncated process;
//! * [`weights`] — ℓ1-bounded, ℓ2-rescaled, regular and nearly orthogonal
//!   projection vectors;
//! * [`covest`] — sample covariances, partial-sum paths, bilinear-form
//!   statistics, scaled trace/Frobenius/Schatten norms and the trace process;
//! * [`asymvar`] — analytic asymptotic variances α², β²(·,·) and σ²_tr, with
//!   an independent Isserlis oracle for gaussian innovations;
//! * [`lrvest`] — kernel long-run-variance estimators and the trace-norm
//!   confidence interval;
//! * [`shrink`] — shrinkage toward μI with fixed, estimated or oracle weight;
//! * [`limit`] — simulation of the Gaussian limit objects and the
//!   approximating martingale;
//! * [`mc`] — a reproducible, parallel Monte Carlo experiment harness;
//! * [`cli`] — the subcommand front end used by the `hidimcov` binary.
//!
//! Every stochastic operation derives its randomness from an explicit 64-bit
//! seed, so results are bit-reproducible regardless of thread count.
//!
//! ```
//! use hidimcov::lrvest::{default_bandwidth, trace_ci, KernelSpec};
//! use hidimcov::model::{CoefficientScheme, InnovationSpec};
//!
//! # fn main() -> hidimcov::Result<()> {
//! let scheme = CoefficientScheme::ar1(vec![0.2, 0.5, 0.7], 10, 64, 0.25)?;
//! let innov = InnovationSpec::gaussian(1.0)?;
//! let panel = scheme.simulate(&innov, 1000, 42)?;
//!
//! let kernel = KernelSpec::bartlett(default_bandwidth(panel.n())?);
//! let ci = trace_ci(&panel, &kernel, 0.95)?;
//! assert!(ci.lo <= ci.center && ci.center <= ci.hi);
//! # Ok(())
//! # }
//! ```

// `!(x > 0.0)` guards reject NaN along with out-of-range values; indexed
// loops mirror the matrix algebra they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod asymvar;
pub mod cli;
pub mod covest;
pub mod limit;
pub mod lrvest;
pub mod mat;
pub mod mc;
pub mod model;
pub mod shrink;
pub mod stats;
pub mod weights;

mod error;
mod util;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
