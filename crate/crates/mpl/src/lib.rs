//! Files, experiments and the command line for `mpl-core`.
//!
//! - [`config`]: the `key = value` configuration grammar.
//! - [`formats`]: PMF, sample, parameter, weight-scheme and fit-report files.
//! - [`harness`]: Monte Carlo consistency experiments and their records.
//! - [`summary`]: per-term medians and quartiles over replicates.

pub mod config;
pub mod error;
pub mod formats;
pub mod harness;
pub mod summary;

pub use error::{Error, Result};
