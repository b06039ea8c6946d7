//! Maximum pseudolikelihood (MPL) estimation for discrete probability models
//! on finite integer supports.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! - [`support`]: product domains, the marginal subset family and the ordered
//!   two-block partition family used to index pseudolikelihood terms.
//! - [`pmf`]: exact probability tables with marginalization, conditioning and
//!   empirical counts.
//! - [`models`]: the categorical, fully-visible Boltzmann machine and
//!   restricted Boltzmann machine families.
//! - [`pl`]: the weighted log-pseudolikelihood, the pseudo-entropy and the
//!   named weight schemes (ML, composite marginal, pairwise, full conditionals).
//! - [`sample`]: reproducible exact and Gibbs sampling.
//! - [`estimate`]: limited-memory quasi-Newton maximization of the objective.
//!
//! IO, file formats, the experiment harness and the CLI live in the `mpl`
//! companion crate.
#![no_std]
// Index loops mirror the matrix formulas in the model kernels.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod error;
pub mod estimate;
pub mod math;
pub mod models;
pub mod pl;
pub mod pmf;
pub mod sample;
pub mod support;

pub use data::Sample;
pub use error::{Error, Result};
pub use pl::{PlValue, WeightScheme};
pub use pmf::TabularPmf;
pub use support::{PartitionId, SubsetId, SupportSpec, TermId};
