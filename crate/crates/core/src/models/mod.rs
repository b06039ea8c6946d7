//! Parametric model families on binary supports.
//!
//! Each family exposes its exact joint table (by enumeration), closed-form
//! conditionals, the family-native log-pseudolikelihood and its analytic
//! gradient over a flat unconstrained parameter vector.

pub mod categorical;
pub mod fvbm;
pub mod rbm;

pub use categorical::CategoricalParams;
pub use fvbm::FvbmParams;
pub use rbm::RbmParams;

use crate::error::{Error, Result};

/// Largest `q` for which exact partition functions are computed.
pub const EXACT_Q_CAP: usize = 20;

/// Models on `{0,1}^q` with closed-form single-site conditionals.
pub trait BinaryConditionals {
    fn q(&self) -> usize;

    /// `P(x_k = 1 | x_(k))`, with `k` zero-based. `x[k]` is ignored.
    fn prob_one(&self, x: &[bool], k: usize) -> f64;
}

pub(crate) fn check_exact_cap(q: usize) -> Result<()> {
    if q > EXACT_Q_CAP {
        return Err(Error::Capacity {
            what: "exact enumeration (q)",
            requested: q as u64,
            limit: EXACT_Q_CAP as u64,
        });
    }
    Ok(())
}

pub(crate) fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParams(alloc::format!("{name} has non-finite entries")))
    }
}

/// `{0,1}` state of index `i` in the crate's mixed-radix order.
pub(crate) fn binary_state(q: usize, i: usize, out: &mut [f64]) {
    for k in 0..q {
        out[k] = ((i >> (q - 1 - k)) & 1) as f64;
    }
}
