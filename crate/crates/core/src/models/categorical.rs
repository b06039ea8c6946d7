//! Categorical distribution over the one-hot vectors `e_1..e_q`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::math;
use crate::pmf::TabularPmf;
use crate::support::SupportSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalParams {
    pi: Vec<f64>,
}

impl CategoricalParams {
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::InvalidParams("empty probability vector".into()));
        }
        if pi.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidParams("every pi_k must be positive".into()));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("pi sums to {total}")));
        }
        Ok(Self { pi })
    }

    pub fn uniform(q: usize) -> Result<Self> {
        Self::new(vec![1.0 / q as f64; q])
    }

    /// From log-ratios `eta_k = log(pi_k / pi_q)`, `k < q`.
    pub fn from_logits(eta: &[f64]) -> Result<Self> {
        let mut full = eta.to_vec();
        full.push(0.0);
        let lse = math::log_sum_exp(&full);
        if !lse.is_finite() {
            return Err(Error::InvalidParams("logits are not finite".into()));
        }
        Self::new(full.iter().map(|&e| math::exp(e - lse)).collect())
    }

    pub fn to_logits(&self) -> Vec<f64> {
        let last = math::ln(self.pi[self.q() - 1]);
        self.pi[..self.q() - 1].iter().map(|&p| math::ln(p) - last).collect()
    }

    pub fn q(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Joint over `{0,1}^q`: mass `pi_k` on `e_k`, zero elsewhere.
    pub fn joint(&self) -> Result<TabularPmf> {
        let q = self.q();
        super::check_exact_cap(q)?;
        let spec = SupportSpec::binary(q)?;
        let mut probs = vec![0.0; spec.table_len()?];
        for (k, &p) in self.pi.iter().enumerate() {
            probs[1usize << (q - 1 - k)] = p;
        }
        TabularPmf::new(spec, probs)
    }

    /// `pi_k / Σ_{l<q} pi_l` for `k < q`: the law of the first `q-1`
    /// coordinates given `x_q = 0`.
    pub fn conditional_given_last_zero(&self) -> Result<Vec<f64>> {
        if self.q() < 2 {
            return Err(Error::InvalidParams("needs q >= 2".into()));
        }
        let head = &self.pi[..self.q() - 1];
        let denom: f64 = head.iter().sum();
        Ok(head.iter().map(|p| p / denom).collect())
    }

    /// The pseudolikelihood built from the full joint plus the conditional of
    /// the first `q-1` coordinates given `x_q`, summed over data in order.
    pub fn logpl(&self, data: &Sample) -> Result<f64> {
        let q = self.q();
        let log_pi: Vec<f64> = self.pi.iter().map(|&p| math::ln(p)).collect();
        let log_head = math::ln(self.pi[..q - 1].iter().sum::<f64>());
        let mut total = 0.0;
        for (i, x) in data.rows().enumerate() {
            let k = one_hot_position(x, q).ok_or(Error::NotOneHot { row: i })?;
            total += log_pi[k];
            if k < q - 1 {
                total += log_pi[k] - log_head;
            }
        }
        Ok(total)
    }

    /// Closed-form pseudo-entropy of [`logpl`](Self::logpl)'s scheme.
    pub fn pseudoentropy(&self) -> f64 {
        let first: f64 = self.pi.iter().map(|&p| math::neg_xlogx(p)).sum();
        let second: f64 = match self.conditional_given_last_zero() {
            Ok(c) => c.iter().map(|&p| math::neg_xlogx(p)).sum(),
            Err(_) => 0.0,
        };
        first + second
    }
}

/// Position of the single 1 in a one-hot row.
pub fn one_hot_position(x: &[i64], q: usize) -> Option<usize> {
    if x.len() != q {
        return None;
    }
    let mut pos = None;
    for (k, &v) in x.iter().enumerate() {
        match v {
            0 => {}
            1 if pos.is_none() => pos = Some(k),
            _ => return None,
        }
    }
    pos
}

/// Category counts `n_k`; errors on the first row that is not one-hot.
pub fn category_counts(data: &Sample) -> Result<Vec<u64>> {
    let q = data.q();
    let mut counts = vec![0u64; q];
    for (i, x) in data.rows().enumerate() {
        counts[one_hot_position(x, q).ok_or(Error::NotOneHot { row: i })?] += 1;
    }
    Ok(counts)
}
