//! Restricted Boltzmann machine with `q` visible and `r` hidden binary units.
//!
//! The visible marginal has the softplus form
//! `f(x) ∝ exp(aᵀx + Σ_j softplus(m_jᵀx + b_j))`, where `m_j` is column `j`
//! of the `q×r` weight matrix `M`, so it is evaluated without enumerating the
//! `2^r` hidden states.
//!
//! Flat layout: `M` row-major (`q·r` entries), then `a` (`q`), then `b` (`r`).

use alloc::vec;
use alloc::vec::Vec;

use super::{binary_state, check_exact_cap, check_finite, BinaryConditionals};
use crate::data::{Sample, WeightedBinary};
use crate::error::{Error, Result};
use crate::math::{self, NeumaierSum};
use crate::pmf::TabularPmf;
use crate::support::SupportSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    q: usize,
    r: usize,
    m: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl RbmParams {
    pub fn new(q: usize, r: usize, m: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if q == 0 || r == 0 {
            return Err(Error::InvalidParams("q and r must be at least 1".into()));
        }
        if m.len() != q * r || a.len() != q || b.len() != r {
            return Err(Error::InvalidParams("shape mismatch in (M, a, b)".into()));
        }
        check_finite("M", &m)?;
        check_finite("a", &a)?;
        check_finite("b", &b)?;
        Ok(Self { q, r, m, a, b })
    }

    pub fn zeros(q: usize, r: usize) -> Self {
        Self {
            q,
            r,
            m: vec![0.0; q * r],
            a: vec![0.0; q],
            b: vec![0.0; r],
        }
    }

    pub fn num_free(q: usize, r: usize) -> usize {
        q * r + q + r
    }

    pub fn from_flat(q: usize, r: usize, theta: &[f64]) -> Result<Self> {
        if theta.len() != Self::num_free(q, r) {
            return Err(Error::InvalidParams(alloc::format!(
                "expected {} parameters",
                Self::num_free(q, r)
            )));
        }
        let (m, rest) = theta.split_at(q * r);
        let (a, b) = rest.split_at(q);
        Self::new(q, r, m.to_vec(), a.to_vec(), b.to_vec())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.m.clone();
        out.extend_from_slice(&self.a);
        out.extend_from_slice(&self.b);
        out
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// `M[l][j]`: visible unit `l`, hidden unit `j`.
    pub fn weight(&self, l: usize, j: usize) -> f64 {
        self.m[l * self.r + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.m
    }

    pub fn visible_bias(&self) -> &[f64] {
        &self.a
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.b
    }

    /// `aᵀx + bᵀy + xᵀMy`, the log of the unnormalized joint weight.
    pub fn log_joint_with_hidden(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut e = math::dot(&self.a, x) + math::dot(&self.b, y);
        for l in 0..self.q {
            if x[l] != 0.0 {
                e += math::dot(&self.m[l * self.r..(l + 1) * self.r], y);
            }
        }
        e
    }

    /// Unnormalized joint weight of a visible/hidden configuration.
    pub fn joint_with_hidden(&self, x: &[f64], y: &[f64]) -> f64 {
        math::exp(self.log_joint_with_hidden(x, y))
    }

    /// Hidden pre-activations `m_jᵀx + b_j`.
    pub fn hidden_input(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.b);
        for l in 0..self.q {
            if x[l] != 0.0 {
                for (o, w) in out.iter_mut().zip(&self.m[l * self.r..(l + 1) * self.r]) {
                    *o += w;
                }
            }
        }
    }

    /// `aᵀx + Σ_j softplus(m_jᵀx + b_j)`: the visible log weight.
    pub fn log_visible_weight(&self, x: &[f64]) -> f64 {
        let mut h = vec![0.0; self.r];
        self.hidden_input(x, &mut h);
        math::dot(&self.a, x) + h.iter().map(|&v| math::softplus(v)).sum::<f64>()
    }

    fn log_weights(&self) -> Result<Vec<f64>> {
        check_exact_cap(self.q)?;
        let mut x = vec![0.0; self.q];
        Ok((0..1usize << self.q)
            .map(|i| {
                binary_state(self.q, i, &mut x);
                self.log_visible_weight(&x)
            })
            .collect())
    }

    /// `log ω(θ)`, the visible normalizing constant.
    pub fn log_partition(&self) -> Result<f64> {
        Ok(math::log_sum_exp(&self.log_weights()?))
    }

    /// Exact visible marginal over `{0,1}^q`.
    pub fn marginal(&self) -> Result<TabularPmf> {
        TabularPmf::from_log_weights(SupportSpec::binary(self.q)?, &self.log_weights()?)
    }

    /// Log-odds `log P(x_k=1|·) - log P(x_k=0|·)`, given the hidden inputs `h`
    /// for the full state `x`.
    fn log_odds(&self, x: &[f64], h: &[f64], k: usize) -> f64 {
        let row = &self.m[k * self.r..(k + 1) * self.r];
        let mut delta = self.a[k];
        for (j, &w) in row.iter().enumerate() {
            let base = h[j] - w * x[k];
            delta += math::softplus(base + w) - math::softplus(base);
        }
        delta
    }

    /// `P(X_k = x_k | x_(k))`, `k` zero-based.
    pub fn conditional(&self, x: &[f64], k: usize) -> f64 {
        let mut h = vec![0.0; self.r];
        self.hidden_input(x, &mut h);
        let d = self.log_odds(x, &h, k);
        if x[k] != 0.0 {
            math::sigmoid(d)
        } else {
            math::sigmoid(-d)
        }
    }

    fn row_logpl(&self, x: &[f64], h: &mut [f64]) -> f64 {
        self.hidden_input(x, h);
        let mut s = 0.0;
        for k in 0..self.q {
            let d = self.log_odds(x, h, k);
            s += x[k] * d - math::softplus(d);
        }
        s
    }

    fn row_grad(&self, x: &[f64], w: f64, scratch: &mut GradScratch, grad: &mut [f64]) {
        let (q, r) = (self.q, self.r);
        let h = &mut scratch.h;
        self.hidden_input(x, h);
        // e_k = w (x_k - σ(Δ_k)); s1/d hold σ(h_j^{(1)}) and σ(h^{(1)}) - σ(h^{(0)}).
        for k in 0..q {
            let row = &self.m[k * r..(k + 1) * r];
            let mut delta = self.a[k];
            for (j, &wkj) in row.iter().enumerate() {
                let base = h[j] - wkj * x[k];
                delta += math::softplus(base + wkj) - math::softplus(base);
                let s1 = math::sigmoid(base + wkj);
                scratch.s1[k * r + j] = s1;
                scratch.d[k * r + j] = s1 - math::sigmoid(base);
            }
            scratch.e[k] = w * math::binary_residual(x[k] != 0.0, delta);
        }
        let (gm, rest) = grad.split_at_mut(q * r);
        let (ga, gb) = rest.split_at_mut(q);
        for j in 0..r {
            let total: f64 = (0..q).map(|k| scratch.e[k] * scratch.d[k * r + j]).sum();
            gb[j] += total;
            for l in 0..q {
                let i = l * r + j;
                gm[i] += x[l] * (total - scratch.e[l] * scratch.d[i]) + scratch.e[l] * scratch.s1[i];
            }
        }
        for k in 0..q {
            ga[k] += scratch.e[k];
        }
    }

    /// Sum over data and visible units of `log P(x_k | x_(k))`.
    pub fn logpl(&self, data: &Sample) -> Result<f64> {
        self.check_data(data)?;
        let bits = data.to_binary()?;
        let mut x = vec![0.0; self.q];
        let mut h = vec![0.0; self.r];
        let mut total = NeumaierSum::default();
        for row in bits.chunks_exact(self.q) {
            for (xi, &b) in x.iter_mut().zip(row) {
                *xi = if b { 1.0 } else { 0.0 };
            }
            total.add(self.row_logpl(&x, &mut h));
        }
        Ok(total.total())
    }

    /// Gradient of [`logpl`](Self::logpl) in the flat layout.
    pub fn logpl_grad(&self, data: &Sample) -> Result<Vec<f64>> {
        self.check_data(data)?;
        let w = WeightedBinary::from_sample(data)?;
        let mut grad = vec![0.0; Self::num_free(self.q, self.r)];
        self.logpl_weighted(&w, Some(&mut grad));
        Ok(grad)
    }

    /// Objective over merged rows; adds the gradient into `grad` if given.
    pub fn logpl_weighted(&self, data: &WeightedBinary, grad: Option<&mut [f64]>) -> f64 {
        let mut h = vec![0.0; self.r];
        let mut total = NeumaierSum::default();
        for (x, w) in data.rows() {
            total.add(w * self.row_logpl(x, &mut h));
        }
        if let Some(grad) = grad {
            let mut scratch = GradScratch {
                h,
                s1: vec![0.0; self.q * self.r],
                d: vec![0.0; self.q * self.r],
                e: vec![0.0; self.q],
            };
            for (x, w) in data.rows() {
                self.row_grad(x, w, &mut scratch, grad);
            }
        }
        total.total()
    }

    fn check_data(&self, data: &Sample) -> Result<()> {
        if data.q() != self.q {
            return Err(Error::Dimension {
                expected: self.q,
                got: data.q(),
            });
        }
        Ok(())
    }
}

struct GradScratch {
    h: Vec<f64>,
    s1: Vec<f64>,
    d: Vec<f64>,
    e: Vec<f64>,
}

impl BinaryConditionals for RbmParams {
    fn q(&self) -> usize {
        self.q
    }

    fn prob_one(&self, x: &[bool], k: usize) -> f64 {
        let xf: Vec<f64> = x.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let mut h = vec![0.0; self.r];
        self.hidden_input(&xf, &mut h);
        math::sigmoid(self.log_odds(&xf, &h, k))
    }
}
