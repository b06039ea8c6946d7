//! Fully-visible Boltzmann machine on `{0,1}^q`:
//! `f(x) ∝ exp(½ xᵀMx + bᵀx)` with `M` symmetric and zero on the diagonal.
//!
//! The flat parameter layout is the `q(q-1)/2` upper-triangle couplings in
//! row-major order (`(1,2), (1,3), …, (q-1,q)`) followed by the `q` biases.

use alloc::vec;
use alloc::vec::Vec;

use super::{binary_state, check_exact_cap, check_finite, BinaryConditionals};
use crate::data::{Sample, WeightedBinary};
use crate::error::{Error, Result};
use crate::math::{self, NeumaierSum};
use crate::pmf::TabularPmf;
use crate::support::SupportSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct FvbmParams {
    q: usize,
    m: Vec<f64>,
    b: Vec<f64>,
}

impl FvbmParams {
    /// `m` is the full `q×q` matrix in row-major order.
    pub fn new(m: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let q = b.len();
        if q == 0 || m.len() != q * q {
            return Err(Error::InvalidParams("M must be q×q and b of length q ≥ 1".into()));
        }
        check_finite("M", &m)?;
        check_finite("b", &b)?;
        for j in 0..q {
            if m[j * q + j] != 0.0 {
                return Err(Error::InvalidParams("diag(M) must be zero".into()));
            }
            for k in 0..j {
                if m[j * q + k] != m[k * q + j] {
                    return Err(Error::InvalidParams("M must be symmetric".into()));
                }
            }
        }
        Ok(Self { q, m, b })
    }

    pub fn zeros(q: usize) -> Self {
        Self {
            q,
            m: vec![0.0; q * q],
            b: vec![0.0; q],
        }
    }

    pub fn num_free(q: usize) -> usize {
        q * (q - 1) / 2 + q
    }

    pub fn from_flat(q: usize, theta: &[f64]) -> Result<Self> {
        if q == 0 || theta.len() != Self::num_free(q) {
            return Err(Error::InvalidParams(alloc::format!(
                "expected {} parameters",
                Self::num_free(q.max(1))
            )));
        }
        let mut m = vec![0.0; q * q];
        let mut i = 0;
        for j in 0..q {
            for k in j + 1..q {
                m[j * q + k] = theta[i];
                m[k * q + j] = theta[i];
                i += 1;
            }
        }
        Self::new(m, theta[i..].to_vec())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let q = self.q;
        let mut out = Vec::with_capacity(Self::num_free(q));
        for j in 0..q {
            for k in j + 1..q {
                out.push(self.m[j * q + k]);
            }
        }
        out.extend_from_slice(&self.b);
        out
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn coupling(&self, j: usize, k: usize) -> f64 {
        self.m[j * self.q + k]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.m
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    /// `½ xᵀMx + bᵀx` for a 0/1 vector.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let q = self.q;
        let mut e = 0.0;
        for j in 0..q {
            if x[j] != 0.0 {
                e += self.b[j];
                for k in j + 1..q {
                    e += self.m[j * q + k] * x[k];
                }
            }
        }
        e
    }

    pub fn unnormalized(&self, x: &[f64]) -> f64 {
        math::exp(self.energy(x))
    }

    fn log_weights(&self) -> Result<Vec<f64>> {
        check_exact_cap(self.q)?;
        let n = 1usize << self.q;
        let mut x = vec![0.0; self.q];
        Ok((0..n)
            .map(|i| {
                binary_state(self.q, i, &mut x);
                self.energy(&x)
            })
            .collect())
    }

    /// `log ζ(θ)`, the log normalizing constant, by enumeration.
    pub fn log_partition(&self) -> Result<f64> {
        Ok(math::log_sum_exp(&self.log_weights()?))
    }

    pub fn partition(&self) -> Result<f64> {
        Ok(math::exp(self.log_partition()?))
    }

    /// Exact joint over all `2^q` states.
    pub fn joint(&self) -> Result<TabularPmf> {
        TabularPmf::from_log_weights(SupportSpec::binary(self.q)?, &self.log_weights()?)
    }

    /// Local field `m_kᵀx + b_k` (independent of `x_k` since `M_kk = 0`).
    pub fn field(&self, x: &[f64], k: usize) -> f64 {
        let q = self.q;
        let row = &self.m[k * q..(k + 1) * q];
        math::dot(row, x) + self.b[k]
    }

    /// `P(X_k = x_k | x_(k))`, `k` zero-based.
    pub fn conditional(&self, x: &[f64], k: usize) -> f64 {
        let u = self.field(x, k);
        if x[k] != 0.0 {
            math::sigmoid(u)
        } else {
            math::sigmoid(-u)
        }
    }

    fn row_logpl(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.q {
            let u = self.field(x, k);
            s += x[k] * u - math::softplus(u);
        }
        s
    }

    fn row_grad(&self, x: &[f64], w: f64, resid: &mut [f64], grad: &mut [f64]) {
        let q = self.q;
        for k in 0..q {
            resid[k] = w * math::binary_residual(x[k] != 0.0, self.field(x, k));
        }
        let mut i = 0;
        for j in 0..q {
            for k in j + 1..q {
                grad[i] += x[j] * resid[k] + x[k] * resid[j];
                i += 1;
            }
        }
        for k in 0..q {
            grad[i + k] += resid[k];
        }
    }

    /// Sum over data and coordinates of `log P(x_k | x_(k))`.
    pub fn logpl(&self, data: &Sample) -> Result<f64> {
        self.check_data(data)?;
        let bits = data.to_binary()?;
        let mut x = vec![0.0; self.q];
        let mut total = NeumaierSum::default();
        for row in bits.chunks_exact(self.q) {
            for (xi, &b) in x.iter_mut().zip(row) {
                *xi = if b { 1.0 } else { 0.0 };
            }
            total.add(self.row_logpl(&x));
        }
        Ok(total.total())
    }

    /// Gradient of [`logpl`](Self::logpl) in the flat layout.
    pub fn logpl_grad(&self, data: &Sample) -> Result<Vec<f64>> {
        self.check_data(data)?;
        let w = WeightedBinary::from_sample(data)?;
        let mut grad = vec![0.0; Self::num_free(self.q)];
        self.logpl_weighted(&w, Some(&mut grad));
        Ok(grad)
    }

    /// Objective over merged rows; adds the gradient into `grad` if given.
    pub fn logpl_weighted(&self, data: &WeightedBinary, grad: Option<&mut [f64]>) -> f64 {
        let mut total = NeumaierSum::default();
        for (x, w) in data.rows() {
            total.add(w * self.row_logpl(x));
        }
        if let Some(grad) = grad {
            let mut resid = vec![0.0; self.q];
            for (x, w) in data.rows() {
                self.row_grad(x, w, &mut resid, grad);
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

impl BinaryConditionals for FvbmParams {
    fn q(&self) -> usize {
        self.q
    }

    fn prob_one(&self, x: &[bool], k: usize) -> f64 {
        let q = self.q;
        let row = &self.m[k * q..(k + 1) * q];
        let u = row.iter().zip(x).filter(|(_, &b)| b).map(|(m, _)| m).sum::<f64>() + self.b[k];
        math::sigmoid(u)
    }
}
