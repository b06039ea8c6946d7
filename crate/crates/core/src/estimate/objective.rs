//! Objectives handed to the optimizer.
//!
//! The scheme objective works on the exact joint table. With `p` the joint and
//! `s(z) = ∇ log w(z)` the score of the unnormalized log weight, every
//! marginal block `B` with counts `N_B` and weight `c` contributes
//! `c Σ_u N_B(u) log p_B(u)` with gradient `c Σ_z p(z) s(z) (N_B(u(z)) / p_B(u(z)) - n)`.
//! A conditional `left | right` is the block `left ∪ right` with weight `d`
//! minus the block `right` with weight `d`.

use alloc::vec;
use alloc::vec::Vec;

use super::lbfgs::Problem;
use crate::data::{Sample, WeightedBinary};
use crate::error::Result;
use crate::math::{self, NeumaierSum};
use crate::models::categorical::category_counts;
use crate::models::{binary_state, FvbmParams, RbmParams};
use crate::pl::WeightScheme;
use crate::support::{SupportSpec, TermId};

/// Unnormalized log weight of every state and its score, per family.
#[derive(Debug, Clone)]
pub(crate) enum Kernel {
    /// One logit per category, the last fixed at zero.
    Categorical {
        q: usize,
    },
    Fvbm {
        q: usize,
    },
    Rbm {
        q: usize,
        r: usize,
    },
    /// One free logit per state.
    Free {
        states: usize,
    },
}

impl Kernel {
    pub fn dim(&self) -> usize {
        match *self {
            Kernel::Categorical { q } => q - 1,
            Kernel::Fvbm { q } => FvbmParams::num_free(q),
            Kernel::Rbm { q, r } => RbmParams::num_free(q, r),
            Kernel::Free { states } => states,
        }
    }

    fn log_weights(&self, theta: &[f64], out: &mut [f64]) {
        match *self {
            Kernel::Categorical { q } => {
                out.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
                for k in 0..q {
                    out[1 << (q - 1 - k)] = if k + 1 < q { theta[k] } else { 0.0 };
                }
            }
            Kernel::Fvbm { q } => {
                let p = FvbmParams::from_flat(q, theta).expect("finite parameters");
                let mut x = vec![0.0; q];
                for (i, o) in out.iter_mut().enumerate() {
                    binary_state(q, i, &mut x);
                    *o = p.energy(&x);
                }
            }
            Kernel::Rbm { q, r } => {
                let p = RbmParams::from_flat(q, r, theta).expect("finite parameters");
                let mut x = vec![0.0; q];
                for (i, o) in out.iter_mut().enumerate() {
                    binary_state(q, i, &mut x);
                    *o = p.log_visible_weight(&x);
                }
            }
            Kernel::Free { .. } => out.copy_from_slice(theta),
        }
    }

    /// `grad += Σ_z coef[z] s(z)`.
    fn add_scores(&self, theta: &[f64], coef: &[f64], grad: &mut [f64]) {
        match *self {
            Kernel::Categorical { q } => {
                for k in 0..q - 1 {
                    grad[k] += coef[1 << (q - 1 - k)];
                }
            }
            Kernel::Fvbm { q } => {
                let mut x = vec![0.0; q];
                for (i, &c) in coef.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    binary_state(q, i, &mut x);
                    let mut idx = 0;
                    for j in 0..q {
                        for k in j + 1..q {
                            grad[idx] += c * x[j] * x[k];
                            idx += 1;
                        }
                    }
                    for k in 0..q {
                        grad[idx + k] += c * x[k];
                    }
                }
            }
            Kernel::Rbm { q, r } => {
                let p = RbmParams::from_flat(q, r, theta).expect("finite parameters");
                let mut x = vec![0.0; q];
                let mut h = vec![0.0; r];
                for (i, &c) in coef.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    binary_state(q, i, &mut x);
                    p.hidden_input(&x, &mut h);
                    for hj in h.iter_mut() {
                        *hj = math::sigmoid(*hj);
                    }
                    for l in 0..q {
                        if x[l] != 0.0 {
                            for j in 0..r {
                                grad[l * r + j] += c * h[j];
                            }
                            grad[q * r + l] += c;
                        }
                    }
                    for j in 0..r {
                        grad[q * r + q + j] += c * h[j];
                    }
                }
            }
            Kernel::Free { .. } => {
                for (g, c) in grad.iter_mut().zip(coef) {
                    *g += c;
                }
            }
        }
    }
}

/// One `weight × Σ_u N(u) log p_B(u)` block.
#[derive(Debug, Clone)]
struct Block {
    weight: f64,
    /// Restricted index of every full state.
    projection: Vec<usize>,
    counts: Vec<f64>,
}

/// The weighted pseudolikelihood of a fixed data set over a family's joint.
#[derive(Debug, Clone)]
pub(crate) struct SchemeObjective {
    kernel: Kernel,
    blocks: Vec<Block>,
    n: f64,
    log_w: Vec<f64>,
    probs: Vec<f64>,
    coef: Vec<f64>,
}

impl SchemeObjective {
    pub fn new(kernel: Kernel, spec: &SupportSpec, data: &Sample, scheme: &WeightScheme) -> Result<Self> {
        scheme.validate(spec)?;
        let states = data.state_indices(spec)?;
        let mut blocks = Vec::new();
        let mut push = |weight: f64, mask: u64| -> Result<()> {
            let projection = spec.projection(mask)?;
            let len = spec.restrict(mask)?.table_len()?;
            let mut counts = vec![0.0; len];
            for &z in &states {
                counts[projection[z as usize]] += 1.0;
            }
            blocks.push(Block {
                weight,
                projection,
                counts,
            });
            Ok(())
        };
        for (term, w) in scheme.terms() {
            match term {
                TermId::Marginal(s) => push(w, s.mask())?,
                TermId::Conditional(t) => {
                    push(w, t.union())?;
                    push(-w, t.right())?;
                }
            }
        }
        let len = spec.table_len()?;
        Ok(Self {
            kernel,
            blocks,
            n: data.len() as f64,
            log_w: vec![0.0; len],
            probs: vec![0.0; len],
            coef: vec![0.0; len],
        })
    }
}

impl Problem for SchemeObjective {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn eval(&mut self, theta: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        self.kernel.log_weights(theta, &mut self.log_w);
        let log_z = math::log_sum_exp(&self.log_w);
        for (p, &lw) in self.probs.iter_mut().zip(&self.log_w) {
            *p = math::exp(lw - log_z);
        }
        self.coef.iter_mut().for_each(|c| *c = 0.0);
        let mut value = NeumaierSum::default();
        for block in &self.blocks {
            let mut marginal = vec![0.0; block.counts.len()];
            for (&p, &u) in self.probs.iter().zip(&block.projection) {
                marginal[u] += p;
            }
            for (&count, &m) in block.counts.iter().zip(&marginal) {
                if count > 0.0 {
                    if m <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    value.add(block.weight * count * math::ln(m));
                }
            }
            for (z, c) in self.coef.iter_mut().enumerate() {
                let u = block.projection[z];
                if marginal[u] > 0.0 {
                    *c += block.weight * (block.counts[u] / marginal[u] - self.n);
                }
            }
        }
        for (c, &p) in self.coef.iter_mut().zip(&self.probs) {
            *c *= p;
        }
        self.kernel.add_scores(theta, &self.coef, grad);
        value.total()
    }
}

/// The family-native objectives.
#[derive(Debug, Clone)]
pub(crate) enum NativeObjective {
    /// The joint plus the conditional of the first `q-1` coordinates given
    /// the last, in log-ratio coordinates.
    Categorical {
        counts: Vec<f64>,
    },
    Fvbm {
        q: usize,
        data: WeightedBinary,
    },
    Rbm {
        q: usize,
        r: usize,
        data: WeightedBinary,
    },
}

impl NativeObjective {
    pub fn categorical(data: &Sample) -> Result<Self> {
        let counts = category_counts(data)?.into_iter().map(|c| c as f64).collect();
        Ok(NativeObjective::Categorical { counts })
    }
}

impl Problem for NativeObjective {
    fn dim(&self) -> usize {
        match self {
            NativeObjective::Categorical { counts } => counts.len() - 1,
            NativeObjective::Fvbm { q, .. } => FvbmParams::num_free(*q),
            NativeObjective::Rbm { q, r, .. } => RbmParams::num_free(*q, *r),
        }
    }

    fn eval(&mut self, theta: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        match self {
            NativeObjective::Categorical { counts } => categorical_native(counts, theta, grad),
            NativeObjective::Fvbm { q, data } => FvbmParams::from_flat(*q, theta)
                .expect("finite parameters")
                .logpl_weighted(data, Some(grad)),
            NativeObjective::Rbm { q, r, data } => RbmParams::from_flat(*q, *r, theta)
                .expect("finite parameters")
                .logpl_weighted(data, Some(grad)),
        }
    }
}

/// `Σ_k n_k log π_k + Σ_{k<q} n_k (log π_k - log Σ_{l<q} π_l)` with
/// `π = softmax(η, 0)`.
fn categorical_native(counts: &[f64], eta: &[f64], grad: &mut [f64]) -> f64 {
    let q = counts.len();
    let n: f64 = counts.iter().sum();
    let head_n: f64 = counts[..q - 1].iter().sum();
    let mut full = eta.to_vec();
    full.push(0.0);
    let lse_all = math::log_sum_exp(&full);
    let lse_head = math::log_sum_exp(eta);
    let mut value = NeumaierSum::default();
    for k in 0..q {
        if counts[k] > 0.0 {
            value.add(counts[k] * (full[k] - lse_all));
        }
        if k + 1 < q {
            if counts[k] > 0.0 {
                value.add(counts[k] * (full[k] - lse_head));
            }
            let pi = math::exp(full[k] - lse_all);
            let head = math::exp(full[k] - lse_head);
            grad[k] = 2.0 * counts[k] - n * pi - head_n * head;
        }
    }
    value.total()
}
