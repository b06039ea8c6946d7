//! Reproducible sampling.
//!
//! Every stream comes from ChaCha20 (`rand_chacha` 0.9) keyed by the master
//! seed: key bytes `0..8` hold the seed in little-endian order, the remaining
//! key bytes are zero, and the replicate index selects the ChaCha stream.
//! Distinct `(master, replicate)` pairs therefore never share a stream.
//! Uniforms on `[0, 1)` take the top 53 bits of `next_u64`.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::models::BinaryConditionals;
use crate::pmf::TabularPmf;
use crate::support::MAX_TABLE_STATES;

/// Identifier recorded in output metadata.
pub const GENERATOR_ID: &str = "chacha20/rand_chacha-0.9/key=le(master)/stream=replicate";

/// A master seed and a replicate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SeedSpec {
    pub master: u64,
    pub replicate: u64,
}

impl SeedSpec {
    pub fn new(master: u64, replicate: u64) -> Self {
        Self { master, replicate }
    }

    pub fn rng(&self) -> Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master.to_le_bytes());
        let mut inner = ChaCha20Rng::from_seed(key);
        inner.set_stream(self.replicate);
        Rng { inner }
    }
}

/// The crate's random source.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha20Rng,
}

impl Rng {
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

/// `n` i.i.d. draws from `f` by inverse CDF over ascending state order.
pub fn sample_exact(f: &TabularPmf, n: usize, seed: SeedSpec) -> Result<Sample> {
    let spec = f.spec();
    if spec.num_states() > MAX_TABLE_STATES {
        return Err(Error::Capacity {
            what: "exact sampling (states)",
            requested: spec.num_states(),
            limit: MAX_TABLE_STATES,
        });
    }
    let mut cdf = Vec::with_capacity(f.probs().len());
    let mut acc = 0.0;
    for &p in f.probs() {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let mut rng = seed.rng();
    let q = spec.q();
    let mut values = vec![0i64; n * q];
    for row in values.chunks_exact_mut(q) {
        let u = rng.uniform() * total;
        // First state whose cumulative mass exceeds u; never a zero-mass state.
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let idx = last_positive_at_or_before(f.probs(), idx);
        spec.write_state(idx as u64, row);
    }
    Sample::new(q, values)
}

fn last_positive_at_or_before(probs: &[f64], idx: usize) -> usize {
    let mut i = idx;
    while probs[i] == 0.0 && i > 0 {
        i -= 1;
    }
    i
}

/// Settings for systematic-scan Gibbs sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GibbsConfig {
    /// Sweeps discarded before the first retained draw.
    pub burn_in: usize,
    /// Full sweeps (`q` single-site updates each) between retained draws.
    pub sweeps_per_draw: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            sweeps_per_draw: 1,
        }
    }
}

/// Gibbs chain over `{0,1}^q` updating coordinates `1..q` in order.
///
/// The chain starts from independent fair coin flips unless `start` is given.
pub fn sample_gibbs<M: BinaryConditionals>(
    model: &M,
    n: usize,
    config: GibbsConfig,
    start: Option<&[bool]>,
    seed: SeedSpec,
) -> Result<Sample> {
    if config.sweeps_per_draw == 0 {
        return Err(Error::InvalidConfig("sweeps per draw must be at least 1".into()));
    }
    let q = model.q();
    let mut rng = seed.rng();
    let mut x: Vec<bool> = match start {
        Some(s) if s.len() == q => s.to_vec(),
        Some(s) => {
            return Err(Error::Dimension {
                expected: q,
                got: s.len(),
            })
        }
        None => (0..q).map(|_| rng.bernoulli(0.5)).collect(),
    };
    let sweep = |x: &mut Vec<bool>, rng: &mut Rng| {
        for k in 0..q {
            let p = model.prob_one(x, k);
            x[k] = rng.bernoulli(p);
        }
    };
    for _ in 0..config.burn_in {
        sweep(&mut x, &mut rng);
    }
    let mut values = Vec::with_capacity(n * q);
    for _ in 0..n {
        for _ in 0..config.sweeps_per_draw {
            sweep(&mut x, &mut rng);
        }
        values.extend(x.iter().map(|&b| b as i64));
    }
    Sample::new(q, values)
}
