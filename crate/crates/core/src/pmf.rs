//! Exact probability tables over a [`SupportSpec`].
//!
//! Sums always run over states in ascending index order, so every derived
//! table is bit-for-bit reproducible.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::math;
use crate::support::{PartitionId, SubsetId, SupportSpec, TermId};

/// Absolute tolerance on the total mass of a table.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability mass function stored densely over every state of its support.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPmf {
    spec: SupportSpec,
    probs: Vec<f64>,
}

impl TabularPmf {
    pub fn new(spec: SupportSpec, probs: Vec<f64>) -> Result<Self> {
        let n = spec.table_len()?;
        if probs.len() != n {
            return Err(Error::InvalidPmf(format!(
                "{} probabilities for {n} states",
                probs.len()
            )));
        }
        check_distribution(&probs)?;
        Ok(Self { spec, probs })
    }

    /// Normalizes `exp(log_weights)`; `-inf` entries get probability zero.
    pub fn from_log_weights(spec: SupportSpec, log_weights: &[f64]) -> Result<Self> {
        let n = spec.table_len()?;
        if log_weights.len() != n {
            return Err(Error::InvalidPmf(format!(
                "{} weights for {n} states",
                log_weights.len()
            )));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::InvalidPmf("log weight is NaN or +inf".into()));
        }
        let log_z = math::log_sum_exp(log_weights);
        if log_z == f64::NEG_INFINITY {
            return Err(Error::InvalidPmf("all weights are zero".into()));
        }
        let probs = log_weights.iter().map(|&w| math::exp(w - log_z)).collect();
        Self::new(spec, probs)
    }

    pub fn uniform(spec: SupportSpec) -> Result<Self> {
        let n = spec.table_len()?;
        Self::new(spec, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(spec: SupportSpec, index: usize) -> Result<Self> {
        let n = spec.table_len()?;
        if index >= n {
            return Err(Error::InvalidPmf(format!("state {index} outside {n} states")));
        }
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        Self::new(spec, probs)
    }

    pub fn spec(&self) -> &SupportSpec {
        &self.spec
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: &[i64]) -> Result<f64> {
        Ok(self.probs[self.spec.state_index(x)? as usize])
    }

    pub fn marginalize(&self, s: SubsetId) -> Result<MarginalTable> {
        let spec = self.spec.restrict(s.mask())?;
        let proj = self.spec.projection(s.mask())?;
        let mut probs = vec![0.0; spec.table_len()?];
        for (p, &r) in self.probs.iter().zip(&proj) {
            probs[r] += p;
        }
        Ok(MarginalTable { subset: s, spec, probs })
    }

    /// Conditional of the left block given the right block. Rows whose
    /// conditioning event has probability zero are `None`.
    pub fn condition(&self, t: PartitionId) -> Result<ConditionalTable> {
        let left_spec = self.spec.restrict(t.left())?;
        let right_spec = self.spec.restrict(t.right())?;
        let lp = self.spec.projection(t.left())?;
        let rp = self.spec.projection(t.right())?;
        let nl = left_spec.table_len()?;
        let nr = right_spec.table_len()?;
        let mut joint = vec![0.0; nl * nr];
        let mut right = vec![0.0; nr];
        for (z, &p) in self.probs.iter().enumerate() {
            joint[rp[z] * nl + lp[z]] += p;
            right[rp[z]] += p;
        }
        let rows = right
            .iter()
            .enumerate()
            .map(|(r, &pr)| (pr > 0.0).then(|| joint[r * nl..(r + 1) * nl].iter().map(|j| j / pr).collect()))
            .collect();
        Ok(ConditionalTable {
            partition: t,
            left_spec,
            right_spec,
            rows,
        })
    }

    /// Table for an arbitrary term.
    pub fn table(&self, term: TermId) -> Result<TermTable> {
        Ok(match term {
            TermId::Marginal(s) => TermTable::Marginal(self.marginalize(s)?),
            TermId::Conditional(t) => TermTable::Conditional(self.condition(t)?),
        })
    }
}

fn check_distribution(probs: &[f64]) -> Result<()> {
    let mut total = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::InvalidPmf(format!("entry {i} is {p}")));
        }
        total += p;
    }
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidPmf(format!("entries sum to {total}")));
    }
    Ok(())
}

/// `f^S` over the states of the restricted support.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    pub subset: SubsetId,
    pub spec: SupportSpec,
    pub probs: Vec<f64>,
}

impl MarginalTable {
    pub fn new(subset: SubsetId, spec: SupportSpec, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != spec.table_len()? || spec.q() != subset.len() {
            return Err(Error::Structural(format!(
                "marginal {subset} has {} entries over {} coordinates",
                probs.len(),
                spec.q()
            )));
        }
        check_distribution(&probs)?;
        Ok(Self { subset, spec, probs })
    }

    /// Probability of the restriction of the full state `x`.
    pub fn prob_of(&self, x: &[i64]) -> Result<f64> {
        let idx = restricted_index(&self.spec, x, self.subset.mask())?;
        Ok(self.probs[idx])
    }
}

/// `f^T(left | right)`, one row per right-state.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    pub partition: PartitionId,
    pub left_spec: SupportSpec,
    pub right_spec: SupportSpec,
    pub rows: Vec<Option<Vec<f64>>>,
}

impl ConditionalTable {
    pub fn new(
        partition: PartitionId,
        left_spec: SupportSpec,
        right_spec: SupportSpec,
        rows: Vec<Option<Vec<f64>>>,
    ) -> Result<Self> {
        let nl = left_spec.table_len()?;
        if rows.len() != right_spec.table_len()?
            || rows.iter().flatten().any(|r| r.len() != nl)
            || left_spec.q() != partition.left().count_ones() as usize
            || right_spec.q() != partition.right().count_ones() as usize
        {
            return Err(Error::Structural(format!(
                "conditional {partition} has the wrong shape"
            )));
        }
        for row in rows.iter().flatten() {
            check_distribution(row)?;
        }
        Ok(Self {
            partition,
            left_spec,
            right_spec,
            rows,
        })
    }

    pub fn row(&self, right: usize) -> Option<&[f64]> {
        self.rows[right].as_deref()
    }

    /// `f(x^left | x^right)` for the full state `x`; `None` on an undefined row.
    pub fn prob_of(&self, x: &[i64]) -> Result<Option<f64>> {
        let l = restricted_index(&self.left_spec, x, self.partition.left())?;
        let r = restricted_index(&self.right_spec, x, self.partition.right())?;
        Ok(self.rows[r].as_ref().map(|row| row[l]))
    }
}

/// A marginal or conditional table.
#[derive(Debug, Clone, PartialEq)]
pub enum TermTable {
    Marginal(MarginalTable),
    Conditional(ConditionalTable),
}

impl TermTable {
    pub fn term(&self) -> TermId {
        match self {
            TermTable::Marginal(m) => TermId::Marginal(m.subset),
            TermTable::Conditional(c) => TermId::Conditional(c.partition),
        }
    }

    /// Largest absolute entry-wise difference to `reference`.
    ///
    /// Conditional rows undefined under `reference` are skipped. A row defined
    /// under `reference` but undefined here counts as an infinite deviation.
    pub fn sup_distance(&self, reference: &TermTable) -> Result<f64> {
        match (self, reference) {
            (TermTable::Marginal(a), TermTable::Marginal(b)) => {
                if a.subset != b.subset || a.spec != b.spec {
                    return Err(mismatch(self.term(), reference.term()));
                }
                Ok(max_abs_diff(&a.probs, &b.probs))
            }
            (TermTable::Conditional(a), TermTable::Conditional(b)) => {
                if a.partition != b.partition || a.left_spec != b.left_spec || a.right_spec != b.right_spec {
                    return Err(mismatch(self.term(), reference.term()));
                }
                let mut worst = 0.0_f64;
                for (ra, rb) in a.rows.iter().zip(&b.rows) {
                    match (ra, rb) {
                        (_, None) => {}
                        (None, Some(_)) => return Ok(f64::INFINITY),
                        (Some(ra), Some(rb)) => worst = worst.max(max_abs_diff(ra, rb)),
                    }
                }
                Ok(worst)
            }
            _ => Err(mismatch(self.term(), reference.term())),
        }
    }
}

fn mismatch(a: TermId, b: TermId) -> Error {
    Error::Structural(format!(
        "cannot compare {} table {a} with {} table {b}",
        a.kind(),
        b.kind()
    ))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Index of the restriction of full state `x` to `mask` within `restricted`.
pub(crate) fn restricted_index(restricted: &SupportSpec, x: &[i64], mask: u64) -> Result<usize> {
    let mut idx = 0usize;
    let mut j = 0usize;
    for (k, &v) in x.iter().enumerate() {
        if mask >> k & 1 == 1 {
            let pos = restricted.value_position(j, v).map_err(|_| Error::OutOfSupport {
                coordinate: k + 1,
                value: v,
            })?;
            idx = idx * restricted.radix(j) + pos;
            j += 1;
        }
    }
    if j != restricted.q() {
        return Err(Error::Dimension {
            expected: restricted.q(),
            got: j,
        });
    }
    Ok(idx)
}

/// Observed event counts for one term.
///
/// Marginal counts are indexed by restricted state; conditional counts by
/// `right * left_len + left`, i.e. the joint counts of `(x^left, x^right)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalTable {
    pub term: TermId,
    pub left_len: usize,
    pub counts: Vec<u64>,
    pub m: u64,
}

impl EmpiricalTable {
    pub fn proportions(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.m as f64).collect()
    }

    /// Total count of each conditioning (right) state. Empty for marginals.
    pub fn right_counts(&self) -> Vec<u64> {
        match self.term {
            TermId::Marginal(_) => Vec::new(),
            TermId::Conditional(_) => self.counts.chunks(self.left_len).map(|c| c.iter().sum()).collect(),
        }
    }
}

/// Counts the events of every requested term in `data`.
pub fn empirical_tables(spec: &SupportSpec, data: &Sample, ids: &[TermId]) -> Result<Vec<EmpiricalTable>> {
    if ids.is_empty() {
        return Ok(Vec::new());
    }
    // Validates every row and names the first offender.
    data.state_indices(spec)?;
    ids.iter()
        .map(|&term| {
            let (left_mask, right_mask) = match term {
                TermId::Marginal(s) => (s.mask(), 0),
                TermId::Conditional(t) => (t.left(), t.right()),
            };
            let left = spec.restrict(left_mask)?;
            let right = if right_mask == 0 {
                None
            } else {
                Some(spec.restrict(right_mask)?)
            };
            let nl = left.table_len()?;
            let nr = match &right {
                Some(r) => r.table_len()?,
                None => 1,
            };
            let mut counts = vec![0u64; nl * nr];
            for x in data.rows() {
                let l = restricted_index(&left, x, left_mask)?;
                let r = match &right {
                    Some(rs) => restricted_index(rs, x, right_mask)?,
                    None => 0,
                };
                counts[r * nl + l] += 1;
            }
            Ok(EmpiricalTable {
                term,
                left_len: nl,
                counts,
                m: data.len() as u64,
            })
        })
        .collect()
}

/// Result of recomputing claimed tables from a joint.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport {
    pub deviations: Vec<(TermId, f64)>,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Checks that every claimed marginal/conditional can be derived from `f`.
pub fn compatibility_check(f: &TabularPmf, claimed: &[TermTable], tol: f64) -> Result<CompatibilityReport> {
    let mut deviations = Vec::with_capacity(claimed.len());
    let mut max_deviation = 0.0_f64;
    for table in claimed {
        let term = table.term();
        let mask = match term {
            TermId::Marginal(s) => s.mask(),
            TermId::Conditional(t) => t.union(),
        };
        f.spec()
            .check_mask(mask)
            .map_err(|_| Error::Structural(format!("{term} does not fit a support with q = {}", f.spec().q())))?;
        let truth = f.table(term)?;
        let d = table.sup_distance(&truth)?;
        max_deviation = max_deviation.max(d);
        deviations.push((term, d));
    }
    Ok(CompatibilityReport {
        deviations,
        passed: max_deviation <= tol,
        max_deviation,
    })
}
