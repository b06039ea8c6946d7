//! The weighted log-pseudolikelihood
//!
//! ```text
//! L(X_n) = Σ_i Σ_S c_S log f^S(x_i^S) + Σ_i Σ_T d_T log f^T(x_i^left | x_i^right)
//! ```
//!
//! its pseudo-entropy, and the named weight schemes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::math::{self, NeumaierSum};
use crate::pmf::{TabularPmf, TermTable};
use crate::support::{enumerate_partitions, enumerate_subsets, PartitionId, SubsetId, SupportSpec, TermId};

/// Sparse non-negative coefficients `c_S` and `d_T`. Absent keys are zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightScheme {
    marginals: BTreeMap<SubsetId, f64>,
    conditionals: BTreeMap<PartitionId, f64>,
}

impl WeightScheme {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_marginal(&mut self, s: SubsetId, c: f64) -> Result<&mut Self> {
        check_coefficient(c)?;
        if c == 0.0 {
            self.marginals.remove(&s);
        } else {
            self.marginals.insert(s, c);
        }
        Ok(self)
    }

    pub fn set_conditional(&mut self, t: PartitionId, d: f64) -> Result<&mut Self> {
        check_coefficient(d)?;
        if d == 0.0 {
            self.conditionals.remove(&t);
        } else {
            self.conditionals.insert(t, d);
        }
        Ok(self)
    }

    pub fn marginal(&self, s: SubsetId) -> f64 {
        self.marginals.get(&s).copied().unwrap_or(0.0)
    }

    pub fn conditional(&self, t: PartitionId) -> f64 {
        self.conditionals.get(&t).copied().unwrap_or(0.0)
    }

    pub fn marginals(&self) -> impl Iterator<Item = (SubsetId, f64)> + '_ {
        self.marginals.iter().map(|(&s, &c)| (s, c))
    }

    pub fn conditionals(&self) -> impl Iterator<Item = (PartitionId, f64)> + '_ {
        self.conditionals.iter().map(|(&t, &d)| (t, d))
    }

    /// Every weighted term in canonical order: marginals, then conditionals.
    pub fn terms(&self) -> Vec<(TermId, f64)> {
        self.marginals()
            .map(|(s, c)| (TermId::Marginal(s), c))
            .chain(self.conditionals().map(|(t, d)| (TermId::Conditional(t), d)))
            .collect()
    }

    pub fn num_terms(&self) -> usize {
        self.marginals.len() + self.conditionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.num_terms() == 0
    }

    /// Every coefficient multiplied by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidScheme(format!("scale {lambda} must be positive")));
        }
        Ok(Self {
            marginals: self.marginals.iter().map(|(&k, &v)| (k, v * lambda)).collect(),
            conditionals: self.conditionals.iter().map(|(&k, &v)| (k, v * lambda)).collect(),
        })
    }

    /// Checks that some coefficient is positive and every id fits `spec`.
    pub fn validate(&self, spec: &SupportSpec) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidScheme("c and d cannot both be zero".into()));
        }
        for s in self.marginals.keys() {
            spec.check_mask(s.mask())
                .map_err(|_| Error::InvalidScheme(format!("{s} does not fit q = {}", spec.q())))?;
        }
        for t in self.conditionals.keys() {
            spec.check_mask(t.union())
                .map_err(|_| Error::InvalidScheme(format!("{t} does not fit q = {}", spec.q())))?;
        }
        Ok(())
    }

    /// Every subset and partition of `spec` with unit weight. Refused above
    /// the enumeration caps.
    pub fn all_terms(spec: &SupportSpec) -> Result<Self> {
        let mut w = Self::new();
        for s in enumerate_subsets(spec)? {
            w.set_marginal(s, 1.0)?;
        }
        for t in enumerate_partitions(spec)? {
            w.set_conditional(t, 1.0)?;
        }
        Ok(w)
    }
}

fn check_coefficient(c: f64) -> Result<()> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidScheme(format!(
            "coefficient {c} must be finite and non-negative"
        )))
    }
}

fn check_q(q: usize) -> Result<()> {
    if q == 0 || q > crate::support::MAX_COORDINATES {
        return Err(Error::InvalidScheme(format!("q = {q} out of range")));
    }
    Ok(())
}

fn full_mask(q: usize) -> u64 {
    if q == 64 {
        u64::MAX
    } else {
        (1 << q) - 1
    }
}

/// Ordinary likelihood: `c = 1` on the full coordinate set.
pub fn scheme_ml(q: usize) -> Result<WeightScheme> {
    check_q(q)?;
    let mut w = WeightScheme::new();
    w.set_marginal(SubsetId::new(full_mask(q))?, 1.0)?;
    Ok(w)
}

/// Composite marginal likelihood: `c = 1` on every singleton.
pub fn scheme_composite_marginal(q: usize) -> Result<WeightScheme> {
    check_q(q)?;
    let mut w = WeightScheme::new();
    for k in 1..=q {
        w.set_marginal(SubsetId::singleton(k), 1.0)?;
    }
    Ok(w)
}

/// Pairwise likelihood: `c = 1` on every two-coordinate subset.
pub fn scheme_pairwise(q: usize) -> Result<WeightScheme> {
    check_q(q)?;
    if q < 2 {
        return Err(Error::InvalidScheme("pairwise likelihood needs q >= 2".into()));
    }
    let mut w = WeightScheme::new();
    for j in 0..q {
        for k in j + 1..q {
            w.set_marginal(SubsetId::new(1 << j | 1 << k)?, 1.0)?;
        }
    }
    Ok(w)
}

/// Besag-style pseudolikelihood: `d = 1` on each `{k} | [q]∖{k}`.
pub fn scheme_full_conditionals(q: usize) -> Result<WeightScheme> {
    check_q(q)?;
    if q < 2 {
        return Err(Error::InvalidScheme("full conditionals need q >= 2".into()));
    }
    let mut w = WeightScheme::new();
    for k in 1..=q {
        w.set_conditional(PartitionId::full_conditional(q, k)?, 1.0)?;
    }
    Ok(w)
}

/// The categorical example's scheme: the full joint plus the conditional of
/// the first `q-1` coordinates given the last.
pub fn scheme_categorical(q: usize) -> Result<WeightScheme> {
    check_q(q)?;
    let mut w = scheme_ml(q)?;
    if q >= 2 {
        let last = 1u64 << (q - 1);
        w.set_conditional(PartitionId::new(full_mask(q) & !last, last)?, 1.0)?;
    }
    Ok(w)
}

/// Looks up a named scheme.
pub fn named_scheme(name: &str, q: usize) -> Result<WeightScheme> {
    match name {
        "ml" => scheme_ml(q),
        "composite_marginal" => scheme_composite_marginal(q),
        "pairwise" => scheme_pairwise(q),
        "full_conditionals" => scheme_full_conditionals(q),
        "categorical" => scheme_categorical(q),
        other => Err(Error::InvalidScheme(format!("unknown scheme `{other}`"))),
    }
}

/// Value of the log-pseudolikelihood with its per-term breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct PlValue {
    pub total: f64,
    /// `(term, weight × Σ_i log f^term(x_i))` in canonical term order.
    pub terms: Vec<(TermId, f64)>,
    /// First `(datum, term)` with zero probability, when `total` is `-inf`.
    pub offending: Option<(usize, TermId)>,
}

/// Evaluates the weighted log-pseudolikelihood of `data` under `f`.
///
/// Each datum's terms are added in canonical term order and data are visited
/// in order. A datum whose weighted marginal or conditional probability is
/// zero makes the total `-inf`; the first such `(datum, term)` is recorded.
pub fn log_pl(f: &TabularPmf, data: &Sample, w: &WeightScheme) -> Result<PlValue> {
    let spec = f.spec();
    w.validate(spec)?;
    data.state_indices(spec)?;
    let terms = w.terms();
    let tables: Vec<TermTable> = terms.iter().map(|&(t, _)| f.table(t)).collect::<Result<_>>()?;
    let mut per_term = alloc::vec![0.0; terms.len()];
    let mut total = 0.0;
    let mut offending = None;
    for (i, x) in data.rows().enumerate() {
        for (j, ((term, weight), table)) in terms.iter().zip(&tables).enumerate() {
            let p = match table {
                TermTable::Marginal(m) => m.prob_of(x)?,
                TermTable::Conditional(c) => c.prob_of(x)?.unwrap_or(0.0),
            };
            let v = weight * math::ln(p);
            if p == 0.0 && offending.is_none() {
                offending = Some((i, *term));
            }
            per_term[j] += v;
            total += v;
        }
    }
    Ok(PlValue {
        total,
        terms: terms.iter().map(|&(t, _)| t).zip(per_term).collect(),
        offending,
    })
}

/// How conditional terms enter the pseudo-entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntropyVariant {
    /// `Σ_right Σ_left -f^T log f^T`, rows unweighted.
    #[default]
    Unweighted,
    /// Each row weighted by the probability of its conditioning event, i.e. a
    /// proper conditional entropy.
    RightMarginalWeighted,
}

/// Pseudo-entropy `H(f)` with the `0 log 0 = 0` convention.
///
/// Undefined conditional rows (zero-probability conditioning events)
/// contribute nothing.
pub fn pseudo_entropy(f: &TabularPmf, w: &WeightScheme, variant: EntropyVariant) -> Result<f64> {
    let mut total = NeumaierSum::default();
    for_each_entropy_term(f, w, variant, |weight, y| total.add(weight * math::neg_xlogx(y)))?;
    Ok(total.total())
}

fn for_each_entropy_term(
    f: &TabularPmf,
    w: &WeightScheme,
    variant: EntropyVariant,
    mut visit: impl FnMut(f64, f64),
) -> Result<()> {
    w.validate(f.spec())?;
    for (s, c) in w.marginals() {
        for &p in &f.marginalize(s)?.probs {
            visit(c, p);
        }
    }
    for (t, d) in w.conditionals() {
        let table = f.condition(t)?;
        let right = match variant {
            EntropyVariant::Unweighted => None,
            EntropyVariant::RightMarginalWeighted => Some(f.marginalize(SubsetId::new(t.right())?)?),
        };
        for (r, row) in table.rows.iter().enumerate() {
            let Some(row) = row else { continue };
            let scale = right.as_ref().map_or(1.0, |m| m.probs[r]);
            for &p in row {
                visit(d * scale, p);
            }
        }
    }
    Ok(())
}

/// Outcome of scanning every summand `-y log y` of `H(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyBoundReport {
    pub entropy: f64,
    pub max_summand: f64,
    /// Number of summands.
    pub summands: usize,
    /// `Σ weight × (number of summands of that term)`.
    pub weighted_count: f64,
    /// `weighted_count / e`, an upper bound on `H(f)`.
    pub bound: f64,
    pub all_within: bool,
    pub finite: bool,
}

/// Largest value of `-y log y` on `[0, 1]`, attained at `y = 1/e`.
pub const NEG_XLOGX_MAX: f64 = 1.0 / core::f64::consts::E;

/// Verifies every summand lies in `[0, 1/e]`, which bounds `H(f)` on a
/// finite support and so certifies it finite.
pub fn entropy_term_bound_check(f: &TabularPmf, w: &WeightScheme) -> Result<EntropyBoundReport> {
    let mut entropy = NeumaierSum::default();
    let mut max_summand = 0.0_f64;
    let mut summands = 0usize;
    let mut weighted_count = 0.0;
    let mut all_within = true;
    for_each_entropy_term(f, w, EntropyVariant::Unweighted, |weight, y| {
        let term = math::neg_xlogx(y);
        all_within &= (0.0..=NEG_XLOGX_MAX + 1e-15).contains(&term);
        max_summand = max_summand.max(term);
        summands += 1;
        weighted_count += weight;
        entropy.add(weight * term);
    })?;
    let entropy = entropy.total();
    let bound = weighted_count * NEG_XLOGX_MAX;
    Ok(EntropyBoundReport {
        entropy,
        max_summand,
        summands,
        weighted_count,
        bound,
        all_within,
        finite: entropy.is_finite() && all_within && entropy <= bound * (1.0 + 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn scheme_constructors() {
        let ml = scheme_ml(3).unwrap();
        assert_eq!(ml.terms().len(), 1);
        assert_eq!(ml.marginal(SubsetId::new(0b111).unwrap()), 1.0);
        assert_eq!(scheme_pairwise(3).unwrap().marginals().count(), 3);
        assert!(scheme_pairwise(1).is_err());
        let fc = scheme_full_conditionals(2).unwrap();
        let ids: Vec<_> = fc.conditionals().map(|(t, _)| t.to_string()).collect();
        assert_eq!(ids, vec!["{1}|{2}", "{2}|{1}"]);
        assert_eq!(scheme_composite_marginal(4).unwrap().num_terms(), 4);
        let cat = scheme_categorical(3).unwrap();
        let ids: Vec<_> = cat.terms().iter().map(|(t, _)| t.to_string()).collect();
        assert_eq!(ids, vec!["{1,2,3}", "{1,2}|{3}"]);
    }

    #[test]
    fn coefficients_must_be_non_negative() {
        let mut w = WeightScheme::new();
        assert!(w.set_marginal(SubsetId::singleton(1), -1.0).is_err());
        assert!(w.set_marginal(SubsetId::singleton(1), f64::NAN).is_err());
        assert!(w.validate(&SupportSpec::binary(2).unwrap()).is_err());
        w.set_marginal(SubsetId::singleton(3), 1.0).unwrap();
        assert!(w.validate(&SupportSpec::binary(2).unwrap()).is_err());
        assert!(scheme_ml(2).unwrap().scaled(0.0).is_err());
    }

    #[test]
    fn pairwise_on_uniform() {
        let f = TabularPmf::uniform(SupportSpec::binary(2).unwrap()).unwrap();
        let data = Sample::from_rows(2, &[[1, 0]]).unwrap();
        let v = log_pl(&f, &data, &scheme_pairwise(2).unwrap()).unwrap();
        assert!((v.total - 0.25f64.ln()).abs() < 1e-15);
        assert_eq!(v.offending, None);
    }

    #[test]
    fn zero_probability_is_reported() {
        let f = TabularPmf::new(SupportSpec::binary(2).unwrap(), vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let data = Sample::from_rows(2, &[[0, 1], [1, 1], [1, 0]]).unwrap();
        let v = log_pl(&f, &data, &scheme_composite_marginal(2).unwrap()).unwrap();
        assert_eq!(v.total, f64::NEG_INFINITY);
        assert_eq!(v.offending, Some((1, TermId::Marginal(SubsetId::singleton(1)))));
        // The conditional of x2 given x1 = 1 is undefined under f.
        let v = log_pl(&f, &data, &scheme_full_conditionals(2).unwrap()).unwrap();
        assert_eq!(v.total, f64::NEG_INFINITY);
        assert_eq!(v.offending.unwrap().0, 1);
    }

    #[test]
    fn entropy_examples() {
        let u = TabularPmf::uniform(SupportSpec::binary(3).unwrap()).unwrap();
        let h = pseudo_entropy(&u, &scheme_ml(3).unwrap(), EntropyVariant::Unweighted).unwrap();
        assert!((h - 3.0 * 2f64.ln()).abs() < 1e-15);
        let point = TabularPmf::point_mass(SupportSpec::binary(3).unwrap(), 5).unwrap();
        let h = pseudo_entropy(&point, &scheme_ml(3).unwrap(), EntropyVariant::Unweighted).unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn bound_check_endpoints() {
        let e = core::f64::consts::E;
        assert!((math::neg_xlogx(1.0 / e) - NEG_XLOGX_MAX).abs() < 1e-17);
        let point = TabularPmf::point_mass(SupportSpec::binary(2).unwrap(), 0).unwrap();
        let rep = entropy_term_bound_check(&point, &scheme_ml(2).unwrap()).unwrap();
        assert_eq!(rep.max_summand, 0.0);
        assert_eq!(rep.summands, 4);
        assert!(rep.finite && rep.all_within);
    }

    #[test]
    fn variant_weights_rows_by_right_marginal() {
        let f = TabularPmf::new(SupportSpec::binary(2).unwrap(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut w = WeightScheme::new();
        w.set_conditional("{1}|{2}".parse().unwrap(), 1.0).unwrap();
        let plain = pseudo_entropy(&f, &w, EntropyVariant::Unweighted).unwrap();
        let weighted = pseudo_entropy(&f, &w, EntropyVariant::RightMarginalWeighted).unwrap();
        let h = |a: f64, b: f64| math::neg_xlogx(a) + math::neg_xlogx(b);
        let row0 = h(0.1 / 0.4, 0.3 / 0.4);
        let row1 = h(0.2 / 0.6, 0.4 / 0.6);
        assert!((plain - (row0 + row1)).abs() < 1e-15);
        assert!((weighted - (0.4 * row0 + 0.6 * row1)).abs() < 1e-15);
    }
}
