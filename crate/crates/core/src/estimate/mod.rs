//! Maximum pseudolikelihood fitting.
//!
//! Every family is optimized over a flat unconstrained vector: categorical
//! log-ratios `log(π_k / π_q)`, the FVBM upper triangle followed by `b`, the
//! RBM `(M, a, b)` blocks, and one logit per state for free tables.
//!
//! The optimizer works on the objective divided by `n`, with scheme weights
//! normalized to sum to one, so the gradient tolerance is per datum and per
//! unit of weight, and rescaling a scheme leaves the iterates unchanged.
//!
//! A point is declared converged only when the gradient norm is within
//! tolerance and the quasi-Newton step is also small. Objectives whose supremum
//! lies at infinity (a coordinate constant in the sample, or a zero cell under
//! a free table) have vanishing gradients along a diverging path; they end as
//! [`FitStatus::Unbounded`] or [`FitStatus::MaxIterations`].

pub mod lbfgs;
mod objective;

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Sample, WeightedBinary};
use crate::error::{Error, Result};
use crate::math;
use crate::models::{CategoricalParams, FvbmParams, RbmParams};
use crate::pl::{self, WeightScheme};
use crate::pmf::TabularPmf;
use crate::sample::SeedSpec;
use crate::support::SupportSpec;

use lbfgs::{Problem, Settings, Termination};
use objective::{Kernel, NativeObjective, SchemeObjective};

/// Largest number of states a free table may be fitted over.
pub const MAX_TABULAR_STATES: u64 = 1 << 12;

/// Objectives within this distance (per datum) count as tied.
pub const NEAR_TIE_TOL: f64 = 1e-9;

/// Tied restarts whose parameters differ by more than this are flagged.
pub const NEAR_TIE_PARAM_GAP: f64 = 1e-6;

/// Half-width of the uniform perturbation used for restarts.
pub const RESTART_JITTER: f64 = 0.01;

/// The model class being fitted.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Categorical { q: usize },
    Fvbm { q: usize },
    Rbm { q: usize, r: usize },
    Tabular { spec: SupportSpec },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Categorical { .. } => "categorical",
            Family::Fvbm { .. } => "fvbm",
            Family::Rbm { .. } => "rbm",
            Family::Tabular { .. } => "tabular",
        }
    }

    pub fn q(&self) -> usize {
        match self {
            Family::Categorical { q } | Family::Fvbm { q } | Family::Rbm { q, .. } => *q,
            Family::Tabular { spec } => spec.q(),
        }
    }

    /// Length of the flat parameter vector.
    pub fn dim(&self) -> Result<usize> {
        Ok(match self {
            Family::Categorical { q } => q - 1,
            Family::Fvbm { q } => FvbmParams::num_free(*q),
            Family::Rbm { q, r } => RbmParams::num_free(*q, *r),
            Family::Tabular { spec } => spec.table_len()?,
        })
    }

    pub fn default_restarts(&self) -> usize {
        match self {
            Family::Rbm { .. } => 5,
            _ => 1,
        }
    }

    fn support(&self) -> Result<SupportSpec> {
        match self {
            Family::Tabular { spec } => Ok(spec.clone()),
            other => SupportSpec::binary(other.q()),
        }
    }

    fn check(&self) -> Result<()> {
        let q = self.q();
        match self {
            Family::Categorical { .. } if q < 2 => Err(Error::InvalidConfig("categorical family needs q >= 2".into())),
            Family::Fvbm { .. } | Family::Rbm { .. } if q < 1 => {
                Err(Error::InvalidConfig("q must be at least 1".into()))
            }
            Family::Rbm { r, .. } if *r < 1 => {
                Err(Error::InvalidConfig("an RBM needs at least one hidden unit".into()))
            }
            Family::Tabular { spec } if spec.num_states() > MAX_TABULAR_STATES => Err(Error::Capacity {
                what: "free table fit (states)",
                requested: spec.num_states(),
                limit: MAX_TABULAR_STATES,
            }),
            _ => crate::models::check_exact_cap(q),
        }
    }

    fn kernel(&self) -> Result<Kernel> {
        Ok(match self {
            Family::Categorical { q } => Kernel::Categorical { q: *q },
            Family::Fvbm { q } => Kernel::Fvbm { q: *q },
            Family::Rbm { q, r } => Kernel::Rbm { q: *q, r: *r },
            Family::Tabular { spec } => Kernel::Free {
                states: spec.table_len()?,
            },
        })
    }

    /// Builds the fitted model from a flat vector.
    pub fn model(&self, theta: &[f64]) -> Result<FittedModel> {
        if theta.len() != self.dim()? {
            return Err(Error::Dimension {
                expected: self.dim()?,
                got: theta.len(),
            });
        }
        Ok(match self {
            Family::Categorical { .. } => FittedModel::Categorical(CategoricalParams::from_logits(theta)?),
            Family::Fvbm { q } => FittedModel::Fvbm(FvbmParams::from_flat(*q, theta)?),
            Family::Rbm { q, r } => FittedModel::Rbm(RbmParams::from_flat(*q, *r, theta)?),
            Family::Tabular { spec } => FittedModel::Tabular(TabularPmf::from_log_weights(spec.clone(), theta)?),
        })
    }
}

/// What is maximized.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// The family's own closed-form log-pseudolikelihood: the categorical
    /// joint-plus-conditional form, or the sum of full conditionals for the
    /// Boltzmann machines. Not available for free tables.
    Native,
    /// The generic weighted objective over the exact joint.
    Scheme(WeightScheme),
}

/// Where each restart begins.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitPolicy {
    /// Categorical uniform, FVBM `M = 0` with `b` at the clipped empirical
    /// logits, RBM uniform in `±0.01`, free tables uniform.
    #[default]
    Default,
    /// A caller-supplied flat vector.
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub init: InitPolicy,
    pub grad_tol: f64,
    /// Largest quasi-Newton step (sup norm) accepted at convergence.
    pub step_tol: f64,
    pub max_iters: usize,
    pub memory: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Parameters beyond this sup norm end the fit as unbounded.
    pub divergence_bound: f64,
    /// `None` uses the family default.
    pub restarts: Option<usize>,
    /// Seeds the restart perturbations.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            init: InitPolicy::Default,
            grad_tol: 1e-8,
            step_tol: 1e-4,
            max_iters: 500,
            memory: 10,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            divergence_bound: 50.0,
            restarts: None,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return bad("gradient tolerance must be positive");
        }
        if self.step_tol.is_nan() || self.step_tol <= 0.0 {
            return bad("step tolerance must be positive");
        }
        if self.max_iters < 1 {
            return bad("max iterations must be at least 1");
        }
        if self.memory < 1 {
            return bad("memory must be at least 1");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("Armijo constant must lie in (0, 1)");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtracking factor must lie in (0, 1)");
        }
        if self.divergence_bound.is_nan() || self.divergence_bound <= 0.0 {
            return bad("divergence bound must be positive");
        }
        if self.restarts == Some(0) {
            return bad("at least one restart is required");
        }
        Ok(())
    }

    fn settings(&self) -> Settings {
        Settings {
            memory: self.memory,
            grad_tol: self.grad_tol,
            step_tol: self.step_tol,
            max_iters: self.max_iters,
            armijo: self.armijo,
            backtrack: self.backtrack,
            max_backtracks: self.max_backtracks,
            divergence_bound: self.divergence_bound,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Converged,
    MaxIterations,
    Unbounded,
    /// The line search found no ascent step while the gradient was above
    /// tolerance.
    Stalled,
    /// The starting objective was `-inf`.
    NonFiniteStart,
}

impl FitStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FitStatus::Converged => "converged",
            FitStatus::MaxIterations => "max-iters",
            FitStatus::Unbounded => "unbounded",
            FitStatus::Stalled => "stalled",
            FitStatus::NonFiniteStart => "non-finite-start",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "converged" => FitStatus::Converged,
            "max-iters" => FitStatus::MaxIterations,
            "unbounded" => FitStatus::Unbounded,
            "stalled" => FitStatus::Stalled,
            "non-finite-start" => FitStatus::NonFiniteStart,
            _ => return None,
        })
    }
}

impl core::fmt::Display for FitStatus {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<Termination> for FitStatus {
    fn from(t: Termination) -> Self {
        match t {
            Termination::Converged => FitStatus::Converged,
            Termination::MaxIterations => FitStatus::MaxIterations,
            Termination::Unbounded => FitStatus::Unbounded,
            Termination::Stalled => FitStatus::Stalled,
            Termination::NonFiniteStart => FitStatus::NonFiniteStart,
        }
    }
}

/// A fitted member of one of the families.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Categorical(CategoricalParams),
    Fvbm(FvbmParams),
    Rbm(RbmParams),
    Tabular(TabularPmf),
}

impl FittedModel {
    /// The exact joint table (the visible marginal for an RBM).
    pub fn joint(&self) -> Result<TabularPmf> {
        match self {
            FittedModel::Categorical(p) => p.joint(),
            FittedModel::Fvbm(p) => p.joint(),
            FittedModel::Rbm(p) => p.marginal(),
            FittedModel::Tabular(p) => Ok(p.clone()),
        }
    }
}

/// Outcome of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartResult {
    pub start: Vec<f64>,
    pub theta: Vec<f64>,
    /// Objective at `theta` (sum over data, not averaged).
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: FitStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub family: Family,
    pub model: FittedModel,
    pub theta: Vec<f64>,
    /// Objective at `theta`, summed over the data.
    pub objective: f64,
    /// Euclidean norm of the averaged gradient at `theta`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: FitStatus,
    pub restarts: Vec<RestartResult>,
    pub best_restart: usize,
    /// Another restart reached an objective within [`NEAR_TIE_TOL`] per datum
    /// at parameters more than [`NEAR_TIE_PARAM_GAP`] away.
    pub near_tie: bool,
    /// Objective after every accepted step of the best restart.
    pub trace: Vec<f64>,
    pub n: usize,
}

impl FitReport {
    pub fn converged(&self) -> bool {
        self.status == FitStatus::Converged
    }
}

/// Fits `family` to `data` by maximizing the chosen objective.
pub fn fit_mpl(family: &Family, data: &Sample, objective: &Objective, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    family.check()?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let spec = family.support()?;
    if data.q() != spec.q() {
        return Err(Error::Dimension {
            expected: spec.q(),
            got: data.q(),
        });
    }
    data.state_indices(&spec)?;
    let n = data.len() as f64;
    match objective {
        Objective::Native => {
            let problem = match family {
                Family::Categorical { .. } => NativeObjective::categorical(data)?,
                Family::Fvbm { q } => NativeObjective::Fvbm {
                    q: *q,
                    data: WeightedBinary::from_sample(data)?,
                },
                Family::Rbm { q, r } => NativeObjective::Rbm {
                    q: *q,
                    r: *r,
                    data: WeightedBinary::from_sample(data)?,
                },
                Family::Tabular { .. } => {
                    return Err(Error::InvalidConfig(
                        "free tables have no native objective; supply a weight scheme".into(),
                    ))
                }
            };
            run(family, data, problem, n, config, None)
        }
        Objective::Scheme(w) => {
            if w.is_empty() {
                return Err(Error::InvalidScheme("no weighted terms".into()));
            }
            // Optimizing with weights summing to one makes the iterates
            // identical for any rescaling of the scheme.
            let total_weight: f64 = w.terms().iter().map(|&(_, c)| c).sum();
            let mut unit = WeightScheme::new();
            for (s, c) in w.marginals() {
                unit.set_marginal(s, c / total_weight)?;
            }
            for (t, d) in w.conditionals() {
                unit.set_conditional(t, d / total_weight)?;
            }
            let problem = SchemeObjective::new(family.kernel()?, &spec, data, &unit)?;
            let mut report = run(family, data, problem, n, config, Some(&unit))?;
            report.objective *= total_weight;
            report.trace.iter_mut().for_each(|v| *v *= total_weight);
            report.restarts.iter_mut().for_each(|r| r.objective *= total_weight);
            Ok(report)
        }
    }
}

/// Fits a free probability table over `spec` (at most `2^12` states) by
/// softmax reparameterization.
pub fn fit_mpl_tabular(
    spec: &SupportSpec,
    data: &Sample,
    scheme: &WeightScheme,
    config: &FitConfig,
) -> Result<FitReport> {
    fit_mpl(
        &Family::Tabular { spec: spec.clone() },
        data,
        &Objective::Scheme(scheme.clone()),
        config,
    )
}

fn default_start(family: &Family, data: &Sample) -> Result<Vec<f64>> {
    Ok(match family {
        Family::Fvbm { q } => {
            let mut theta = vec![0.0; family.dim()?];
            let off = theta.len() - q;
            let n = data.len() as f64;
            for k in 0..*q {
                let ones = data.rows().filter(|r| r[k] == 1).count() as f64;
                let p = ones / n;
                let logit = math::ln(p) - math::ln(1.0 - p);
                theta[off + k] = logit.clamp(-4.0, 4.0);
            }
            theta
        }
        // Zero is a saddle for the hidden units, so RBM starts are jittered.
        Family::Rbm { .. } => vec![0.0; family.dim()?],
        _ => vec![0.0; family.dim()?],
    })
}

fn starts(family: &Family, data: &Sample, config: &FitConfig) -> Result<Vec<Vec<f64>>> {
    let dim = family.dim()?;
    let base = match &config.init {
        InitPolicy::Default => default_start(family, data)?,
        InitPolicy::Given(v) => {
            if v.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig("initial point is not finite".into()));
            }
            v.clone()
        }
    };
    let count = config.restarts.unwrap_or_else(|| family.default_restarts());
    let jitter_all = matches!(family, Family::Rbm { .. }) && config.init == InitPolicy::Default;
    Ok((0..count)
        .map(|k| {
            let mut x = base.clone();
            if k > 0 || jitter_all {
                let mut rng = SeedSpec::new(config.seed, k as u64).rng();
                for xi in x.iter_mut() {
                    *xi += rng.uniform_in(-RESTART_JITTER, RESTART_JITTER);
                }
            }
            x
        })
        .collect())
}

fn run<P: Problem + Clone>(
    family: &Family,
    data: &Sample,
    problem: P,
    scale_denominator: f64,
    config: &FitConfig,
    scheme: Option<&WeightScheme>,
) -> Result<FitReport> {
    let settings = config.settings();
    let scale = 1.0 / scale_denominator;
    let mut results = Vec::new();
    let mut traces = Vec::new();
    for x0 in starts(family, data, config)? {
        let mut p = problem.clone();
        let out = lbfgs::maximize(&mut p, &x0, scale, &settings);
        results.push(RestartResult {
            start: x0,
            theta: out.x,
            objective: out.value,
            grad_norm: out.grad_norm,
            iterations: out.iterations,
            status: out.termination.into(),
        });
        traces.push(out.trace);
    }

    let finite: Vec<usize> = (0..results.len())
        .filter(|&i| results[i].status != FitStatus::NonFiniteStart)
        .collect();
    if finite.is_empty() {
        return Err(zero_likelihood(family, data, &results[0].start, scheme));
    }
    let mut best = finite[0];
    for &i in &finite[1..] {
        if results[i].objective > results[best].objective {
            best = i;
        }
    }
    let b = &results[best];
    let near_tie = finite.iter().any(|&i| {
        i != best
            && (results[i].objective - b.objective).abs() * scale <= NEAR_TIE_TOL
            && math::norm_inf_diff(&results[i].theta, &b.theta) > NEAR_TIE_PARAM_GAP
    });
    Ok(FitReport {
        family: family.clone(),
        model: family.model(&b.theta)?,
        theta: b.theta.clone(),
        objective: b.objective,
        grad_norm: b.grad_norm,
        iterations: b.iterations,
        status: b.status,
        best_restart: best,
        near_tie,
        trace: traces.swap_remove(best),
        restarts: results,
        n: data.len(),
    })
}

fn zero_likelihood(family: &Family, data: &Sample, start: &[f64], scheme: Option<&WeightScheme>) -> Error {
    let offending = family
        .model(start)
        .and_then(|m| m.joint())
        .and_then(|f| match scheme {
            Some(w) => pl::log_pl(&f, data, w),
            None => Err(Error::Structural("native objective is never -inf".into())),
        })
        .ok()
        .and_then(|v| v.offending);
    match offending {
        Some((datum, term)) => Error::ZeroLikelihood { datum, term },
        None => Error::Structural("objective is not finite at any starting point".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pl::{scheme_categorical, scheme_ml};

    fn one_hot(q: usize, counts: &[usize]) -> Sample {
        let mut values = Vec::new();
        for (k, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                let mut row = vec![0i64; q];
                row[k] = 1;
                values.extend(row);
            }
        }
        Sample::new(q, values).unwrap()
    }

    #[test]
    fn categorical_ml_recovers_frequencies() {
        let data = one_hot(3, &[13, 29, 58]);
        let fam = Family::Categorical { q: 3 };
        let rep = fit_mpl(
            &fam,
            &data,
            &Objective::Scheme(scheme_ml(3).unwrap()),
            &FitConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.status, FitStatus::Converged);
        let FittedModel::Categorical(p) = &rep.model else {
            panic!()
        };
        for (a, b) in p.pi().iter().zip([0.13, 0.29, 0.58]) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn categorical_native_matches_scheme() {
        let data = one_hot(3, &[20, 30, 50]);
        let fam = Family::Categorical { q: 3 };
        let cfg = FitConfig::default();
        let a = fit_mpl(&fam, &data, &Objective::Native, &cfg).unwrap();
        let b = fit_mpl(&fam, &data, &Objective::Scheme(scheme_categorical(3).unwrap()), &cfg).unwrap();
        assert!(a.converged() && b.converged());
        assert!((a.objective - b.objective).abs() < 1e-9);
        assert!(math::norm_inf_diff(&a.theta, &b.theta) < 1e-6);
    }

    #[test]
    fn non_one_hot_datum_is_named() {
        let data = Sample::from_rows(3, &[[1, 0, 0], [1, 1, 0]]).unwrap();
        let fam = Family::Categorical { q: 3 };
        let err = fit_mpl(
            &fam,
            &data,
            &Objective::Scheme(scheme_ml(3).unwrap()),
            &FitConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ZeroLikelihood { datum: 1, .. }), "{err:?}");
    }

    #[test]
    fn degenerate_fvbm_is_not_converged() {
        let data = Sample::from_rows(3, &[[1, 0, 1]]).unwrap();
        let rep = fit_mpl(&Family::Fvbm { q: 3 }, &data, &Objective::Native, &FitConfig::default()).unwrap();
        assert_ne!(rep.status, FitStatus::Converged);
        assert!(rep.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn empty_data_and_bad_config() {
        let data = Sample::new(2, vec![]).unwrap();
        let fam = Family::Fvbm { q: 2 };
        assert_eq!(
            fit_mpl(&fam, &data, &Objective::Native, &FitConfig::default()).unwrap_err(),
            Error::EmptyData
        );
        let cfg = FitConfig {
            grad_tol: 0.0,
            ..FitConfig::default()
        };
        let d = Sample::from_rows(2, &[[0, 1]]).unwrap();
        assert!(matches!(
            fit_mpl(&fam, &d, &Objective::Native, &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }
}
