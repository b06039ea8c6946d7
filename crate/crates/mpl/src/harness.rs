//! Monte Carlo consistency experiments.
//!
//! For every sample size `n` on the grid and every replicate, a sample is
//! drawn exactly from the ground truth, the family is fitted, and the sup-norm
//! distance between fitted and true tables is recorded for each weighted
//! marginal and conditional term.
//!
//! Cell `(g, r)` (grid index `g`, replicate `r`) draws from ChaCha stream
//! `g << 32 | r` under the master seed, so cells are independent jobs and the
//! output does not depend on the thread count.
//!
//! # Configuration
//!
//! ```text
//! family      = fvbm | rbm | categorical | tabular
//! q           = 4                # not needed for tabular
//! r           = 2                # rbm only
//! params      = truth.params     # ground truth file, or:
//! truth       = random           # random truth (fvbm, rbm, categorical)
//! truth_scale = 0.5              # entries uniform in [-scale, scale]
//! truth_seed  = 7
//! pi          = 0.2 0.3 0.5      # categorical truth
//! pmf         = truth.csv        # tabular truth
//! scheme      = full_conditionals   # a named scheme, or:
//! scheme_file = weights.txt
//! objective   = native | scheme  # default scheme
//! grid        = 100 1000 10000   # strictly increasing
//! replicates  = 20
//! seed        = 2017
//! restarts    = 5                # default: family default
//! max_iters   = 500
//! grad_tol    = 1e-8
//! out         = results          # output directory
//! threads     = 4
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mpl_core::estimate::{fit_mpl, Family, FitConfig, FitStatus, FittedModel, Objective};
use mpl_core::models::{CategoricalParams, FvbmParams, RbmParams};
use mpl_core::pl::{entropy_term_bound_check, named_scheme, EntropyBoundReport};
use mpl_core::pmf::TermTable;
use mpl_core::sample::{sample_exact, SeedSpec, GENERATOR_ID};
use mpl_core::{TabularPmf, TermId, WeightScheme};
use rayon::prelude::*;

use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::formats::params::{read_params, write_params};
use crate::formats::pmf::read_pmf_csv;
use crate::formats::scheme::{read_scheme, write_scheme};
use crate::formats::{fmt_f64, sha256_hex};

pub const RECORDS_FILE: &str = "records.csv";
pub const RECORDS_META_FILE: &str = "records.meta";
pub const TRUTH_FILE: &str = "truth.params";
pub const SCHEME_FILE: &str = "scheme.txt";

pub const RECORD_COLUMNS: [&str; 9] = [
    "family",
    "scheme_id",
    "n",
    "replicate",
    "term_kind",
    "term_id",
    "sup_error",
    "param_error",
    "fit_status",
];

const KEYS: &[&str] = &[
    "family",
    "q",
    "r",
    "params",
    "truth",
    "truth_scale",
    "truth_seed",
    "pi",
    "pmf",
    "scheme",
    "scheme_file",
    "objective",
    "grid",
    "replicates",
    "seed",
    "restarts",
    "max_iters",
    "grad_tol",
    "out",
    "threads",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    pub truth: FittedModel,
    pub scheme_id: String,
    pub scheme: WeightScheme,
    /// Fit the family-native objective instead of the generic scheme one.
    /// Requires the scheme to be the family's native scheme.
    pub native: bool,
    pub grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub fit: FitConfig,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Draws a ground truth with entries uniform in `[-scale, scale]`
/// (categorical: weights uniform in `[1, 1 + 2 scale]`, normalized).
pub fn random_truth(family: &Family, scale: f64, seed: u64) -> Result<FittedModel> {
    let mut rng = SeedSpec::new(seed, 0).rng();
    let dim = family.dim()?;
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.uniform_in(-scale, scale)).collect() };
    Ok(match family {
        Family::Fvbm { q } => FittedModel::Fvbm(FvbmParams::from_flat(*q, &draw(dim))?),
        Family::Rbm { q, r } => FittedModel::Rbm(RbmParams::from_flat(*q, *r, &draw(dim))?),
        Family::Categorical { q } => {
            let w: Vec<f64> = draw(*q).iter().map(|v| 1.0 + scale + v).collect();
            let total: f64 = w.iter().sum();
            FittedModel::Categorical(CategoricalParams::new(w.iter().map(|v| v / total).collect())?)
        }
        Family::Tabular { .. } => {
            return Err(Error::Invalid(
                "random truth is not available for tabular families".into(),
            ))
        }
    })
}

fn family_from(kv: &KeyValues, truth_from_pmf: Option<&TabularPmf>) -> Result<Family> {
    let name = kv.require("family")?;
    Ok(match name {
        "fvbm" => Family::Fvbm { q: kv.required("q")? },
        "rbm" => Family::Rbm {
            q: kv.required("q")?,
            r: kv.required("r")?,
        },
        "categorical" => Family::Categorical { q: kv.required("q")? },
        "tabular" => match truth_from_pmf {
            Some(f) => Family::Tabular { spec: f.spec().clone() },
            None => return Err(kv.error("family", "tabular experiments need `pmf`")),
        },
        other => return Err(kv.error("family", format!("unknown family `{other}`"))),
    })
}

pub fn native_scheme_name(family: &Family) -> Option<&'static str> {
    match family {
        Family::Categorical { .. } => Some("categorical"),
        Family::Fvbm { .. } | Family::Rbm { .. } => Some("full_conditionals"),
        Family::Tabular { .. } => None,
    }
}

fn same_shape(family: &Family, truth: &FittedModel) -> bool {
    match (family, truth) {
        (Family::Categorical { q }, FittedModel::Categorical(p)) => p.q() == *q,
        (Family::Fvbm { q }, FittedModel::Fvbm(p)) => p.q() == *q,
        (Family::Rbm { q, r }, FittedModel::Rbm(p)) => p.q() == *q && p.r() == *r,
        (Family::Tabular { spec }, FittedModel::Tabular(f)) => f.spec() == spec,
        _ => false,
    }
}

/// Reads the family and its ground truth from `family`, `q`, `r` and one of
/// `params`, `truth = random`, `pi` or `pmf`.
pub fn load_model(kv: &KeyValues) -> Result<(Family, FittedModel)> {
    let read = |key: &str| -> Result<(String, String)> {
        let path = kv.path(key).expect("present");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok((path.display().to_string(), text))
    };
    let pmf = match kv.get("pmf") {
        Some(_) => {
            let (origin, text) = read("pmf")?;
            Some(read_pmf_csv(&origin, &text)?)
        }
        None => None,
    };
    let family = family_from(kv, pmf.as_ref())?;
    let sources = ["params", "truth", "pi", "pmf"]
        .iter()
        .filter(|k| kv.get(k).is_some())
        .count();
    if sources != 1 {
        return Err(Error::Invalid(format!(
            "{}: give exactly one of `params`, `truth = random`, `pi`, `pmf`",
            kv.origin()
        )));
    }
    let truth = if let Some(f) = pmf {
        FittedModel::Tabular(f)
    } else if kv.get("params").is_some() {
        let (origin, text) = read("params")?;
        read_params(&origin, &text)?
    } else if let Some(pi) = kv.list::<f64>("pi")? {
        FittedModel::Categorical(CategoricalParams::new(pi).map_err(|e| kv.error("pi", e.to_string()))?)
    } else {
        if kv.require("truth")? != "random" {
            return Err(kv.error("truth", "only `truth = random` is supported"));
        }
        random_truth(
            &family,
            kv.parsed_or("truth_scale", 0.5)?,
            kv.parsed_or("truth_seed", 0u64)?,
        )?
    };
    if !same_shape(&family, &truth) {
        return Err(Error::Invalid(format!(
            "{}: the model does not match the family shape",
            kv.origin()
        )));
    }
    Ok((family, truth))
}

/// Reads `scheme = <name>` or `scheme_file = <path>`; file schemes are
/// identified as `file:` plus a hash prefix.
pub fn load_scheme(kv: &KeyValues, q: usize) -> Result<(String, WeightScheme)> {
    match (kv.get("scheme"), kv.get("scheme_file")) {
        (Some(name), None) => Ok((
            name.to_string(),
            named_scheme(name, q).map_err(|e| kv.error("scheme", e.to_string()))?,
        )),
        (None, Some(_)) => {
            let path = kv.path("scheme_file").expect("present");
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let w = read_scheme(&path.display().to_string(), &text, q)?;
            let hash = sha256_hex(write_scheme(&w).as_bytes());
            Ok((format!("file:{}", &hash[..12]), w))
        }
        _ => Err(Error::Invalid(format!(
            "{}: give exactly one of `scheme` or `scheme_file`",
            kv.origin()
        ))),
    }
}

impl ExperimentConfig {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.check_keys(KEYS)?;
        let (family, truth) = load_model(kv)?;
        let q = family.q();
        let (scheme_id, scheme) = load_scheme(kv, q)?;
        let native = match kv.get("objective").unwrap_or("scheme") {
            "native" => true,
            "scheme" => false,
            other => return Err(kv.error("objective", format!("unknown objective `{other}`"))),
        };
        if native {
            let Some(name) = native_scheme_name(&family) else {
                return Err(kv.error("objective", "tabular families have no native objective"));
            };
            if scheme != named_scheme(name, q)? {
                return Err(kv.error("objective", format!("the native objective needs `scheme = {name}`")));
            }
        }
        let grid: Vec<usize> = kv.list("grid")?.ok_or_else(|| kv.error("grid", "missing `grid`"))?;
        let mut fit = FitConfig {
            restarts: kv.parsed("restarts")?,
            ..FitConfig::default()
        };
        fit.max_iters = kv.parsed_or("max_iters", fit.max_iters)?;
        fit.grad_tol = kv.parsed_or("grad_tol", fit.grad_tol)?;
        let cfg = Self {
            family,
            truth,
            scheme_id,
            scheme,
            native,
            grid,
            replicates: kv.required("replicates")?,
            seed: kv.parsed_or("seed", 0)?,
            fit,
            out: kv.path("out"),
            threads: kv.parsed("threads")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_key_values(&KeyValues::load(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || self.grid.windows(2).any(|w| w[0] >= w[1]) || self.grid[0] == 0 {
            return Err(Error::Invalid(
                "grid must be non-empty, positive and strictly increasing".into(),
            ));
        }
        if self.replicates < 1 {
            return Err(Error::Invalid("replicates must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Invalid("threads must be at least 1".into()));
        }
        if self.scheme.is_empty() {
            return Err(Error::Invalid("the weight scheme has no terms".into()));
        }
        self.fit.validate()?;
        Ok(())
    }
}

/// One weighted term of one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub family: String,
    pub scheme_id: String,
    pub n: usize,
    pub replicate: usize,
    pub term: TermId,
    pub sup_error: f64,
    pub param_error: Option<f64>,
    pub fit_status: FitStatus,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<Record>,
    pub entropy: EntropyBoundReport,
    /// Contents of the records CSV.
    pub csv: String,
    /// Contents of the metadata sidecar.
    pub meta: String,
}

fn stream(grid_index: usize, replicate: usize) -> u64 {
    ((grid_index as u64) << 32) | replicate as u64
}

/// Fit-restart seed of a cell, decorrelated from the sampling stream.
fn fit_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Parameter-space distance to the truth where parameters are identified.
fn param_error(truth: &FittedModel, fitted: &FittedModel) -> Option<f64> {
    let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    match (truth, fitted) {
        (FittedModel::Categorical(a), FittedModel::Categorical(b)) => Some(gap(a.pi(), b.pi())),
        (FittedModel::Fvbm(a), FittedModel::Fvbm(b)) => Some(gap(&a.to_flat(), &b.to_flat())),
        (FittedModel::Tabular(a), FittedModel::Tabular(b)) => Some(gap(a.probs(), b.probs())),
        _ => None,
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    truth_joint: &TabularPmf,
    truth_tables: &[(TermId, TermTable)],
    grid_index: usize,
    replicate: usize,
) -> Result<Vec<Record>> {
    let n = cfg.grid[grid_index];
    let s = stream(grid_index, replicate);
    let data = sample_exact(truth_joint, n, SeedSpec::new(cfg.seed, s))?;
    let objective = if cfg.native {
        Objective::Native
    } else {
        Objective::Scheme(cfg.scheme.clone())
    };
    let fit_cfg = FitConfig {
        seed: fit_seed(cfg.seed, s),
        ..cfg.fit.clone()
    };
    let report = fit_mpl(&cfg.family, &data, &objective, &fit_cfg)
        .map_err(|e| Error::Invalid(format!("fit at n = {n}, replicate {replicate}: {e}")))?;
    let fitted = report.model.joint()?;
    let perr = param_error(&cfg.truth, &report.model);
    truth_tables
        .iter()
        .map(|(term, table)| {
            Ok(Record {
                family: cfg.family.name().to_string(),
                scheme_id: cfg.scheme_id.clone(),
                n,
                replicate,
                term: *term,
                sup_error: fitted.table(*term)?.sup_distance(table)?,
                param_error: perr,
                fit_status: report.status,
            })
        })
        .collect()
}

/// Runs every cell and renders the records CSV and its sidecar.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let truth_joint = cfg.truth.joint()?;
    let entropy = entropy_term_bound_check(&truth_joint, &cfg.scheme)?;
    if !(entropy.finite && entropy.all_within) {
        return Err(Error::Invalid(format!(
            "pseudo-entropy of the ground truth is not certified finite (H = {})",
            entropy.entropy
        )));
    }
    let truth_tables: Vec<(TermId, TermTable)> = cfg
        .scheme
        .terms()
        .into_iter()
        .map(|(t, _)| Ok((t, truth_joint.table(t)?)))
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..cfg.grid.len())
        .flat_map(|g| (0..cfg.replicates).map(move |r| (g, r)))
        .collect();
    let job = || -> Result<Vec<Vec<Record>>> {
        cells
            .par_iter()
            .map(|&(g, r)| run_cell(cfg, &truth_joint, &truth_tables, g, r))
            .collect()
    };
    let per_cell = match cfg.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?
            .install(job)?,
        None => job()?,
    };
    // Cells come back in grid-then-replicate order; rows within a cell follow
    // the canonical term order.
    let records: Vec<Record> = per_cell.into_iter().flatten().collect();
    let csv = records_csv(&records)?;
    let meta = records_meta(cfg, &entropy, &records);
    Ok(ExperimentOutput {
        records,
        entropy,
        csv,
        meta,
    })
}

pub fn records_csv(records: &[Record]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.write_record([
            r.family.clone(),
            r.scheme_id.clone(),
            r.n.to_string(),
            r.replicate.to_string(),
            r.term.kind().to_string(),
            r.term.to_string(),
            fmt_f64(r.sup_error),
            r.param_error.map(fmt_f64).unwrap_or_default(),
            r.fit_status.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

fn records_meta(cfg: &ExperimentConfig, entropy: &EntropyBoundReport, records: &[Record]) -> String {
    let grid: Vec<String> = cfg.grid.iter().map(usize::to_string).collect();
    let non_converged = records
        .iter()
        .filter(|r| r.fit_status != FitStatus::Converged)
        .map(|r| (r.n, r.replicate))
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let mut out = String::new();
    let _ = writeln!(out, "family = {}", cfg.family.name());
    let _ = writeln!(out, "scheme_id = {}", cfg.scheme_id);
    let _ = writeln!(out, "objective = {}", if cfg.native { "native" } else { "scheme" });
    let _ = writeln!(out, "grid = {}", grid.join(" "));
    let _ = writeln!(out, "replicates = {}", cfg.replicates);
    let _ = writeln!(out, "seed = {}", cfg.seed);
    let _ = writeln!(out, "generator = {GENERATOR_ID}");
    let _ = writeln!(out, "cell_stream = grid_index << 32 | replicate");
    let _ = writeln!(
        out,
        "truth_sha256 = {}",
        sha256_hex(write_params(&cfg.truth).as_bytes())
    );
    let _ = writeln!(
        out,
        "scheme_sha256 = {}",
        sha256_hex(write_scheme(&cfg.scheme).as_bytes())
    );
    let _ = writeln!(out, "pseudo_entropy = {}", fmt_f64(entropy.entropy));
    let _ = writeln!(out, "entropy_bound = {}", fmt_f64(entropy.bound));
    let _ = writeln!(out, "rows = {}", records.len());
    let _ = writeln!(out, "non_converged_fits = {non_converged}");
    out
}

/// Writes the records CSV, its sidecar, the ground truth and the scheme
/// into `dir`.
pub fn write_experiment(cfg: &ExperimentConfig, out: &ExperimentOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        (RECORDS_FILE, out.csv.clone()),
        (RECORDS_META_FILE, out.meta.clone()),
        (TRUTH_FILE, write_params(&cfg.truth)),
        (SCHEME_FILE, write_scheme(&cfg.scheme)),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(text: &str) -> KeyValues {
        KeyValues::parse("cfg", Path::new("."), text).unwrap()
    }

    #[test]
    fn single_cell_has_one_row_per_term() {
        let cfg = ExperimentConfig::from_key_values(&kv(
            "family = categorical\nq = 3\npi = 0.2 0.3 0.5\nscheme = categorical\ngrid = 50\nreplicates = 1\nseed = 3\n",
        ))
        .unwrap();
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.csv.lines().count(), 3);
        assert!(out
            .csv
            .starts_with("family,scheme_id,n,replicate,term_kind,term_id,sup_error,param_error,fit_status\n"));
        assert!(out.csv.contains("\"{1,2,3}\""));
        assert!(out.records.iter().all(|r| (0.0..=1.0).contains(&r.sup_error)));
    }

    #[test]
    fn config_errors() {
        let base = "family = fvbm\nq = 3\ntruth = random\nscheme = pairwise\nreplicates = 2\n";
        let e = ExperimentConfig::from_key_values(&kv(&format!("{base}grid = 100 100\n"))).unwrap_err();
        assert!(e.to_string().contains("strictly increasing"));
        let e = ExperimentConfig::from_key_values(&kv(&format!("{base}grid = 100\nobjective = native\n"))).unwrap_err();
        assert!(e.to_string().contains("full_conditionals"), "{e}");
        let e = ExperimentConfig::from_key_values(&kv(&format!("{base}grid = 100\ncolour = red\n"))).unwrap_err();
        assert!(e.to_string().contains("unknown key"));
    }

    #[test]
    fn thread_count_does_not_change_bytes() {
        let text = "family = fvbm\nq = 3\ntruth = random\ntruth_seed = 4\nscheme = full_conditionals\nobjective = native\ngrid = 50 200\nreplicates = 3\nseed = 11\n";
        let mut cfg = ExperimentConfig::from_key_values(&kv(text)).unwrap();
        cfg.threads = Some(1);
        let a = run_experiment(&cfg).unwrap();
        cfg.threads = Some(3);
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.csv, b.csv);
        assert_eq!(a.meta, b.meta);
    }
}
