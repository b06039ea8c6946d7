//! Command-line interface.
//!
//! Every subcommand reads a `key = value` configuration file (see the
//! library docs for each grammar). `--seed`, `--out` and `--threads`
//! override the matching configuration keys.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mpl::config::KeyValues;
use mpl::formats::params::write_params;
use mpl::formats::report::write_report;
use mpl::formats::sample::{read_sample_csv, write_sample_csv, SampleMeta};
use mpl::formats::sha256_hex;
use mpl::harness::{load_model, load_scheme, run_experiment, write_experiment, ExperimentConfig};
use mpl::summary::{plot_data, read_records, summarize, summary_csv, Summary};
use mpl_core::estimate::{fit_mpl, Family, FitConfig, FittedModel, Objective};
use mpl_core::pl::{entropy_term_bound_check, pseudo_entropy, EntropyVariant};
use mpl_core::sample::{sample_exact, sample_gibbs, GibbsConfig, SeedSpec};
use mpl_core::SupportSpec;

/// Exit status of `fit` when the optimizer did not converge.
const EXIT_NOT_CONVERGED: u8 = 2;
/// Exit status of `summarize` on a records file without rows.
const EXIT_EMPTY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mpl",
    version,
    about = "Maximum pseudolikelihood estimation for discrete models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding `out` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, overriding `threads` in the configuration.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a family to a sample and write `fit_report.txt`. Exits 0 only when
    /// the fit converged.
    Fit(Common),
    /// Draw a sample from a model and write `sample.csv` and `sample.meta`.
    Sample(Common),
    /// Run a consistency experiment and write `records.csv` with its sidecar.
    Experiment(Common),
    /// Aggregate a records CSV into `summary.csv`.
    Summarize {
        /// Records CSV written by `experiment`.
        records: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Also write `plot.dat` (whitespace-separated blocks per term).
        #[arg(long)]
        plot: bool,
    },
    /// Report the pseudo-entropy of a model under a scheme and check every
    /// summand lies in [0, 1/e].
    CheckEntropy(Common),
}

fn config(common: &Common) -> Result<KeyValues> {
    let path = common.config.as_ref().context("--config is required")?;
    Ok(KeyValues::load(path)?)
}

fn out_dir(common: &Common, kv: Option<&KeyValues>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| kv.and_then(|k| k.path("out")))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// `{0,1,2} {-1,1}`: one brace group of values per coordinate.
fn parse_support(text: &str) -> Result<SupportSpec> {
    let mut values = Vec::new();
    for group in text.split('}').map(str::trim).filter(|g| !g.is_empty()) {
        let inner = group.strip_prefix('{').context("support groups look like {0,1,2}")?;
        let vals = inner
            .split(',')
            .map(|v| v.trim().parse::<i64>().with_context(|| format!("support value `{v}`")))
            .collect::<Result<Vec<_>>>()?;
        values.push(vals);
    }
    Ok(SupportSpec::new(values)?)
}

const FIT_KEYS: &[&str] = &[
    "family",
    "q",
    "r",
    "support",
    "data",
    "scheme",
    "scheme_file",
    "objective",
    "restarts",
    "max_iters",
    "grad_tol",
    "seed",
    "out",
    "threads",
];

fn cmd_fit(common: &Common) -> Result<ExitCode> {
    let kv = config(common)?;
    kv.check_keys(FIT_KEYS)?;
    let family = match kv.require("family")? {
        "fvbm" => Family::Fvbm { q: kv.required("q")? },
        "rbm" => Family::Rbm {
            q: kv.required("q")?,
            r: kv.required("r")?,
        },
        "categorical" => Family::Categorical { q: kv.required("q")? },
        "tabular" => Family::Tabular {
            spec: parse_support(kv.require("support")?)?,
        },
        other => bail!("unknown family `{other}`"),
    };
    let data_path = kv.path("data").context("missing `data`")?;
    let text = std::fs::read_to_string(&data_path).with_context(|| format!("reading {}", data_path.display()))?;
    let data = read_sample_csv(&data_path.display().to_string(), &text)?;
    let has_scheme = kv.get("scheme").is_some() || kv.get("scheme_file").is_some();
    let (objective, label) = match kv
        .get("objective")
        .unwrap_or(if has_scheme { "scheme" } else { "native" })
    {
        "native" => (Objective::Native, "native".to_string()),
        "scheme" => {
            let (id, w) = load_scheme(&kv, family.q())?;
            (Objective::Scheme(w), format!("scheme {id}"))
        }
        other => bail!("unknown objective `{other}`"),
    };
    let mut cfg = FitConfig {
        restarts: kv.parsed("restarts")?,
        seed: common.seed.map_or_else(|| kv.parsed_or("seed", 0), Ok)?,
        ..FitConfig::default()
    };
    cfg.max_iters = kv.parsed_or("max_iters", cfg.max_iters)?;
    cfg.grad_tol = kv.parsed_or("grad_tol", cfg.grad_tol)?;
    let report = fit_mpl(&family, &data, &objective, &cfg)?;
    let path = write(
        &out_dir(common, Some(&kv)),
        "fit_report.txt",
        &write_report(&report, &label),
    )?;
    println!(
        "status {} value {:.10e} grad_norm {:.3e} iterations {} -> {}",
        report.status,
        report.objective,
        report.grad_norm,
        report.iterations,
        path.display()
    );
    Ok(if report.converged() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NOT_CONVERGED)
    })
}

const SAMPLE_KEYS: &[&str] = &[
    "family",
    "q",
    "r",
    "params",
    "truth",
    "truth_scale",
    "truth_seed",
    "pi",
    "pmf",
    "n",
    "replicate",
    "method",
    "burn_in",
    "sweeps_per_draw",
    "seed",
    "out",
];

fn cmd_sample(common: &Common) -> Result<ExitCode> {
    let kv = config(common)?;
    kv.check_keys(SAMPLE_KEYS)?;
    let (family, model) = load_model(&kv)?;
    let n: usize = kv.required("n")?;
    let seed = SeedSpec::new(
        common.seed.map_or_else(|| kv.parsed_or("seed", 0), Ok)?,
        kv.parsed_or("replicate", 0)?,
    );
    let method = kv.get("method").unwrap_or("exact");
    let sample = match method {
        "exact" => sample_exact(&model.joint()?, n, seed)?,
        "gibbs" => {
            let defaults = GibbsConfig::default();
            let g = GibbsConfig {
                burn_in: kv.parsed_or("burn_in", defaults.burn_in)?,
                sweeps_per_draw: kv.parsed_or("sweeps_per_draw", defaults.sweeps_per_draw)?,
            };
            match &model {
                FittedModel::Fvbm(p) => sample_gibbs(p, n, g, None, seed)?,
                FittedModel::Rbm(p) => sample_gibbs(p, n, g, None, seed)?,
                _ => bail!("Gibbs sampling needs an fvbm or rbm model"),
            }
        }
        other => bail!("unknown method `{other}`"),
    };
    let params_hash = sha256_hex(write_params(&model).as_bytes());
    let meta = SampleMeta::new(family.name(), params_hash, seed, method, &sample);
    let dir = out_dir(common, Some(&kv));
    let path = write(&dir, "sample.csv", &write_sample_csv(&sample))?;
    write(&dir, "sample.meta", &meta.to_text())?;
    println!("{} draws -> {}", sample.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(common: &Common) -> Result<ExitCode> {
    let kv = config(common)?;
    let mut cfg = ExperimentConfig::from_key_values(&kv)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let out = run_experiment(&cfg)?;
    write_experiment(&cfg, &out, &dir)?;
    let summary = summarize(&read_records("records", &out.csv)?);
    println!(
        "{} rows, pseudo-entropy {:.6} (bound {:.6}), monotone medians: {} -> {}",
        out.records.len(),
        out.entropy.entropy,
        out.entropy.bound,
        summary.all_monotone(),
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_summarize(records: &Path, common: &Common, plot: bool) -> Result<ExitCode> {
    let text = std::fs::read_to_string(records).with_context(|| format!("reading {}", records.display()))?;
    let rows = read_records(&records.display().to_string(), &text)?;
    let summary = summarize(&rows);
    let dir = out_dir(common, None);
    write(&dir, "summary.csv", &summary_csv(&summary)?)?;
    if plot {
        write(&dir, "plot.dat", &plot_data(&summary))?;
    }
    match &summary {
        Summary::Empty => {
            println!("status empty: no records in {}", records.display());
            Ok(ExitCode::from(EXIT_EMPTY))
        }
        Summary::Terms(terms) => {
            for t in terms {
                let medians: Vec<String> = t.rows.iter().map(|r| format!("{}:{:.4}", r.n, r.median)).collect();
                println!(
                    "{} {} {} monotone={}",
                    t.term_kind,
                    t.term_id,
                    medians.join(" "),
                    t.monotone
                );
            }
            println!("status ok: all monotone = {}", summary.all_monotone());
            Ok(ExitCode::SUCCESS)
        }
    }
}

const ENTROPY_KEYS: &[&str] = &[
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
    "variant",
];

fn cmd_check_entropy(common: &Common) -> Result<ExitCode> {
    let kv = config(common)?;
    kv.check_keys(ENTROPY_KEYS)?;
    let (family, model) = load_model(&kv)?;
    let (id, scheme) = load_scheme(&kv, family.q())?;
    let variant = match kv.get("variant").unwrap_or("unweighted") {
        "unweighted" => EntropyVariant::Unweighted,
        "right_marginal_weighted" => EntropyVariant::RightMarginalWeighted,
        other => bail!("unknown variant `{other}`"),
    };
    let joint = model.joint()?;
    let report = entropy_term_bound_check(&joint, &scheme)?;
    let h = pseudo_entropy(&joint, &scheme, variant)?;
    println!("scheme {id}");
    println!("pseudo_entropy {h:.16e}");
    println!("summands {}", report.summands);
    println!("max_summand {:.16e}", report.max_summand);
    println!("bound {:.16e}", report.bound);
    println!("all_within {}", report.all_within);
    println!("finite {}", report.finite);
    Ok(if report.finite && report.all_within {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(c) => cmd_fit(c),
        Command::Sample(c) => cmd_sample(c),
        Command::Experiment(c) => cmd_experiment(c),
        Command::Summarize { records, common, plot } => cmd_summarize(records, common, *plot),
        Command::CheckEntropy(c) => cmd_check_entropy(c),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
