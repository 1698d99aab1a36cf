//! File formats, a parallel executor and the batch pipeline behind the
//! `medrule` command.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use medrule_core::dgp::{DgpError, DiscreteDgp, PopulationEffects};
use medrule_core::effects::EffectEstimate;
use medrule_core::model::{validate_dataset, DataError, Dataset};
use medrule_core::pipeline::{analyze, Analysis, PipelineError, Report};
use medrule_core::Executor;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod config;
pub mod io;
pub mod plot;

pub use config::RunConfig;
pub use plot::{render_forest_plot, PlotError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}: {1}")]
    Csv(String, csv::Error),
    #[error("{0}: {1}")]
    Json(String, serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(#[from] DataError),
    #[error("model: {0}")]
    Dgp(#[from] DgpError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("plot: {0}")]
    Plot(#[from] PlotError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

/// Runs work on a rayon pool of fixed size. Results keep index order, so
/// output does not depend on the thread count.
#[derive(Debug)]
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `threads = 0` uses one thread per core.
    pub fn new(threads: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool");
        RayonExecutor { pool }
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}

impl Executor for RayonExecutor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        use rayon::prelude::*;
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

/// `report.json`: the analysis report plus a timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Seconds since the Unix epoch; the only non-deterministic field.
    pub generated_at: u64,
    #[serde(flatten)]
    pub report: Report,
}

/// Removes `generated_at` from a serialized run report.
pub fn strip_timestamp(json: &str) -> Result<String, serde_json::Error> {
    let mut v: serde_json::Value = serde_json::from_str(json)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("generated_at");
    }
    serde_json::to_string_pretty(&v)
}

/// Reads and validates the dataset named by `cfg`.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let raw = io::read_table(&cfg.data)?;
    Ok(validate_dataset(&raw, &cfg.column_schema())?)
}

/// Files written by [`run_pipeline`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outputs {
    pub report: PathBuf,
    pub effects_json: PathBuf,
    pub effects_csv: PathBuf,
    pub pseudo_outcomes: PathBuf,
    pub folds: PathBuf,
    pub subgroups: Vec<PathBuf>,
    pub plot: PathBuf,
}

impl Outputs {
    fn in_dir(dir: &Path, analysis: &Analysis) -> Outputs {
        Outputs {
            report: dir.join("report.json"),
            effects_json: dir.join("effects.json"),
            effects_csv: dir.join("effects.csv"),
            pseudo_outcomes: dir.join("pseudo_outcomes.csv"),
            folds: dir.join("folds.csv"),
            subgroups: analysis
                .assignments
                .iter()
                .map(|a| dir.join(format!("subgroups_{}.csv", a.method.label())))
                .collect(),
            plot: dir.join("forest.svg"),
        }
    }
}

/// Runs the analysis on an already loaded dataset and writes every artifact
/// into `dir`.
pub fn run_on_dataset(
    ds: &Dataset,
    cfg: &RunConfig,
    dir: &Path,
    exec: &impl Executor,
) -> Result<(Analysis, Outputs), CliError> {
    let analysis = analyze(ds, &cfg.analysis(), exec)?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let out = Outputs::in_dir(dir, &analysis);
    let generated_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    io::write_json(
        &out.report,
        &RunReport {
            generated_at,
            report: analysis.report.clone(),
        },
    )?;
    io::write_json(&out.effects_json, &analysis.report.effects)?;
    io::write_effects_csv(&out.effects_csv, &analysis.report.effects)?;
    io::write_pseudo_outcomes(&out.pseudo_outcomes, &analysis.pseudo)?;
    io::write_folds(&out.folds, &analysis.plan)?;
    for (a, path) in analysis.assignments.iter().zip(&out.subgroups) {
        io::write_subgroups(path, a)?;
    }
    let svg = render_forest_plot(&analysis.report.effects)?;
    std::fs::write(&out.plot, svg).map_err(|e| CliError::io(&out.plot, e))?;
    Ok((analysis, out))
}

/// `run <config>`: load, analyze, write.
pub fn run_pipeline(cfg: &RunConfig, exec: &impl Executor) -> Result<(Analysis, Outputs), CliError> {
    let ds = load_dataset(cfg)?;
    run_on_dataset(&ds, cfg, &cfg.output_dir, exec)
}

pub fn load_dgp(path: &Path) -> Result<DiscreteDgp, CliError> {
    io::read_json(path)
}

/// `plot <effects.json> --out`.
pub fn plot_file(effects: &Path, out: &Path) -> Result<(), CliError> {
    let table: Vec<EffectEstimate> = io::read_json(effects)?;
    let svg = render_forest_plot(&table)?;
    std::fs::write(out, svg).map_err(|e| CliError::io(out, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumOracle {
    pub values: Vec<f64>,
    pub probability: f64,
    pub blip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualMean {
    pub a_prime: u8,
    pub a_star: u8,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleOracle {
    pub rule: String,
    /// Treatment per stratum, in stratum order.
    pub assignment: Vec<u8>,
    pub effects: PopulationEffects,
}

/// Exact quantities printed by `oracle`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub rule_covariates: Vec<String>,
    pub strata: Vec<StratumOracle>,
    pub counterfactual_means: Vec<CounterfactualMean>,
    pub rules: Vec<RuleOracle>,
}

pub fn oracle_report(d: &DiscreteDgp) -> Result<OracleReport, CliError> {
    let blips = d.true_blips();
    let probs = d.stratum_probs();
    let strata = (0..d.n_strata())
        .map(|s| StratumOracle {
            values: d.stratum_values(s),
            probability: probs[s],
            blip: blips[s],
        })
        .collect();
    let counterfactual_means = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .into_iter()
        .map(|(a_prime, a_star)| CounterfactualMean {
            a_prime,
            a_star,
            mean: d.counterfactual_mean(a_prime, a_star),
        })
        .collect();
    let k = d.n_strata();
    let mut rules = Vec::new();
    for (name, assignment) in [
        ("treat none", vec![0; k]),
        ("treat all", vec![1; k]),
        ("sign rule", d.sign_rule()),
    ] {
        rules.push(RuleOracle {
            rule: name.to_owned(),
            effects: d.true_population_effects(&assignment)?,
            assignment,
        });
    }
    Ok(OracleReport {
        rule_covariates: d.spec().rule_covariates.clone(),
        strata,
        counterfactual_means,
        rules,
    })
}
