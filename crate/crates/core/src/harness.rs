//! Seeded multi-trial experiments: every algorithm runs once per trial at its
//! largest budget, predictions are scored at each checkpoint, and the metrics
//! are averaged across trials.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithm::Algorithm;
use crate::config::{budget_from_fraction, AlgorithmConfig, ConfigOverrides};
use crate::error::{Error, Result};
use crate::metrics::{
    mcnemar_p, ndcg_at_k, precision_gap, GroundTruth, DEFAULT_EPSILONS, DEFAULT_NDCG_K,
    DEFAULT_P_LEVELS,
};
use crate::oracle::{load_matrix, MatrixFormat, RemoteClient, RemoteConfig, ScoreOracle, SynthSpec};
use crate::rng::SeedPath;
use crate::runner::RunOptions;
use crate::state::MethodIndex;

pub const DEFAULT_TRIALS: usize = 50;

/// 5%, 10%, ..., 100%.
pub fn default_checkpoints() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 20.0).collect()
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

/// Where the score matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OracleSource {
    /// A complete CSV or JSON score file.
    Matrix {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<MatrixFormat>,
    },
    /// A scoring endpoint. Metrics need the full matrix in `truth`; without it
    /// only predictions are reported.
    Remote {
        #[serde(flatten)]
        config: RemoteConfig,
        methods: usize,
        examples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truth: Option<PathBuf>,
    },
    Synthetic(SynthSpec),
}

impl OracleSource {
    pub fn load(&self) -> Result<(ScoreOracle, Option<GroundTruth>)> {
        match self {
            OracleSource::Matrix { path, format } => {
                let oracle = load_matrix(path, *format)?;
                let truth = oracle.matrix().expect("file oracles are dense").ground_truth()?;
                Ok((oracle, Some(truth)))
            }
            OracleSource::Remote {
                config,
                methods,
                examples,
                truth,
            } => {
                let Some(path) = truth else {
                    let client = RemoteClient::with_dims(config.clone(), *methods, *examples)?;
                    return Ok((ScoreOracle::remote(client), None));
                };
                let full = load_matrix(path, None)?;
                if full.methods() != *methods || full.examples() != *examples {
                    return Err(Error::Input(format!(
                        "{} is {}x{}, expected {methods}x{examples}",
                        path.display(),
                        full.methods(),
                        full.examples()
                    )));
                }
                let truth = full.matrix().expect("file oracles are dense").ground_truth()?;
                let client = RemoteClient::new(
                    config.clone(),
                    full.method_names().to_vec(),
                    full.example_ids().to_vec(),
                )?;
                Ok((ScoreOracle::remote(client), Some(truth)))
            }
            OracleSource::Synthetic(spec) => {
                let instance = spec.generate()?;
                Ok((instance.oracle, Some(instance.truth)))
            }
        }
    }
}

/// One algorithm entry of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub algorithm: Algorithm,
    /// Report name and seed label; defaults to the algorithm name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Stop at this fraction of `m * n` instead of the last checkpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_fraction: Option<f64>,
    #[serde(default)]
    pub params: ConfigOverrides,
}

impl AlgorithmSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            label: None,
            max_fraction: None,
            params: ConfigOverrides::default(),
        }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.algorithm.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricSettings {
    pub epsilons: Vec<f64>,
    pub p_levels: Vec<f64>,
    pub ndcg_k: usize,
}

impl Default for MetricSettings {
    fn default() -> Self {
        Self {
            epsilons: DEFAULT_EPSILONS.to_vec(),
            p_levels: DEFAULT_P_LEVELS.to_vec(),
            ndcg_k: DEFAULT_NDCG_K,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// Aggregate table.
    pub csv: Option<PathBuf>,
    /// Full report with per-trial detail.
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub oracle: OracleSource,
    pub algorithms: Vec<AlgorithmSpec>,
    /// Fractions of `m * n`, strictly increasing in `(0, 1]`.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub metrics: MetricSettings,
    #[serde(default)]
    pub output: OutputPaths,
    /// Worker threads for trials; `None` uses the global pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Record wall-clock seconds. Timed reports differ between runs.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentSpec {
    pub fn new(oracle: OracleSource, algorithms: Vec<AlgorithmSpec>) -> Self {
        Self {
            oracle,
            algorithms,
            checkpoints: default_checkpoints(),
            trials: DEFAULT_TRIALS,
            seed: 0,
            metrics: MetricSettings::default(),
            output: OutputPaths::default(),
            workers: None,
            record_timing: false,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return fail("trial count must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return fail("no algorithms listed".into());
        }
        if self.checkpoints.is_empty() {
            return fail("no checkpoints listed".into());
        }
        let mut previous = 0.0;
        for &c in &self.checkpoints {
            if !(c > previous && c <= 1.0) {
                return fail(format!(
                    "checkpoints must be strictly increasing in (0, 1], found {c} after {previous}"
                ));
            }
            previous = c;
        }
        let mut labels: Vec<&str> = self.algorithms.iter().map(AlgorithmSpec::label).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return fail(format!("algorithm label {:?} is used twice", w[0]));
        }
        for a in &self.algorithms {
            if let Some(f) = a.max_fraction {
                if !(f > 0.0 && f <= 1.0) {
                    return fail(format!("{}: max_fraction {f} must lie in (0, 1]", a.label()));
                }
            }
        }
        if self.metrics.epsilons.iter().any(|e| !(*e >= 0.0)) {
            return fail("epsilons must be >= 0".into());
        }
        if self.metrics.p_levels.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return fail("p levels must lie in (0, 1)".into());
        }
        if self.metrics.ndcg_k == 0 {
            return fail("ndcg_k must be at least 1".into());
        }
        if self.workers == Some(0) {
            return fail("workers must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: String,
    pub param: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub fraction: f64,
    pub evaluations_used: usize,
    pub best_index: MethodIndex,
    pub estimated_means: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metrics: Vec<MetricValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub algorithm: String,
    pub trial: usize,
    /// Stream label the trial was seeded from, under the master seed.
    pub seed_label: String,
    pub checkpoints: Vec<CheckpointRecord>,
    pub selection_fits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Mean of one metric across successful trials at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub checkpoint_fraction: f64,
    pub metric_name: String,
    pub metric_param: f64,
    pub mean_value: f64,
    pub trial_count: usize,
    /// Sample standard deviation over `sqrt(trial_count)`; 0 for one trial.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub spec: ExperimentSpec,
    pub methods: Vec<String>,
    pub examples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_best: Option<MethodIndex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardness: Option<f64>,
    /// `false` while running or after a failure.
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub summary: Vec<SummaryRow>,
    pub trials: Vec<TrialResult>,
}

impl Report {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Summary rows of one algorithm and metric, in checkpoint order.
    pub fn curve(&self, algorithm: &str, metric: &str, param: f64) -> Vec<&SummaryRow> {
        self.summary
            .iter()
            .filter(|r| r.algorithm == algorithm && r.metric_name == metric && r.metric_param == param)
            .collect()
    }

    /// Smallest checkpoint fraction whose mean reaches `level`.
    pub fn first_reaching(&self, algorithm: &str, metric: &str, param: f64, level: f64) -> Option<f64> {
        self.curve(algorithm, metric, param)
            .into_iter()
            .find(|r| r.mean_value >= level)
            .map(|r| r.checkpoint_fraction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

pub const METRIC_PRECISION_GAP: &str = "precision_gap";
pub const METRIC_PRECISION_SIGNIFICANCE: &str = "precision_significance";
pub const METRIC_NDCG: &str = "ndcg";
pub const METRIC_WALL_TIME: &str = "wall_time_secs";

/// Ground truth plus the per-method McNemar p-values against the best, which
/// every checkpoint reuses.
struct Scorer<'a> {
    truth: &'a GroundTruth,
    p_vs_best: Vec<f64>,
    settings: &'a MetricSettings,
}

impl<'a> Scorer<'a> {
    fn new(truth: &'a GroundTruth, settings: &'a MetricSettings) -> Result<Self> {
        let best = truth.best_index;
        let p_vs_best = (0..truth.methods)
            .map(|i| {
                if i == best || truth.means[i] == truth.best_mean() {
                    Ok(1.0)
                } else {
                    mcnemar_p(truth, i, best)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            truth,
            p_vs_best,
            settings,
        })
    }

    fn score(&self, best_index: MethodIndex, ranking: &[MethodIndex]) -> Result<Vec<MetricValue>> {
        let mut out = Vec::new();
        for &eps in &self.settings.epsilons {
            out.push(MetricValue {
                name: METRIC_PRECISION_GAP.into(),
                param: eps,
                value: f64::from(precision_gap(self.truth, best_index, eps)?),
            });
        }
        for &level in &self.settings.p_levels {
            let hit = self.p_vs_best[best_index] > level;
            out.push(MetricValue {
                name: METRIC_PRECISION_SIGNIFICANCE.into(),
                param: level,
                value: f64::from(u8::from(hit)),
            });
        }
        let k = self.settings.ndcg_k.min(self.truth.methods);
        out.push(MetricValue {
            name: METRIC_NDCG.into(),
            param: k as f64,
            value: ndcg_at_k(self.truth, ranking, k)?,
        });
        Ok(out)
    }
}

struct PlannedAlgorithm {
    label: String,
    algorithm: Algorithm,
    config: AlgorithmConfig,
    /// `(fraction, evaluation count)` pairs within the run's budget.
    checkpoints: Vec<(f64, usize)>,
}

fn plan(spec: &ExperimentSpec, methods: usize, examples: usize) -> Result<Vec<PlannedAlgorithm>> {
    let cells = methods * examples;
    spec.algorithms
        .iter()
        .map(|a| {
            let limit = a.max_fraction.unwrap_or(1.0);
            let mut checkpoints: Vec<(f64, usize)> = spec
                .checkpoints
                .iter()
                .filter(|&&f| f <= limit)
                .map(|&f| (f, budget_from_fraction(f, cells)))
                .collect();
            checkpoints.dedup_by_key(|c| c.1);
            let Some(&(_, budget)) = checkpoints.last() else {
                return Err(Error::Config(format!(
                    "{}: no checkpoint at or below max_fraction {limit}",
                    a.label()
                )));
            };
            let config = a.params.apply(methods, examples, budget)?;
            if a.algorithm.uses_warmup() {
                config.validate_warmup(methods, examples)?;
            } else {
                config.validate(methods, examples)?;
            }
            Ok(PlannedAlgorithm {
                label: a.label().to_string(),
                algorithm: a.algorithm,
                config,
                checkpoints,
            })
        })
        .collect()
}

fn run_trial(
    oracle: &ScoreOracle,
    planned: &PlannedAlgorithm,
    scorer: Option<&Scorer<'_>>,
    master_seed: u64,
    trial: usize,
    record_timing: bool,
) -> TrialResult {
    let seed_label = format!("{}/trial-{trial}", planned.label);
    let mut result = TrialResult {
        algorithm: planned.label.clone(),
        trial,
        seed_label: seed_label.clone(),
        checkpoints: Vec::new(),
        selection_fits: 0,
        error: None,
    };
    let options = RunOptions {
        checkpoints: planned.checkpoints.iter().map(|c| c.1).collect(),
        record_timing,
    };
    let seed = SeedPath::new(master_seed, seed_label);
    let outcome = planned
        .algorithm
        .run(oracle, &planned.config, &seed, &options)
        .and_then(|trajectory| {
            result.selection_fits = trajectory.selection_fits;
            for (&(fraction, count), cp) in planned.checkpoints.iter().zip(&trajectory.checkpoints) {
                debug_assert_eq!(count, cp.evaluations_used);
                let metrics = match scorer {
                    Some(s) => s.score(cp.prediction.best_index, &cp.prediction.ranking())?,
                    None => Vec::new(),
                };
                result.checkpoints.push(CheckpointRecord {
                    fraction,
                    evaluations_used: cp.evaluations_used,
                    best_index: cp.prediction.best_index,
                    estimated_means: cp.prediction.estimated_means.clone(),
                    wall_time_secs: cp.wall_time_secs,
                    metrics,
                });
            }
            Ok(())
        });
    if let Err(e) = outcome {
        result.error = Some(e.to_string());
    }
    result
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates successful trials of one algorithm. Trials must be in index
/// order so the sums do not depend on execution order.
fn summarize(label: &str, trials: &[TrialResult]) -> Vec<SummaryRow> {
    let ok: Vec<&TrialResult> = trials.iter().filter(|t| t.error.is_none()).collect();
    let Some(first) = ok.first() else {
        return Vec::new();
    };
    let mut rows = Vec::new();
    for (k, cp) in first.checkpoints.iter().enumerate() {
        let mut columns: Vec<(String, f64)> = cp
            .metrics
            .iter()
            .map(|m| (m.name.clone(), m.param))
            .collect();
        if cp.wall_time_secs.is_some() {
            columns.push((METRIC_WALL_TIME.into(), 0.0));
        }
        for (c, (name, param)) in columns.into_iter().enumerate() {
            let values: Vec<f64> = ok
                .iter()
                .map(|t| {
                    let record = &t.checkpoints[k];
                    match record.metrics.get(c) {
                        Some(m) => m.value,
                        None => record.wall_time_secs.unwrap_or(f64::NAN),
                    }
                })
                .collect();
            let (mean_value, stderr) = mean_and_stderr(&values);
            rows.push(SummaryRow {
                algorithm: label.to_string(),
                checkpoint_fraction: cp.fraction,
                metric_name: name,
                metric_param: param,
                mean_value,
                trial_count: values.len(),
                stderr,
            });
        }
    }
    rows
}

/// Runs the experiment. Equivalent to [`run_experiment_with`] without a
/// progress callback.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    run_experiment_with(spec, |_| Ok(()))
}

/// Runs every algorithm for `spec.trials` seeded trials, calling `progress`
/// with the partial report (marked incomplete) after each algorithm. A trial
/// failure stops the experiment; the returned report then carries the
/// failure message and whatever finished before it.
pub fn run_experiment_with<F>(spec: &ExperimentSpec, mut progress: F) -> Result<Report>
where
    F: FnMut(&Report) -> Result<()>,
{
    spec.validate()?;
    let (oracle, truth) = spec.oracle.load()?;
    let (methods, examples) = (oracle.methods(), oracle.examples());
    let planned = plan(spec, methods, examples)?;
    let scorer = truth
        .as_ref()
        .map(|t| Scorer::new(t, &spec.metrics))
        .transpose()?;

    let mut report = Report {
        spec: spec.clone(),
        methods: oracle.method_names().to_vec(),
        examples,
        true_best: truth.as_ref().map(|t| t.best_index),
        hardness: truth.as_ref().and_then(|t| t.hardness),
        complete: false,
        failure: None,
        summary: Vec::new(),
        trials: Vec::new(),
    };
    progress(&report)?;

    let pool = match spec.workers {
        Some(w) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {w} workers: {e}")))?,
        ),
        None => None,
    };
    let failed = AtomicBool::new(false);
    for p in &planned {
        let job = || -> Vec<TrialResult> {
            (0..spec.trials)
                .into_par_iter()
                .filter_map(|k| {
                    if failed.load(Ordering::Relaxed) {
                        return None;
                    }
                    let r = run_trial(&oracle, p, scorer.as_ref(), spec.seed, k, spec.record_timing);
                    if r.error.is_some() {
                        failed.store(true, Ordering::Relaxed);
                    }
                    Some(r)
                })
                .collect()
        };
        let mut trials = match &pool {
            Some(pool) => pool.install(job),
            None => job(),
        };
        trials.sort_by_key(|t| t.trial);
        report.summary.extend(summarize(&p.label, &trials));
        if let Some(t) = trials.iter().find(|t| t.error.is_some()) {
            report.failure = Some(format!(
                "{} trial {}: {}",
                t.algorithm,
                t.trial,
                t.error.as_deref().unwrap_or_default()
            ));
        }
        log::info!("{}: {} trials done", p.label, trials.len());
        report.trials.extend(trials);
        if report.failure.is_some() {
            break;
        }
        progress(&report)?;
    }
    report.complete = report.failure.is_none();
    Ok(report)
}

/// Writes the aggregate table (CSV) or the full report (JSON).
pub fn write_report(report: &Report, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let io = |e: std::io::Error| Error::io(path, e);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    // Write to a sibling file first so readers never see a torn report.
    let staging = path.with_extension("partial");
    let mut out = BufWriter::new(File::create(&staging).map_err(io)?);
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            let csv_err = |e: csv::Error| Error::Input(format!("{}: {e}", path.display()));
            w.write_record([
                "algorithm",
                "checkpoint_fraction",
                "metric_name",
                "metric_param",
                "mean_value",
                "trial_count",
                "stderr",
            ])
            .map_err(csv_err)?;
            for r in &report.summary {
                w.write_record([
                    r.algorithm.clone(),
                    r.checkpoint_fraction.to_string(),
                    r.metric_name.clone(),
                    r.metric_param.to_string(),
                    r.mean_value.to_string(),
                    r.trial_count.to_string(),
                    r.stderr.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(io)?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?;
            out.write_all(b"\n").map_err(io)?;
        }
    }
    out.into_inner().map_err(|e| io(e.into_error()))?.sync_all().map_err(io)?;
    std::fs::rename(&staging, path).map_err(io)
}

/// Writes the outputs named in the spec.
pub fn write_outputs(report: &Report, output: &OutputPaths) -> Result<()> {
    if let Some(p) = &output.json {
        write_report(report, p, ReportFormat::Json)?;
    }
    if let Some(p) = &output.csv {
        write_report(report, p, ReportFormat::Csv)?;
    }
    Ok(())
}
