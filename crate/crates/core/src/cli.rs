//! Command-line front end. Exit codes: 0 success, 1 runtime failure, 2 usage
//! or configuration error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use crate::algorithm::Algorithm;
use crate::config::{
    budget_from_fraction, ConfigOverrides, DEFAULT_BATCH, DEFAULT_DROPOUT, DEFAULT_ENSEMBLE,
    DEFAULT_EXPLORATION, DEFAULT_RANK, DEFAULT_UNCERTAINTY_SCALE, DEFAULT_WARMUP_FRACTION,
};
use crate::error::{Error, Result};
use crate::harness::{
    default_checkpoints, run_experiment_with, write_outputs, AlgorithmSpec, ExperimentSpec,
    OracleSource, Report, DEFAULT_TRIALS, METRIC_PRECISION_GAP,
};
use crate::metrics::{
    hardness_h1, ndcg_at_k, precision_gap, precision_significance, GroundTruth, DEFAULT_EPSILONS,
    DEFAULT_NDCG_K, DEFAULT_P_LEVELS,
};
use crate::oracle::{
    load_matrix, save_matrix, MatrixFormat, Noise, Profile, RemoteClient, RemoteConfig,
    ScoreOracle, SynthSpec,
};
use crate::rng::SeedPath;
use crate::runner::RunOptions;
use crate::trajectory::Trajectory;

/// Environment variable holding the default number of experiment workers.
pub const WORKERS_ENV: &str = "BESTARM_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "bestarm",
    version,
    about = "Find the best method under a limited evaluation budget"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one algorithm once and print its predicted best method.
    Run(RunArgs),
    /// Run a seeded multi-trial experiment and write aggregate reports.
    Experiment(ExperimentArgs),
    /// Score predictions against a full matrix.
    Metrics(MetricsArgs),
    /// Generate a synthetic score matrix with a ground-truth sidecar.
    Synth(SynthArgs),
    /// Print size, mean range, best method, hardness and singular values.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct SourceArgs {
    /// Complete score matrix (.csv or .json).
    #[arg(long, value_name = "PATH")]
    pub matrix: Option<PathBuf>,
    /// Scoring endpoint URL; requires --dims.
    #[arg(long, value_name = "URL", requires = "dims")]
    pub remote: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub methods: usize,
    pub examples: usize,
}

impl FromStr for Dims {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (m, n) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected MxN, got {s:?}"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&x| x > 0)
                .ok_or_else(|| format!("{v:?} is not a positive integer"))
        };
        Ok(Dims {
            methods: parse(m)?,
            examples: parse(n)?,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    /// UCB-E exploration parameter a.
    #[arg(long = "a", value_name = "A", default_value_t = DEFAULT_EXPLORATION)]
    pub exploration: f64,
    /// Rank of the factorization.
    #[arg(long, default_value_t = DEFAULT_RANK)]
    pub rank: usize,
    /// Number of ensemble members C.
    #[arg(long, default_value_t = DEFAULT_ENSEMBLE)]
    pub ensemble: usize,
    /// Uniform warm-up budget as a fraction of all pairs.
    #[arg(long, default_value_t = DEFAULT_WARMUP_FRACTION)]
    pub warmup_frac: f64,
    /// Weight eta on ensemble uncertainty.
    #[arg(long, default_value_t = DEFAULT_UNCERTAINTY_SCALE)]
    pub eta: f64,
    /// Pairs evaluated per selection round b (capped at the budget).
    #[arg(long, default_value_t = DEFAULT_BATCH)]
    pub batch: usize,
    /// Fraction of observed entries each ensemble member hides.
    #[arg(long, default_value_t = DEFAULT_DROPOUT)]
    pub dropout: f64,
}

impl HyperArgs {
    fn overrides(&self, budget: usize) -> ConfigOverrides {
        ConfigOverrides {
            exploration_a: Some(self.exploration),
            rank: Some(self.rank),
            ensemble_size: Some(self.ensemble),
            warmup_fraction: Some(self.warmup_frac),
            uncertainty_scale: Some(self.eta),
            batch_size: Some(self.batch.min(budget)),
            dropout_fraction: Some(self.dropout),
            als: None,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Matrix size for --remote.
    #[arg(long, value_name = "MxN")]
    pub dims: Option<Dims>,
    /// Run identifier sent to the scoring endpoint.
    #[arg(long, default_value = "bestarm")]
    pub run_id: String,
    #[arg(long, value_enum)]
    pub algo: AlgoArg,
    /// Budget as a fraction of all pairs, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub budget_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Extra checkpoint fractions to record in the trajectory.
    #[arg(long, value_delimiter = ',', value_name = "FRACTIONS")]
    pub checkpoints: Vec<f64>,
    /// Record wall-clock time at checkpoints.
    #[arg(long)]
    pub timing: bool,
    /// Write the trajectory as JSON.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    #[value(name = "ucb-e")]
    UcbE,
    #[value(name = "ucb-e-lrf")]
    UcbELrf,
    #[value(name = "ucb-e-lrf-score-only")]
    UcbELrfScoreOnly,
    #[value(name = "lrf")]
    Lrf,
    #[value(name = "row-mean")]
    RowMean,
    #[value(name = "filled-subset")]
    FilledSubset,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::UcbE => Algorithm::UcbE,
            AlgoArg::UcbELrf => Algorithm::UcbELrf,
            AlgoArg::UcbELrfScoreOnly => Algorithm::UcbELrfScoreOnly,
            AlgoArg::Lrf => Algorithm::Lrf,
            AlgoArg::RowMean => Algorithm::RowMean,
            AlgoArg::FilledSubset => Algorithm::FilledSubset,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment spec (JSON). Other flags override its fields when given.
    #[arg(long, value_name = "PATH", required_unless_present = "matrix")]
    pub spec: Option<PathBuf>,
    /// Complete score matrix, for an inline experiment.
    #[arg(long, value_name = "PATH", conflicts_with = "spec")]
    pub matrix: Option<PathBuf>,
    /// Algorithms for an inline experiment [default: all six].
    #[arg(long, value_enum, value_delimiter = ',')]
    pub algos: Vec<AlgoArg>,
    /// Trials per algorithm [default: 50].
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Checkpoint fractions [default: 0.05,0.10,...,1.0].
    #[arg(long, value_delimiter = ',', value_name = "FRACTIONS")]
    pub checkpoints: Vec<f64>,
    /// Worker threads for trials.
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    /// Aggregate CSV output.
    #[arg(long, value_name = "PATH")]
    pub out_csv: Option<PathBuf>,
    /// Per-trial JSON output; rewritten after each algorithm and marked
    /// incomplete until the run finishes.
    #[arg(long, value_name = "PATH")]
    pub out_json: Option<PathBuf>,
    /// Record wall-clock times (reports are then not reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Complete score matrix.
    #[arg(long, value_name = "PATH")]
    pub matrix: PathBuf,
    /// Predicted best method, by name or index; repeatable.
    #[arg(long, value_name = "METHOD", required_unless_present = "trajectory")]
    pub predicted: Vec<String>,
    /// Predicted ranking for NDCG, comma-separated names or indices.
    #[arg(long, value_delimiter = ',', value_name = "METHODS")]
    pub ranking: Vec<String>,
    /// Trajectory JSON from `run --out`; scores its final prediction.
    #[arg(long, value_name = "PATH")]
    pub trajectory: Option<PathBuf>,
    /// Gap thresholds epsilon.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPSILONS)]
    pub epsilons: Vec<f64>,
    /// McNemar significance levels.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_P_LEVELS)]
    pub p_levels: Vec<f64>,
    /// NDCG cutoff K (capped at the number of methods).
    #[arg(long, default_value_t = DEFAULT_NDCG_K)]
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    None,
    Bernoulli,
    BernoulliExact,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Flat,
    Uniform,
    TwoLevel,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output matrix (.csv or .json); the sidecar goes to <out>.truth.json.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 800)]
    pub examples: usize,
    /// Method means, comma-separated.
    #[arg(long, value_delimiter = ',', required_unless_present = "linspace", conflicts_with = "linspace")]
    pub means: Vec<f64>,
    /// Evenly spaced means LO,HI,COUNT.
    #[arg(long, value_name = "LO,HI,COUNT")]
    pub linspace: Option<String>,
    #[arg(long, value_enum, default_value_t = NoiseArg::Bernoulli)]
    pub noise: NoiseArg,
    /// Standard deviation for gaussian noise.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    /// Example difficulty profile.
    #[arg(long, value_enum, default_value_t = ProfileArg::Flat)]
    pub profile: ProfileArg,
    /// Half-width of uniform example factors.
    #[arg(long, default_value_t = 0.3)]
    pub spread: f64,
    /// Share of hard examples for the two-level profile.
    #[arg(long, default_value_t = 0.375)]
    pub hard_fraction: f64,
    /// Factor of hard examples for the two-level profile.
    #[arg(long, default_value_t = 0.6)]
    pub hard_factor: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Complete score matrix.
    #[arg(long, value_name = "PATH")]
    pub matrix: PathBuf,
    /// Number of singular-value ratios to print.
    #[arg(long, default_value_t = 5)]
    pub singular: usize,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Output goes to stdout, diagnostics to stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let name = match &cli.command {
        Command::Run(_) => "run",
        Command::Experiment(_) => "experiment",
        Command::Metrics(_) => "metrics",
        Command::Synth(_) => "synth",
        Command::Inspect(_) => "inspect",
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Experiment(a) => cmd_experiment(&a),
        Command::Metrics(a) => cmd_metrics(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Inspect(a) => cmd_inspect(&a),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(Error::Config(msg)) => {
            eprintln!("error: {msg}\n");
            let mut cmd = Cli::command();
            cmd.build();
            if let Some(sub) = cmd.find_subcommand_mut(name) {
                eprintln!("{}", sub.render_usage());
            }
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn check_fraction(name: &str, f: f64) -> Result<()> {
    if f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} {f} must lie in (0, 1]")))
    }
}

fn open_source(source: &SourceArgs, dims: Option<Dims>, run_id: &str) -> Result<ScoreOracle> {
    match (&source.matrix, &source.remote) {
        (Some(path), _) => load_matrix(path, None),
        (None, Some(url)) => {
            let dims = dims.ok_or_else(|| Error::Config("--remote needs --dims MxN".into()))?;
            let client = RemoteClient::with_dims(
                RemoteConfig::new(url.clone(), run_id),
                dims.methods,
                dims.examples,
            )?;
            Ok(ScoreOracle::remote(client))
        }
        (None, None) => Err(Error::Config("one of --matrix or --remote is required".into())),
    }
}

/// `cmd_run`: one trajectory, printed prediction.
pub fn cmd_run(args: &RunArgs) -> Result<String> {
    check_fraction("--budget-frac", args.budget_frac)?;
    let oracle = open_source(&args.source, args.dims, &args.run_id)?;
    let (m, n) = (oracle.methods(), oracle.examples());
    let cells = m * n;
    let budget = budget_from_fraction(args.budget_frac, cells);
    let algorithm = Algorithm::from(args.algo);
    let config = args.hyper.overrides(budget).apply(m, n, budget)?;
    if algorithm.uses_warmup() {
        config.validate_warmup(m, n)?;
    } else {
        config.validate(m, n)?;
    }
    let mut checkpoints = Vec::new();
    for &f in &args.checkpoints {
        check_fraction("checkpoint", f)?;
        checkpoints.push(budget_from_fraction(f, cells));
    }
    let options = RunOptions {
        checkpoints,
        record_timing: args.timing,
    };
    let trajectory = algorithm.run(&oracle, &config, &SeedPath::new(args.seed, algorithm.name()), &options)?;
    if let Some(out) = &args.out {
        write_json(out, &trajectory)?;
    }
    let p = &trajectory.prediction;
    let names = oracle.method_names();
    let mut text = String::new();
    let estimate = p.estimated_means[p.best_index]
        .map(|v| format!("{v:.6}"))
        .unwrap_or_else(|| "n/a".into());
    writeln!(text, "algorithm: {algorithm}").unwrap();
    writeln!(text, "evaluations: {} of {cells}", trajectory.budget).unwrap();
    writeln!(text, "best: {} (index {})", names[p.best_index], p.best_index).unwrap();
    writeln!(text, "estimated mean: {estimate}").unwrap();
    if p.tied > 1 {
        writeln!(text, "tied: {} methods shared the maximum", p.tied).unwrap();
    }
    for w in &p.warnings {
        writeln!(text, "warning: {w}").unwrap();
    }
    Ok(text)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| Error::io(path, e))
}

/// `cmd_experiment`: builds the spec from a file and/or flags, runs it and
/// writes the reports.
pub fn cmd_experiment(args: &ExperimentArgs) -> Result<String> {
    let mut spec = match (&args.spec, &args.matrix) {
        (Some(path), _) => ExperimentSpec::load(path).map_err(|e| match e {
            Error::Json { path, source } => {
                Error::Config(format!("invalid spec {}: {source}", path.display()))
            }
            other => other,
        })?,
        (None, Some(matrix)) => {
            let algos: Vec<Algorithm> = if args.algos.is_empty() {
                Algorithm::ALL.to_vec()
            } else {
                args.algos.iter().map(|&a| a.into()).collect()
            };
            ExperimentSpec::new(
                OracleSource::Matrix {
                    path: matrix.clone(),
                    format: None,
                },
                algos.into_iter().map(AlgorithmSpec::new).collect(),
            )
        }
        (None, None) => return Err(Error::Config("one of --spec or --matrix is required".into())),
    };
    if args.spec.is_none() {
        spec.trials = DEFAULT_TRIALS;
        spec.checkpoints = default_checkpoints();
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if !args.checkpoints.is_empty() {
        spec.checkpoints = args.checkpoints.clone();
    }
    if args.workers.is_some() {
        spec.workers = args.workers;
    }
    if args.out_csv.is_some() {
        spec.output.csv = args.out_csv.clone();
    }
    if args.out_json.is_some() {
        spec.output.json = args.out_json.clone();
    }
    spec.record_timing |= args.timing;

    let json_out = spec.output.json.clone();
    let report = run_experiment_with(&spec, |partial| match &json_out {
        Some(path) => crate::harness::write_report(partial, path, crate::harness::ReportFormat::Json),
        None => Ok(()),
    })?;
    write_outputs(&report, &spec.output)?;
    if let Some(msg) = &report.failure {
        return Err(Error::Input(format!("experiment failed: {msg}")));
    }
    Ok(summarize_report(&report))
}

fn summarize_report(report: &Report) -> String {
    let mut text = String::new();
    writeln!(
        text,
        "{} methods x {} examples, {} trials",
        report.methods.len(),
        report.examples,
        report.spec.trials
    )
    .unwrap();
    let eps = report.spec.metrics.epsilons.iter().copied().fold(f64::NAN, f64::max);
    for a in &report.spec.algorithms {
        let label = a.label();
        let line = match report.first_reaching(label, METRIC_PRECISION_GAP, eps, 0.9) {
            Some(f) => format!("precision (eps = {eps}) reaches 0.9 at {:.0}% of pairs", f * 100.0),
            None if eps.is_nan() => "no gap metric requested".to_string(),
            None => format!("precision (eps = {eps}) stays below 0.9"),
        };
        writeln!(text, "{label}: {line}").unwrap();
    }
    text
}

fn resolve_method(truth_names: &[String], key: &str) -> Result<usize> {
    if let Some(i) = truth_names.iter().position(|n| n == key) {
        return Ok(i);
    }
    match key.parse::<usize>() {
        Ok(i) if i < truth_names.len() => Ok(i),
        _ => Err(Error::Input(format!("unknown method {key:?}"))),
    }
}

/// `cmd_metrics`: precision, NDCG and H1 for given predictions.
pub fn cmd_metrics(args: &MetricsArgs) -> Result<String> {
    let oracle = load_matrix(&args.matrix, None)?;
    let names = oracle.method_names().to_vec();
    let truth = oracle.matrix().expect("file oracles are dense").ground_truth()?;
    let mut predicted: Vec<usize> = args
        .predicted
        .iter()
        .map(|k| resolve_method(&names, k))
        .collect::<Result<_>>()?;
    let mut ranking: Vec<usize> = args
        .ranking
        .iter()
        .map(|k| resolve_method(&names, k))
        .collect::<Result<_>>()?;
    if let Some(path) = &args.trajectory {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let t: Trajectory = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|source| Error::Json {
                path: path.clone(),
                source,
            })?;
        if t.prediction.estimated_means.len() != truth.methods {
            return Err(Error::Input(format!(
                "{} has {} methods, the matrix has {}",
                path.display(),
                t.prediction.estimated_means.len(),
                truth.methods
            )));
        }
        predicted.push(t.prediction.best_index);
        if ranking.is_empty() {
            ranking = t.prediction.ranking();
        }
    }
    let mut text = String::new();
    writeln!(text, "best: {} (index {}), mean {:.6}", names[truth.best_index], truth.best_index, truth.best_mean()).unwrap();
    match hardness_h1(&truth) {
        Ok(h) => writeln!(text, "H1: {h:.6}").unwrap(),
        Err(_) => writeln!(text, "H1: undefined (all means equal)").unwrap(),
    }
    for &i in &predicted {
        writeln!(text, "prediction {} (index {i}), mean {:.6}", names[i], truth.means[i]).unwrap();
        for &eps in &args.epsilons {
            writeln!(text, "  precision gap eps={eps}: {}", precision_gap(&truth, i, eps)?).unwrap();
        }
        for &p in &args.p_levels {
            writeln!(
                text,
                "  precision significance p={p}: {}",
                precision_significance(&truth, i, p)?
            )
            .unwrap();
        }
    }
    if !ranking.is_empty() {
        let k = args.k.min(truth.methods);
        writeln!(text, "ndcg@{k}: {:.6}", ndcg_at_k(&truth, &ranking, k)?).unwrap();
    }
    Ok(text)
}

fn parse_linspace(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("--linspace expects LO,HI,COUNT, got {s:?}"));
    let [lo, hi, count] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    match count {
        0 => Err(bad()),
        1 => Ok(vec![lo]),
        _ => Ok((0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect()),
    }
}

#[derive(serde::Serialize)]
struct Sidecar<'a> {
    spec: &'a SynthSpec,
    means: &'a [f64],
    best_index: usize,
    best_method: &'a str,
    hardness: Option<f64>,
}

/// Path of the ground-truth sidecar written next to a synthetic matrix.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".truth.json");
    PathBuf::from(name)
}

/// `cmd_synth`: writes a generated matrix and its ground truth.
pub fn cmd_synth(args: &SynthArgs) -> Result<String> {
    let means = match &args.linspace {
        Some(s) => parse_linspace(s)?,
        None => args.means.clone(),
    };
    let noise = match args.noise {
        NoiseArg::None => Noise::None,
        NoiseArg::Bernoulli => Noise::Bernoulli,
        NoiseArg::BernoulliExact => Noise::BernoulliExact,
        NoiseArg::Gaussian => Noise::Gaussian { sigma: args.sigma },
    };
    let profile = match args.profile {
        ProfileArg::Flat => Profile::Flat,
        ProfileArg::Uniform => Profile::Uniform { spread: args.spread },
        ProfileArg::TwoLevel => Profile::TwoLevel {
            hard_fraction: args.hard_fraction,
            hard_factor: args.hard_factor,
        },
    };
    let spec = SynthSpec {
        examples: args.examples,
        means,
        profile,
        noise,
        seed: args.seed,
    };
    let instance = spec.generate().map_err(|e| match e {
        Error::Input(msg) => Error::Config(msg),
        other => other,
    })?;
    let format = MatrixFormat::from_path(&args.out).map_err(|e| Error::Config(e.to_string()))?;
    let matrix = instance.oracle.matrix().expect("synthetic oracles are dense");
    save_matrix(matrix, &args.out, format)?;
    let truth = &instance.truth;
    let sidecar = sidecar_path(&args.out);
    write_json(
        &sidecar,
        &Sidecar {
            spec: &spec,
            means: &truth.means,
            best_index: truth.best_index,
            best_method: &matrix.methods[truth.best_index],
            hardness: truth.hardness,
        },
    )?;
    let mut text = String::new();
    writeln!(text, "wrote {} ({}x{})", args.out.display(), truth.methods, truth.examples).unwrap();
    writeln!(text, "wrote {}", sidecar.display()).unwrap();
    Ok(text)
}

/// Singular values of a dense row-major matrix, largest first.
pub fn singular_values(truth: &GroundTruth) -> Vec<f64> {
    let m = DMatrix::from_row_slice(truth.methods, truth.examples, &truth.scores);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `cmd_inspect`: size, means, best method, H1 and singular-value ratios.
pub fn cmd_inspect(args: &InspectArgs) -> Result<String> {
    let oracle = load_matrix(&args.matrix, None)?;
    let truth = oracle.matrix().expect("file oracles are dense").ground_truth()?;
    let lo = truth.means.iter().copied().fold(f64::INFINITY, f64::min);
    let names = oracle.method_names();
    let mut text = String::new();
    writeln!(text, "methods: {}", truth.methods).unwrap();
    writeln!(text, "examples: {}", truth.examples).unwrap();
    writeln!(text, "mean range: [{lo:.6}, {:.6}]", truth.best_mean()).unwrap();
    writeln!(text, "best: {} (index {})", names[truth.best_index], truth.best_index).unwrap();
    match truth.hardness {
        Some(h) => writeln!(text, "H1: {h:.4}").unwrap(),
        None => writeln!(text, "H1: undefined (all means equal)").unwrap(),
    }
    let s = singular_values(&truth);
    if let Some(&top) = s.first().filter(|&&t| t > 0.0) {
        for (k, v) in s.iter().enumerate().skip(1).take(args.singular) {
            writeln!(text, "sigma{}/sigma1: {:.6e}", k + 1, v / top).unwrap();
        }
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_parse() {
        assert_eq!(
            "154x805".parse::<Dims>().unwrap(),
            Dims {
                methods: 154,
                examples: 805
            }
        );
        assert!("154".parse::<Dims>().is_err());
        assert!("0x3".parse::<Dims>().is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let v = parse_linspace("0.3,0.7,40").unwrap();
        assert_eq!(v.len(), 40);
        assert_eq!(v[0], 0.3);
        assert!((v[39] - 0.7).abs() < 1e-15);
        assert!(parse_linspace("0.3,0.7").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
