//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 usage or configuration error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use meshgnn_core::baselines::{train_baseline, AnyModel, ModelKind, BASELINE_EARLY_STOPPING};
use meshgnn_core::datagen::{generate_mesh, Die, GeneratorConfig, WEAR_FIELD};
use meshgnn_core::mesh::{mesh_to_graph, ProcessParams, SurfaceMesh};
use meshgnn_core::metrics::{evaluate, EvalReport};
use meshgnn_core::numerics::{Mode, Prng};
use meshgnn_core::train::{EarlyStopping, Regressor, TrainConfig};

use crate::artifact::{load_model, save_model};
use crate::config::{ConfigError, ConfigFile};
use crate::dataset::{generate_dataset, read_mesh, write_mesh_file, Dataset, Simulation};
use crate::report;

/// Point field written by `predict`.
pub const PREDICTION_FIELD: &str = "wear_pred";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

type CliResult<T = ()> = Result<T, CliError>;

/// `NxM` grid size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSize(pub usize, pub usize);

impl FromStr for GridSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("`{s}` is not NxM"))?;
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{s}` is not NxM"));
        Ok(GridSize(parse(a)?, parse(b)?))
    }
}

/// `a:b` closed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval(pub f64, pub f64);

impl FromStr for Interval {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("`{s}` is not a:b"))?;
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a:b"));
        Ok(Interval(parse(a)?, parse(b)?))
    }
}

/// `a:b:n`, n evenly spaced values from a to b inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinGrid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl FromStr for LinGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("`{s}` is not a:b:n");
        let mut parts = s.split(':');
        let (Some(a), Some(b), Some(n), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        let start = a.trim().parse::<f64>().map_err(|_| bad())?;
        let end = b.trim().parse::<f64>().map_err(|_| bad())?;
        let count = n.trim().parse::<usize>().map_err(|_| bad())?;
        if !start.is_finite() || !end.is_finite() {
            return Err(bad());
        }
        Ok(LinGrid { start, end, count })
    }
}

impl LinGrid {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| {
                    if i == n - 1 {
                        self.end
                    } else {
                        self.start + (self.end - self.start) * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "meshgnn", version, about = "Graph-network surrogate for die wear on surface meshes")]
pub struct Cli {
    /// `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (meshes + manifest).
    Generate(GenerateArgs),
    /// Train a model and write the artifact and loss history.
    Train(TrainArgs),
    /// Score an artifact on a dataset split.
    Evaluate(EvaluateArgs),
    /// Predict wear on one mesh and write it as a point field.
    Predict(PredictArgs),
    /// Train several model kinds on the same split and compare test metrics.
    Benchmark(BenchmarkArgs),
    /// Predict over a temperature x friction grid.
    Sweep(SweepArgs),
    /// Time end-to-end eval-mode prediction.
    Timeit(TimeitArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_sims: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Points along x and y, e.g. 16x16.
    #[arg(long)]
    pub grid: Option<GridSize>,
    /// Same as `--grid 96x96`.
    #[arg(long, conflicts_with = "grid")]
    pub nodes_like_paper: bool,
    /// ldd or udd.
    #[arg(long)]
    pub die: Option<String>,
    /// Temperature range in kelvin, `a:b`.
    #[arg(long)]
    pub t_range: Option<Interval>,
    /// Friction range, `a:b`.
    #[arg(long)]
    pub mu_range: Option<Interval>,
}

#[derive(Debug, Args, Clone)]
pub struct TrainOpts {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Enables early stopping on test loss (baselines default to 100).
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub min_delta: Option<f64>,
    /// Disables early stopping for every kind.
    #[arg(long, conflicts_with = "patience")]
    pub no_early_stopping: bool,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Target cell or point field.
    #[arg(long)]
    pub target: Option<String>,
    /// Print losses to stderr every N epochs.
    #[arg(long)]
    pub progress: Option<usize>,
}

const TRAIN_KEYS: [&str; 10] = [
    "epochs",
    "lr",
    "batch_size",
    "seed",
    "patience",
    "min_delta",
    "no_early_stopping",
    "dropout",
    "target",
    "progress",
];

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// gnn, pointnet or dgcnn.
    #[arg(long)]
    pub kind: Option<String>,
    /// Artifact path (default model.gnn).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Loss history CSV (default loss_history.csv next to the artifact).
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[command(flatten)]
    pub opts: TrainOpts,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// train, test or all.
    #[arg(long)]
    pub split: Option<String>,
    /// table or csv on stdout.
    #[arg(long)]
    pub format: Option<String>,
    /// Also write the CSV report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Overrides the mesh's temperature.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Overrides the mesh's friction.
    #[arg(long)]
    pub friction: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated kinds (default gnn,pointnet,dgcnn).
    #[arg(long)]
    pub kinds: Option<String>,
    #[arg(long)]
    pub format: Option<String>,
    /// Also write the CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub opts: TrainOpts,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Temperatures, `a:b:n`.
    #[arg(long)]
    pub t_grid: Option<LinGrid>,
    /// Frictions, `a:b:m`.
    #[arg(long)]
    pub mu_grid: Option<LinGrid>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TimeitArgs {
    /// Artifact to time; an untrained default GNN when omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Mesh to predict on; a generated grid when omitted.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Generated grid size when no mesh is given (default 16x16).
    #[arg(long, conflicts_with = "mesh")]
    pub grid: Option<GridSize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub friction: Option<f64>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            ConfigFile::parse(&text)?
        }
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Generate(a) => cmd_generate(a, &config, out),
        Command::Train(a) => cmd_train(a, &config, out, err),
        Command::Evaluate(a) => cmd_evaluate(a, &config, out),
        Command::Predict(a) => cmd_predict(a, &config, out),
        Command::Benchmark(a) => cmd_benchmark(a, &config, out, err),
        Command::Sweep(a) => cmd_sweep(a, &config, out),
        Command::Timeit(a) => cmd_timeit(a, &config, out),
    }
}

fn required<T: FromStr>(config: &ConfigFile, flag: Option<T>, key: &str) -> CliResult<T> {
    match flag {
        Some(v) => Ok(v),
        None => config.get(key)?.ok_or_else(|| usage(format!("missing required --{}", key.replace('_', "-")))),
    }
}

fn optional<T: FromStr>(config: &ConfigFile, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => Ok(config.get(key)?),
    }
}

fn flag_set(config: &ConfigFile, flag: bool, key: &str) -> CliResult<bool> {
    Ok(flag || config.get::<bool>(key)?.unwrap_or(false))
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult {
    out.write_all(text.as_bytes()).map_err(runtime)
}

fn cmd_generate(a: GenerateArgs, config: &ConfigFile, out: &mut dyn Write) -> CliResult {
    config.check_keys(&[
        "out",
        "seed",
        "n_sims",
        "train_fraction",
        "grid",
        "nodes_like_paper",
        "die",
        "t_range",
        "mu_range",
    ])?;
    let d = GeneratorConfig::default();
    let dir: PathBuf = required(config, a.out, "out")?;
    let grid = if flag_set(config, a.nodes_like_paper, "nodes_like_paper")? {
        GridSize(96, 96)
    } else {
        config.resolve(a.grid, "grid", GridSize(d.grid.0, d.grid.1))?
    };
    let die = match optional::<String>(config, a.die, "die")? {
        Some(s) => s.parse::<Die>().map_err(usage)?,
        None => d.die,
    };
    let t = config.resolve(a.t_range, "t_range", Interval(d.t_range.0, d.t_range.1))?;
    let mu = config.resolve(a.mu_range, "mu_range", Interval(d.mu_range.0, d.mu_range.1))?;
    let gen = GeneratorConfig {
        grid: (grid.0, grid.1),
        n_sims: config.resolve(a.n_sims, "n_sims", d.n_sims)?,
        train_fraction: config.resolve(a.train_fraction, "train_fraction", d.train_fraction)?,
        t_range: (t.0, t.1),
        mu_range: (mu.0, mu.1),
        seed: config.resolve(a.seed, "seed", d.seed)?,
        die,
    };
    gen.validate().map_err(usage)?;
    let summary = generate_dataset(&gen, &dir).map_err(runtime)?;
    emit(
        out,
        &format!(
            "wrote {} simulations to {} ({} train, {} test; {} points, {} cells each)\n",
            summary.n_train + summary.n_test,
            dir.display(),
            summary.n_train,
            summary.n_test,
            summary.num_points,
            summary.num_cells
        ),
    )
}

struct ResolvedTrain {
    config: TrainConfig,
    /// Explicit early-stopping choice; `None` leaves the per-kind default.
    early_stopping: Option<Option<EarlyStopping>>,
    dropout: Option<f64>,
    target: String,
    progress: usize,
}

impl ResolvedTrain {
    fn config_for(&self, kind: ModelKind) -> TrainConfig {
        let mut c = self.config.clone();
        c.early_stopping = match self.early_stopping {
            Some(choice) => choice,
            None if kind == ModelKind::Gnn => None,
            None => Some(BASELINE_EARLY_STOPPING),
        };
        c
    }
}

fn resolve_train(o: TrainOpts, config: &ConfigFile) -> CliResult<ResolvedTrain> {
    let d = TrainConfig::default();
    let patience: Option<usize> = optional(config, o.patience, "patience")?;
    let min_delta: Option<f64> = optional(config, o.min_delta, "min_delta")?;
    let off = flag_set(config, o.no_early_stopping, "no_early_stopping")?;
    if off && (patience.is_some() || min_delta.is_some()) {
        return Err(usage("--no-early-stopping conflicts with --patience/--min-delta"));
    }
    let early_stopping = if off {
        Some(None)
    } else if patience.is_some() || min_delta.is_some() {
        Some(Some(EarlyStopping {
            patience: patience.unwrap_or(BASELINE_EARLY_STOPPING.patience),
            min_delta: min_delta.unwrap_or(BASELINE_EARLY_STOPPING.min_delta),
        }))
    } else {
        None
    };
    let resolved = ResolvedTrain {
        config: TrainConfig {
            epochs: config.resolve(o.epochs, "epochs", d.epochs)?,
            lr: config.resolve(o.lr, "lr", d.lr)?,
            batch_size: config.resolve(o.batch_size, "batch_size", d.batch_size)?,
            seed: config.resolve(o.seed, "seed", d.seed)?,
            early_stopping: None,
        },
        early_stopping,
        dropout: optional(config, o.dropout, "dropout")?,
        target: config.resolve(o.target, "target", WEAR_FIELD.to_string())?,
        progress: config.resolve(o.progress, "progress", 0)?,
    };
    for kind in ModelKind::ALL {
        resolved.config_for(kind).validate().map_err(usage)?;
    }
    if let Some(p) = resolved.dropout {
        if !(0.0..1.0).contains(&p) {
            return Err(usage(format!("dropout {p} must lie in [0, 1)")));
        }
    }
    Ok(resolved)
}

fn parse_kind(s: &str) -> CliResult<ModelKind> {
    s.trim().parse().map_err(usage)
}

/// Trains one kind with the shared seed-derived initialisation.
fn train_kind(
    kind: ModelKind,
    data: &Dataset,
    r: &ResolvedTrain,
    err: &mut dyn Write,
) -> CliResult<(AnyModel, meshgnn_core::train::LossHistory)> {
    let config = r.config_for(kind);
    let train = data.train_graphs();
    let test = data.test_graphs();
    if r.dropout.is_none() && r.progress == 0 {
        return train_baseline(kind, &train, &test, &config).map_err(runtime);
    }
    let mut rng = Prng::new(config.seed);
    let mut model = AnyModel::with_defaults(kind, &mut rng);
    if let Some(p) = r.dropout {
        model.set_dropout(p).map_err(usage)?;
    }
    let every = r.progress;
    meshgnn_core::train::fit_observed(model, &train, &test, &config, &mut rng, |s| {
        if every > 0 && (s.epoch + 1) % every == 0 {
            let test = s.test_mse.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(err, "{kind} epoch {} train {} test {test}", s.epoch + 1, s.train_mse);
        }
    })
    .map_err(runtime)
}

fn load_data(dir: &Path, target: &str) -> CliResult<Dataset> {
    let data = Dataset::load(dir, target).map_err(runtime)?;
    if data.train.is_empty() {
        return Err(runtime(format!("{}: manifest lists no training simulations", dir.display())));
    }
    Ok(data)
}

fn cmd_train(a: TrainArgs, config: &ConfigFile, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let mut keys = vec!["data", "kind", "out", "history"];
    keys.extend(TRAIN_KEYS);
    config.check_keys(&keys)?;
    let dir: PathBuf = required(config, a.data, "data")?;
    let kind = parse_kind(&config.resolve(a.kind, "kind", "gnn".to_string())?)?;
    let model_path = config.resolve(a.out, "out", PathBuf::from("model.gnn"))?;
    let history_path = match optional(config, a.history, "history")? {
        Some(p) => p,
        None => model_path.parent().unwrap_or(Path::new("")).join("loss_history.csv"),
    };
    let r = resolve_train(a.opts, config)?;
    let data = load_data(&dir, &r.target)?;
    let (model, history) = train_kind(kind, &data, &r, err)?;
    write_file(&model_path, &save_model(&model))?;
    write_file(&history_path, &report::loss_history_csv(&history))?;

    let last_train = history.train.last().copied().unwrap_or(f64::NAN);
    let mut msg = format!("trained {kind} for {} epochs; final train mse {last_train}", history.epochs());
    if let Some(Some(t)) = history.test.last() {
        msg.push_str(&format!(", test mse {t}"));
    }
    if let Some(b) = history.best_epoch {
        msg.push_str(&format!("; restored epoch {}", b + 1));
    }
    msg.push_str(&format!("\nmodel: {}\nhistory: {}\n", model_path.display(), history_path.display()));
    emit(out, &msg)
}

fn read_model(path: &Path) -> CliResult<AnyModel> {
    let text = fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    load_model(&text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn report_for(model: &AnyModel, sims: &[Simulation]) -> CliResult<EvalReport> {
    evaluate(model, sims.iter().map(|s| (s.id.as_str(), &s.graph))).map_err(runtime)
}

fn check_format(f: &str) -> CliResult<&str> {
    match f {
        "table" | "csv" => Ok(f),
        other => Err(usage(format!("unknown format `{other}` (expected table or csv)"))),
    }
}

fn cmd_evaluate(a: EvaluateArgs, config: &ConfigFile, out: &mut dyn Write) -> CliResult {
    config.check_keys(&["model", "data", "split", "format", "out", "target"])?;
    let model_path: PathBuf = required(config, a.model, "model")?;
    let dir: PathBuf = required(config, a.data, "data")?;
    let split = config.resolve(a.split, "split", "test".to_string())?;
    if !matches!(split.as_str(), "train" | "test" | "all") {
        return Err(usage(format!("unknown split `{split}` (expected train, test or all)")));
    }
    let format = config.resolve(a.format, "format", "table".to_string())?;
    check_format(&format)?;
    let csv_path: Option<PathBuf> = optional(config, a.out, "out")?;
    let target = config.resolve(a.target, "target", WEAR_FIELD.to_string())?;

    let model = read_model(&model_path)?;
    let data = Dataset::load(&dir, &target).map_err(runtime)?;
    let sims: Vec<Simulation> = match split.as_str() {
        "train" => data.train,
        "test" => data.test,
        _ => data.train.into_iter().chain(data.test).collect(),
    };
    if sims.is_empty() {
        return Err(runtime(format!("{}: the {split} split is empty", dir.display())));
    }
    let report = report_for(&model, &sims)?;
    let csv = report::eval_csv(&report);
    if let Some(p) = csv_path {
        write_file(&p, &csv)?;
    }
    emit(out, &if format == "csv" { csv } else { report::eval_table(&report) })
}

fn with_params(mesh: SurfaceMesh, temperature: Option<f64>, friction: Option<f64>) -> CliResult<SurfaceMesh> {
    let p = mesh.params();
    let params = ProcessParams { temperature: temperature.unwrap_or(p.temperature), friction: friction.unwrap_or(p.friction) };
    params.validate().map_err(usage)?;
    mesh.with_params(params).map_err(usage)
}

/// Eval-mode wear per mesh point.
pub fn predict_mesh(model: &AnyModel, mesh: &SurfaceMesh) -> meshgnn_core::Result<Vec<f64>> {
    let graph = mesh_to_graph(mesh, None)?;
    Ok(model.predict(&graph, Mode::Eval, &mut Prng::new(0))?.into_data())
}

fn cmd_predict(a: PredictArgs, config: &ConfigFile, out: &mut dyn Write) -> CliResult {
    config.check_keys(&["model", "mesh", "temperature", "friction", "out"])?;
    let model_path: PathBuf = required(config, a.model, "model")?;
    let mesh_path: PathBuf = required(config, a.mesh, "mesh")?;
    let out_path: PathBuf = required(config, a.out, "out")?;
    let temperature = optional(config, a.temperature, "temperature")?;
    let friction = optional(config, a.friction, "friction")?;
    ProcessParams { temperature: temperature.unwrap_or(1.0), friction: friction.unwrap_or(0.0) }
        .validate()
        .map_err(usage)?;

    let model = read_model(&model_path)?;
    let mesh = read_mesh(&mesh_path).map_err(runtime)?;
    let mut mesh = with_params(mesh, temperature, friction)?;
    let pred = predict_mesh(&model, &mesh).map_err(runtime)?;
    let (lo, hi) = pred.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    mesh.set_point_field(PREDICTION_FIELD, pred).map_err(runtime)?;
    write_file_mesh(&out_path, &mesh)?;
    emit(
        out,
        &format!(
            "wrote {} ({} points, {PREDICTION_FIELD} in [{lo}, {hi}])\n",
            out_path.display(),
            mesh.num_points()
        ),
    )
}

fn write_file_mesh(path: &Path, mesh: &SurfaceMesh) -> CliResult {
    write_mesh_file(path, mesh).map_err(runtime)
}

fn cmd_benchmark(a: BenchmarkArgs, config: &ConfigFile, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let mut keys = vec!["data", "kinds", "format", "out"];
    keys.extend(TRAIN_KEYS);
    config.check_keys(&keys)?;
    let dir: PathBuf = required(config, a.data, "data")?;
    let kinds_s = config.resolve(a.kinds, "kinds", "gnn,pointnet,dgcnn".to_string())?;
    let kinds = kinds_s.split(',').map(parse_kind).collect::<CliResult<Vec<_>>>()?;
    if kinds.is_empty() {
        return Err(usage("--kinds is empty"));
    }
    let format = config.resolve(a.format, "format", "csv".to_string())?;
    check_format(&format)?;
    let csv_path: Option<PathBuf> = optional(config, a.out, "out")?;
    let r = resolve_train(a.opts, config)?;
    let data = load_data(&dir, &r.target)?;
    if data.test.is_empty() {
        return Err(runtime(format!("{}: benchmark needs a test split", dir.display())));
    }

    let mut rows = Vec::new();
    for kind in kinds {
        let (model, _) = train_kind(kind, &data, &r, err)?;
        let rep = report_for(&model, &data.test)?;
        rows.push(report::BenchmarkRow { model: kind.to_string(), rmse: rep.mean_rmse, r2: rep.mean_r2 });
    }
    let csv = report::benchmark_csv(&rows);
    if let Some(p) = csv_path {
        write_file(&p, &csv)?;
    }
    emit(out, &if format == "csv" { csv } else { report::benchmark_table(&rows) })
}

fn cmd_sweep(a: SweepArgs, config: &ConfigFile, out: &mut dyn Write) -> CliResult {
    config.check_keys(&["model", "mesh", "t_grid", "mu_grid", "out"])?;
    let model_path: PathBuf = required(config, a.model, "model")?;
    let mesh_path: PathBuf = required(config, a.mesh, "mesh")?;
    let t_grid: LinGrid = required(config, a.t_grid, "t_grid")?;
    let mu_grid: LinGrid = required(config, a.mu_grid, "mu_grid")?;
    let out_path: Option<PathBuf> = optional(config, a.out, "out")?;
    let (ts, mus) = (t_grid.values(), mu_grid.values());
    if ts.is_empty() || mus.is_empty() {
        return Err(usage("sweep grid is empty"));
    }
    for &t in &ts {
        for &mu in &mus {
            ProcessParams { temperature: t, friction: mu }.validate().map_err(usage)?;
        }
    }

    let model = read_model(&model_path)?;
    let base = read_mesh(&mesh_path).map_err(runtime)?;
    let mut csv = String::from("temperature,friction,mean_wear,max_wear\n");
    for &t in &ts {
        for &mu in &mus {
            let mesh = with_params(base.clone(), Some(t), Some(mu))?;
            let pred = predict_mesh(&model, &mesh).map_err(runtime)?;
            let mean = pred.iter().sum::<f64>() / pred.len().max(1) as f64;
            let max = pred.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            csv.push_str(&format!("{t},{mu},{mean},{max}\n"));
        }
    }
    match out_path {
        Some(p) => write_file(&p, &csv),
        None => emit(out, &csv),
    }
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn cmd_timeit(a: TimeitArgs, config: &ConfigFile, out: &mut dyn Write) -> CliResult {
    config.check_keys(&["model", "mesh", "grid", "runs", "temperature", "friction"])?;
    let runs = config.resolve(a.runs, "runs", 20usize)?;
    if runs == 0 {
        return Err(usage("--runs must be >= 1"));
    }
    let mesh_path: Option<PathBuf> = optional(config, a.mesh, "mesh")?;
    let grid = config.resolve(a.grid, "grid", GridSize(16, 16))?;
    let temperature = optional(config, a.temperature, "temperature")?;
    let friction = optional(config, a.friction, "friction")?;
    let gen = GeneratorConfig { grid: (grid.0, grid.1), ..GeneratorConfig::default() };
    if mesh_path.is_none() {
        gen.validate().map_err(usage)?;
    }

    let model = match optional::<PathBuf>(config, a.model, "model")? {
        Some(p) => read_model(&p)?,
        None => AnyModel::with_defaults(ModelKind::Gnn, &mut Prng::new(0)),
    };
    let mesh = match mesh_path {
        Some(p) => read_mesh(&p).map_err(runtime)?,
        None => generate_mesh(&gen).map_err(runtime)?,
    };
    let mesh = with_params(mesh, temperature, friction)?;

    let mut times = Vec::with_capacity(runs);
    for _ in 0..runs {
        let start = Instant::now();
        let pred = predict_mesh(&model, &mesh).map_err(runtime)?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(pred);
    }
    times.sort_by(f64::total_cmp);
    emit(out, &format!("median_ms,p95_ms,runs\n{:.3},{:.3},{runs}\n", median(&times), percentile(&times, 0.95)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_arguments() {
        assert_eq!("96x96".parse::<GridSize>().unwrap(), GridSize(96, 96));
        assert!("96".parse::<GridSize>().is_err());
        assert_eq!("900:1250".parse::<Interval>().unwrap(), Interval(900.0, 1250.0));
        let g: LinGrid = "0.1:0.7:3".parse().unwrap();
        assert_eq!(g.values(), vec![0.1, 0.4, 0.7]);
        assert_eq!("5:9:1".parse::<LinGrid>().unwrap().values(), vec![5.0]);
        assert!("1:2:0".parse::<LinGrid>().unwrap().values().is_empty());
        assert!("1:2".parse::<LinGrid>().is_err());
    }

    #[test]
    fn percentiles() {
        let xs: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(median(&xs), 10.5);
        assert_eq!(percentile(&xs, 0.95), 19.0);
        assert_eq!(percentile(&[3.0], 0.95), 3.0);
    }
}
