//! The `stateinfer` command line.
//!
//! Every subcommand reads an optional TOML file (`--config`), then applies its
//! flags on top, so flags win over the file and the file wins over defaults.
//! Outputs land in `--out` together with `<command>.run.json`, which records
//! the resolved config and SHA-256 hashes of inputs and outputs. Rerunning a
//! step whose manifest still matches does nothing unless `--force` is given.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 runtime error.

pub mod config;
pub mod manifest;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::RunConfig;
use manifest::Step;
use report::{scores_csv, scores_text, sort_reports, write_strips, MethodReport};

use crate::cpd::{config_grid, CostKind, CpdConfig, SearchMethod};
use crate::data::{load_dataset, save_dataset, Dataset, Normalizer, Sample, Split};
use crate::error::Error;
use crate::metrics::{evaluate, read_predictions, write_predictions, EvaluationReport, PredictionRecord};
use crate::nn::{train, ArchitectureConfig, ModelCheckpoint, Preset, Variant};
use crate::pipeline::{cpd_predictions, fit_ridge_baseline, nn_predictions, ridge_predictions};
use crate::sim::{generate_dataset, Profile, SimConfig};

/// Default worker count when `--threads` is absent.
pub const THREADS_ENV: &str = "STATEINFER_THREADS";

#[derive(Debug, Parser)]
#[command(name = "stateinfer", version, about = "State inference for control systems from I/O time series")]
pub struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: $STATEINFER_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Rerun even when the run manifest says the step is complete.
    #[arg(long, global = true)]
    pub force: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate labeled flights and write flight files plus a manifest.
    Generate(GenerateArgs),
    /// Train a network and write the checkpoint, history and test predictions.
    Train(TrainArgs),
    /// Label flights with a trained checkpoint.
    Predict(PredictArgs),
    /// Run classical change point detection.
    Detect(DetectArgs),
    /// Fit and apply the sliding-window ridge classifier.
    Baseline(BaselineArgs),
    /// Score prediction files against ground truth.
    Evaluate(EvaluateArgs),
    /// Score several prediction files and write comparison tables and strips.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Validation,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub flights: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// desk or paper-scale
    #[arg(long)]
    pub profile: Option<Profile>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Checkpoint path (default `<out>/model.ckpt`).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// desk or paper-scale
    #[arg(long)]
    pub preset: Option<Preset>,
    /// hybrid, cnn_only or rnn_only
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    /// Output file stem inside `--out`.
    #[arg(long, default_value = "predict")]
    pub name: String,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// bottomup or window
    #[arg(long)]
    pub search: Option<SearchMethod>,
    /// l1, l2, normal, linear, rbf, rank or ar
    #[arg(long)]
    pub cost: Option<CostKind>,
    #[arg(long)]
    pub penalty: Option<f64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub jump: Option<usize>,
    /// Run all 42 configurations, one output file each.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Window width(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub w: Vec<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Tolerances in seconds, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub tau: Vec<f64>,
    /// Ground-truth dataset directory or manifest.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Prediction JSON-lines file(s).
    #[arg(long)]
    pub pred: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_delimiter = ',')]
    pub tau: Vec<f64>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Prediction files or directories of `.jsonl` files.
    #[arg(long)]
    pub pred: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or paths: exit 1.
    Validation(String),
    /// Failure during computation: exit 2.
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(m) => CliError::Validation(m),
            Error::MissingInput(p) => CliError::Validation(format!("missing input: {}", p.display())),
            other => CliError::Runtime(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Errors are printed to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command inside a thread pool of the configured size.
pub fn execute(cli: Cli) -> CliResult<()> {
    let threads = match cli.threads {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| invalid(format!("{THREADS_ENV}={v} is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if threads == Some(0) {
        return Err(invalid("thread count must be at least 1"));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| invalid(format!("thread pool: {e}")))?;

    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(CliError::Validation)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let force = cli.force;
    pool.install(move || match cli.command {
        Command::Generate(a) => generate_cmd(cfg, a, force),
        Command::Train(a) => train_cmd(cfg, a, force),
        Command::Predict(a) => predict_cmd(cfg, a, force),
        Command::Detect(a) => detect_cmd(cfg, a, force),
        Command::Baseline(a) => baseline_cmd(cfg, a, force),
        Command::Evaluate(a) => evaluate_cmd(cfg, a, force),
        Command::Report(a) => report_cmd(cfg, a, force),
    })
}

fn finish_config(cfg: &mut RunConfig) -> CliResult<()> {
    cfg.training.seed = cfg.seed;
    cfg.validate().map_err(CliError::Validation)
}

fn require_data(cfg: &RunConfig) -> CliResult<PathBuf> {
    let data = cfg
        .paths
        .data
        .clone()
        .ok_or_else(|| invalid("no dataset given: pass --data or set paths.data"))?;
    require_manifest(&data)?;
    Ok(data)
}

fn require_manifest(path: &Path) -> CliResult<()> {
    let manifest = if path.is_dir() {
        path.join(crate::data::MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    if !manifest.is_file() {
        return Err(invalid(format!(
            "no dataset manifest at {}: run `generate` first or fix the path",
            manifest.display()
        )));
    }
    Ok(())
}

fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if !path.is_file() {
        return Err(invalid(format!("{what} not found: {}", path.display())));
    }
    Ok(())
}

/// Keeps outputs away from the input directories so inputs are never rewritten.
fn check_out_dir(out: &Path, inputs: &[&Path]) -> CliResult<()> {
    let out_abs = fs::canonicalize(out).ok();
    for input in inputs {
        let dir = if input.is_dir() {
            Some(input.to_path_buf())
        } else {
            input.parent().map(Path::to_path_buf)
        };
        let dir_abs = dir.and_then(|d| fs::canonicalize(if d.as_os_str().is_empty() { PathBuf::from(".") } else { d }).ok());
        if out_abs.is_some() && out_abs == dir_abs {
            return Err(invalid(format!(
                "output directory {} is an input directory; choose another --out",
                out.display()
            )));
        }
    }
    Ok(())
}

fn make_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(Error::io(dir, e)))
}

fn skip(step: &Step) -> bool {
    log::info!("up to date ({}); pass --force to rerun", step.manifest_path().display());
    println!("up to date: {}", step.manifest_path().display());
    true
}

fn load(cfg: &RunConfig, path: &Path) -> CliResult<Dataset> {
    Ok(load_dataset(path, cfg.data.bounds())?)
}

/// Flights of `split`. A dataset without split tags is used whole.
fn select(ds: &Dataset, split: SplitArg) -> Vec<&Sample> {
    let tagged = ds.samples.iter().any(|s| s.split.is_some());
    let wanted = match split {
        SplitArg::Train => Some(Split::Train),
        SplitArg::Validation => Some(Split::Validation),
        SplitArg::Test => Some(Split::Test),
        SplitArg::All => None,
    };
    match wanted {
        Some(w) if tagged => ds.in_split(w).collect(),
        Some(_) => {
            log::warn!("dataset has no split tags; using all flights");
            ds.samples.iter().collect()
        }
        None => ds.samples.iter().collect(),
    }
}

/// Train-split statistics, or statistics of `fallback` when there is no train split.
fn normalizer(ds: &Dataset, fallback: &[&Sample]) -> CliResult<Normalizer> {
    if ds.in_split(Split::Train).next().is_some() {
        Ok(ds.fit_normalizer()?)
    } else {
        Ok(Normalizer::fit(fallback.iter().map(|s| &s.series))?)
    }
}

fn generate_cmd(mut cfg: RunConfig, a: GenerateArgs, force: bool) -> CliResult<()> {
    if let Some(n) = a.flights {
        cfg.generate.flights = n;
    }
    if let Some(p) = a.profile {
        cfg.generate.profile = p;
    }
    if a.out.is_some() {
        cfg.paths.out = a.out;
    }
    finish_config(&mut cfg)?;
    let out = cfg.out_dir();
    make_dir(&out)?;
    let step = Step::new("generate", &out, &cfg, &[])?;
    if !force && step.is_complete() && skip(&step) {
        return Ok(());
    }
    let sim = SimConfig {
        seed: cfg.seed,
        length_bounds: cfg.data.bounds(),
        ..SimConfig::default()
    };
    let ds = generate_dataset(cfg.generate.flights, &sim, &cfg.generate.profile.plan_profile(), cfg.seed)?
        .split(&cfg.data.fractions, cfg.seed)?;
    save_dataset(&ds, &out)?;
    let mut outputs = vec![out.join(crate::data::MANIFEST_FILE)];
    outputs.extend(ds.samples.iter().map(|s| out.join("flights").join(format!("{}.csv", s.id))));
    step.finish(&outputs)?;
    println!("wrote {} flights to {}", ds.len(), out.display());
    Ok(())
}

fn train_cmd(mut cfg: RunConfig, a: TrainArgs, force: bool) -> CliResult<()> {
    if a.data.is_some() {
        cfg.paths.data = a.data;
    }
    if a.out.is_some() {
        cfg.paths.out = a.out;
    }
    if a.model.is_some() {
        cfg.paths.model = a.model;
    }
    if let Some(p) = a.preset {
        cfg.model.preset = p;
    }
    if let Some(v) = a.variant {
        cfg.model.variant = v;
    }
    if let Some(e) = a.epochs {
        cfg.training.max_epochs = e;
    }
    if let Some(p) = a.patience {
        cfg.training.patience = p;
    }
    if let Some(lr) = a.learning_rate {
        cfg.training.learning_rate = lr;
    }
    if let Some(b) = a.batch_size {
        cfg.training.batch_size = b;
    }
    finish_config(&mut cfg)?;
    let data = require_data(&cfg)?;
    let out = cfg.out_dir();
    make_dir(&out)?;
    check_out_dir(&out, &[&data])?;
    let step = Step::new("train", &out, &cfg, &[data.clone()])?;
    if !force && step.is_complete() && skip(&step) {
        return Ok(());
    }

    let mut ds = load(&cfg, &data)?;
    if ds.samples.iter().any(|s| s.split.is_none()) {
        log::info!("assigning splits with seed {}", cfg.seed);
        ds = ds.split(&cfg.data.fractions, cfg.seed)?;
    }
    for split in [Split::Train, Split::Validation] {
        if ds.in_split(split).next().is_none() {
            return Err(invalid(format!(
                "the {} split is empty: use more flights or change data.fractions",
                split.as_str()
            )));
        }
    }
    let mut arch = ArchitectureConfig::preset(cfg.model.preset, ds.channel_names.len(), ds.num_states())
        .with_variant(cfg.model.variant);
    arch.max_length = arch.max_length.max(ds.max_length());
    let (checkpoint, history) = train(&ds, &arch, &cfg.training)?;

    let model = cfg.model_path();
    if let Some(parent) = model.parent().filter(|p| !p.as_os_str().is_empty()) {
        make_dir(parent)?;
    }
    checkpoint.save(&model)?;
    let history_path = out.join("history.csv");
    history.write_csv(&history_path)?;
    let test: Vec<&Sample> = ds.in_split(Split::Test).collect();
    let preds_path = out.join("predictions.jsonl");
    write_predictions(&preds_path, &nn_predictions(&checkpoint, &test)?)?;
    step.finish(&[model.clone(), history_path, preds_path])?;
    println!(
        "trained {} for {} epochs (best {}, validation accuracy {:.4}); checkpoint {}",
        cfg.model.variant.as_str(),
        checkpoint.metadata.epochs_run,
        checkpoint.metadata.best_epoch,
        checkpoint.metadata.best_val_accuracy,
        model.display()
    );
    Ok(())
}

fn predict_cmd(mut cfg: RunConfig, a: PredictArgs, force: bool) -> CliResult<()> {
    if a.data.is_some() {
        cfg.paths.data = a.data;
    }
    if a.out.is_some() {
        cfg.paths.out = a.out;
    }
    if a.model.is_some() {
        cfg.paths.model = a.model;
    }
    finish_config(&mut cfg)?;
    let data = require_data(&cfg)?;
    let model = cfg.model_path();
    require_file(&model, "checkpoint")?;
    let out = cfg.out_dir();
    make_dir(&out)?;
    check_out_dir(&out, &[&data])?;
    let step = Step::new("predict", &out, &(&cfg, format!("{:?}", a.split), &a.name), &[data.clone(), model.clone()])?;
    if !force && step.is_complete() && skip(&step) {
        return Ok(());
    }
    let checkpoint = ModelCheckpoint::load(&model)?;
    let ds = load(&cfg, &data)?;
    let samples = select(&ds, a.split);
    let path = out.join(format!("{}.jsonl", a.name));
    write_predictions(&path, &nn_predictions(&checkpoint, &samples)?)?;
    step.finish(&[path.clone()])?;
    println!("labeled {} flights: {}", samples.len(), path.display());
    Ok(())
}

fn detect_cmd(mut cfg: RunConfig, a: DetectArgs, force: bool) -> CliResult<()> {
    if a.data.is_some() {
        cfg.paths.data = a.data;
    }
    if a.out.is_some() {
        cfg.paths.out = a.out;
    }
    if let Some(s) = a.search {
        cfg.detect.search = s;
    }
    if let Some(c) = a.cost {
        cfg.detect.cost = c;
    }
    if let Some(p) = a.penalty {
        cfg.detect.penalty = p;
    }
    if let Some(w) = a.width {
        cfg.detect.width = w;
    }
    if let Some(j) = a.jump {
        cfg.detect.jump = j;
    }
    cfg.detect.grid |= a.grid;
    finish_config(&mut cfg)?;
    let data = require_data(&cfg)?;
    let out = cfg.out_dir();
    let dir = out.join("detect");
    make_dir(&dir)?;
    check_out_dir(&out, &[&data])?;
    let step = Step::new("detect", &out, &(&cfg, format!("{:?}", a.split)), &[data.clone()])?;
    if !force && step.is_complete() && skip(&step) {
        return Ok(());
    }
    let grid = if cfg.detect.grid {
        config_grid()
            .into_iter()
            .map(|c| CpdConfig {
                width: cfg.detect.width,
                jump: cfg.detect.jump,
                ..c
            })
            .collect()
    } else {
        let mut c = CpdConfig::new(cfg.detect.search, cfg.detect.cost, cfg.detect.penalty);
        c.width = cfg.detect.width;
        c.jump = cfg.detect.jump;
        vec![c]
    };
    let ds = load(&cfg, &data)?;
    let samples = select(&ds, a.split);
    let norm = normalizer(&ds, &samples)?;
    let mut outputs = Vec::with_capacity(grid.len());
    for c in &grid {
        let path = dir.join(format!("{}.jsonl", c.label()));
        write_predictions(&path, &cpd_predictions(&samples, &norm, c)?)?;
        log::info!("{}", path.display());
        outputs.push(path);
    }
    step.finish(&outputs)?;
    println!("wrote {} detector output(s) to {}", outputs.len(), dir.display());
    Ok(())
}

fn baseline_cmd(mut cfg: RunConfig, a: BaselineArgs, force: bool) -> CliResult<()> {
    if a.data.is_some() {
        cfg.paths.data = a.data;
    }
    if a.out.is_some() {
        cfg.paths.out = a.out;
    }
    if !a.w.is_empty() {
        cfg.baseline.widths = a.w;
    }
    if let Some(f) = a.folds {
        cfg.baseline.folds = f;
    }
    finish_config(&mut cfg)?;
    let data = require_data(&cfg)?;
    let out = cfg.out_dir();
    let dir = out.join("baseline");
    make_dir(&dir)?;
    check_out_dir(&out, &[&data])?;
    let step = Step::new("baseline", &out, &(&cfg, format!("{:?}", a.split)), &[data.clone()])?;
    if !force && step.is_complete() && skip(&step) {
        return Ok(());
    }
    let ds = load(&cfg, &data)?;
    let train_set: Vec<&Sample> = select(&ds, SplitArg::Train);
    let samples = select(&ds, a.split);
    let norm = normalizer(&ds, &train_set)?;
    let mut outputs = Vec::new();
    for &w in &cfg.baseline.widths {
        let model = fit_ridge_baseline(&train_set, &norm, w, &cfg.baseline.alphas, cfg.baseline.folds, cfg.seed)?;
        let model_path = dir.join(format!("ridge-w{w}.model.json"));
        let text = serde_json::to_string_pretty(&model).map_err(|e| CliError::Runtime(e.into()))?;
        fs::write(&model_path, text).map_err(|e| CliError::Runtime(Error::io(&model_path, e)))?;
        let path = dir.join(format!("ridge-w{w}.jsonl"));
        write_predictions(&path, &ridge_predictions(&model, &samples, &norm)?)?;
        let cv = model.cv_accuracy.iter().copied().fold(f64::NAN, f64::max);
        println!("ridge w={w}: alpha {:e}, cv accuracy {cv:.4}", model.chosen_alpha);
        outputs.push(model_path);
        outputs.push(path);
    }
    step.finish(&outputs)?;
    Ok(())
}

fn eval_inputs(cfg: &mut RunConfig, tau: Vec<f64>, truth: Option<PathBuf>, pred: Vec<PathBuf>, out: Option<PathBuf>) -> CliResult<PathBuf> {
    if !tau.is_empty() {
        cfg.evaluate.taus = tau;
    }
    if truth.is_some() {
        cfg.paths.truth = truth;
    }
    if !pred.is_empty() {
        cfg.paths.pred = pred;
    }
    if out.is_some() {
        cfg.paths.out = out;
    }
    finish_config(cfg)?;
    let truth = cfg
        .paths
        .truth
        .clone()
        .or_else(|| cfg.paths.data.clone())
        .ok_or_else(|| invalid("no ground truth given: pass --truth or set paths.truth"))?;
    require_manifest(&truth)?;
    Ok(truth)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "predictions".into(), |s| s.to_string_lossy().into_owned())
}

/// Ground-truth samples for the flights named in `preds`.
fn matching_samples<'a>(ds: &'a Dataset, preds: &[PredictionRecord], path: &Path) -> CliResult<Vec<&'a Sample>> {
    preds
        .iter()
        .map(|p| {
            ds.samples
                .iter()
                .find(|s| s.id == p.id)
                .ok_or_else(|| invalid(format!("{}: flight {} is not in the ground truth", path.display(), p.id)))
        })
        .collect()
}

fn score_file(cfg: &RunConfig, truth: &Dataset, path: &Path) -> CliResult<(Vec<PredictionRecord>, EvaluationReport)> {
    let preds = read_predictions(path)?;
    if preds.is_empty() {
        return Err(invalid(format!("{} holds no predictions", path.display())));
    }
    let samples = matching_samples(truth, &preds, path)?;
    let report = evaluate(&samples, &preds, truth.num_states(), &cfg.evaluate.scoring())?;
    Ok((preds, report))
}

fn summary(name: &str, r: &EvaluationReport) -> String {
    let mut line = format!("{name}:");
    for c in &r.aggregate.cpd {
        line.push_str(&format!(" cpd F1@{}s {:.4}", c.tau_seconds, c.prf.f1));
    }
    if let Some(c) = &r.aggregate.classification {
        line.push_str(&format!(" | macro F1 {:.4} accuracy {:.4}", c.f1, c.accuracy));
    }
    line
}

fn evaluate_cmd(mut cfg: RunConfig, a: EvaluateArgs, force: bool) -> CliResult<()> {
    let truth = eval_inputs(&mut cfg, a.tau, a.truth, a.pred, a.out)?;
    let out = cfg.out_dir();
    if cfg.paths.pred.is_empty() {
        cfg.paths.pred = vec![out.join("predictions.jsonl")];
    }
    for p in &cfg.paths.pred {
        require_file(p, "prediction file")?;
    }
    make_dir(&out)?;
    check_out_dir(&out, &[&truth])?;
    let mut inputs = vec![truth.clone()];
    inputs.extend(cfg.paths.pred.iter().cloned());
    let step = Step::new("evaluate", &out, &cfg, &inputs)?;
    if !force && step.is_complete() && skip(&step) {
        return Ok(());
    }
    let ds = load(&cfg, &truth)?;
    let mut outputs = Vec::new();
    for path in &cfg.paths.pred {
        let name = stem(path);
        let (preds, report) = score_file(&cfg, &ds, path)?;
        let report_path = out.join(format!("{name}.report.json"));
        report.write_json(&report_path)?;
        outputs.push(report_path);
        let samples = matching_samples(&ds, &preds, path)?;
        outputs.extend(write_strips(&out.join("strips").join(&name), &samples, &preds, cfg.evaluate.strip_samples)?);
        println!("{}", summary(&name, &report));
    }
    step.finish(&outputs)?;
    Ok(())
}

/// Prediction files, expanding directories to their `.jsonl` files.
fn prediction_files(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::Runtime(Error::io(p, e)))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            require_file(p, "prediction file")?;
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(invalid("no prediction files: pass --pred <file or directory>"));
    }
    Ok(files)
}

fn report_cmd(mut cfg: RunConfig, a: ReportArgs, force: bool) -> CliResult<()> {
    let truth = eval_inputs(&mut cfg, a.tau, a.truth, a.pred, a.out)?;
    let files = prediction_files(&cfg.paths.pred)?;
    let out = cfg.out_dir();
    make_dir(&out)?;
    check_out_dir(&out, &[&truth])?;
    let mut inputs = vec![truth.clone()];
    inputs.extend(files.iter().cloned());
    let step = Step::new("report", &out, &cfg, &inputs)?;
    if !force && step.is_complete() && skip(&step) {
        return Ok(());
    }
    let ds = load(&cfg, &truth)?;
    let mut reports = Vec::with_capacity(files.len());
    let mut outputs = Vec::new();
    for path in &files {
        let name = stem(path);
        let (preds, report) = score_file(&cfg, &ds, path)?;
        let samples = matching_samples(&ds, &preds, path)?;
        outputs.extend(write_strips(&out.join("strips").join(&name), &samples, &preds, cfg.evaluate.strip_samples)?);
        reports.push(MethodReport::new(&name, report));
    }
    sort_reports(&mut reports);
    let write = |name: &str, text: String| -> CliResult<PathBuf> {
        let p = out.join(name);
        fs::write(&p, text).map_err(|e| CliError::Runtime(Error::io(&p, e)))?;
        Ok(p)
    };
    let text = scores_text(&reports);
    outputs.push(write("scores.csv", scores_csv(&reports))?);
    outputs.push(write("scores.txt", text.clone())?);
    outputs.push(write(
        "scores.json",
        serde_json::to_string_pretty(&reports).map_err(|e| CliError::Runtime(e.into()))?,
    )?);
    step.finish(&outputs)?;
    print!("{text}");
    Ok(())
}
