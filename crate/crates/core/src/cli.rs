//! Command-line entry points: `train`, `eval`, `check`, `predict`,
//! `sweep-resolution`, `latency-fit`, `synth-data` and `serve`.
//!
//! Exit codes: 0 success, 1 operational failure, 2 usage error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::catalog::{load_catalog, CatalogError, VocabularyCatalog};
use crate::eval::{evaluate, latency_fit, load_latency_csv, resolution_sweep, EvalError, EvalReport};
use crate::gate::{check_technical, check_visibility, gate, ByteStatus, GateError, GateThresholds};
use crate::pose::dataset::{load_dataset, write_dataset, write_manifest, SyntheticManifest};
use crate::pose::synth::{synthesize_split, synthetic_catalog, SynthConfig};
use crate::pose::{trim, FileBackedEstimator, PoseError, PoseEstimator, SyntheticEstimator};
use crate::ranking::{compose_view, rank, RankingError, ViewKind};
use crate::recognizer::{
    load_model, save_model, train_with_observer, AugmentationConfig, LandmarkSubset, ModelConfig, RecognizerError,
    TrainConfig,
};
use crate::service::{AppState, ServiceConfig, ServiceError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error(transparent)]
    Recognizer(#[from] RecognizerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("{0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "signdict", version, about = "Pose-based sign recognition: training, evaluation and the lookup service")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a recognizer and write the model file.
    Train(TrainArgs),
    /// Accuracy, nDCG and per-feature breakdown on a test set.
    Eval(EvalArgs),
    /// Run the submission quality gate on a pose file or media spec.
    Check(CheckArgs),
    /// Rank the vocabulary for one pose file.
    Predict(PredictArgs),
    /// Accuracy at reduced capture resolutions.
    SweepResolution(SweepArgs),
    /// Fit the linear latency model to measured points.
    LatencyFit(LatencyArgs),
    /// Write a synthetic dataset and its catalog.
    SynthData(SynthArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 54 body-and-hand points, 6 layers, 9 heads, 204 frames.
    Full,
    /// 18 points, 2 layers, 9 heads, 6 frames.
    Compact,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.1)]
    pub plateau_factor: f64,
    #[arg(long, default_value_t = 5)]
    pub plateau_patience: usize,
    #[arg(long, value_enum, default_value_t = Preset::Full)]
    pub preset: Preset,
    /// Train without augmentation.
    #[arg(long)]
    pub no_augment: bool,
    /// Suppress per-epoch lines.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub catalog: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub k: usize,
    /// Comma-separated resolution ratios to sweep as well.
    #[arg(long, value_delimiter = ',')]
    pub ratios: Vec<f64>,
    /// Latency measurements CSV to fit and include.
    #[arg(long)]
    pub latency: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct InputArgs {
    /// A pose file.
    #[arg(long)]
    pub pose: Option<PathBuf>,
    /// A synthetic signer spec such as `class=3,seed=9`.
    #[arg(long)]
    pub synthetic: Option<String>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = View::Compact)]
    pub view: View,
    /// `START,END` in seconds.
    #[arg(long, value_parser = parse_trim)]
    pub trim: Option<(f64, f64)>,
    #[arg(long)]
    pub json: bool,
}

fn parse_trim(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected START,END")?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    Ok((num(a)?, num(b)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum View {
    Compact,
    Detailed,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.5,0.7,1.0")]
    pub ratios: Vec<f64>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LatencyArgs {
    /// CSV of `input_s,prediction_s` rows.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 250)]
    pub per_class: usize,
    #[arg(long, default_value_t = 60)]
    pub frames: usize,
    #[arg(long, default_value_t = 0.02)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Index of each class's first sample; use the training `per_class` for a
    /// disjoint test split.
    #[arg(long, default_value_t = 0)]
    pub first_index: usize,
    /// Write pose files instead of a regenerating manifest.
    #[arg(long)]
    pub materialize: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long)]
    pub retain_media: bool,
    #[arg(long)]
    pub latency: Option<PathBuf>,
    #[arg(long)]
    pub storage: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Train(a) => train_cmd(a, out),
        Command::Eval(a) => eval_cmd(a, out),
        Command::Check(a) => check_cmd(a, out),
        Command::Predict(a) => predict_cmd(a, out),
        Command::SweepResolution(a) => sweep_cmd(a, out),
        Command::LatencyFit(a) => latency_cmd(a, out),
        Command::SynthData(a) => synth_cmd(a, out),
        Command::Serve(a) => serve_cmd(a),
    }
}

fn write_report(path: &Option<PathBuf>, json: &str) -> Result<(), CliError> {
    if let Some(p) = path {
        std::fs::write(p, format!("{json}\n"))?;
    }
    Ok(())
}

fn load_model_and_catalog(a: &ModelArgs) -> Result<(crate::recognizer::TrainedModel, VocabularyCatalog), CliError> {
    let catalog = load_catalog(&a.catalog)?;
    let model = load_model(&a.model)?;
    Ok((model, catalog))
}

pub fn preset_configs(preset: Preset) -> (LandmarkSubset, ModelConfig) {
    match preset {
        Preset::Full => {
            let subset = LandmarkSubset::body_and_hands();
            let mc = ModelConfig::for_landmarks(subset.len());
            (subset, mc)
        }
        Preset::Compact => (LandmarkSubset::compact(), ModelConfig::compact()),
    }
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let catalog = load_catalog(&a.catalog)?;
    let data = load_dataset(&a.data, &catalog)?;
    let (subset, mc) = preset_configs(a.preset);
    let tc = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        plateau_factor: a.plateau_factor,
        plateau_patience: a.plateau_patience,
        seed: a.seed,
        landmark_subset: subset,
    };
    let ac = if a.no_augment { AugmentationConfig::disabled() } else { AugmentationConfig::default() };
    let quiet = a.quiet;
    let model = train_with_observer(&data, &catalog, &tc, &mc, &ac, &mut |s| {
        if !quiet {
            eprintln!("epoch {:>3}  loss {:.4}  acc {:.3}  lr {:.0e}", s.epoch, s.loss, s.accuracy, s.learning_rate);
        }
    })?;
    save_model(&model, &a.out)?;
    let last = model.history().last().expect("at least one epoch");
    writeln!(
        out,
        "trained {} samples, {} classes, {} parameters; final loss {:.4}; wrote {}",
        data.len(),
        catalog.len(),
        model.parameters().len(),
        last.loss,
        a.out.display()
    )?;
    Ok(())
}

fn eval_cmd(a: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (model, catalog) = load_model_and_catalog(&a.model)?;
    let data = load_dataset(&a.data, &catalog)?;
    let accuracy = evaluate(&model, &catalog, &data, a.k)?;
    let sweep = if a.ratios.is_empty() {
        Vec::new()
    } else {
        resolution_sweep(&model, &catalog, &data, &a.ratios)?
    };
    let latency = match &a.latency {
        Some(p) => Some(latency_fit(&load_latency_csv(p)?)?),
        None => None,
    };
    let report = EvalReport { accuracy, sweep, latency };
    write!(out, "{}", report.to_table())?;
    write_report(&a.report, &report.to_json())
}

fn estimator_input(input: &InputArgs) -> Result<(Box<dyn PoseEstimator>, Vec<u8>), CliError> {
    match (&input.pose, &input.synthetic) {
        (Some(p), None) => Ok((Box::new(FileBackedEstimator), std::fs::read(p)?)),
        (None, Some(spec)) => Ok((Box::new(SyntheticEstimator), spec.clone().into_bytes())),
        _ => Err(CliError::Invalid("give exactly one of --pose or --synthetic".into())),
    }
}

fn check_cmd(a: CheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (estimator, bytes) = estimator_input(&a.input)?;
    let t = GateThresholds::default();
    let (status, people) = match estimator.estimate_people(&bytes) {
        Ok(p) if !p.is_empty() => (ByteStatus::Complete, p),
        Err(_) if estimator.is_truncated(&bytes) => (ByteStatus::Truncated, Vec::new()),
        _ => (ByteStatus::Undecodable, Vec::new()),
    };
    let resolution = people.first().map_or((0, 0), |p| p.source_resolution());
    let visibility = if people.is_empty() { Vec::new() } else { check_visibility(&people, &t)? };
    let report = gate(check_technical(resolution, status, &t), visibility);
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("plain data"))?;
    } else {
        let verdict = serde_json::to_value(report.verdict).expect("plain data");
        writeln!(out, "verdict: {}", verdict.as_str().unwrap_or_default())?;
        for i in &report.issues {
            writeln!(out, "{}: {}", i.code.as_str(), i.summary)?;
        }
        if !report.issues.is_empty() {
            write!(out, "\n{}", report.render_message())?;
        }
    }
    Ok(())
}

fn predict_cmd(a: PredictArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (model, catalog) = load_model_and_catalog(&a.model)?;
    let (estimator, bytes) = estimator_input(&a.input)?;
    let mut seq = crate::pose::estimate(estimator.as_ref(), &bytes)?;
    if let Some((start, end)) = a.trim {
        seq = trim(&seq, start, end)?;
    }
    let dist = model.predict(&catalog, &seq)?;
    let kind = match a.view {
        View::Compact => ViewKind::Compact,
        View::Detailed => ViewKind::Detailed,
    };
    let view = compose_view(&rank(&dist, &catalog)?, kind)?;
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&view).expect("plain data"))?;
        return Ok(());
    }
    for r in view.primary.iter().chain(&view.grid) {
        writeln!(
            out,
            "{:>3}  {:<24} {:<20} {:>7.3}  {}",
            r.rank,
            r.gloss,
            r.rendition_id,
            r.probability,
            r.confidence.as_str()
        )?;
    }
    Ok(())
}

fn sweep_cmd(a: SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (model, catalog) = load_model_and_catalog(&a.model)?;
    let data = load_dataset(&a.data, &catalog)?;
    let sweep = resolution_sweep(&model, &catalog, &data, &a.ratios)?;
    writeln!(out, "{:>6} {:>7} {:>7}", "ratio", "top-1", "top-7")?;
    for p in &sweep {
        writeln!(out, "{:>6.2} {:>7.4} {:>7.4}", p.ratio, p.top1, p.top7)?;
    }
    write_report(&a.report, &serde_json::to_string_pretty(&sweep).expect("plain data"))
}

fn latency_cmd(a: LatencyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let pts = load_latency_csv(&a.points)?;
    let m = latency_fit(&pts)?;
    writeln!(
        out,
        "points {}  slope {:.6}  intercept {:.6}  r² {:.6}",
        pts.len(),
        m.slope,
        m.intercept,
        m.r_squared
    )?;
    write_report(&a.report, &serde_json::to_string_pretty(&m).expect("plain data"))
}

fn synth_cmd(a: SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = SynthConfig {
        num_classes: a.classes,
        per_class: a.per_class,
        frames: a.frames,
        noise_sigma: a.noise,
        seed: a.seed,
    };
    let catalog = synthetic_catalog(a.classes);
    std::fs::create_dir_all(&a.out)?;
    let catalog_path = a.out.join("catalog.tsv");
    std::fs::write(&catalog_path, catalog.to_tsv())?;
    if a.materialize {
        write_dataset(&a.out, &synthesize_split(&cfg, a.first_index)?, &catalog)?;
    } else {
        write_manifest(&a.out, &SyntheticManifest::new(&cfg, a.first_index))?;
    }
    writeln!(
        out,
        "wrote {} samples ({} classes) to {}; catalog {}",
        a.classes * a.per_class,
        a.classes,
        a.out.display(),
        catalog_path.display()
    )?;
    Ok(())
}

fn serve_cmd(a: ServeArgs) -> Result<(), CliError> {
    let mut cfg = ServiceConfig::from_env()?;
    let set = |slot: &mut PathBuf, v: Option<PathBuf>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut cfg.model_path, a.model);
    set(&mut cfg.catalog_path, a.catalog);
    set(&mut cfg.storage_dir, a.storage);
    if let Some(p) = a.port {
        cfg.port = p;
    }
    if a.retain_media {
        cfg.retain_media = true;
    }
    if a.latency.is_some() {
        cfg.latency_calibration_path = a.latency;
    }
    let state = AppState::from_config(&cfg)?;
    eprintln!("listening on 0.0.0.0:{} (storage {})", cfg.port, cfg.storage_dir.display());
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(crate::service::serve(state, cfg.port))?;
    Ok(())
}
