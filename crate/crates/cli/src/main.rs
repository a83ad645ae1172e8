//! `camrobot`: synthesize episodes, train the part detector, estimate camera-to-robot
//! poses, and evaluate them.
//!
//! Exit codes: 0 success, 2 input error (bad arguments, missing or malformed input
//! files), 3 runtime or data error (corrupt episode data, failed estimation or generation).

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "camrobot",
    version,
    about = "Camera-to-robot pose estimation toolkit"
)]
struct Cli {
    /// Log verbosity: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic episode directory.
    Synth(SynthArgs),
    /// Estimate the camera-to-robot pose of an episode.
    Estimate(EstimateArgs),
    /// Score estimates against an episode's ground truth.
    Eval(EvalArgs),
    /// Few-shot train the LoRA part-visibility detector.
    TrainDetector(TrainArgs),
    /// Monte-Carlo single-frame vs. batch comparison on synthetic episodes.
    Report(ReportArgs),
}

#[derive(Args)]
pub struct SynthArgs {
    /// JSON config: {"robot": path, "intrinsics": {...}, "scenario": {...}}.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Robot spec JSON; overrides the config. Defaults to the bundled arm.
    #[arg(long)]
    pub robot: Option<PathBuf>,
    /// Root seed; overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub n_frames: Option<usize>,
    #[arg(long)]
    pub pixel_noise: Option<f64>,
    #[arg(long)]
    pub heatmap_noise: Option<f64>,
    #[arg(long)]
    pub embedding_seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum KindArg {
    RobotInView,
    RobotInAndOut,
    BaseOnly,
    EndEffectorOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    Batch,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum DetectorArg {
    All,
    Oracle,
    Lora,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum WeightingArg {
    None,
    Confidence,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum DecodeArg {
    Dark,
    Argmax,
}

#[derive(Args)]
pub struct EstimateArgs {
    /// Episode manifest.json.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON config: {"mode", "detector", "adapter", "oracle_margin_px", "estimator": {...}}.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum)]
    pub detector: Option<DetectorArg>,
    /// Adapter checkpoint for the lora detector.
    #[arg(long)]
    pub adapter: Option<PathBuf>,
    #[arg(long)]
    pub activation_threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub weighting: Option<WeightingArg>,
    #[arg(long, value_enum)]
    pub decode: Option<DecodeArg>,
    /// Blur heatmaps before decoding.
    #[arg(long)]
    pub modulate: bool,
    /// Keep keypoints of parts the detector reports invisible.
    #[arg(long)]
    pub no_visibility_gate: bool,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Episode manifest providing the ground truth and robot.
    #[arg(long)]
    pub manifest: PathBuf,
    /// LABEL=PATH to an estimate.json; repeatable, rows keep this order.
    #[arg(long = "run", required = true)]
    pub runs: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Upper ADD threshold of the AUC, meters.
    #[arg(long, default_value_t = camrobot::eval::DEFAULT_AUC_THRESHOLD_M)]
    pub threshold_max: f64,
    #[arg(long, default_value_t = camrobot::eval::DEFAULT_AUC_RESOLUTION_M)]
    pub resolution: f64,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Embedding dataset JSON; defaults to the bundled synthetic generator.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Seed of the bundled synthetic embedding model (ignored with --dataset).
    #[arg(long, default_value_t = 0)]
    pub embedding_seed: u64,
    /// Examples per part and class; 0 evaluates the unadapted model.
    #[arg(long, default_value_t = 32)]
    pub shots: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long, default_value_t = camrobot::visibility::DEFAULT_RANK)]
    pub rank: usize,
}

#[derive(Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// JSON config: {"robot", "intrinsics", "scenario", "kinds", "seeds", "root_seed",
    /// "detector", "estimator", "threshold_max", "resolution"}.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub root_seed: Option<u64>,
    #[arg(long)]
    pub n_frames: Option<usize>,
    #[arg(long)]
    pub pixel_noise: Option<f64>,
}

/// Error classified by exit code.
pub enum Failure {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

/// Tags an error with its exit-code class.
pub trait Classify<T> {
    fn input(self) -> CmdResult<T>;
    fn runtime(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Input(e.into()))
    }
    fn runtime(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Eval(a) => commands::eval(a),
        Command::TrainDetector(a) => commands::train_detector(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Input(e) | Failure::Runtime(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}
