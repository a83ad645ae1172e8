use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use camrobot::camera::CameraIntrinsics;
use camrobot::episode::{read_episode, Manifest, PoseFile, EPISODE_SCHEMA_VERSION, MANIFEST_FILE};
use camrobot::eval::{
    accuracy_curve, accuracy_curves_svg, add_metric, compare_runs, default_eval_points, AddResult,
    ComparisonTable, DEFAULT_AUC_RESOLUTION_M, DEFAULT_AUC_THRESHOLD_M,
};
use camrobot::kinematics::{panda_ready_pose, KeypointId, RobotSpec};
use camrobot::pipeline::{
    estimate_episode, estimate_frame, AllVisibleDetector, DecodeMethod, EstimateFailure,
    EstimatorConfig, FrameDiagnostics, LoraDetector, OracleDetector, PartDetector,
};
use camrobot::pnp::{PnpOptions, Weighting};
use camrobot::report::{single_vs_batch, DetectorKind, SingleVsBatch};
use camrobot::synth::{default_intrinsics, generate_episode, ScenarioKind, ScenarioSpec};
use camrobot::visibility::{
    accuracy, few_shot_subset, mean_loss, train_few_shot, AdapterCheckpoint, EmbeddingDataset,
    LabeledEmbedding, LoraAdapter, SyntheticEmbeddingModel, TrainConfig,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::files::{
    create_dir, load_robot, read_config, relative_to, sha256_hex, write_csv, write_json, write_text,
};
use crate::{
    Classify, CmdResult, DecodeArg, DetectorArg, EstimateArgs, EvalArgs, Failure, KindArg, Mode,
    ReportArgs, SynthArgs, TrainArgs, WeightingArg,
};

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Bundled robot with no explicit trajectory centre: use its ready pose.
fn default_home(robot: Option<&Path>, scenario: &mut ScenarioSpec) {
    if robot.is_none() && scenario.home_q.is_none() {
        scenario.home_q = Some(panda_ready_pose().angles);
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SynthConfig {
    robot: Option<PathBuf>,
    intrinsics: Option<CameraIntrinsics<f64>>,
    scenario: ScenarioSpec,
}

impl From<KindArg> for ScenarioKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::RobotInView => ScenarioKind::RobotInView,
            KindArg::RobotInAndOut => ScenarioKind::RobotInAndOut,
            KindArg::BaseOnly => ScenarioKind::BaseOnly,
            KindArg::EndEffectorOnly => ScenarioKind::EndEffectorOnly,
        }
    }
}

pub fn synth(a: &SynthArgs) -> CmdResult {
    let mut cfg: SynthConfig = match &a.config {
        Some(p) => read_config(p)?,
        None => SynthConfig::default(),
    };
    let robot_path = a.robot.clone().or_else(|| {
        cfg.robot
            .as_ref()
            .map(|r| relative_to(a.config.as_deref(), r))
    });
    let robot = load_robot(robot_path.as_deref())?;
    let s = &mut cfg.scenario;
    if let Some(v) = a.seed {
        s.seed = v;
    }
    if let Some(v) = a.kind {
        s.kind = v.into();
    }
    if let Some(v) = a.n_frames {
        s.n_frames = v;
    }
    if let Some(v) = a.pixel_noise {
        s.pixel_noise_sigma = v;
    }
    if let Some(v) = a.heatmap_noise {
        s.heatmap_noise = v;
    }
    if a.embedding_seed.is_some() {
        s.embedding_seed = a.embedding_seed;
    }
    default_home(robot_path.as_deref(), s);
    s.validate().context("invalid scenario").input()?;
    let k = cfg.intrinsics.unwrap_or_else(default_intrinsics);
    k.validate().context("invalid intrinsics").input()?;
    let (chain, layout) = robot.build::<f64>().input()?;
    let generated = generate_episode(&chain, &layout, &k, &cfg.scenario).runtime()?;
    let mut episode = generated.episode;
    episode.robot = robot;
    let manifest = camrobot::episode::write_episode(&a.out, &episode).runtime()?;
    log::info!("camera found after {} draws", generated.attempts);
    println!("{}", manifest.display());
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EstimateConfig {
    mode: Mode,
    detector: DetectorKind,
    adapter: Option<PathBuf>,
    /// Image margin for the oracle detector; defaults to twice the heatmap stride.
    oracle_margin_px: Option<f64>,
    estimator: EstimatorConfig,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Batch,
            detector: DetectorKind::All,
            adapter: None,
            oracle_margin_px: None,
            estimator: EstimatorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseRecord {
    /// `None` for the pooled batch estimate.
    pub frame_index: Option<usize>,
    pub pose: Option<PoseFile>,
    pub inlier_count: Option<usize>,
    pub kept: Vec<KeypointId>,
    pub failure: Option<EstimateFailure>,
    /// ADD against the episode's ground truth, when it has one.
    pub add_m: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateOutput {
    pub schema_version: u32,
    pub mode: Mode,
    pub root_seed: Option<u64>,
    pub detector: DetectorKind,
    pub estimator: EstimatorConfig,
    pub estimates: Vec<PoseRecord>,
    /// Per-frame diagnostics of the batch solve.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frames: Vec<FrameDiagnostics>,
}

/// Parses the manifest first so a missing or malformed manifest is an input error, then
/// loads the episode data, whose defects are data errors.
fn load_episode(path: &Path) -> CmdResult<camrobot::episode::Episode> {
    let manifest: Manifest = read_config(path)?;
    if manifest.schema_version != EPISODE_SCHEMA_VERSION {
        return Err(Failure::Input(anyhow!(
            "unsupported manifest schema_version {}",
            manifest.schema_version
        )));
    }
    read_episode(path)
        .with_context(|| format!("cannot load episode {}", path.display()))
        .runtime()
}

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(MANIFEST_FILE)
    } else {
        p.to_path_buf()
    }
}

pub fn estimate(a: &EstimateArgs) -> CmdResult {
    let mut cfg: EstimateConfig = match &a.config {
        Some(p) => read_config(p)?,
        None => EstimateConfig::default(),
    };
    if let Some(m) = a.mode {
        cfg.mode = m;
    }
    if let Some(d) = a.detector {
        cfg.detector = match d {
            DetectorArg::All => DetectorKind::All,
            DetectorArg::Oracle => DetectorKind::Oracle,
            DetectorArg::Lora => DetectorKind::Lora,
        };
    }
    let adapter_path = a.adapter.clone().or_else(|| {
        cfg.adapter
            .as_ref()
            .map(|p| relative_to(a.config.as_deref(), p))
    });
    if let Some(t) = a.activation_threshold {
        cfg.estimator.activation_threshold = Some(t);
    }
    if let Some(w) = a.weighting {
        cfg.estimator.weighting = match w {
            WeightingArg::None => Weighting::None,
            WeightingArg::Confidence => Weighting::Confidence,
        };
    }
    if let Some(d) = a.decode {
        cfg.estimator.decode = match d {
            DecodeArg::Dark => DecodeMethod::Dark,
            DecodeArg::Argmax => DecodeMethod::Argmax,
        };
    }
    cfg.estimator.modulate |= a.modulate;
    if a.no_visibility_gate {
        cfg.estimator.use_visibility_gate = false;
    }

    let manifest = manifest_path(&a.manifest);
    let episode = load_episode(&manifest)?;
    let (chain, layout) = episode.robot.build::<f64>().input()?;
    let k = episode.intrinsics;
    let (decode, sel) = cfg
        .estimator
        .resolve(episode.heatmap_stride as f64, episode.sigma)
        .context("invalid estimator settings")
        .input()?;
    let all = AllVisibleDetector {
        parts: layout.parts(),
    };
    let oracle;
    let lora;
    let detector: &dyn PartDetector<f64> = match cfg.detector {
        DetectorKind::All => &all,
        DetectorKind::Oracle => {
            let pose = episode
                .ground_truth
                .ok_or_else(|| anyhow!("the oracle detector needs an episode with ground truth"))
                .input()?;
            oracle = OracleDetector {
                chain: &chain,
                layout: &layout,
                pose,
                intrinsics: k,
                margin_px: cfg
                    .oracle_margin_px
                    .unwrap_or(2.0 * episode.heatmap_stride as f64),
            };
            &oracle
        }
        DetectorKind::Lora => {
            if let Some(f) = episode.frames.iter().find(|f| f.embedding.is_none()) {
                return Err(Failure::Input(anyhow!(
                    "the lora detector needs per-frame embeddings; frame {} has none (synthesize with --embedding-seed)",
                    f.frame_index
                )));
            }
            let path = adapter_path
                .ok_or_else(|| anyhow!("the lora detector needs --adapter"))
                .input()?;
            let ck: AdapterCheckpoint = read_config(&path)?;
            let (adapter, bank) = ck
                .restore()
                .with_context(|| format!("invalid adapter checkpoint {}", path.display()))
                .input()?;
            lora = LoraDetector { adapter, bank };
            &lora
        }
    };
    let points = default_eval_points(&chain, &layout).runtime()?;
    let add = |pose| {
        episode
            .ground_truth
            .map(|gt| add_metric(&pose, &gt, &points).expect("non-empty points"))
    };
    let options = PnpOptions::default();
    let mut out = EstimateOutput {
        schema_version: EPISODE_SCHEMA_VERSION,
        mode: cfg.mode,
        root_seed: episode.scenario.as_ref().map(|s| s.seed),
        detector: cfg.detector,
        estimator: cfg.estimator,
        estimates: Vec::new(),
        frames: Vec::new(),
    };
    let mut batch_failure = None;
    match cfg.mode {
        Mode::Single => {
            for f in &episode.frames {
                out.estimates.push(
                    match estimate_frame(f, &chain, &layout, &k, detector, &decode, &sel, &options)
                    {
                        Ok(e) => PoseRecord {
                            frame_index: Some(f.frame_index),
                            pose: Some(PoseFile::from_pose(&e.pose, Some(e.rms_reprojection))),
                            inlier_count: Some(e.inlier_count),
                            kept: e.kept,
                            failure: None,
                            add_m: add(e.pose),
                        },
                        Err(failure) => PoseRecord {
                            frame_index: Some(f.frame_index),
                            pose: None,
                            inlier_count: None,
                            kept: Vec::new(),
                            failure: Some(failure),
                            add_m: None,
                        },
                    },
                );
            }
        }
        Mode::Batch => match estimate_episode(
            &episode.frames,
            &chain,
            &layout,
            &k,
            detector,
            &decode,
            &sel,
            &options,
        ) {
            Ok(e) => {
                out.estimates.push(PoseRecord {
                    frame_index: None,
                    pose: Some(PoseFile::from_pose(&e.pose, Some(e.rms_reprojection))),
                    inlier_count: Some(e.correspondences_used),
                    kept: Vec::new(),
                    failure: None,
                    add_m: add(e.pose),
                });
                out.frames = e.frames;
            }
            Err(fail) => {
                batch_failure = Some(fail.failure.clone());
                out.estimates.push(PoseRecord {
                    frame_index: None,
                    pose: None,
                    inlier_count: None,
                    kept: Vec::new(),
                    failure: Some(fail.failure),
                    add_m: None,
                });
                out.frames = fail.frames;
            }
        },
    }

    create_dir(&a.out)?;
    write_json(&a.out.join("estimate.json"), &out)?;
    let solved: Vec<&PoseRecord> = out.estimates.iter().filter(|r| r.pose.is_some()).collect();
    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let rms = mean(
        solved
            .iter()
            .filter_map(|r| r.pose.as_ref()?.rms_reprojection)
            .collect(),
    );
    let mean_add = mean(solved.iter().filter_map(|r| r.add_m).collect());
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.9}")).unwrap_or_default();
    let mode = match cfg.mode {
        Mode::Single => "single",
        Mode::Batch => "batch",
    };
    write_csv(
        &a.out.join("summary.csv"),
        &strings(&["mode", "estimates", "solved", "mean_rms_px", "mean_add_m"]),
        &[vec![
            mode.to_string(),
            out.estimates.len().to_string(),
            solved.len().to_string(),
            fmt(rms),
            fmt(mean_add),
        ]],
    )?;
    if let (Mode::Batch, Some(r)) = (cfg.mode, solved.first()) {
        write_json(&a.out.join("pose.json"), r.pose.as_ref().expect("solved"))?;
    }
    println!(
        "{mode}: {}/{} estimates solved",
        solved.len(),
        out.estimates.len()
    );
    if let Some(add) = mean_add {
        println!("mean ADD vs ground truth: {add:.9} m");
    }
    if let Some(f) = batch_failure {
        return Err(Failure::Runtime(anyhow!("batch estimation failed: {f}")));
    }
    if solved.is_empty() {
        return Err(Failure::Runtime(anyhow!("no frame could be estimated")));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvalRun {
    label: String,
    result: AddResult,
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    schema_version: u32,
    root_seed: Option<u64>,
    threshold_max_m: f64,
    resolution_m: f64,
    runs: Vec<EvalRun>,
}

fn write_tables(
    out: &Path,
    table: &ComparisonTable,
    runs: &[(String, AddResult)],
    threshold: f64,
    resolution: f64,
) -> CmdResult {
    write_text(&out.join("table.csv"), &table.to_csv())?;
    let curves: Vec<(String, Vec<(f64, f64)>)> = runs
        .iter()
        .map(|(label, r)| {
            let mut errors = r.per_sample.clone();
            errors.extend(std::iter::repeat_n(f64::INFINITY, r.failures));
            (
                label.clone(),
                accuracy_curve(&errors, threshold, resolution),
            )
        })
        .collect();
    let mut header = vec!["threshold_m".to_string()];
    header.extend(curves.iter().map(|(label, _)| label.clone()));
    let rows: Vec<Vec<String>> = match curves.first() {
        Some((_, first)) => (0..first.len())
            .map(|i| {
                let mut row = vec![format!("{:.6}", first[i].0)];
                row.extend(curves.iter().map(|(_, c)| format!("{:.6}", c[i].1)));
                row
            })
            .collect(),
        None => Vec::new(),
    };
    write_csv(&out.join("curves.csv"), &header, &rows)?;
    write_text(
        &out.join("curves.svg"),
        &accuracy_curves_svg(&curves, threshold),
    )
}

pub fn eval(a: &EvalArgs) -> CmdResult {
    if !(a.threshold_max > 0.0 && a.resolution > 0.0) {
        return Err(Failure::Input(anyhow!(
            "--threshold-max and --resolution must be positive"
        )));
    }
    let episode = load_episode(&manifest_path(&a.manifest))?;
    let gt = episode
        .ground_truth
        .ok_or_else(|| anyhow!("episode has no ground truth"))
        .input()?;
    let (chain, layout) = episode.robot.build::<f64>().input()?;
    let points = default_eval_points(&chain, &layout).runtime()?;
    let mut runs = Vec::new();
    for spec in &a.runs {
        let (label, path) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--run expects LABEL=PATH, got '{spec}'"))
            .input()?;
        let est: EstimateOutput = read_config(Path::new(path))?;
        let mut errors = Vec::new();
        let mut failures = 0;
        for r in &est.estimates {
            match &r.pose {
                Some(pf) => {
                    let pose = pf
                        .pose()
                        .with_context(|| format!("invalid pose in {path}"))
                        .input()?;
                    errors.push(add_metric(&pose, &gt, &points).runtime()?);
                }
                None => failures += 1,
            }
        }
        let result = AddResult::with_failures(
            errors,
            failures,
            points.len(),
            a.threshold_max,
            a.resolution,
        )
        .with_context(|| format!("cannot score {path}"))
        .runtime()?;
        runs.push((label.to_string(), result));
    }
    let table = compare_runs(&runs);
    create_dir(&a.out)?;
    write_tables(&a.out, &table, &runs, a.threshold_max, a.resolution)?;
    let text = table.to_text();
    write_text(&a.out.join("table.txt"), &text)?;
    write_json(
        &a.out.join("eval.json"),
        &EvalOutput {
            schema_version: EPISODE_SCHEMA_VERSION,
            root_seed: episode.scenario.as_ref().map(|s| s.seed),
            threshold_max_m: a.threshold_max,
            resolution_m: a.resolution,
            runs: runs
                .into_iter()
                .map(|(label, result)| EvalRun { label, result })
                .collect(),
        },
    )?;
    print!("{text}");
    Ok(())
}

#[derive(Debug, Serialize)]
struct TrainReport {
    schema_version: u32,
    seed: u64,
    dataset: String,
    shots: usize,
    epochs: usize,
    lr: f64,
    weight_decay: f64,
    rank: usize,
    train_samples: usize,
    test_samples: usize,
    zero_shot_accuracy: f64,
    train_accuracy: Option<f64>,
    test_accuracy: f64,
    test_accuracy_per_part: BTreeMap<String, f64>,
    initial_loss: Option<f64>,
    final_loss: Option<f64>,
    w0_sha256: String,
    checkpoint_sha256: String,
}

pub fn train_detector(a: &TrainArgs) -> CmdResult {
    let (dataset, source) = match &a.dataset {
        Some(p) => {
            let d: EmbeddingDataset = read_config(p)?;
            let bytes = std::fs::read(p).input()?;
            (d, format!("sha256:{}", sha256_hex(&bytes)))
        }
        None => (
            EmbeddingDataset::synthetic(
                &SyntheticEmbeddingModel::bundled(a.embedding_seed),
                400,
                500,
                a.seed,
            ),
            format!("synthetic:embedding_seed={}", a.embedding_seed),
        ),
    };
    let dim = dataset
        .dimension()
        .ok_or_else(|| anyhow!("dataset has no samples"))
        .input()?;
    let bank = dataset.bank().context("invalid prompts").input()?;
    let train_pool: Vec<LabeledEmbedding<f64>> =
        dataset.train.iter().map(|s| s.to_labeled()).collect();
    let test: Vec<LabeledEmbedding<f64>> = dataset.test.iter().map(|s| s.to_labeled()).collect();
    if test.is_empty() {
        return Err(Failure::Input(anyhow!("dataset has no test samples")));
    }
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        epochs: a.epochs,
        lr: a.lr.unwrap_or(defaults.lr),
        weight_decay: a.weight_decay.unwrap_or(defaults.weight_decay),
        seed: a.seed,
        ..defaults
    };
    let adapter = LoraAdapter::init(DMatrix::identity(dim, dim), a.rank, 1.0, a.seed).input()?;
    let (zero_shot, _) = accuracy(&adapter, &bank, &test).input()?;
    let (trained, trained_bank, train_acc, losses, n_train) = if a.shots == 0 {
        (adapter, bank, None, None, 0)
    } else {
        let subset = few_shot_subset(&train_pool, a.shots, a.seed);
        let outcome = train_few_shot(&adapter, &bank, &subset, &cfg).runtime()?;
        let (tr, _) = accuracy(&outcome.adapter, &outcome.bank, &subset).runtime()?;
        let first = outcome.loss_curve.first().copied();
        let last = mean_loss(&outcome.adapter, &outcome.bank, &subset).runtime()?;
        (
            outcome.adapter,
            outcome.bank,
            Some(tr),
            Some((first, last)),
            subset.len(),
        )
    };
    let (test_acc, per_part) = accuracy(&trained, &trained_bank, &test).runtime()?;
    let ck = AdapterCheckpoint::new(&trained, &trained_bank);
    let mut ck_text = serde_json::to_string_pretty(&ck).runtime()?;
    ck_text.push('\n');
    create_dir(&a.out)?;
    write_text(&a.out.join("adapter.json"), &ck_text)?;
    let report = TrainReport {
        schema_version: EPISODE_SCHEMA_VERSION,
        seed: a.seed,
        dataset: source,
        shots: a.shots,
        epochs: if a.shots == 0 { 0 } else { a.epochs },
        lr: cfg.lr,
        weight_decay: cfg.weight_decay,
        rank: a.rank,
        train_samples: n_train,
        test_samples: test.len(),
        zero_shot_accuracy: zero_shot,
        train_accuracy: train_acc,
        test_accuracy: test_acc,
        test_accuracy_per_part: per_part.iter().map(|(p, v)| (p.to_string(), *v)).collect(),
        initial_loss: losses.and_then(|l| l.0),
        final_loss: losses.map(|l| l.1),
        w0_sha256: trained.w0_hash(),
        checkpoint_sha256: sha256_hex(ck_text.as_bytes()),
    };
    write_json(&a.out.join("report.json"), &report)?;
    let mut header = strings(&["shots", "test_accuracy"]);
    header.extend(per_part.keys().map(|p| p.to_string()));
    let mut row = vec![a.shots.to_string(), format!("{test_acc:.6}")];
    row.extend(per_part.values().map(|v| format!("{v:.6}")));
    write_csv(&a.out.join("report.csv"), &header, &[row])?;
    println!(
        "{}-shot held-out accuracy {:.4} (zero-shot {:.4}); checkpoint sha256 {}",
        a.shots, test_acc, zero_shot, report.checkpoint_sha256
    );
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ReportConfig {
    robot: Option<PathBuf>,
    intrinsics: Option<CameraIntrinsics<f64>>,
    scenario: ScenarioSpec,
    kinds: Vec<ScenarioKind>,
    seeds: usize,
    root_seed: u64,
    detector: DetectorKind,
    estimator: EstimatorConfig,
    threshold_max: f64,
    resolution: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            robot: None,
            intrinsics: None,
            scenario: ScenarioSpec {
                pixel_noise_sigma: 1.0,
                ..ScenarioSpec::default()
            },
            kinds: vec![ScenarioKind::RobotInView, ScenarioKind::RobotInAndOut],
            seeds: 50,
            root_seed: 0,
            detector: DetectorKind::All,
            estimator: EstimatorConfig::default(),
            threshold_max: DEFAULT_AUC_THRESHOLD_M,
            resolution: DEFAULT_AUC_RESOLUTION_M,
        }
    }
}

#[derive(Debug, Serialize)]
struct ReportEntry {
    kind: ScenarioKind,
    #[serde(flatten)]
    outcome: SingleVsBatch,
}

#[derive(Debug, Serialize)]
struct ReportOutput {
    schema_version: u32,
    root_seed: u64,
    seeds: usize,
    n_frames: usize,
    pixel_noise_sigma: f64,
    threshold_max_m: f64,
    resolution_m: f64,
    scenarios: Vec<ReportEntry>,
}

fn kind_label(k: ScenarioKind) -> &'static str {
    match k {
        ScenarioKind::RobotInView => "robot-in-view",
        ScenarioKind::RobotInAndOut => "robot-in-and-out",
        ScenarioKind::BaseOnly => "base-only",
        ScenarioKind::EndEffectorOnly => "end-effector-only",
    }
}

pub fn report(a: &ReportArgs) -> CmdResult {
    let mut cfg: ReportConfig = match &a.config {
        Some(p) => read_config(p)?,
        None => ReportConfig::default(),
    };
    if let Some(v) = a.seeds {
        cfg.seeds = v;
    }
    if let Some(v) = a.root_seed {
        cfg.root_seed = v;
    }
    if let Some(v) = a.n_frames {
        cfg.scenario.n_frames = v;
    }
    if let Some(v) = a.pixel_noise {
        cfg.scenario.pixel_noise_sigma = v;
    }
    if cfg.seeds == 0 || cfg.kinds.is_empty() {
        return Err(Failure::Input(anyhow!(
            "report needs at least one seed and one scenario kind"
        )));
    }
    if cfg.detector == DetectorKind::Lora {
        return Err(Failure::Input(anyhow!(
            "report supports the all and oracle detectors"
        )));
    }
    let robot_path = cfg
        .robot
        .as_ref()
        .map(|r| relative_to(a.config.as_deref(), r));
    let robot: RobotSpec = load_robot(robot_path.as_deref())?;
    default_home(robot_path.as_deref(), &mut cfg.scenario);
    cfg.scenario
        .validate()
        .context("invalid scenario")
        .input()?;
    let k = cfg.intrinsics.unwrap_or_else(default_intrinsics);
    k.validate().context("invalid intrinsics").input()?;
    let (chain, layout) = robot.build::<f64>().input()?;

    let mut runs = Vec::new();
    let mut entries = Vec::new();
    let mut summary = String::new();
    for &kind in &cfg.kinds {
        let template = ScenarioSpec {
            kind,
            ..cfg.scenario.clone()
        };
        let r = single_vs_batch(
            &chain,
            &layout,
            &k,
            &template,
            cfg.seeds,
            cfg.root_seed,
            cfg.detector,
            &cfg.estimator,
            cfg.threshold_max,
            cfg.resolution,
        )
        .runtime()?;
        let label = kind_label(kind);
        let _ = writeln!(
            summary,
            "{label}: batch ADD <= median single-frame ADD in {}/{} seeds ({:.1}%)",
            r.batch_wins,
            r.seeds_compared,
            100.0 * r.win_rate()
        );
        runs.push((format!("{label} single-frame"), r.single.clone()));
        runs.push((format!("{label} batch"), r.batch.clone()));
        entries.push(ReportEntry { kind, outcome: r });
    }
    let table = compare_runs(&runs);
    create_dir(&a.out)?;
    write_tables(&a.out, &table, &runs, cfg.threshold_max, cfg.resolution)?;
    let text = format!(
        "{}\n{summary}seeds per scenario: {}, root seed: {}\n",
        table.to_text(),
        cfg.seeds,
        cfg.root_seed
    );
    write_text(&a.out.join("table.txt"), &text)?;
    write_json(
        &a.out.join("report.json"),
        &ReportOutput {
            schema_version: EPISODE_SCHEMA_VERSION,
            root_seed: cfg.root_seed,
            seeds: cfg.seeds,
            n_frames: cfg.scenario.n_frames,
            pixel_noise_sigma: cfg.scenario.pixel_noise_sigma,
            threshold_max_m: cfg.threshold_max,
            resolution_m: cfg.resolution,
            scenarios: entries,
        },
    )?;
    print!("{text}");
    Ok(())
}
