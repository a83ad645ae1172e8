//! End-to-end estimation: part detection, keypoint decoding and selection, forward
//! kinematics, and the pose solve, per frame or pooled over an episode.
//!
//! Failures are reported as [`EstimateFailure`] values naming the stage that failed.
//! A frame whose detector or decoder fails still contributes whatever keypoints survive.

use std::collections::BTreeMap;

use nalgebra::{DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::heatmap::{
    decode_argmax, decode_dark, modulate, DecodeConfig, DecodedKeypoint, Heatmap, HeatmapModel,
};
use crate::kinematics::{
    keypoints_3d, JointState, KeypointId, KeypointLayout, KinematicChain, PartLabel,
};
use crate::pnp::{
    batch_solve, solve_pnp_with, BatchConfig, BatchFrame, Correspondence, Detection, PnpOptions,
    Weighting, MIN_CORRESPONDENCES,
};
use crate::scalar::Real;
use crate::se3::PoseSE3;
use crate::visibility::{
    classify_parts, oracle_visibility, LoraAdapter, PromptPairBank, VisibilityReport,
};

/// One frame of an episode: joint angles plus either heatmaps or precomputed detections.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameObservation<T: Real> {
    pub frame_index: usize,
    pub q: JointState<T>,
    /// Heatmaps in heatmap pixels; image coordinates are `stride ×` heatmap coordinates.
    pub heatmaps: BTreeMap<KeypointId, Heatmap<T>>,
    /// Used instead of decoding when present.
    pub detections: Option<Vec<Detection<T>>>,
    pub embedding: Option<DVector<T>>,
}

impl<T: Real> FrameObservation<T> {
    pub fn validate(&self) -> Result<()> {
        let mut dims = self.heatmaps.values().map(|h| (h.width(), h.height()));
        if let Some(first) = dims.next() {
            if let Some(other) = dims.find(|d| *d != first) {
                return Err(Error::Heatmap(format!(
                    "frame {}: heatmap sizes differ ({}x{} vs {}x{})",
                    self.frame_index, first.0, first.1, other.0, other.1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMethod {
    #[default]
    Dark,
    Argmax,
}

/// How heatmaps become 2D keypoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeSettings<T: Real> {
    pub method: DecodeMethod,
    /// Blur with the heatmap model before decoding.
    pub modulate: bool,
    /// Image pixels per heatmap pixel.
    pub stride: T,
    pub sigma: T,
    pub dark: DecodeConfig<T>,
}

impl<T: Real> DecodeSettings<T> {
    pub fn new(stride: T, sigma: T) -> Self {
        Self {
            method: DecodeMethod::Dark,
            modulate: false,
            stride,
            sigma,
            dark: DecodeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig<T: Real> {
    /// Minimum peak activation of a kept keypoint.
    pub activation_threshold: T,
    pub min_correspondences: usize,
    pub use_visibility_gate: bool,
    pub weighting: Weighting,
}

impl<T: Real> SelectionConfig<T> {
    /// Threshold at half the ideal peak `1/(2πσ²)`.
    pub fn for_sigma(sigma: T) -> Result<Self> {
        let peak = HeatmapModel::new(sigma)?.ideal_peak();
        Ok(Self {
            activation_threshold: peak * T::lit(0.5),
            min_correspondences: MIN_CORRESPONDENCES,
            use_visibility_gate: true,
            weighting: Weighting::None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_correspondences < MIN_CORRESPONDENCES {
            return Err(Error::Parameter(format!(
                "min_correspondences must be at least {MIN_CORRESPONDENCES}"
            )));
        }
        Ok(())
    }
}

/// Serializable estimator settings; the heatmap geometry comes from the episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub decode: DecodeMethod,
    pub modulate: bool,
    /// Defaults to half the ideal peak for the episode's σ.
    pub activation_threshold: Option<f64>,
    pub min_correspondences: usize,
    pub use_visibility_gate: bool,
    pub weighting: Weighting,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            decode: DecodeMethod::Dark,
            modulate: false,
            activation_threshold: None,
            min_correspondences: MIN_CORRESPONDENCES,
            use_visibility_gate: true,
            weighting: Weighting::None,
        }
    }
}

impl EstimatorConfig {
    pub fn resolve<T: Real>(
        &self,
        stride: T,
        sigma: T,
    ) -> Result<(DecodeSettings<T>, SelectionConfig<T>)> {
        let mut decode = DecodeSettings::new(stride, sigma);
        decode.method = self.decode;
        decode.modulate = self.modulate;
        let mut sel = SelectionConfig::for_sigma(sigma)?;
        if let Some(t) = self.activation_threshold {
            sel.activation_threshold = T::lit(t);
        }
        sel.min_correspondences = self.min_correspondences;
        sel.use_visibility_gate = self.use_visibility_gate;
        sel.weighting = self.weighting;
        sel.validate()?;
        Ok((decode, sel))
    }
}

/// Decides which robot parts appear in a frame.
pub trait PartDetector<T: Real> {
    fn detect(&self, frame: &FrameObservation<T>) -> Result<VisibilityReport>;
}

/// Reports every listed part as visible.
#[derive(Debug, Clone)]
pub struct AllVisibleDetector {
    pub parts: Vec<PartLabel>,
}

impl<T: Real> PartDetector<T> for AllVisibleDetector {
    fn detect(&self, _frame: &FrameObservation<T>) -> Result<VisibilityReport> {
        Ok(VisibilityReport::all_visible(&self.parts))
    }
}

/// Geometric oracle: projects the keypoints with the known camera pose.
#[derive(Debug, Clone)]
pub struct OracleDetector<'a, T: Real> {
    pub chain: &'a KinematicChain<T>,
    pub layout: &'a KeypointLayout<T>,
    pub pose: PoseSE3<T>,
    pub intrinsics: CameraIntrinsics<T>,
    pub margin_px: T,
}

impl<T: Real> PartDetector<T> for OracleDetector<'_, T> {
    fn detect(&self, frame: &FrameObservation<T>) -> Result<VisibilityReport> {
        oracle_visibility(
            self.chain,
            self.layout,
            &frame.q,
            &self.pose,
            &self.intrinsics,
            self.margin_px,
        )
    }
}

/// LoRA-adapted prompt-pair classifier over the frame's image embedding.
#[derive(Debug, Clone)]
pub struct LoraDetector<T: Real> {
    pub adapter: LoraAdapter<T>,
    pub bank: PromptPairBank<T>,
}

impl<T: Real> PartDetector<T> for LoraDetector<T> {
    fn detect(&self, frame: &FrameObservation<T>) -> Result<VisibilityReport> {
        let emb = frame.embedding.as_ref().ok_or_else(|| {
            Error::Parameter(format!("frame {} has no embedding", frame.frame_index))
        })?;
        classify_parts(&self.adapter, &self.bank, emb)
    }
}

/// Decodes every heatmap (or adopts precomputed detections) into image coordinates.
/// Keypoints whose heatmap has no peak are omitted.
pub fn decode_frame<T: Real>(
    frame: &FrameObservation<T>,
    settings: &DecodeSettings<T>,
) -> Result<BTreeMap<KeypointId, DecodedKeypoint<T>>> {
    let mut out = BTreeMap::new();
    if let Some(dets) = &frame.detections {
        for d in dets {
            out.insert(
                d.keypoint_id,
                DecodedKeypoint {
                    u: d.u,
                    v: d.v,
                    peak_activation: d.confidence,
                    peak_location: (
                        d.u.round().as_f64().max(0.0) as usize,
                        d.v.round().as_f64().max(0.0) as usize,
                    ),
                    valid: true,
                },
            );
        }
        return Ok(out);
    }
    frame.validate()?;
    let model = HeatmapModel::new(settings.sigma)?;
    for (&id, hm) in &frame.heatmaps {
        let smoothed;
        let hm = if settings.modulate {
            smoothed = modulate(hm, &model)?;
            &smoothed
        } else {
            hm
        };
        let decoded = match settings.method {
            DecodeMethod::Dark => decode_dark(hm, &settings.dark),
            DecodeMethod::Argmax => decode_argmax(hm),
        };
        match decoded {
            Ok(mut d) => {
                d.u *= settings.stride;
                d.v *= settings.stride;
                out.insert(id, d);
            }
            Err(Error::NoPeak) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Keeps valid decodes on visible parts whose activation reaches the threshold, ordered
/// by descending activation (ties by keypoint id).
pub fn select_keypoints<T: Real>(
    decoded: &BTreeMap<KeypointId, DecodedKeypoint<T>>,
    report: &VisibilityReport,
    layout: &KeypointLayout<T>,
    cfg: &SelectionConfig<T>,
) -> Vec<(KeypointId, DecodedKeypoint<T>)> {
    let mut kept: Vec<(KeypointId, DecodedKeypoint<T>)> = decoded
        .iter()
        .filter(|(_, d)| d.valid && d.peak_activation >= cfg.activation_threshold)
        .filter(|(id, _)| {
            !cfg.use_visibility_gate || layout.part_of(**id).is_some_and(|p| report.is_visible(p))
        })
        .map(|(id, d)| (*id, *d))
        .collect();
    kept.sort_by(|a, b| {
        b.1.peak_activation
            .partial_cmp(&a.1.peak_activation)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    kept
}

/// Stage at which an estimate failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimateFailure {
    Detection { message: String },
    Decoding { message: String },
    Kinematics { message: String },
    InsufficientCorrespondences { needed: usize, got: usize },
    Degenerate { message: String },
    NonConvergence { iterations: usize },
    Solver { message: String },
}

impl std::fmt::Display for EstimateFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Detection { message } => write!(f, "part detection failed: {message}"),
            Self::Decoding { message } => write!(f, "heatmap decoding failed: {message}"),
            Self::Kinematics { message } => write!(f, "forward kinematics failed: {message}"),
            Self::InsufficientCorrespondences { needed, got } => {
                write!(f, "insufficient correspondences: need {needed}, got {got}")
            }
            Self::Degenerate { message } => {
                write!(f, "degenerate keypoint configuration: {message}")
            }
            Self::NonConvergence { iterations } => {
                write!(f, "PnP did not converge after {iterations} iterations")
            }
            Self::Solver { message } => write!(f, "PnP failed: {message}"),
        }
    }
}

impl std::error::Error for EstimateFailure {}

fn solver_failure(e: Error) -> EstimateFailure {
    match e {
        Error::InsufficientCorrespondences { needed, got } => {
            EstimateFailure::InsufficientCorrespondences { needed, got }
        }
        Error::Degenerate(message) => EstimateFailure::Degenerate { message },
        Error::NonConvergence { iterations, .. } => EstimateFailure::NonConvergence { iterations },
        Error::Dimension { .. } | Error::Layout(_) | Error::Chain(_) => {
            EstimateFailure::Kinematics {
                message: e.to_string(),
            }
        }
        other => EstimateFailure::Solver {
            message: other.to_string(),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameEstimate<T: Real> {
    pub pose: PoseSE3<T>,
    pub rms_reprojection: T,
    pub inlier_count: usize,
    pub kept: Vec<KeypointId>,
    pub report: VisibilityReport,
}

fn detections_of<T: Real>(kept: &[(KeypointId, DecodedKeypoint<T>)]) -> Vec<Detection<T>> {
    kept.iter()
        .map(|(id, d)| Detection {
            keypoint_id: *id,
            u: d.u,
            v: d.v,
            confidence: d.peak_activation,
        })
        .collect()
}

/// Full pipeline on one frame.
#[allow(clippy::too_many_arguments)]
pub fn estimate_frame<T: Real>(
    frame: &FrameObservation<T>,
    chain: &KinematicChain<T>,
    layout: &KeypointLayout<T>,
    k: &CameraIntrinsics<T>,
    detector: &dyn PartDetector<T>,
    decode: &DecodeSettings<T>,
    cfg: &SelectionConfig<T>,
    options: &PnpOptions<T>,
) -> std::result::Result<FrameEstimate<T>, EstimateFailure> {
    cfg.validate().map_err(|e| EstimateFailure::Solver {
        message: e.to_string(),
    })?;
    let report = detector
        .detect(frame)
        .map_err(|e| EstimateFailure::Detection {
            message: e.to_string(),
        })?;
    let decoded = decode_frame(frame, decode).map_err(|e| EstimateFailure::Decoding {
        message: e.to_string(),
    })?;
    let kept = select_keypoints(&decoded, &report, layout, cfg);
    if kept.len() < cfg.min_correspondences {
        return Err(EstimateFailure::InsufficientCorrespondences {
            needed: cfg.min_correspondences,
            got: kept.len(),
        });
    }
    let points = keypoints_3d(chain, layout, &frame.q).map_err(solver_failure)?;
    let mut corrs: Vec<Correspondence<T>> = kept
        .iter()
        .map(|(id, d)| Correspondence {
            keypoint_id: *id,
            point3d: points[id],
            point2d: Vector2::new(d.u, d.v),
            weight: match cfg.weighting {
                Weighting::None => T::one(),
                Weighting::Confidence => d.peak_activation,
            },
        })
        .collect();
    // Same ordering as the pooled solve so a one-frame episode matches exactly.
    corrs.sort_by_key(|c| c.keypoint_id);
    let sol = solve_pnp_with(&corrs, k, None, options).map_err(solver_failure)?;
    let mut ids: Vec<KeypointId> = kept.iter().map(|(id, _)| *id).collect();
    ids.sort_unstable();
    Ok(FrameEstimate {
        pose: sol.pose,
        rms_reprojection: sol.rms_reprojection,
        inlier_count: sol.inlier_count,
        kept: ids,
        report,
    })
}

/// What happened to one frame during episode estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    pub frame_index: usize,
    /// Selected keypoint ids, ascending.
    pub kept: Vec<KeypointId>,
    pub report: VisibilityReport,
    /// Reprojection RMS of this frame's keypoints at the pooled pose.
    pub rms_reprojection: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeEstimate<T: Real> {
    pub pose: PoseSE3<T>,
    pub rms_reprojection: T,
    pub correspondences_used: usize,
    pub frames: Vec<FrameDiagnostics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeFailure {
    pub failure: EstimateFailure,
    pub frames: Vec<FrameDiagnostics>,
}

/// Pools the selected keypoints of every frame into one solve. Frames are processed in
/// the given order; a frame whose detection or decoding fails is recorded and skipped.
#[allow(clippy::too_many_arguments)]
pub fn estimate_episode<T: Real>(
    frames: &[FrameObservation<T>],
    chain: &KinematicChain<T>,
    layout: &KeypointLayout<T>,
    k: &CameraIntrinsics<T>,
    detector: &dyn PartDetector<T>,
    decode: &DecodeSettings<T>,
    cfg: &SelectionConfig<T>,
    options: &PnpOptions<T>,
) -> std::result::Result<EpisodeEstimate<T>, EpisodeFailure> {
    let fail = |failure, frames| EpisodeFailure { failure, frames };
    if let Err(e) = cfg.validate() {
        return Err(fail(
            EstimateFailure::Solver {
                message: e.to_string(),
            },
            Vec::new(),
        ));
    }
    let mut diags = Vec::with_capacity(frames.len());
    let mut batch = Vec::with_capacity(frames.len());
    for frame in frames {
        let mut diag = FrameDiagnostics {
            frame_index: frame.frame_index,
            kept: Vec::new(),
            report: VisibilityReport::default(),
            rms_reprojection: None,
            error: None,
        };
        let selected = detector.detect(frame).and_then(|report| {
            diag.report = report;
            decode_frame(frame, decode)
        });
        match selected {
            Ok(decoded) => {
                let kept = select_keypoints(&decoded, &diag.report, layout, cfg);
                diag.kept = kept.iter().map(|(id, _)| *id).collect();
                diag.kept.sort_unstable();
                batch.push(BatchFrame {
                    q: frame.q.clone(),
                    detections: detections_of(&kept),
                });
            }
            Err(e) => {
                diag.error = Some(e.to_string());
                batch.push(BatchFrame {
                    q: frame.q.clone(),
                    detections: Vec::new(),
                });
            }
        }
        diags.push(diag);
    }
    let total: usize = batch.iter().map(|f| f.detections.len()).sum();
    if total < cfg.min_correspondences {
        return Err(fail(
            EstimateFailure::InsufficientCorrespondences {
                needed: cfg.min_correspondences,
                got: total,
            },
            diags,
        ));
    }
    let config = BatchConfig {
        min_confidence: T::zero(),
        weighting: cfg.weighting,
        options: *options,
    };
    match batch_solve(&batch, chain, layout, k, &config) {
        Ok(sol) => {
            for (d, rms) in diags.iter_mut().zip(&sol.per_frame_rms) {
                d.rms_reprojection = rms.map(|r| r.as_f64());
            }
            Ok(EpisodeEstimate {
                pose: sol.pose,
                rms_reprojection: sol.rms_reprojection,
                correspondences_used: sol.correspondences_used,
                frames: diags,
            })
        }
        Err(e) => Err(fail(solver_failure(e), diags)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::project;
    use crate::heatmap::encode_gaussian;
    use crate::kinematics::{panda_like, panda_ready_pose};
    use nalgebra::Vector3;

    fn camera() -> (CameraIntrinsics<f64>, PoseSE3<f64>) {
        let k = CameraIntrinsics::new(300.0, 300.0, 160.0, 120.0, 320, 240).unwrap();
        let pose = PoseSE3::look_at(
            &Vector3::new(1.6, 0.5, 0.6),
            &Vector3::new(0.1, 0.0, 0.4),
            &Vector3::z(),
        )
        .unwrap();
        (k, pose)
    }

    /// Stride-1 heatmaps from exact projections; ids in `hidden` get all-zero maps.
    fn frame(hidden: &[KeypointId]) -> FrameObservation<f64> {
        let (chain, layout) = panda_like();
        let (k, pose) = camera();
        let q = panda_ready_pose();
        let pts = keypoints_3d(&chain, &layout, &q).unwrap();
        let model = HeatmapModel::new(6.0).unwrap();
        let heatmaps = pts
            .iter()
            .map(|(id, p)| {
                let hm = if hidden.contains(id) {
                    Heatmap::zeros(320, 240).unwrap()
                } else {
                    let px = project(&k, &pose, p).unwrap();
                    encode_gaussian(px.x, px.y, &model, 320, 240).unwrap()
                };
                (*id, hm)
            })
            .collect();
        FrameObservation {
            frame_index: 0,
            q,
            heatmaps,
            detections: None,
            embedding: None,
        }
    }

    fn everything() -> AllVisibleDetector {
        AllVisibleDetector {
            parts: vec![PartLabel::Base, PartLabel::EndEffector],
        }
    }

    #[test]
    fn full_view_frame_recovers_pose() {
        let (chain, layout) = panda_like();
        let (k, pose) = camera();
        let f = frame(&[]);
        let cfg = SelectionConfig::for_sigma(6.0).unwrap();
        let est = estimate_frame(
            &f,
            &chain,
            &layout,
            &k,
            &everything(),
            &DecodeSettings::new(1.0, 6.0),
            &cfg,
            &PnpOptions::default(),
        )
        .unwrap();
        assert_eq!(est.kept.len(), 12);
        assert!(est.pose.rotation_angle_to(&pose) < 1e-5);
        assert!(est.pose.translation_distance_to(&pose) < 1e-5);
    }

    #[test]
    fn too_few_keypoints_is_a_structured_failure() {
        let (chain, layout) = panda_like();
        let (k, _) = camera();
        let f = frame(&[0, 1, 2, 3, 4, 5, 6, 7, 8]);
        let cfg = SelectionConfig::for_sigma(6.0).unwrap();
        let err = estimate_frame(
            &f,
            &chain,
            &layout,
            &k,
            &everything(),
            &DecodeSettings::new(1.0, 6.0),
            &cfg,
            &PnpOptions::default(),
        )
        .unwrap_err();
        assert_eq!(
            err,
            EstimateFailure::InsufficientCorrespondences { needed: 4, got: 3 }
        );
    }

    #[test]
    fn mixed_selection_keeps_only_end_effector() {
        let (_, layout) = panda_like();
        let f = frame(&[]);
        let mut decoded = decode_frame(&f, &DecodeSettings::new(1.0, 6.0)).unwrap();
        // Suppress the base keypoints to a negligible activation.
        for id in 0..6 {
            decoded.get_mut(&id).unwrap().peak_activation = 1e-9;
        }
        let cfg = SelectionConfig::for_sigma(6.0).unwrap();
        let kept = select_keypoints(
            &decoded,
            &VisibilityReport::all_visible(&layout.parts()),
            &layout,
            &cfg,
        );
        let mut ids: Vec<_> = kept.iter().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        assert_eq!(ids, vec![6, 7, 8, 9, 10, 11]);

        let none = select_keypoints(&decoded, &VisibilityReport::default(), &layout, &cfg);
        assert!(none.is_empty());
        let open = SelectionConfig {
            activation_threshold: 0.0,
            ..cfg
        };
        let all = select_keypoints(
            &decoded,
            &VisibilityReport::all_visible(&layout.parts()),
            &layout,
            &open,
        );
        assert_eq!(all.len(), decoded.values().filter(|d| d.valid).count());
        assert!(all
            .windows(2)
            .all(|w| w[0].1.peak_activation >= w[1].1.peak_activation));
    }

    #[test]
    fn single_frame_episode_equals_frame_estimate() {
        let (chain, layout) = panda_like();
        let (k, _) = camera();
        let f = frame(&[]);
        let cfg = SelectionConfig::for_sigma(6.0).unwrap();
        let dec = DecodeSettings::new(1.0, 6.0);
        let opts = PnpOptions::default();
        let a = estimate_frame(&f, &chain, &layout, &k, &everything(), &dec, &cfg, &opts).unwrap();
        let b = estimate_episode(
            std::slice::from_ref(&f),
            &chain,
            &layout,
            &k,
            &everything(),
            &dec,
            &cfg,
            &opts,
        )
        .unwrap();
        assert_eq!(a.pose, b.pose);
        assert_eq!(b.frames[0].kept, a.kept);
    }

    #[test]
    fn empty_episode_fails_cleanly() {
        let (chain, layout) = panda_like();
        let (k, _) = camera();
        let f = frame(&(0..12).collect::<Vec<_>>());
        let cfg = SelectionConfig::for_sigma(6.0).unwrap();
        let err = estimate_episode(
            &[f.clone(), f],
            &chain,
            &layout,
            &k,
            &everything(),
            &DecodeSettings::new(1.0, 6.0),
            &cfg,
            &PnpOptions::default(),
        )
        .unwrap_err();
        assert_eq!(
            err.failure,
            EstimateFailure::InsufficientCorrespondences { needed: 4, got: 0 }
        );
        assert_eq!(err.frames.len(), 2);
    }

    #[test]
    fn lora_detector_requires_embedding() {
        let adapter = LoraAdapter::init(nalgebra::DMatrix::identity(4, 4), 2, 1.0, 0).unwrap();
        let det = LoraDetector {
            adapter,
            bank: PromptPairBank::default(),
        };
        let f = frame(&[]);
        assert!(det.detect(&f).is_err());
    }

    #[test]
    fn rejects_low_min_correspondences() {
        let cfg = SelectionConfig {
            min_correspondences: 3,
            ..SelectionConfig::for_sigma(6.0).unwrap()
        };
        assert!(cfg.validate().is_err());
    }
}
