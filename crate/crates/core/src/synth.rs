//! Synthetic episodes with known ground truth.
//!
//! A fixed look-at camera watches the arm follow per-joint sinusoids. Keypoints are
//! projected, perturbed, encoded as Gaussian heatmaps at `heatmap_stride`, corrupted with
//! uniform noise, and zeroed when off-frame or dropped. All randomness comes from
//! `ScenarioSpec::seed`, split into independent streams per stage.

use std::collections::BTreeMap;

use nalgebra::{DVector, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::camera::{project, CameraIntrinsics};
use crate::episode::Episode;
use crate::error::{Error, Result};
use crate::heatmap::{encode_gaussian, Heatmap, HeatmapModel, MIN_HEATMAP_SIDE};
use crate::kinematics::{
    keypoints_3d, JointState, KeypointId, KeypointLayout, KinematicChain, PartLabel, RobotSpec,
};
use crate::pipeline::FrameObservation;
use crate::se3::PoseSE3;
use crate::visibility::{oracle_visibility, SyntheticEmbeddingModel, VisibilityReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Every keypoint stays inside the image in every frame.
    #[default]
    RobotInView,
    /// End-effector visibility changes at least once during the episode.
    RobotInAndOut,
    /// Base keypoints inside, end-effector keypoints off-frame, in every frame.
    BaseOnly,
    /// End-effector keypoints inside, base keypoints off-frame, in every frame.
    EndEffectorOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n_frames: usize,
    /// Std of the Gaussian perturbation of keypoint pixels, image pixels.
    pub pixel_noise_sigma: f64,
    /// Uniform heatmap noise amplitude as a fraction of the ideal peak.
    pub heatmap_noise: f64,
    /// Probability that an in-frame keypoint's heatmap is blanked.
    pub dropout_prob: f64,
    pub seed: u64,
    pub heatmap_stride: usize,
    /// Heatmap Gaussian width, heatmap pixels.
    pub sigma: f64,
    /// Centre of the joint trajectory; defaults to the zero configuration clamped into
    /// the joint limits.
    pub home_q: Option<Vec<f64>>,
    /// Largest per-joint sinusoid amplitude, radians.
    pub max_joint_amplitude: f64,
    /// Camera distance range from the look-at target, meters.
    pub distance_range: [f64; 2],
    pub max_attempts: usize,
    /// When set, frames carry embeddings from the bundled synthetic embedding model
    /// built with this seed.
    pub embedding_seed: Option<u64>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::RobotInView,
            n_frames: 30,
            pixel_noise_sigma: 0.0,
            heatmap_noise: 0.0,
            dropout_prob: 0.0,
            seed: 0,
            heatmap_stride: 4,
            sigma: 6.0,
            home_q: None,
            max_joint_amplitude: 0.3,
            distance_range: [0.8, 2.5],
            max_attempts: 1000,
            embedding_seed: None,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let p = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Parameter(format!(
                    "{name} must lie in [0, 1], got {v}"
                )))
            }
        };
        p("dropout_prob", self.dropout_prob)?;
        p("heatmap_noise", self.heatmap_noise)?;
        if self.n_frames == 0 {
            return Err(Error::Parameter("n_frames must be at least 1".into()));
        }
        if !(self.pixel_noise_sigma >= 0.0) || !(self.max_joint_amplitude >= 0.0) {
            return Err(Error::Parameter(
                "noise and amplitude must be non-negative".into(),
            ));
        }
        if self.heatmap_stride == 0 || self.max_attempts == 0 {
            return Err(Error::Parameter(
                "heatmap_stride and max_attempts must be positive".into(),
            ));
        }
        let [lo, hi] = self.distance_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Parameter(
                "distance_range must satisfy 0 < lo <= hi".into(),
            ));
        }
        HeatmapModel::new(self.sigma)?;
        Ok(())
    }

    /// Image margin, pixels, inside which a keypoint counts as cleanly in view.
    pub fn border_margin_px(&self) -> f64 {
        2.0 * self.heatmap_stride as f64
    }
}

/// Camera distances, meters, at which the bundled arm's base and hand can be framed
/// separately by the default camera.
pub const PARTIAL_VIEW_DISTANCE: [f64; 2] = [0.45, 0.9];

/// A generated episode plus the quantities only the generator knows.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEpisode {
    pub episode: Episode,
    /// Exact projections before noise, image pixels; keypoints behind the camera are absent.
    pub true_pixels: Vec<BTreeMap<KeypointId, Vector2<f64>>>,
    pub visibility: Vec<VisibilityReport>,
    /// Camera draws needed to satisfy the scenario.
    pub attempts: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Placement {
    Inside,
    Edge,
    Outside,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Joint angles per frame: `c + a·sin(2π f t + φ)` with the swing kept inside the limits.
pub fn joint_trajectory(
    chain: &KinematicChain<f64>,
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<JointState<f64>>> {
    let limits = chain.revolute_limits();
    let home: Vec<f64> = match &spec.home_q {
        Some(h) if h.len() != limits.len() => {
            return Err(Error::Dimension {
                expected: limits.len(),
                got: h.len(),
            })
        }
        Some(h) => h
            .iter()
            .zip(&limits)
            .map(|(&q, l)| q.clamp(l[0], l[1]))
            .collect(),
        None => limits.iter().map(|l| 0.0f64.clamp(l[0], l[1])).collect(),
    };
    let waves: Vec<(f64, f64, f64)> = home
        .iter()
        .zip(&limits)
        .map(|(&c, l)| {
            let room = (c - l[0]).min(l[1] - c).max(0.0);
            let amp = (rng.random_range(0.5..=1.0) * spec.max_joint_amplitude).min(room);
            let cycles = rng.random_range(0.5..=1.5);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (amp, cycles, phase)
        })
        .collect();
    let span = (spec.n_frames.max(2) - 1) as f64;
    Ok((0..spec.n_frames)
        .map(|i| {
            let t = i as f64 / span;
            let angles = home
                .iter()
                .zip(&waves)
                .zip(&limits)
                .map(|((&c, &(a, f, ph)), l)| {
                    (c + a * (std::f64::consts::TAU * f * t + ph).sin()).clamp(l[0], l[1])
                })
                .collect();
            JointState {
                angles,
                timestamp: Some(i as f64 / 30.0),
            }
        })
        .collect())
}

fn centroid<'a>(pts: impl Iterator<Item = &'a Vector3<f64>>) -> Vector3<f64> {
    let (sum, n) = pts.fold((Vector3::zeros(), 0usize), |(s, n), p| (s + p, n + 1));
    sum / n.max(1) as f64
}

fn placement(
    k: &CameraIntrinsics<f64>,
    pose: &PoseSE3<f64>,
    p: &Vector3<f64>,
    margin: f64,
) -> Placement {
    match project(k, pose, p) {
        Ok(px) if pose.transform_point(p).z > 0.05 && k.contains(&px, margin) => Placement::Inside,
        Ok(px) if k.contains(&px, 0.0) => Placement::Edge,
        _ => Placement::Outside,
    }
}

/// Generates an episode satisfying `scenario`.
pub fn generate_episode(
    chain: &KinematicChain<f64>,
    layout: &KeypointLayout<f64>,
    k: &CameraIntrinsics<f64>,
    scenario: &ScenarioSpec,
) -> Result<SyntheticEpisode> {
    scenario.validate()?;
    k.validate()?;
    layout.validate_for(chain)?;
    let stride = scenario.heatmap_stride;
    let (hw, hh) = (k.width as usize / stride, k.height as usize / stride);
    if !(k.width as usize).is_multiple_of(stride) || !(k.height as usize).is_multiple_of(stride) {
        return Err(Error::Parameter(format!(
            "image {}x{} is not divisible by heatmap_stride {stride}",
            k.width, k.height
        )));
    }
    if hw < MIN_HEATMAP_SIDE || hh < MIN_HEATMAP_SIDE {
        return Err(Error::Parameter(format!(
            "heatmaps would be {hw}x{hh}, below the minimum"
        )));
    }

    let mut traj_rng = stream(scenario.seed, 0);
    let trajectory = joint_trajectory(chain, scenario, &mut traj_rng)?;
    let points: Vec<BTreeMap<KeypointId, Vector3<f64>>> = trajectory
        .iter()
        .map(|q| keypoints_3d(chain, layout, q))
        .collect::<Result<_>>()?;
    let base_ids = layout.ids_for_part(&PartLabel::Base);
    let ee_ids = layout.ids_for_part(&PartLabel::EndEffector);
    let needs_parts = !matches!(scenario.kind, ScenarioKind::RobotInView);
    if needs_parts && (base_ids.is_empty() || ee_ids.is_empty()) {
        return Err(Error::Generation(
            "scenario needs both base and end_effector keypoints".into(),
        ));
    }
    let all_centroid = centroid(points.iter().flat_map(|m| m.values()));
    let part_centroid =
        |ids: &[KeypointId]| centroid(points.iter().flat_map(|m| ids.iter().map(move |id| &m[id])));
    let aim = match scenario.kind {
        ScenarioKind::RobotInView => all_centroid,
        ScenarioKind::BaseOnly => part_centroid(&base_ids),
        ScenarioKind::EndEffectorOnly | ScenarioKind::RobotInAndOut => part_centroid(&ee_ids),
    };
    // Single-part views look across the base-to-hand axis so the other part leaves the frame.
    let avoid_axis = match scenario.kind {
        ScenarioKind::BaseOnly | ScenarioKind::EndEffectorOnly => {
            let axis = part_centroid(&ee_ids) - part_centroid(&base_ids);
            (axis.norm() > 1e-6).then(|| axis.normalize())
        }
        _ => None,
    };
    let jitter = match scenario.kind {
        ScenarioKind::RobotInAndOut => 0.2,
        _ => 0.05,
    };
    let margin = scenario.border_margin_px();

    let mut cam_rng = stream(scenario.seed, 1);
    let jitter_dist = Normal::new(0.0, jitter).expect("positive std");
    let mut found = None;
    for attempt in 1..=scenario.max_attempts {
        let target = aim + Vector3::from_fn(|_, _| jitter_dist.sample(&mut cam_rng));
        let dist = cam_rng.random_range(scenario.distance_range[0]..=scenario.distance_range[1]);
        let az = cam_rng.random_range(0.0..std::f64::consts::TAU);
        let el: f64 = cam_rng.random_range(-0.15..0.9);
        let mut dir = Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
        if let Some(axis) = avoid_axis {
            let perp = dir - axis * axis.dot(&dir);
            if perp.norm() < 1e-3 || perp.z < -0.3 * perp.norm() {
                continue;
            }
            dir = perp.normalize();
        }
        let eye = target + dir * dist;
        let Ok(pose) = PoseSE3::look_at(&eye, &target, &Vector3::z()) else {
            continue;
        };
        let all_are = |ids: &[KeypointId], want: Placement| {
            points.iter().all(|m| {
                ids.iter()
                    .all(|id| placement(k, &pose, &m[id], margin) == want)
            })
        };
        let ok = match scenario.kind {
            ScenarioKind::RobotInView => {
                let ids: Vec<KeypointId> = layout.entries().iter().map(|e| e.keypoint_id).collect();
                all_are(&ids, Placement::Inside)
            }
            ScenarioKind::BaseOnly => {
                all_are(&base_ids, Placement::Inside) && all_are(&ee_ids, Placement::Outside)
            }
            ScenarioKind::EndEffectorOnly => {
                all_are(&ee_ids, Placement::Inside) && all_are(&base_ids, Placement::Outside)
            }
            ScenarioKind::RobotInAndOut => {
                let ee_seen: Vec<bool> = points
                    .iter()
                    .map(|m| {
                        ee_ids
                            .iter()
                            .filter(|id| placement(k, &pose, &m[id], margin) == Placement::Inside)
                            .count()
                            >= crate::pnp::MIN_CORRESPONDENCES
                    })
                    .collect();
                ee_seen.iter().any(|&v| v) && ee_seen.iter().any(|&v| !v)
            }
        };
        if ok {
            found = Some((pose, attempt));
            break;
        }
    }
    let (gt_pose, attempts) = found.ok_or_else(|| {
        Error::Generation(format!(
            "no camera pose satisfied {:?} within {} attempts",
            scenario.kind, scenario.max_attempts
        ))
    })?;

    let model = HeatmapModel::new(scenario.sigma)?;
    let noise_amp = scenario.heatmap_noise * model.ideal_peak();
    let pixel_noise = Normal::new(0.0, scenario.pixel_noise_sigma)
        .map_err(|e| Error::Parameter(e.to_string()))?;
    let mut noise_rng = stream(scenario.seed, 2);
    let mut emb_rng = stream(scenario.seed, 3);
    let embedder = scenario
        .embedding_seed
        .map(SyntheticEmbeddingModel::bundled);
    let s = stride as f64;

    let mut frames = Vec::with_capacity(scenario.n_frames);
    let mut true_pixels = Vec::with_capacity(scenario.n_frames);
    let mut visibility = Vec::with_capacity(scenario.n_frames);
    for (i, (q, pts)) in trajectory.iter().zip(&points).enumerate() {
        let mut truth = BTreeMap::new();
        let mut heatmaps = BTreeMap::new();
        for (&id, p) in pts {
            let px = project(k, &gt_pose, p).ok();
            if let Some(px) = px {
                truth.insert(id, px);
            }
            let on_frame = px.filter(|px| k.contains(px, 0.0));
            // Draw every random number unconditionally so streams stay aligned across frames.
            let du = pixel_noise.sample(&mut noise_rng);
            let dv = pixel_noise.sample(&mut noise_rng);
            let dropped = noise_rng.random_bool(scenario.dropout_prob);
            let hm = match on_frame {
                Some(px) if !dropped => {
                    let clean = encode_gaussian((px.x + du) / s, (px.y + dv) / s, &model, hw, hh)?;
                    let values = clean
                        .values()
                        .iter()
                        .map(|&v| {
                            let n = if noise_amp > 0.0 {
                                noise_rng.random_range(0.0..noise_amp)
                            } else {
                                0.0
                            };
                            (v + n) as f32 as f64
                        })
                        .collect();
                    Heatmap::new(hw, hh, values)?
                }
                _ => Heatmap::zeros(hw, hh)?,
            };
            heatmaps.insert(id, hm);
        }
        let report = oracle_visibility(chain, layout, q, &gt_pose, k, margin)?;
        let embedding = embedder.as_ref().map(|m| {
            let vis: BTreeMap<PartLabel, bool> = m
                .parts()
                .into_iter()
                .map(|p| {
                    let v = report.is_visible(&p);
                    (p, v)
                })
                .collect();
            m.embed(&vis, &mut emb_rng)
        });
        frames.push(FrameObservation {
            frame_index: i,
            q: q.clone(),
            heatmaps,
            detections: None,
            embedding: embedding.map(|e: DVector<f64>| e),
        });
        true_pixels.push(truth);
        visibility.push(report);
    }

    Ok(SyntheticEpisode {
        episode: Episode {
            robot: RobotSpec::new("synthetic", chain, layout),
            intrinsics: *k,
            heatmap_stride: stride,
            sigma: scenario.sigma,
            frames,
            ground_truth: Some(gt_pose),
            scenario: Some(scenario.clone()),
        },
        true_pixels,
        visibility,
        attempts,
    })
}

/// Default camera for synthetic scenes: 640×480, 600 px focal length, centred principal point.
pub fn default_intrinsics() -> CameraIntrinsics<f64> {
    CameraIntrinsics {
        fx: 600.0,
        fy: 600.0,
        cx: 320.0,
        cy: 240.0,
        width: 640,
        height: 480,
    }
}
