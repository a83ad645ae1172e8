//! Monte-Carlo comparison of single-frame and batch estimation on synthetic episodes.

use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::eval::{add_metric, default_eval_points, AddResult};
use crate::kinematics::{KeypointLayout, KinematicChain};
use crate::pipeline::{
    estimate_episode, estimate_frame, AllVisibleDetector, EstimatorConfig, OracleDetector,
    PartDetector,
};
use crate::pnp::PnpOptions;
use crate::synth::{generate_episode, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    /// Every part reported visible; off-frame keypoints are removed by the activation threshold.
    #[default]
    All,
    /// Geometric visibility from the ground-truth camera pose.
    Oracle,
    /// LoRA prompt-pair classifier over per-frame embeddings.
    Lora,
}

/// Outcome of one scenario over many seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleVsBatch {
    pub single: AddResult,
    pub batch: AddResult,
    /// Seeds in which the batch ADD is at most the median single-frame ADD.
    pub batch_wins: usize,
    /// Seeds that produced an episode and at least one single-frame estimate.
    pub seeds_compared: usize,
    pub seeds_requested: usize,
    pub generation_failures: usize,
}

impl SingleVsBatch {
    pub fn win_rate(&self) -> f64 {
        if self.seeds_compared == 0 {
            0.0
        } else {
            self.batch_wins as f64 / self.seeds_compared as f64
        }
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Runs `seeds` episodes with `template.seed = root_seed + i` and scores both estimators
/// with ADD over the layout's zero-configuration keypoints.
#[allow(clippy::too_many_arguments)]
pub fn single_vs_batch(
    chain: &KinematicChain<f64>,
    layout: &KeypointLayout<f64>,
    k: &CameraIntrinsics<f64>,
    template: &ScenarioSpec,
    seeds: usize,
    root_seed: u64,
    detector: DetectorKind,
    estimator: &EstimatorConfig,
    threshold_max: f64,
    resolution: f64,
) -> Result<SingleVsBatch> {
    if detector == DetectorKind::Lora {
        return Err(Error::Parameter(
            "the Monte-Carlo report supports the all and oracle detectors".into(),
        ));
    }
    let points = default_eval_points(chain, layout)?;
    let options = PnpOptions::default();
    let all = AllVisibleDetector {
        parts: layout.parts(),
    };
    let (mut single, mut single_fail, mut batch, mut batch_fail) = (Vec::new(), 0, Vec::new(), 0);
    let (mut wins, mut compared, mut gen_fail) = (0, 0, 0);
    for i in 0..seeds {
        let spec = ScenarioSpec {
            seed: root_seed.wrapping_add(i as u64),
            ..template.clone()
        };
        let ep = match generate_episode(chain, layout, k, &spec) {
            Ok(ep) => ep.episode,
            Err(Error::Generation(msg)) => {
                log::warn!("seed {}: {msg}", spec.seed);
                gen_fail += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let gt = ep
            .ground_truth
            .expect("synthetic episodes carry ground truth");
        let oracle = OracleDetector {
            chain,
            layout,
            pose: gt,
            intrinsics: *k,
            margin_px: spec.border_margin_px(),
        };
        let det: &dyn PartDetector<f64> = match detector {
            DetectorKind::Oracle => &oracle,
            _ => &all,
        };
        let (decode, sel) = estimator.resolve(ep.heatmap_stride as f64, ep.sigma)?;
        let mut seed_single = Vec::new();
        for f in &ep.frames {
            match estimate_frame(f, chain, layout, k, det, &decode, &sel, &options) {
                Ok(e) => seed_single.push(add_metric(&e.pose, &gt, &points)?),
                Err(_) => single_fail += 1,
            }
        }
        let seed_batch =
            match estimate_episode(&ep.frames, chain, layout, k, det, &decode, &sel, &options) {
                Ok(e) => Some(add_metric(&e.pose, &gt, &points)?),
                Err(_) => {
                    batch_fail += 1;
                    None
                }
            };
        if !seed_single.is_empty() {
            compared += 1;
            if seed_batch.is_some_and(|b| b <= median(&seed_single)) {
                wins += 1;
            }
        }
        single.extend(seed_single);
        batch.extend(seed_batch);
    }
    Ok(SingleVsBatch {
        single: AddResult::with_failures(
            single,
            single_fail,
            points.len(),
            threshold_max,
            resolution,
        )?,
        batch: AddResult::with_failures(
            batch,
            batch_fail,
            points.len(),
            threshold_max,
            resolution,
        )?,
        batch_wins: wins,
        seeds_compared: compared,
        seeds_requested: seeds,
        generation_failures: gen_fail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
