//! Shared test support. The oracles read only plain library data and never call its
//! numeric routines; the case generators at the end drive the code under test.
#![allow(dead_code)]

use std::collections::BTreeMap;

use camrobot::camera::CameraIntrinsics;
use camrobot::heatmap::DecodedKeypoint;
use camrobot::kinematics::{panda_like, JointType, KeypointId, KinematicChain, PartLabel};
use camrobot::pipeline::{select_keypoints, SelectionConfig};
use camrobot::se3::PoseSE3;
use camrobot::visibility::{LabeledEmbedding, PartVisibility, VisibilityReport};
use nalgebra::{DMatrix, DVector, Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Standard DH link transform written out element by element.
pub fn dh_matrix(a: f64, d: f64, alpha: f64, theta: f64) -> Matrix4<f64> {
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = alpha.sin_cos();
    Matrix4::new(
        ct,
        -st * ca,
        st * sa,
        a * ct, //
        st,
        ct * ca,
        -ct * sa,
        a * st, //
        0.0,
        sa,
        ca,
        d, //
        0.0,
        0.0,
        0.0,
        1.0,
    )
}

/// Link frames as a running product of homogeneous DH matrices.
pub fn fk_homogeneous(chain: &KinematicChain<f64>, q: &[f64]) -> Vec<Matrix4<f64>> {
    let mut angles = q.iter();
    let mut m = Matrix4::identity();
    chain
        .links()
        .iter()
        .map(|l| {
            let qi = match l.joint_type {
                JointType::Revolute => *angles.next().unwrap(),
                JointType::Fixed => 0.0,
            };
            m *= dh_matrix(l.dh_a, l.dh_d, l.dh_alpha, qi + l.theta_offset);
            m
        })
        .collect()
}

/// Pinhole projection through the explicit 3×4 matrix `K [R | t]`.
pub fn project(k: &CameraIntrinsics<f64>, pose: &PoseSE3<f64>, p: &Vector3<f64>) -> (f64, f64) {
    let km = nalgebra::Matrix3::new(k.fx, 0.0, k.cx, 0.0, k.fy, k.cy, 0.0, 0.0, 1.0);
    let mut rt = nalgebra::Matrix3x4::zeros();
    rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&pose.rotation);
    rt.set_column(3, &pose.translation);
    let h = km * rt * p.push(1.0);
    (h.x / h.z, h.y / h.z)
}

/// ADD by direct summation over homogeneous coordinates.
pub fn add(est: &PoseSE3<f64>, gt: &PoseSE3<f64>, points: &[Vector3<f64>]) -> f64 {
    let (me, mg) = (est.to_homogeneous(), gt.to_homogeneous());
    let mut total = 0.0;
    for p in points {
        let h = p.push(1.0);
        let d = me * h - mg * h;
        total += (d.x * d.x + d.y * d.y + d.z * d.z).sqrt();
    }
    total / points.len() as f64
}

/// Sub-pixel centre of a sampled Gaussian by exhaustive search on a 0.001 px grid: for
/// each axis, the candidate whose log-parabola best fits the five log-values through the
/// argmax in the least-squares sense (the offset term is solved in closed form).
pub fn grid_fit_centre(values: &[f64], width: usize, sigma: f64) -> (f64, f64) {
    let (imax, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let (mu, mv) = ((imax % width) as isize, (imax / width) as isize);
    let at = |u: isize, v: isize| values[v as usize * width + u as usize].ln();
    let fit = |samples: Vec<(f64, f64)>, centre: f64| {
        let mut best = (f64::INFINITY, centre);
        for step in -1000..=1000 {
            let c = centre + step as f64 * 0.001;
            let r: Vec<f64> = samples
                .iter()
                .map(|&(x, l)| l + (x - c) * (x - c) / (2.0 * sigma * sigma))
                .collect();
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            let sse: f64 = r.iter().map(|e| (e - mean) * (e - mean)).sum();
            if sse < best.0 {
                best = (sse, c);
            }
        }
        best.1
    };
    let row = (-2..=2)
        .map(|d| ((mu + d) as f64, at(mu + d, mv)))
        .collect();
    let col = (-2..=2)
        .map(|d| ((mv + d) as f64, at(mu, mv + d)))
        .collect();
    (fit(row, mu as f64), fit(col, mv as f64))
}

/// Per-part L2-regularised logistic regression by full-batch gradient descent; returns
/// held-out accuracy.
pub fn logistic_regression_accuracy(
    train: &[LabeledEmbedding<f64>],
    test: &[LabeledEmbedding<f64>],
) -> f64 {
    let mut parts: Vec<PartLabel> = train.iter().map(|s| s.part.clone()).collect();
    parts.sort();
    parts.dedup();
    let (mut correct, mut total) = (0, 0);
    for part in parts {
        let tr: Vec<_> = train.iter().filter(|s| s.part == part).collect();
        let d = tr[0].embedding.len();
        let mut w = DVector::<f64>::zeros(d + 1);
        for _ in 0..2000 {
            let mut g = DVector::zeros(d + 1);
            for s in &tr {
                let x = s.embedding.clone().insert_row(d, 1.0);
                let p = 1.0 / (1.0 + (-w.dot(&x)).exp());
                g += x * (p - if s.visible { 1.0 } else { 0.0 });
            }
            g /= tr.len() as f64;
            g += &w * 1e-3;
            w -= g * 0.5;
        }
        for s in test.iter().filter(|s| s.part == part) {
            let x = s.embedding.clone().insert_row(d, 1.0);
            total += 1;
            if (w.dot(&x) > 0.0) == s.visible {
                correct += 1;
            }
        }
    }
    correct as f64 / total as f64
}

/// `(W0 + scale·B·A)·x` with the dense update materialised.
pub fn lora_dense(
    w0: &DMatrix<f64>,
    b: &DMatrix<f64>,
    a: &DMatrix<f64>,
    scale: f64,
    x: &DVector<f64>,
) -> DVector<f64> {
    let mut w = w0.clone();
    for i in 0..w.nrows() {
        for j in 0..w.ncols() {
            let mut s = 0.0;
            for r in 0..a.nrows() {
                s += b[(i, r)] * a[(r, j)];
            }
            w[(i, j)] += scale * s;
        }
    }
    w * x
}

pub type Kept = Vec<(KeypointId, DecodedKeypoint<f64>)>;

/// A random frame's decodes and visibility, selected at two thresholds `lo ≤ hi`.
pub fn random_gating_case(seed: u64) -> (Kept, Kept, VisibilityReport, camrobot::Layout, bool) {
    let (_, layout) = panda_like();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let decoded: BTreeMap<KeypointId, DecodedKeypoint<f64>> = layout
        .entries()
        .iter()
        .filter(|_| rng.random_bool(0.9))
        .collect::<Vec<_>>()
        .into_iter()
        .map(|e| {
            let a = rng.random_range(0.0..0.01);
            let d = DecodedKeypoint {
                u: rng.random_range(0.0..640.0),
                v: rng.random_range(0.0..480.0),
                peak_activation: a,
                peak_location: (0, 0),
                valid: rng.random_bool(0.9),
            };
            (e.keypoint_id, d)
        })
        .collect();
    let report = VisibilityReport {
        parts: [PartLabel::Base, PartLabel::EndEffector]
            .into_iter()
            .filter_map(|p| {
                rng.random_bool(0.9).then(|| {
                    (
                        p,
                        PartVisibility::from_probability(rng.random_range(0.0..1.0)),
                    )
                })
            })
            .collect(),
    };
    let gate = rng.random_bool(0.8);
    let (t1, t2): (f64, f64) = (rng.random_range(0.0..0.01), rng.random_range(0.0..0.01));
    let cfg = |t| SelectionConfig {
        activation_threshold: t,
        use_visibility_gate: gate,
        ..SelectionConfig::for_sigma(6.0).unwrap()
    };
    let lo = select_keypoints(&decoded, &report, &layout, &cfg(t1.min(t2)));
    let hi = select_keypoints(&decoded, &report, &layout, &cfg(t1.max(t2)));
    (lo, hi, report, layout, gate)
}
