//! Perspective-n-Point: camera-to-base pose from 2D–3D keypoint correspondences.
//!
//! The solver minimizes the weighted sum of squared reprojection residuals with
//! Levenberg–Marquardt. Pose updates are left-multiplied axis-angle increments,
//! `R ← exp([ω]×)·R`, `t ← exp([ω]×)·t + v`, so the Jacobian of a camera-frame point
//! `p_c` with respect to `(ω, v)` is `[−[p_c]× | I]`.
//!
//! Without a caller-supplied initial pose, candidates come from a normalized DLT (for
//! non-planar sets of at least six points) and from a homography on the best-fit plane
//! of the points, plus axis-aligned coarse starts when fewer than six non-planar points
//! are available; each is refined and the lowest-cost result wins.

use nalgebra::{
    DMatrix, DVector, Matrix2x3, Matrix3, Matrix3x6, Matrix6, Vector2, Vector3, Vector6,
};
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::kinematics::{keypoints_3d, JointState, KeypointId, KeypointLayout, KinematicChain};
use crate::scalar::Real;
use crate::se3::{nearest_rotation, skew, so3_exp, PoseSE3};

/// Minimum number of correspondences for a pose solve.
pub const MIN_CORRESPONDENCES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence<T: Real> {
    pub keypoint_id: KeypointId,
    /// Base-frame position, meters.
    pub point3d: Vector3<T>,
    /// Observed pixel.
    pub point2d: Vector2<T>,
    pub weight: T,
}

impl<T: Real> Correspondence<T> {
    pub fn new(keypoint_id: KeypointId, point3d: Vector3<T>, point2d: Vector2<T>) -> Self {
        Self {
            keypoint_id,
            point3d,
            point2d,
            weight: T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpOptions<T: Real> {
    pub max_iterations: usize,
    /// Converged once an accepted step has norm below this.
    pub step_tolerance: T,
    pub initial_damping: T,
    /// Residual bound (pixels) for counting inliers in the result.
    pub inlier_threshold_px: T,
}

impl<T: Real> Default for PnpOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            step_tolerance: T::lit(1e-10),
            initial_damping: T::lit(1e-3),
            inlier_threshold_px: T::lit(3.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpSolution<T: Real> {
    pub pose: PoseSE3<T>,
    /// Weighted RMS reprojection error, pixels.
    pub rms_reprojection: T,
    pub inlier_count: usize,
    pub iterations: usize,
    /// Weighted squared-residual sum at the initialization the result was refined from.
    pub initial_cost: T,
    pub final_cost: T,
}

/// Applies a left-multiplied increment `(ω, v)` to `pose`.
pub fn apply_increment<T: Real>(pose: &PoseSE3<T>, delta: &Vector6<T>) -> PoseSE3<T> {
    let r = so3_exp(&delta.fixed_rows::<3>(0).into_owned());
    PoseSE3::from_parts(
        r * pose.rotation,
        r * pose.translation + delta.fixed_rows::<3>(3).into_owned(),
    )
}

/// Weighted residuals `√w·(project(p) − observed)`, two per correspondence.
pub fn reprojection_residuals<T: Real>(
    corrs: &[Correspondence<T>],
    k: &CameraIntrinsics<T>,
    pose: &PoseSE3<T>,
) -> Result<DVector<T>> {
    let mut r = DVector::zeros(2 * corrs.len());
    for (i, c) in corrs.iter().enumerate() {
        let px = k.project_camera_point(&pose.transform_point(&c.point3d))?;
        let e = (px - c.point2d) * c.weight.sqrt();
        r[2 * i] = e.x;
        r[2 * i + 1] = e.y;
    }
    Ok(r)
}

/// Residuals and their analytic Jacobian with respect to the increment `(ω, v)` at zero.
pub fn residual_jacobian<T: Real>(
    corrs: &[Correspondence<T>],
    k: &CameraIntrinsics<T>,
    pose: &PoseSE3<T>,
) -> Result<(DVector<T>, DMatrix<T>)> {
    let n = corrs.len();
    let mut r = DVector::zeros(2 * n);
    let mut j = DMatrix::zeros(2 * n, 6);
    for (i, c) in corrs.iter().enumerate() {
        let pc = pose.transform_point(&c.point3d);
        let px = k.project_camera_point(&pc)?;
        let sw = c.weight.sqrt();
        let e = (px - c.point2d) * sw;
        r[2 * i] = e.x;
        r[2 * i + 1] = e.y;
        let iz = T::one() / pc.z;
        let iz2 = iz * iz;
        let dproj = Matrix2x3::new(
            k.fx * iz,
            T::zero(),
            -k.fx * pc.x * iz2,
            T::zero(),
            k.fy * iz,
            -k.fy * pc.y * iz2,
        );
        let mut dpc = Matrix3x6::zeros();
        dpc.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-skew(&pc)));
        dpc.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&Matrix3::identity());
        let block = dproj * dpc * sw;
        j.fixed_view_mut::<2, 6>(2 * i, 0).copy_from(&block);
    }
    Ok((r, j))
}

fn cost<T: Real>(
    corrs: &[Correspondence<T>],
    k: &CameraIntrinsics<T>,
    pose: &PoseSE3<T>,
) -> Option<T> {
    let mut total = T::zero();
    for c in corrs {
        let pc = pose.transform_point(&c.point3d);
        let px = k.project_camera_point(&pc).ok()?;
        total += (px - c.point2d).norm_squared() * c.weight;
    }
    total.is_finite().then_some(total)
}

/// Checks counts and geometry; returns the positive-weight correspondences.
fn usable<T: Real>(corrs: &[Correspondence<T>]) -> Result<Vec<Correspondence<T>>> {
    if let Some(c) = corrs.iter().find(|c| {
        !(c.weight >= T::zero())
            || !c.weight.is_finite()
            || !c.point2d.iter().all(|v| v.is_finite())
            || !c.point3d.iter().all(|v| v.is_finite())
    }) {
        return Err(Error::Parameter(format!(
            "correspondence for keypoint {} has a negative weight or non-finite coordinates",
            c.keypoint_id
        )));
    }
    let kept: Vec<_> = corrs
        .iter()
        .copied()
        .filter(|c| c.weight > T::zero())
        .collect();
    if kept.len() < MIN_CORRESPONDENCES {
        return Err(Error::InsufficientCorrespondences {
            needed: MIN_CORRESPONDENCES,
            got: kept.len(),
        });
    }
    Ok(kept)
}

/// Principal axes of the point cloud: centroid, singular values (descending) and axes as rows.
fn principal_axes<T: Real>(points: &[Vector3<T>]) -> (Vector3<T>, Vector3<T>, Matrix3<T>) {
    let n = T::lit(points.len() as f64);
    let c = points.iter().fold(Vector3::zeros(), |a, p| a + p) / n;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p - c;
        scatter += d * d.transpose();
    }
    let eig = scatter.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite")
    });
    let sv = Vector3::from_fn(|i, _| eig.eigenvalues[order[i]].max(T::zero()).sqrt());
    let mut axes = Matrix3::zeros();
    for (row, &idx) in order.iter().enumerate() {
        axes.set_row(row, &eig.eigenvectors.column(idx).transpose());
    }
    // Right-handed basis.
    if axes.determinant() < T::zero() {
        let flipped = -axes.row(2);
        axes.set_row(2, &flipped);
    }
    (c, sv, axes)
}

const COLLINEAR_RATIO: f64 = 1e-9;
const PLANAR_RATIO: f64 = 1e-3;

/// Pose from the normalized direct linear transform; needs ≥ 6 non-planar points.
fn dlt_initialization<T: Real>(
    corrs: &[Correspondence<T>],
    k: &CameraIntrinsics<T>,
) -> Option<PoseSE3<T>> {
    let n = corrs.len();
    if n < 6 {
        return None;
    }
    let pts: Vec<Vector3<T>> = corrs.iter().map(|c| c.point3d).collect();
    let c = pts.iter().fold(Vector3::zeros(), |a, p| a + p) / T::lit(n as f64);
    let mean_dist = pts
        .iter()
        .map(|p| (p - c).norm())
        .fold(T::zero(), |a, b| a + b)
        / T::lit(n as f64);
    if mean_dist <= T::zero() {
        return None;
    }
    let s = T::lit(3f64.sqrt()) / mean_dist;
    let mut a = DMatrix::zeros(2 * n, 12);
    for (i, corr) in corrs.iter().enumerate() {
        let xn = k.normalize(&corr.point2d);
        let p = (corr.point3d - c) * s;
        let w = corr.weight.sqrt();
        let ph = [p.x, p.y, p.z, T::one()];
        for col in 0..4 {
            a[(2 * i, col)] = ph[col] * w;
            a[(2 * i, 8 + col)] = -xn.x * ph[col] * w;
            a[(2 * i + 1, 4 + col)] = ph[col] * w;
            a[(2 * i + 1, 8 + col)] = -xn.y * ph[col] * w;
        }
    }
    let p = smallest_right_singular_vector(a)?;
    let m = Matrix3::from_fn(|r, col| p[r * 4 + col]);
    let p4 = Vector3::new(p[3], p[7], p[11]);
    // Undo the 3D normalization: x ∝ s·M·X + (p4 − s·M·c).
    let mut m_total = m * s;
    let mut t_total = p4 - m * c * s;
    if m_total.determinant() < T::zero() {
        m_total = -m_total;
        t_total = -t_total;
    }
    let scale = m_total.singular_values().sum() / T::lit(3.0);
    if !(scale > T::zero()) {
        return None;
    }
    let rotation = nearest_rotation(&(m_total / scale));
    Some(PoseSE3::from_parts(rotation, t_total / scale))
}

/// Pose from a homography between the best-fit plane of the points and the image.
fn homography_initialization<T: Real>(
    corrs: &[Correspondence<T>],
    k: &CameraIntrinsics<T>,
) -> Option<PoseSE3<T>> {
    let pts: Vec<Vector3<T>> = corrs.iter().map(|c| c.point3d).collect();
    let (centroid, sv, axes) = principal_axes(&pts);
    if !(sv[0] > T::zero()) {
        return None;
    }
    let plane_scale = T::lit(2f64.sqrt()) / sv[0] * T::lit((corrs.len() as f64).sqrt());
    let n = corrs.len();
    let mut a = DMatrix::zeros(2 * n, 9);
    for (i, corr) in corrs.iter().enumerate() {
        let local = axes * (corr.point3d - centroid);
        let (pa, pb) = (local.x * plane_scale, local.y * plane_scale);
        let xn = k.normalize(&corr.point2d);
        let w = corr.weight.sqrt();
        let ph = [pa, pb, T::one()];
        for col in 0..3 {
            a[(2 * i, col)] = ph[col] * w;
            a[(2 * i, 6 + col)] = -xn.x * ph[col] * w;
            a[(2 * i + 1, 3 + col)] = ph[col] * w;
            a[(2 * i + 1, 6 + col)] = -xn.y * ph[col] * w;
        }
    }
    let h = smallest_right_singular_vector(a)?;
    let mut hm = Matrix3::from_fn(|r, col| h[r * 3 + col]);
    // Map back to unscaled plane coordinates.
    hm.column_mut(0).scale_mut(plane_scale);
    hm.column_mut(1).scale_mut(plane_scale);
    let h1 = hm.column(0).into_owned();
    let h2 = hm.column(1).into_owned();
    let h3 = hm.column(2).into_owned();
    let norm = (h1.norm() + h2.norm()) * T::lit(0.5);
    if !(norm > T::zero()) {
        return None;
    }
    let mut lambda = T::one() / norm;
    // The plane centroid must sit in front of the camera.
    if h3.z * lambda < T::zero() {
        lambda = -lambda;
    }
    let r1 = h1 * lambda;
    let r2 = h2 * lambda;
    let r3 = r1.cross(&r2);
    let rh = nearest_rotation(&Matrix3::from_columns(&[r1, r2, r3]));
    let th = h3 * lambda;
    let rotation = rh * axes;
    Some(PoseSE3::from_parts(rotation, th - rotation * centroid))
}

/// Coarse starts for small non-planar sets: the 24 axis-aligned rotations, each translated
/// so the point centroid lies on the ray through the mean observed pixel at a depth
/// matching the observed spread.
fn coarse_initializations<T: Real>(
    corrs: &[Correspondence<T>],
    k: &CameraIntrinsics<T>,
) -> Vec<PoseSE3<T>> {
    let n = T::lit(corrs.len() as f64);
    let c3 = corrs.iter().fold(Vector3::zeros(), |a, c| a + c.point3d) / n;
    let c2 = corrs
        .iter()
        .fold(Vector2::zeros(), |a, c| a + k.normalize(&c.point2d))
        / n;
    let spread3 = corrs
        .iter()
        .fold(T::zero(), |a, c| a + (c.point3d - c3).norm())
        / n;
    let spread2 = corrs
        .iter()
        .fold(T::zero(), |a, c| a + (k.normalize(&c.point2d) - c2).norm())
        / n;
    if !(spread2 > T::zero()) {
        return Vec::new();
    }
    let depth = spread3 / spread2;
    let centre = Vector3::new(c2.x * depth, c2.y * depth, depth);
    let mut out = Vec::with_capacity(24);
    let axes = [
        Vector3::x(),
        Vector3::y(),
        Vector3::z(),
        -Vector3::x(),
        -Vector3::y(),
        -Vector3::z(),
    ];
    for a in &axes {
        for b in &axes {
            if a.dot(b) != T::zero() {
                continue;
            }
            let rotation =
                Matrix3::from_rows(&[a.transpose(), b.transpose(), a.cross(b).transpose()]);
            out.push(PoseSE3::from_parts(rotation, centre - rotation * c3));
        }
    }
    out
}

fn smallest_right_singular_vector<T: Real>(a: DMatrix<T>) -> Option<DVector<T>> {
    let cols = a.ncols();
    // The normal matrix keeps the SVD square; rows ≥ cols is not required.
    let ata = a.transpose() * &a;
    let eig = ata.symmetric_eigen();
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.partial_cmp(y.1).expect("finite"))?;
    let v = eig.eigenvectors.column(idx).into_owned();
    (v.len() == cols && v.iter().all(|x| x.is_finite())).then_some(v)
}

/// Levenberg–Marquardt refinement from `init`.
fn refine<T: Real>(
    corrs: &[Correspondence<T>],
    k: &CameraIntrinsics<T>,
    init: &PoseSE3<T>,
    opts: &PnpOptions<T>,
) -> Result<PnpSolution<T>> {
    let initial_cost = match cost(corrs, k, init) {
        Some(c) => c,
        None => {
            let depth = corrs
                .iter()
                .map(|c| init.transform_point(&c.point3d).z)
                .fold(T::max_value().expect("bounded"), |a, b| a.min(b));
            return Err(Error::BehindCamera {
                depth: depth.as_f64(),
            });
        }
    };
    let mut pose = *init;
    let mut current = initial_cost;
    let mut lambda = opts.initial_damping;
    let mut iterations = 0;
    let lambda_max = T::lit(1e16);
    while iterations < opts.max_iterations {
        iterations += 1;
        let (r, j) = residual_jacobian(corrs, k, &pose)?;
        let jt = j.transpose();
        let h: Matrix6<T> = (&jt * &j).fixed_view::<6, 6>(0, 0).into_owned();
        let g: Vector6<T> = (&jt * &r).fixed_rows::<6>(0).into_owned();
        let mut accepted = false;
        let mut step_norm = T::zero();
        while lambda <= lambda_max {
            let mut damped = h;
            for d in 0..6 {
                damped[(d, d)] += lambda * (h[(d, d)] + T::lit(1e-12));
            }
            let Some(delta) = damped.cholesky().map(|ch| ch.solve(&(-g))) else {
                lambda *= T::lit(10.0);
                continue;
            };
            step_norm = delta.norm();
            let candidate = apply_increment(&pose, &delta);
            match cost(corrs, k, &candidate) {
                Some(c) if c < current => {
                    pose = candidate;
                    current = c;
                    lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
                    accepted = true;
                    break;
                }
                _ => {
                    lambda *= T::lit(10.0);
                    if step_norm < opts.step_tolerance {
                        break;
                    }
                }
            }
        }
        if !accepted || step_norm < opts.step_tolerance || current == T::zero() {
            break;
        }
    }
    if !current.is_finite()
        || !pose
            .rotation
            .iter()
            .chain(pose.translation.iter())
            .all(|v| v.is_finite())
    {
        return Err(Error::NonConvergence {
            iterations,
            rotation: pose.rotation_row_major(),
            translation: pose.translation_array(),
        });
    }
    // Re-orthonormalize accumulated rounding.
    pose.rotation = nearest_rotation(&pose.rotation);
    let final_cost = cost(corrs, k, &pose).unwrap_or(current).min(current);
    let weight_sum = corrs.iter().fold(T::zero(), |a, c| a + c.weight);
    let thr2 = opts.inlier_threshold_px * opts.inlier_threshold_px;
    let inlier_count = corrs
        .iter()
        .filter(|c| {
            k.project_camera_point(&pose.transform_point(&c.point3d))
                .map(|px| (px - c.point2d).norm_squared() <= thr2)
                .unwrap_or(false)
        })
        .count();
    Ok(PnpSolution {
        pose,
        rms_reprojection: (final_cost / weight_sum).sqrt(),
        inlier_count,
        iterations,
        initial_cost,
        final_cost,
    })
}

/// Solves PnP with default options.
pub fn solve_pnp<T: Real>(
    corrs: &[Correspondence<T>],
    k: &CameraIntrinsics<T>,
    init: Option<&PoseSE3<T>>,
) -> Result<PnpSolution<T>> {
    solve_pnp_with(corrs, k, init, &PnpOptions::default())
}

pub fn solve_pnp_with<T: Real>(
    corrs: &[Correspondence<T>],
    k: &CameraIntrinsics<T>,
    init: Option<&PoseSE3<T>>,
    opts: &PnpOptions<T>,
) -> Result<PnpSolution<T>> {
    let corrs = usable(corrs)?;
    let pts: Vec<Vector3<T>> = corrs.iter().map(|c| c.point3d).collect();
    let (_, sv, _) = principal_axes(&pts);
    if !(sv[0] > T::zero()) || sv[1] / sv[0] < T::lit(COLLINEAR_RATIO) {
        return Err(Error::Degenerate(
            "3D points are collinear or coincident".into(),
        ));
    }
    if let Some(init) = init {
        return refine(&corrs, k, init, opts);
    }
    let mut candidates = Vec::new();
    if sv[2] / sv[0] >= T::lit(PLANAR_RATIO) {
        candidates.extend(dlt_initialization(&corrs, k));
    }
    candidates.extend(homography_initialization(&corrs, k));
    if corrs.len() < 6 && sv[2] / sv[0] >= T::lit(PLANAR_RATIO) {
        candidates.extend(coarse_initializations(&corrs, k));
    }
    let mut best: Option<PnpSolution<T>> = None;
    let mut last_err = None;
    for cand in candidates {
        match refine(&corrs, k, &cand, opts) {
            Ok(sol) => {
                if best.as_ref().is_none_or(|b| sol.final_cost < b.final_cost) {
                    best = Some(sol);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::Degenerate("no initialization could be computed".into()))
    })
}

/// How detection confidences enter the pose solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Every surviving correspondence has weight 1.
    #[default]
    None,
    /// Weight equals detection confidence.
    Confidence,
}

/// 2D detection of a keypoint in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection<T: Real> {
    pub keypoint_id: KeypointId,
    pub u: T,
    pub v: T,
    pub confidence: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchFrame<T: Real> {
    pub q: JointState<T>,
    pub detections: Vec<Detection<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchConfig<T: Real> {
    /// Detections below this confidence are dropped.
    pub min_confidence: T,
    pub weighting: Weighting,
    pub options: PnpOptions<T>,
}

impl<T: Real> Default for BatchConfig<T> {
    fn default() -> Self {
        Self {
            min_confidence: T::zero(),
            weighting: Weighting::None,
            options: PnpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSolution<T: Real> {
    pub pose: PoseSE3<T>,
    pub rms_reprojection: T,
    /// RMS reprojection error per input frame at the pooled pose; `None` if the frame
    /// contributed no correspondences.
    pub per_frame_rms: Vec<Option<T>>,
    pub correspondences_used: usize,
}

/// Pools correspondences from every frame into one solve; camera and base are assumed
/// fixed across the frames.
pub fn batch_solve<T: Real>(
    frames: &[BatchFrame<T>],
    chain: &KinematicChain<T>,
    layout: &KeypointLayout<T>,
    k: &CameraIntrinsics<T>,
    config: &BatchConfig<T>,
) -> Result<BatchSolution<T>> {
    if frames.is_empty() {
        return Err(Error::InsufficientCorrespondences {
            needed: MIN_CORRESPONDENCES,
            got: 0,
        });
    }
    let mut pooled: Vec<(usize, Correspondence<T>)> = Vec::new();
    for (fi, frame) in frames.iter().enumerate() {
        let points = keypoints_3d(chain, layout, &frame.q)?;
        for det in frame
            .detections
            .iter()
            .filter(|d| d.confidence >= config.min_confidence)
        {
            let point3d = *points.get(&det.keypoint_id).ok_or_else(|| {
                Error::Layout(format!(
                    "detection references unknown keypoint {}",
                    det.keypoint_id
                ))
            })?;
            let weight = match config.weighting {
                Weighting::None => T::one(),
                Weighting::Confidence => det.confidence,
            };
            pooled.push((
                fi,
                Correspondence {
                    keypoint_id: det.keypoint_id,
                    point3d,
                    point2d: Vector2::new(det.u, det.v),
                    weight,
                },
            ));
        }
    }
    pooled.sort_by_key(|(fi, c)| (*fi, c.keypoint_id));
    let corrs: Vec<Correspondence<T>> = pooled.iter().map(|(_, c)| *c).collect();
    let solution = solve_pnp_with(&corrs, k, None, &config.options)?;

    let mut per_frame_rms = vec![None; frames.len()];
    for (fi, slot) in per_frame_rms.iter_mut().enumerate() {
        let frame_corrs: Vec<_> = pooled
            .iter()
            .filter(|(f, c)| *f == fi && c.weight > T::zero())
            .map(|(_, c)| *c)
            .collect();
        if frame_corrs.is_empty() {
            continue;
        }
        if let Some(c) = cost(&frame_corrs, k, &solution.pose) {
            let w = frame_corrs.iter().fold(T::zero(), |a, c| a + c.weight);
            *slot = Some((c / w).sqrt());
        }
    }
    Ok(BatchSolution {
        pose: solution.pose,
        rms_reprojection: solution.rms_reprojection,
        per_frame_rms,
        correspondences_used: corrs.iter().filter(|c| c.weight > T::zero()).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::project;
    use crate::kinematics::{panda_like, panda_ready_pose};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(600.0, 600.0, 320.0, 240.0, 640, 480).unwrap()
    }

    fn random_pose(rng: &mut ChaCha8Rng) -> PoseSE3<f64> {
        PoseSE3::from_axis_angle(
            Vector3::from_fn(|_, _| rng.random_range(-1.5..1.5)),
            Vector3::new(
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
                rng.random_range(1.5..3.0),
            ),
        )
    }

    fn synth(rng: &mut ChaCha8Rng, pose: &PoseSE3<f64>, n: usize) -> Vec<Correspondence<f64>> {
        (0..n)
            .map(|i| {
                let p = Vector3::from_fn(|_, _| rng.random_range(-0.4..0.4));
                Correspondence::new(i, p, project(&k(), pose, &p).unwrap())
            })
            .collect()
    }

    #[test]
    fn identity_init_is_already_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pose = PoseSE3::from_translation(Vector3::new(0.0, 0.0, 2.0));
        let corrs = synth(&mut rng, &pose, 12);
        let sol = solve_pnp(&corrs, &k(), Some(&pose)).unwrap();
        assert!(sol.rms_reprojection < 1e-9);
        assert!(sol.pose.rotation_angle_to(&pose) < 1e-12);
    }

    #[test]
    fn too_few_and_collinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pose = random_pose(&mut rng);
        let corrs = synth(&mut rng, &pose, 3);
        assert_eq!(
            solve_pnp(&corrs, &k(), None).unwrap_err(),
            Error::InsufficientCorrespondences { needed: 4, got: 3 }
        );
        let line: Vec<_> = (0..6)
            .map(|i| {
                let p = Vector3::new(0.1 * i as f64, 0.05 * i as f64, 0.0);
                Correspondence::new(i, p, project(&k(), &pose, &p).unwrap())
            })
            .collect();
        assert!(matches!(
            solve_pnp(&line, &k(), None),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn zero_weights_do_not_count_or_change_result() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pose = random_pose(&mut rng);
        let mut corrs = synth(&mut rng, &pose, 8);
        for c in corrs.iter_mut() {
            c.point2d += Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let base = solve_pnp(&corrs, &k(), None).unwrap();
        let mut with_junk = corrs.clone();
        for i in 0..4 {
            with_junk.insert(
                2 * i,
                Correspondence {
                    keypoint_id: 100 + i,
                    point3d: Vector3::new(5.0, -3.0, 1.0),
                    point2d: Vector2::new(0.0, 0.0),
                    weight: 0.0,
                },
            );
        }
        let other = solve_pnp(&with_junk, &k(), None).unwrap();
        assert_eq!(base.pose, other.pose);
        assert_eq!(base.rms_reprojection, other.rms_reprojection);

        let mut few = synth(&mut rng, &pose, 4);
        few[0].weight = 0.0;
        assert!(matches!(
            solve_pnp(&few, &k(), None),
            Err(Error::InsufficientCorrespondences { got: 3, .. })
        ));
    }

    #[test]
    fn planar_points_use_homography_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let pose = random_pose(&mut rng);
            let corrs: Vec<_> = (0..8)
                .map(|i| {
                    let p = Vector3::new(
                        rng.random_range(-0.4..0.4),
                        rng.random_range(-0.4..0.4),
                        0.0,
                    );
                    Correspondence::new(i, p, project(&k(), &pose, &p).unwrap())
                })
                .collect();
            let sol = solve_pnp(&corrs, &k(), None).unwrap();
            assert!(sol.pose.rotation_angle_to(&pose) < 1e-6);
            assert!(sol.pose.translation_distance_to(&pose) < 1e-6);
        }
    }

    #[test]
    fn four_and_five_point_minimal_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut ok = 0;
        for _ in 0..20 {
            let pose = random_pose(&mut rng);
            let corrs = synth(&mut rng, &pose, 5);
            if let Ok(sol) = solve_pnp(&corrs, &k(), None) {
                if sol.pose.translation_distance_to(&pose) < 1e-6 {
                    ok += 1;
                }
            }
        }
        // Five generic points have a unique solution but only a rough initialization.
        assert!(ok >= 16, "{ok}/20");
    }

    #[test]
    fn behind_camera_init_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pose = random_pose(&mut rng);
        let corrs = synth(&mut rng, &pose, 6);
        let bad = PoseSE3::from_translation(Vector3::new(0.0, 0.0, -5.0));
        assert!(matches!(
            solve_pnp(&corrs, &k(), Some(&bad)),
            Err(Error::BehindCamera { .. })
        ));
    }

    #[test]
    fn batch_single_frame_matches_direct_solve() {
        let (chain, layout) = panda_like();
        let q = panda_ready_pose();
        let pose = PoseSE3::look_at(
            &Vector3::new(1.6, 0.4, 0.8),
            &Vector3::new(0.3, 0.0, 0.4),
            &Vector3::z(),
        )
        .unwrap();
        let pts = keypoints_3d(&chain, &layout, &q).unwrap();
        let dets: Vec<_> = pts
            .iter()
            .map(|(&id, p)| {
                let px = project(&k(), &pose, p).unwrap();
                Detection {
                    keypoint_id: id,
                    u: px.x,
                    v: px.y,
                    confidence: 1.0,
                }
            })
            .collect();
        let corrs: Vec<_> = pts
            .iter()
            .map(|(&id, p)| Correspondence::new(id, *p, project(&k(), &pose, p).unwrap()))
            .collect();
        let direct = solve_pnp(&corrs, &k(), None).unwrap();
        let batch = batch_solve(
            &[BatchFrame {
                q,
                detections: dets,
            }],
            &chain,
            &layout,
            &k(),
            &BatchConfig::default(),
        )
        .unwrap();
        assert_eq!(batch.pose, direct.pose);
        assert_eq!(batch.correspondences_used, 12);
        assert!(batch.per_frame_rms[0].unwrap() < 1e-9);
    }

    #[test]
    fn batch_rejects_empty_and_unknown_keypoints() {
        let (chain, layout) = panda_like();
        let err = batch_solve(&[], &chain, &layout, &k(), &BatchConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientCorrespondences { .. }));
        let frame = BatchFrame {
            q: panda_ready_pose(),
            detections: vec![Detection {
                keypoint_id: 99,
                u: 1.0,
                v: 1.0,
                confidence: 1.0,
            }],
        };
        assert!(matches!(
            batch_solve(&[frame], &chain, &layout, &k(), &BatchConfig::default()),
            Err(Error::Layout(_))
        ));
    }
}
