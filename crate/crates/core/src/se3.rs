//! Rigid transforms in 3D.
//!
//! A [`PoseSE3`] maps points from a source frame into a target frame:
//! `p_target = R * p_source + t`. The camera-to-robot transform estimated by the
//! solver maps robot-base coordinates into the camera frame.

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Rigid transform with an explicit rotation matrix and translation vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSE3<T: Real> {
    pub rotation: Matrix3<T>,
    pub translation: Vector3<T>,
}

impl<T: Real> Default for PoseSE3<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> PoseSE3<T> {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose and checks that `rotation` is a proper rotation.
    pub fn new(rotation: Matrix3<T>, translation: Vector3<T>) -> Result<Self> {
        let pose = Self {
            rotation,
            translation,
        };
        if !pose.is_rigid(T::lit(1e-9)) {
            return Err(Error::Parameter(
                "rotation is not orthonormal with positive determinant".into(),
            ));
        }
        Ok(pose)
    }

    pub fn from_parts(rotation: Matrix3<T>, translation: Vector3<T>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<T>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Pose from an axis-angle rotation vector and a translation.
    pub fn from_axis_angle(omega: Vector3<T>, translation: Vector3<T>) -> Self {
        Self {
            rotation: so3_exp(&omega),
            translation,
        }
    }

    /// Row-major 3x4 matrix as in a `[R|t]` homogeneous transform.
    pub fn to_homogeneous(&self) -> Matrix4<T> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn from_homogeneous(m: &Matrix4<T>) -> Self {
        Self {
            rotation: m.fixed_view::<3, 3>(0, 0).into_owned(),
            translation: m.fixed_view::<3, 1>(0, 3).into_owned(),
        }
    }

    #[inline]
    pub fn transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// True when `‖RᵀR − I‖∞ < tol` and `|det R − 1| < tol`.
    pub fn is_rigid(&self, tol: T) -> bool {
        orthonormality_error(&self.rotation) < tol
            && (self.rotation.determinant() - T::one()).abs() < tol
    }

    /// Geodesic angle (radians) between the two rotations.
    pub fn rotation_angle_to(&self, other: &Self) -> T {
        rotation_angle(&(self.rotation.transpose() * other.rotation))
    }

    pub fn translation_distance_to(&self, other: &Self) -> T {
        (self.translation - other.translation).norm()
    }

    pub fn cast<U: Real>(&self) -> PoseSE3<U> {
        PoseSE3 {
            rotation: self.rotation.map(|x| U::lit(x.as_f64())),
            translation: self.translation.map(|x| U::lit(x.as_f64())),
        }
    }

    pub fn rotation_row_major(&self) -> [f64; 9] {
        let r = &self.rotation;
        std::array::from_fn(|i| r[(i / 3, i % 3)].as_f64())
    }

    pub fn translation_array(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.translation[i].as_f64())
    }

    pub fn from_arrays(rotation: &[f64; 9], translation: &[f64; 3]) -> Self {
        Self {
            rotation: Matrix3::from_fn(|r, c| T::lit(rotation[r * 3 + c])),
            translation: Vector3::from_fn(|r, _| T::lit(translation[r])),
        }
    }

    /// Camera pose (base → camera) for a camera at `eye` looking at `target`, both in base
    /// coordinates. The camera looks along its +z axis with +y pointing down in the image;
    /// `up` is the approximate world up direction.
    pub fn look_at(eye: &Vector3<T>, target: &Vector3<T>, up: &Vector3<T>) -> Result<Self> {
        let z = target - eye;
        let zn = z.norm();
        if zn <= T::default_epsilon() {
            return Err(Error::Parameter("eye and target coincide".into()));
        }
        let z = z / zn;
        let x = z.cross(up);
        let xn = x.norm();
        if xn <= T::lit(1e-9) {
            return Err(Error::Parameter("viewing direction parallel to up".into()));
        }
        let x = x / xn;
        let y = z.cross(&x);
        // Rows are the camera axes expressed in base coordinates.
        let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        let translation = -(rotation * eye);
        Ok(Self {
            rotation,
            translation,
        })
    }
}

/// Skew-symmetric cross-product matrix `[w]×`.
pub fn skew<T: Real>(w: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(
        T::zero(),
        -w.z,
        w.y,
        w.z,
        T::zero(),
        -w.x,
        -w.y,
        w.x,
        T::zero(),
    )
}

/// Rodrigues' formula: rotation matrix for the axis-angle vector `w`.
pub fn so3_exp<T: Real>(w: &Vector3<T>) -> Matrix3<T> {
    let theta2 = w.norm_squared();
    let k = skew(w);
    let k2 = k * k;
    let (a, b) = if theta2 < T::lit(1e-12) {
        // Taylor expansion near zero.
        (
            T::one() - theta2 / T::lit(6.0),
            T::lit(0.5) - theta2 / T::lit(24.0),
        )
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (T::one() - theta.cos()) / theta2)
    };
    Matrix3::identity() + k * a + k2 * b
}

/// Rotation vector of a rotation matrix (inverse of [`so3_exp`]) for angles below π.
pub fn so3_log<T: Real>(r: &Matrix3<T>) -> Vector3<T> {
    let angle = rotation_angle(r);
    let v = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    if angle < T::lit(1e-7) {
        return v * T::lit(0.5);
    }
    let pi = T::pi();
    if pi - angle < T::lit(1e-5) {
        // Near π the antisymmetric part vanishes; recover the axis from the symmetric part.
        let b = (r + Matrix3::identity()) * T::lit(0.5);
        let mut col = 0;
        for i in 1..3 {
            if b[(i, i)] > b[(col, col)] {
                col = i;
            }
        }
        let axis = b.column(col).into_owned();
        let axis = axis / axis.norm();
        return axis * angle;
    }
    v * (angle / (T::lit(2.0) * angle.sin()))
}

/// Rotation angle in `[0, π]` of a rotation matrix.
pub fn rotation_angle<T: Real>(r: &Matrix3<T>) -> T {
    let c = (r.trace() - T::one()) * T::lit(0.5);
    let c = c.clamp(-T::one(), T::one());
    // acos loses precision near 0; use the antisymmetric magnitude there.
    let s = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    )
    .norm()
        * T::lit(0.5);
    s.atan2(c)
}

/// `‖RᵀR − I‖∞` (largest absolute entry).
pub fn orthonormality_error<T: Real>(r: &Matrix3<T>) -> T {
    (r.transpose() * r - Matrix3::identity()).amax()
}

/// Closest proper rotation to `m` in the Frobenius sense.
pub fn nearest_rotation<T: Real>(m: &Matrix3<T>) -> Matrix3<T> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < T::zero() {
        d[(2, 2)] = -T::one();
    }
    u * d * v_t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exp_log_round_trip() {
        let w = Vector3::new(0.3, -1.2, 0.7);
        let r = so3_exp(&w);
        assert!(orthonormality_error(&r) < 1e-14);
        assert_relative_eq!(so3_log(&r), w, epsilon = 1e-12);
        assert_relative_eq!(rotation_angle(&r), w.norm(), epsilon = 1e-12);
    }

    #[test]
    fn log_near_pi() {
        let w = Vector3::new(0.0, 0.0, std::f64::consts::PI - 1e-7);
        let back = so3_exp(&so3_log(&so3_exp(&w)));
        assert_relative_eq!(back, so3_exp(&w), epsilon = 1e-6);
    }

    #[test]
    fn compose_inverse_is_identity() {
        let p =
            PoseSE3::from_axis_angle(Vector3::new(0.1, 0.2, -0.3), Vector3::new(1.0, -2.0, 0.5));
        let id = p.compose(&p.inverse());
        assert_relative_eq!(id.rotation, Matrix3::identity(), epsilon = 1e-14);
        assert_relative_eq!(id.translation, Vector3::zeros(), epsilon = 1e-14);
        assert_relative_eq!(
            p.to_homogeneous() * p.inverse().to_homogeneous(),
            Matrix4::identity(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn look_at_points_camera_axis_at_target() {
        let eye = Vector3::new(2.0, 0.5, 1.0);
        let target = Vector3::new(0.0, 0.0, 0.4);
        let pose = PoseSE3::look_at(&eye, &target, &Vector3::z()).unwrap();
        assert!(pose.is_rigid(1e-12));
        let t_cam = pose.transform_point(&target);
        assert_relative_eq!(t_cam.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(t_cam.y, 0.0, epsilon = 1e-12);
        assert!(t_cam.z > 0.0);
        // World up maps to image-up (negative camera y).
        let above = pose.transform_point(&(target + Vector3::z() * 0.1));
        assert!(above.y < 0.0);
    }

    #[test]
    fn new_rejects_reflection() {
        let mut r = Matrix3::<f64>::identity();
        r[(2, 2)] = -1.0;
        assert!(PoseSE3::new(r, Vector3::zeros()).is_err());
    }

    #[test]
    fn nearest_rotation_of_perturbed() {
        let r = so3_exp(&Vector3::new(0.4, 0.1, -0.2));
        let noisy = r + Matrix3::new(1e-3, 0.0, 2e-3, 0.0, -1e-3, 0.0, 0.0, 1e-3, 0.0);
        let fixed = nearest_rotation(&noisy);
        assert!(orthonormality_error(&fixed) < 1e-12);
        assert!(rotation_angle(&(fixed.transpose() * r)) < 5e-3);
    }

    #[test]
    fn works_in_f32() {
        let p = PoseSE3::<f32>::from_axis_angle(
            Vector3::new(0.1, 0.2, 0.3),
            Vector3::new(1.0, 2.0, 3.0),
        );
        assert!(p.is_rigid(1e-5));
        let q = p.cast::<f64>();
        assert!(q.is_rigid(1e-6));
    }
}
