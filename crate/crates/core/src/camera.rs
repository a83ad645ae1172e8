//! Pinhole camera model.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::se3::PoseSE3;

/// Points closer than this to the camera plane are treated as behind the camera.
pub const MIN_DEPTH: f64 = 1e-9;

/// Pinhole intrinsics without distortion. Serialized as
/// `{"fx":..,"fy":..,"cx":..,"cy":..,"width":..,"height":..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics<T: Real> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: u32,
    pub height: u32,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: u32, height: u32) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > T::zero() && self.fy > T::zero())
            || !self.fx.is_finite()
            || !self.fy.is_finite()
        {
            return Err(Error::Parameter(
                "focal lengths must be positive and finite".into(),
            ));
        }
        let inside = |c: T, n: u32| c >= T::zero() && c <= T::lit(n as f64);
        if !inside(self.cx, self.width) || !inside(self.cy, self.height) {
            return Err(Error::Parameter(
                "principal point lies outside the image".into(),
            ));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<T> {
        Matrix3::new(
            self.fx,
            T::zero(),
            self.cx,
            T::zero(),
            self.fy,
            self.cy,
            T::zero(),
            T::zero(),
            T::one(),
        )
    }

    /// Projects a camera-frame point.
    #[inline]
    pub fn project_camera_point(&self, pc: &Vector3<T>) -> Result<Vector2<T>> {
        if pc.z <= T::lit(MIN_DEPTH) {
            return Err(Error::BehindCamera {
                depth: pc.z.as_f64(),
            });
        }
        Ok(Vector2::new(
            self.fx * pc.x / pc.z + self.cx,
            self.fy * pc.y / pc.z + self.cy,
        ))
    }

    /// Normalized image coordinates `((u − cx)/fx, (v − cy)/fy)`.
    pub fn normalize(&self, px: &Vector2<T>) -> Vector2<T> {
        Vector2::new((px.x - self.cx) / self.fx, (px.y - self.cy) / self.fy)
    }

    /// True if `px` lies in the image rectangle shrunk by `margin` on every side.
    pub fn contains(&self, px: &Vector2<T>, margin: T) -> bool {
        let w = T::lit(self.width as f64);
        let h = T::lit(self.height as f64);
        px.x >= margin && px.y >= margin && px.x <= w - margin && px.y <= h - margin
    }

    pub fn cast<U: Real>(&self) -> CameraIntrinsics<U> {
        let c = |x: T| U::lit(x.as_f64());
        CameraIntrinsics {
            fx: c(self.fx),
            fy: c(self.fy),
            cx: c(self.cx),
            cy: c(self.cy),
            width: self.width,
            height: self.height,
        }
    }
}

/// Pixel coordinates of base-frame point `p` seen from a camera at `pose` (base → camera).
pub fn project<T: Real>(
    k: &CameraIntrinsics<T>,
    pose: &PoseSE3<T>,
    p: &Vector3<T>,
) -> Result<Vector2<T>> {
    k.project_camera_point(&pose.transform_point(p))
}
