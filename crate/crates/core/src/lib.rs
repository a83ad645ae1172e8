//! Camera-to-robot extrinsic estimation from keypoint heatmaps and joint angles.
//!
//! The flow follows [`pipeline`]: decide which robot parts are visible, decode keypoints
//! from heatmaps, attach forward-kinematics 3D points, and solve PnP per frame or pooled
//! over an episode. [`synth`] produces ground-truthed episodes and [`eval`] scores them.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below fix the
//! scalar for common use.

// Negated comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod episode;
pub mod error;
pub mod eval;
pub mod heatmap;
pub mod kinematics;
pub mod pipeline;
pub mod pnp;
pub mod report;
pub mod scalar;
pub mod se3;
pub mod synth;
pub mod visibility;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Pose = se3::PoseSE3<f64>;
pub type Pose32 = se3::PoseSE3<f32>;
pub type Intrinsics = camera::CameraIntrinsics<f64>;
pub type Intrinsics32 = camera::CameraIntrinsics<f32>;
pub type Chain = kinematics::KinematicChain<f64>;
pub type Chain32 = kinematics::KinematicChain<f32>;
pub type Layout = kinematics::KeypointLayout<f64>;
pub type Layout32 = kinematics::KeypointLayout<f32>;
pub type Joints = kinematics::JointState<f64>;
pub type Joints32 = kinematics::JointState<f32>;
pub type HeatmapF64 = heatmap::Heatmap<f64>;
pub type HeatmapF32 = heatmap::Heatmap<f32>;
pub type Keypoint = heatmap::DecodedKeypoint<f64>;
pub type Keypoint32 = heatmap::DecodedKeypoint<f32>;
pub type Adapter = visibility::LoraAdapter<f64>;
pub type Adapter32 = visibility::LoraAdapter<f32>;
pub type Frame = pipeline::FrameObservation<f64>;
pub type Frame32 = pipeline::FrameObservation<f32>;
