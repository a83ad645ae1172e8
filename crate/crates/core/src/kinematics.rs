//! Serial-manipulator geometry and forward kinematics.
//!
//! Chains use the standard (distal) Denavit–Hartenberg convention. Link `i` is reached
//! from link `i - 1` by
//!
//! ```text
//! T_i = Rz(θ_i) · Tz(d_i) · Tx(a_i) · Rx(α_i),   θ_i = q_i + theta_offset_i
//! ```
//!
//! where `q_i` is the joint angle for revolute links and zero for fixed links. The frame
//! before the first link is the robot base frame. A fixed first link with all-zero
//! parameters therefore reproduces the base frame itself, which is how keypoints on the
//! robot base are attached.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::se3::PoseSE3;

pub type KeypointId = usize;

/// Schema version written into and required from robot spec files.
pub const ROBOT_SPEC_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointType {
    Revolute,
    Fixed,
}

/// One link of a chain: DH parameters (meters / radians) plus joint limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec<T: Real> {
    pub dh_a: T,
    pub dh_d: T,
    pub dh_alpha: T,
    pub theta_offset: T,
    pub joint_type: JointType,
    /// `[lo, hi]` in radians; ignored for fixed links.
    pub limits: [T; 2],
}

impl<T: Real> JointSpec<T> {
    pub fn revolute(dh_a: T, dh_d: T, dh_alpha: T, limits: [T; 2]) -> Self {
        Self {
            dh_a,
            dh_d,
            dh_alpha,
            theta_offset: T::zero(),
            joint_type: JointType::Revolute,
            limits,
        }
    }

    pub fn fixed(dh_a: T, dh_d: T, dh_alpha: T, theta_offset: T) -> Self {
        Self {
            dh_a,
            dh_d,
            dh_alpha,
            theta_offset,
            joint_type: JointType::Fixed,
            limits: [T::zero(), T::zero()],
        }
    }

    pub fn with_theta_offset(mut self, theta_offset: T) -> Self {
        self.theta_offset = theta_offset;
        self
    }

    /// Homogeneous transform from the previous link frame for joint angle `q`.
    pub fn transform(&self, q: T) -> PoseSE3<T> {
        let theta = match self.joint_type {
            JointType::Revolute => q + self.theta_offset,
            JointType::Fixed => self.theta_offset,
        };
        let (st, ct) = theta.sin_cos();
        let (sa, ca) = self.dh_alpha.sin_cos();
        let rotation = Matrix3::new(
            ct,
            -st * ca,
            st * sa,
            st,
            ct * ca,
            -ct * sa,
            T::zero(),
            sa,
            ca,
        );
        let translation = Vector3::new(self.dh_a * ct, self.dh_a * st, self.dh_d);
        PoseSE3::from_parts(rotation, translation)
    }
}

/// Ordered list of links from the base outward.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KinematicChain<T: Real> {
    links: Vec<JointSpec<T>>,
}

impl<T: Real> KinematicChain<T> {
    pub fn new(links: Vec<JointSpec<T>>) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::Chain("chain needs at least one link".into()));
        }
        for (i, l) in links.iter().enumerate() {
            let finite = [
                l.dh_a,
                l.dh_d,
                l.dh_alpha,
                l.theta_offset,
                l.limits[0],
                l.limits[1],
            ]
            .iter()
            .all(|v| v.is_finite());
            if !finite {
                return Err(Error::Chain(format!("link {i} has non-finite parameters")));
            }
            if l.limits[0] > l.limits[1] {
                return Err(Error::Chain(format!("link {i} has limits with lo > hi")));
            }
        }
        Ok(Self { links })
    }

    pub fn links(&self) -> &[JointSpec<T>] {
        &self.links
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn num_revolute(&self) -> usize {
        self.links
            .iter()
            .filter(|l| l.joint_type == JointType::Revolute)
            .count()
    }

    /// Limits of the revolute joints, in joint-vector order.
    pub fn revolute_limits(&self) -> Vec<[T; 2]> {
        self.links
            .iter()
            .filter(|l| l.joint_type == JointType::Revolute)
            .map(|l| l.limits)
            .collect()
    }

    pub fn cast<U: Real>(&self) -> KinematicChain<U> {
        let c = |x: T| U::lit(x.as_f64());
        KinematicChain {
            links: self
                .links
                .iter()
                .map(|l| JointSpec {
                    dh_a: c(l.dh_a),
                    dh_d: c(l.dh_d),
                    dh_alpha: c(l.dh_alpha),
                    theta_offset: c(l.theta_offset),
                    joint_type: l.joint_type,
                    limits: [c(l.limits[0]), c(l.limits[1])],
                })
                .collect(),
        }
    }
}

/// Semantic robot part a keypoint belongs to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum PartLabel {
    Base,
    EndEffector,
    Other(String),
}

impl fmt::Display for PartLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartLabel::Base => f.write_str("base"),
            PartLabel::EndEffector => f.write_str("end_effector"),
            PartLabel::Other(name) => f.write_str(name),
        }
    }
}

impl From<String> for PartLabel {
    fn from(s: String) -> Self {
        match s.as_str() {
            "base" => PartLabel::Base,
            "end_effector" => PartLabel::EndEffector,
            _ => PartLabel::Other(s),
        }
    }
}

impl From<PartLabel> for String {
    fn from(p: PartLabel) -> Self {
        p.to_string()
    }
}

impl FromStr for PartLabel {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(PartLabel::from(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointEntry<T: Real> {
    pub keypoint_id: KeypointId,
    pub link_index: usize,
    /// Offset in the link frame, meters.
    pub offset: [T; 3],
    pub part_label: PartLabel,
}

impl<T: Real> KeypointEntry<T> {
    pub fn offset_vector(&self) -> Vector3<T> {
        Vector3::new(self.offset[0], self.offset[1], self.offset[2])
    }
}

/// Minimum keypoints per participating link (the PnP minimum).
pub const MIN_KEYPOINTS_PER_LINK: usize = 4;

/// Keypoints attached to chain links, sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeypointLayout<T: Real> {
    entries: Vec<KeypointEntry<T>>,
}

impl<T: Real> KeypointLayout<T> {
    /// Validates ids (unique, contiguous from 0) and per-link counts.
    pub fn new(mut entries: Vec<KeypointEntry<T>>) -> Result<Self> {
        entries.sort_by_key(|e| e.keypoint_id);
        for (i, e) in entries.iter().enumerate() {
            if e.keypoint_id != i {
                return Err(Error::Layout(format!(
                    "keypoint ids must be unique and contiguous from 0 (expected {i}, found {})",
                    e.keypoint_id
                )));
            }
            if !e.offset.iter().all(|v| v.is_finite()) {
                return Err(Error::Layout(format!(
                    "keypoint {i} has a non-finite offset"
                )));
            }
        }
        let mut per_link: BTreeMap<usize, usize> = BTreeMap::new();
        for e in &entries {
            *per_link.entry(e.link_index).or_default() += 1;
        }
        if let Some((link, n)) = per_link.iter().find(|(_, &n)| n < MIN_KEYPOINTS_PER_LINK) {
            return Err(Error::Layout(format!(
                "link {link} carries {n} keypoints; at least {MIN_KEYPOINTS_PER_LINK} required"
            )));
        }
        Ok(Self { entries })
    }

    /// Checks that every `link_index` exists in `chain`.
    pub fn validate_for(&self, chain: &KinematicChain<T>) -> Result<()> {
        match self
            .entries
            .iter()
            .find(|e| e.link_index >= chain.num_links())
        {
            Some(e) => Err(Error::Layout(format!(
                "keypoint {} references link {} but the chain has {} links",
                e.keypoint_id,
                e.link_index,
                chain.num_links()
            ))),
            None => Ok(()),
        }
    }

    pub fn entries(&self) -> &[KeypointEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: KeypointId) -> Option<&KeypointEntry<T>> {
        self.entries.get(id)
    }

    pub fn part_of(&self, id: KeypointId) -> Option<&PartLabel> {
        self.get(id).map(|e| &e.part_label)
    }

    /// Distinct part labels in sorted order.
    pub fn parts(&self) -> Vec<PartLabel> {
        let mut parts: Vec<PartLabel> = self.entries.iter().map(|e| e.part_label.clone()).collect();
        parts.sort();
        parts.dedup();
        parts
    }

    pub fn ids_for_part(&self, part: &PartLabel) -> Vec<KeypointId> {
        self.entries
            .iter()
            .filter(|e| &e.part_label == part)
            .map(|e| e.keypoint_id)
            .collect()
    }

    pub fn cast<U: Real>(&self) -> KeypointLayout<U> {
        KeypointLayout {
            entries: self
                .entries
                .iter()
                .map(|e| KeypointEntry {
                    keypoint_id: e.keypoint_id,
                    link_index: e.link_index,
                    offset: e.offset.map(|v| U::lit(v.as_f64())),
                    part_label: e.part_label.clone(),
                })
                .collect(),
        }
    }
}

/// Joint angles of the revolute joints, radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState<T: Real> {
    pub angles: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<f64>,
}

impl<T: Real> JointState<T> {
    pub fn new(angles: Vec<T>) -> Self {
        Self {
            angles,
            timestamp: None,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![T::zero(); n])
    }

    /// Indices of joints outside their limits.
    pub fn limit_violations(&self, chain: &KinematicChain<T>) -> Vec<usize> {
        chain
            .revolute_limits()
            .iter()
            .zip(&self.angles)
            .enumerate()
            .filter(|(_, (lim, &q))| q < lim[0] || q > lim[1])
            .map(|(i, _)| i)
            .collect()
    }
}

/// Link frames expressed in the base frame, one per chain link.
pub fn forward_kinematics<T: Real>(
    chain: &KinematicChain<T>,
    q: &JointState<T>,
) -> Result<Vec<PoseSE3<T>>> {
    forward_kinematics_from(chain, q, &PoseSE3::identity())
}

/// Forward kinematics starting from an arbitrary base pose.
pub fn forward_kinematics_from<T: Real>(
    chain: &KinematicChain<T>,
    q: &JointState<T>,
    base: &PoseSE3<T>,
) -> Result<Vec<PoseSE3<T>>> {
    let expected = chain.num_revolute();
    if q.angles.len() != expected {
        return Err(Error::Dimension {
            expected,
            got: q.angles.len(),
        });
    }
    let violations = q.limit_violations(chain);
    if !violations.is_empty() {
        log::warn!("joint state outside limits at joints {violations:?}");
    }
    Ok(chain_frames(chain, q, base))
}

/// Link frames without the limit check; `q` must have one angle per revolute joint.
fn chain_frames<T: Real>(
    chain: &KinematicChain<T>,
    q: &JointState<T>,
    base: &PoseSE3<T>,
) -> Vec<PoseSE3<T>> {
    let mut angles = q.angles.iter();
    let mut current = *base;
    let mut frames = Vec::with_capacity(chain.num_links());
    for link in chain.links() {
        let qi = match link.joint_type {
            JointType::Revolute => *angles.next().expect("length checked"),
            JointType::Fixed => T::zero(),
        };
        current = current.compose(&link.transform(qi));
        frames.push(current);
    }
    frames
}

/// Base-frame keypoint positions keyed by keypoint id.
pub fn keypoints_3d<T: Real>(
    chain: &KinematicChain<T>,
    layout: &KeypointLayout<T>,
    q: &JointState<T>,
) -> Result<BTreeMap<KeypointId, Vector3<T>>> {
    layout.validate_for(chain)?;
    let frames = forward_kinematics(chain, q)?;
    Ok(place_keypoints(layout, &frames))
}

/// Keypoints at an arbitrary configuration, limits ignored. Used for reference point
/// sets such as the evaluation model, which need not be a reachable pose.
pub fn keypoints_3d_unchecked<T: Real>(
    chain: &KinematicChain<T>,
    layout: &KeypointLayout<T>,
    q: &JointState<T>,
) -> Result<BTreeMap<KeypointId, Vector3<T>>> {
    layout.validate_for(chain)?;
    if q.angles.len() != chain.num_revolute() {
        return Err(Error::Dimension {
            expected: chain.num_revolute(),
            got: q.angles.len(),
        });
    }
    Ok(place_keypoints(
        layout,
        &chain_frames(chain, q, &PoseSE3::identity()),
    ))
}

fn place_keypoints<T: Real>(
    layout: &KeypointLayout<T>,
    frames: &[PoseSE3<T>],
) -> BTreeMap<KeypointId, Vector3<T>> {
    layout
        .entries()
        .iter()
        .map(|e| {
            (
                e.keypoint_id,
                frames[e.link_index].transform_point(&e.offset_vector()),
            )
        })
        .collect()
}

/// On-disk robot description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    /// Always `"standard_dh"`: `T_i = Rz(q_i + theta_offset) Tz(dh_d) Tx(dh_a) Rx(dh_alpha)`.
    pub convention: String,
    /// Always `{"length": "m", "angle": "rad"}`.
    pub units: Units,
    pub links: Vec<JointSpec<f64>>,
    pub keypoints: Vec<KeypointEntry<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Units {
    pub length: String,
    pub angle: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            length: "m".into(),
            angle: "rad".into(),
        }
    }
}

pub const DH_CONVENTION: &str = "standard_dh";

impl RobotSpec {
    pub fn new(name: &str, chain: &KinematicChain<f64>, layout: &KeypointLayout<f64>) -> Self {
        Self {
            schema_version: ROBOT_SPEC_SCHEMA_VERSION,
            name: name.to_string(),
            convention: DH_CONVENTION.into(),
            units: Units::default(),
            links: chain.links().to_vec(),
            keypoints: layout.entries().to_vec(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == ROBOT_SPEC_SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::Format(format!(
                    "unsupported robot spec schema_version {v}"
                )))
            }
            None => return Err(Error::Format("robot spec is missing schema_version".into())),
        }
        let spec: RobotSpec = serde_json::from_value(value)?;
        if spec.convention != DH_CONVENTION {
            return Err(Error::Format(format!(
                "unsupported kinematic convention '{}' (expected '{DH_CONVENTION}')",
                spec.convention
            )));
        }
        if spec.units != Units::default() {
            return Err(Error::Format(
                "robot spec units must be meters and radians".into(),
            ));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("robot spec serializes")
    }

    /// Validated chain and layout.
    pub fn build<T: Real>(&self) -> Result<(KinematicChain<T>, KeypointLayout<T>)> {
        let chain = KinematicChain::new(self.links.clone())?;
        let layout = KeypointLayout::new(self.keypoints.clone())?;
        layout.validate_for(&chain)?;
        Ok((chain.cast(), layout.cast()))
    }
}

/// Bundled 7-DOF arm approximating a Franka Panda, with six non-coplanar keypoints on
/// the base link and six on the hand.
///
/// Link 0 is a fixed identity link standing for the base; link 8 is the fixed hand frame.
pub fn panda_like() -> (KinematicChain<f64>, KeypointLayout<f64>) {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    let lim = |lo: f64, hi: f64| [lo, hi];
    let links = vec![
        JointSpec::fixed(0.0, 0.0, 0.0, 0.0),
        JointSpec::revolute(0.0, 0.333, -FRAC_PI_2, lim(-2.8973, 2.8973)),
        JointSpec::revolute(0.0, 0.0, FRAC_PI_2, lim(-1.7628, 1.7628)),
        JointSpec::revolute(0.0825, 0.316, FRAC_PI_2, lim(-2.8973, 2.8973)),
        JointSpec::revolute(-0.0825, 0.0, -FRAC_PI_2, lim(-3.0718, -0.0698)),
        JointSpec::revolute(0.0, 0.384, FRAC_PI_2, lim(-2.8973, 2.8973)),
        JointSpec::revolute(0.088, 0.0, FRAC_PI_2, lim(-0.0175, 3.7525)),
        JointSpec::revolute(0.0, 0.107, 0.0, lim(-2.8973, 2.8973)),
        JointSpec::fixed(0.0, 0.1034, 0.0, -FRAC_PI_4),
    ];
    let base_offsets = [
        [0.10, 0.0, 0.02],
        [-0.05, 0.09, 0.05],
        [-0.05, -0.09, 0.10],
        [0.06, 0.06, 0.20],
        [-0.08, 0.0, 0.28],
        [0.0, -0.07, 0.33],
    ];
    let hand_offsets = [
        [0.0, 0.09, 0.02],
        [0.0, -0.09, 0.02],
        [0.04, 0.0, 0.06],
        [-0.04, 0.03, 0.09],
        [0.01, -0.02, 0.12],
        [-0.02, 0.0, -0.03],
    ];
    let mut entries = Vec::new();
    for (i, o) in base_offsets.iter().enumerate() {
        entries.push(KeypointEntry {
            keypoint_id: i,
            link_index: 0,
            offset: *o,
            part_label: PartLabel::Base,
        });
    }
    for (i, o) in hand_offsets.iter().enumerate() {
        entries.push(KeypointEntry {
            keypoint_id: base_offsets.len() + i,
            link_index: links.len() - 1,
            offset: *o,
            part_label: PartLabel::EndEffector,
        });
    }
    let chain = KinematicChain::new(links).expect("bundled chain is valid");
    let layout = KeypointLayout::new(entries).expect("bundled layout is valid");
    (chain, layout)
}

/// A comfortable mid-range configuration for [`panda_like`].
pub fn panda_ready_pose() -> JointState<f64> {
    JointState::new(vec![0.0, -0.785, 0.0, -2.356, 0.0, 1.571, 0.785])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn planar_two_link() -> KinematicChain<f64> {
        let lim = [-3.0, 3.0];
        KinematicChain::new(vec![
            JointSpec::revolute(1.0, 0.0, 0.0, lim),
            JointSpec::revolute(1.0, 0.0, 0.0, lim),
        ])
        .unwrap()
    }

    #[test]
    fn single_link_zero_configuration() {
        let chain =
            KinematicChain::new(vec![JointSpec::revolute(1.0, 0.0, 0.0, [-1.0, 1.0])]).unwrap();
        let frames = forward_kinematics(&chain, &JointState::zeros(1)).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].translation, Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(frames[0].rotation, Matrix3::identity());
    }

    #[test]
    fn two_link_planar_matches_explicit_matrix_product() {
        // Oracle: hand-written homogeneous matrices, multiplied explicitly.
        let link = |theta: f64| {
            nalgebra::Matrix4::new(
                theta.cos(),
                -theta.sin(),
                0.0,
                theta.cos(),
                theta.sin(),
                theta.cos(),
                0.0,
                theta.sin(),
                0.0,
                0.0,
                1.0,
                0.0,
                0.0,
                0.0,
                0.0,
                1.0,
            )
        };
        let expected = link(FRAC_PI_2) * link(0.0);
        let frames =
            forward_kinematics(&planar_two_link(), &JointState::new(vec![FRAC_PI_2, 0.0])).unwrap();
        assert_relative_eq!(frames[1].to_homogeneous(), expected, epsilon = 1e-15);
        assert_relative_eq!(
            frames[1].translation,
            Vector3::new(0.0, 2.0, 0.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = forward_kinematics(&planar_two_link(), &JointState::zeros(3)).unwrap_err();
        assert_eq!(
            err,
            Error::Dimension {
                expected: 2,
                got: 3
            }
        );
    }

    #[test]
    fn chain_validation() {
        assert!(KinematicChain::<f64>::new(vec![]).is_err());
        assert!(
            KinematicChain::new(vec![JointSpec::revolute(0.0, 0.0, 0.0, [1.0, -1.0])]).is_err()
        );
        assert!(
            KinematicChain::new(vec![JointSpec::revolute(f64::NAN, 0.0, 0.0, [-1.0, 1.0])])
                .is_err()
        );
    }

    #[test]
    fn layout_validation() {
        let entry = |id, link| KeypointEntry {
            keypoint_id: id,
            link_index: link,
            offset: [0.0, 0.0, id as f64],
            part_label: PartLabel::Base,
        };
        // Non-contiguous ids.
        assert!(
            KeypointLayout::new(vec![entry(0, 0), entry(1, 0), entry(2, 0), entry(4, 0)]).is_err()
        );
        // Duplicate ids.
        assert!(
            KeypointLayout::new(vec![entry(0, 0), entry(1, 0), entry(1, 0), entry(2, 0)]).is_err()
        );
        // Too few per link.
        assert!(KeypointLayout::new(vec![entry(0, 0), entry(1, 0), entry(2, 0)]).is_err());
        // Out-of-order input is accepted and sorted.
        let layout =
            KeypointLayout::new(vec![entry(3, 0), entry(1, 0), entry(0, 0), entry(2, 0)]).unwrap();
        assert_eq!(layout.entries()[3].keypoint_id, 3);
        // Invalid link index for the chain.
        let bad =
            KeypointLayout::new(vec![entry(0, 5), entry(1, 5), entry(2, 5), entry(3, 5)]).unwrap();
        let err = keypoints_3d(&planar_two_link(), &bad, &JointState::zeros(2)).unwrap_err();
        assert!(matches!(err, Error::Layout(_)));
    }

    #[test]
    fn zero_offset_is_link_origin_and_deterministic() {
        let (chain, layout) = panda_like();
        let q = panda_ready_pose();
        let frames = forward_kinematics(&chain, &q).unwrap();
        let mut entries = layout.entries().to_vec();
        entries[6].offset = [0.0; 3];
        let layout = KeypointLayout::new(entries).unwrap();
        let a = keypoints_3d(&chain, &layout, &q).unwrap();
        let b = keypoints_3d(&chain, &layout, &q).unwrap();
        assert_eq!(a[&6], frames[8].translation);
        assert_eq!(a, b);
        // Base keypoints sit on the identity link.
        assert_eq!(a[&0], Vector3::new(0.10, 0.0, 0.02));
    }

    #[test]
    fn limit_violations_warn_but_do_not_fail() {
        let (chain, _) = panda_like();
        let q = JointState::zeros(7);
        assert_eq!(q.limit_violations(&chain), vec![3]);
        assert!(forward_kinematics(&chain, &q).is_ok());
        assert!(panda_ready_pose().limit_violations(&chain).is_empty());
    }

    #[test]
    fn bundled_layout_is_non_coplanar_per_link() {
        let (_, layout) = panda_like();
        for part in layout.parts() {
            let pts: Vec<Vector3<f64>> = layout
                .ids_for_part(&part)
                .iter()
                .map(|&i| layout.get(i).unwrap().offset_vector())
                .collect();
            assert_eq!(pts.len(), 6);
            let c = pts.iter().sum::<Vector3<f64>>() / pts.len() as f64;
            let mut m = nalgebra::DMatrix::zeros(pts.len(), 3);
            for (i, p) in pts.iter().enumerate() {
                m.row_mut(i).copy_from(&(p - c).transpose());
            }
            let sv = m.singular_values();
            assert!(
                sv.min() / sv.max() > 0.1,
                "{part} keypoints nearly planar: {sv}"
            );
        }
    }

    #[test]
    fn robot_spec_round_trip_and_schema_checks() {
        let (chain, layout) = panda_like();
        let spec = RobotSpec::new("panda_like", &chain, &layout);
        let text = spec.to_json();
        let back = RobotSpec::from_json(&text).unwrap();
        assert_eq!(back, spec);
        let (c2, l2) = back.build::<f64>().unwrap();
        assert_eq!(c2, chain);
        assert_eq!(l2, layout);

        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v.as_object_mut().unwrap().remove("schema_version");
        assert!(RobotSpec::from_json(&v.to_string()).is_err());
        v["schema_version"] = 1.into();
        v["convention"] = "modified_dh".into();
        assert!(RobotSpec::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn part_label_strings() {
        assert_eq!(PartLabel::from("base".to_string()), PartLabel::Base);
        assert_eq!(PartLabel::EndEffector.to_string(), "end_effector");
        assert_eq!(
            serde_json::to_string(&PartLabel::Other("wrist".into())).unwrap(),
            "\"wrist\""
        );
    }
}
