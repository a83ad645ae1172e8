//! Episode directory format.
//!
//! ```text
//! <dir>/manifest.json          Manifest
//! <dir>/robot.json             RobotSpec
//! <dir>/ground_truth.json      PoseFile (optional)
//! <dir>/scenario.json          ScenarioSpec (synthetic episodes only)
//! <dir>/heatmaps/frame_NNNN/channels.json   HeatmapSidecar
//! <dir>/heatmaps/frame_NNNN/kp_KK.bin       one binary heatmap per keypoint
//! <dir>/embeddings/frame_NNNN.json          EmbeddingFile (optional)
//! ```
//!
//! Paths inside JSON files are relative to the file that names them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::heatmap::{Heatmap, HeatmapChannel, HeatmapSidecar};
use crate::kinematics::{JointState, RobotSpec};
use crate::pipeline::FrameObservation;
use crate::pnp::Detection;
use crate::se3::PoseSE3;
use crate::synth::ScenarioSpec;

pub const EPISODE_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// In-memory episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub robot: RobotSpec,
    pub intrinsics: CameraIntrinsics<f64>,
    /// Image pixels per heatmap pixel.
    pub heatmap_stride: usize,
    /// Heatmap Gaussian width, heatmap pixels.
    pub sigma: f64,
    pub frames: Vec<FrameObservation<f64>>,
    pub ground_truth: Option<PoseSE3<f64>>,
    pub scenario: Option<ScenarioSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub robot_spec: String,
    pub intrinsics: CameraIntrinsics<f64>,
    pub heatmap_stride: usize,
    pub sigma: f64,
    pub frames: Vec<ManifestFrame>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub frame_index: usize,
    pub q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<f64>,
    /// Heatmap sidecar path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heatmaps: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detections: Option<Vec<Detection<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<String>,
}

/// Camera-to-base pose on disk: row-major rotation and translation in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseFile {
    pub schema_version: u32,
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rms_reprojection: Option<f64>,
}

impl PoseFile {
    pub fn from_pose(pose: &PoseSE3<f64>, rms_reprojection: Option<f64>) -> Self {
        Self {
            schema_version: EPISODE_SCHEMA_VERSION,
            rotation: pose.rotation_row_major(),
            translation: pose.translation_array(),
            rms_reprojection,
        }
    }

    /// Rejects rotations that are not rigid.
    pub fn pose(&self) -> Result<PoseSE3<f64>> {
        let p = PoseSE3::from_arrays(&self.rotation, &self.translation);
        PoseSE3::new(p.rotation, p.translation).map_err(|e| Error::Format(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingFile {
    pub schema_version: u32,
    pub embedding: Vec<f64>,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn check_version(v: u32, what: &str) -> Result<()> {
    if v != EPISODE_SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "unsupported {what} schema_version {v}"
        )));
    }
    Ok(())
}

/// Writes `episode` under `dir` (created if missing) and returns the manifest path.
pub fn write_episode(dir: &Path, episode: &Episode) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    write_json(&dir.join("robot.json"), &episode.robot)?;
    let ground_truth = match &episode.ground_truth {
        Some(p) => {
            write_json(
                &dir.join("ground_truth.json"),
                &PoseFile::from_pose(p, None),
            )?;
            Some("ground_truth.json".to_string())
        }
        None => None,
    };
    let scenario = match &episode.scenario {
        Some(s) => {
            write_json(&dir.join("scenario.json"), s)?;
            Some("scenario.json".to_string())
        }
        None => None,
    };
    let mut frames = Vec::with_capacity(episode.frames.len());
    for f in &episode.frames {
        let heatmaps = if f.heatmaps.is_empty() {
            None
        } else {
            let rel = format!("heatmaps/frame_{:04}", f.frame_index);
            let fdir = dir.join(&rel);
            std::fs::create_dir_all(&fdir)?;
            let mut channels = Vec::with_capacity(f.heatmaps.len());
            for (id, hm) in &f.heatmaps {
                let file = format!("kp_{id:02}.bin");
                hm.write_bin(&fdir.join(&file))?;
                channels.push(HeatmapChannel {
                    keypoint_id: *id,
                    file,
                });
            }
            write_json(
                &fdir.join("channels.json"),
                &HeatmapSidecar {
                    schema_version: EPISODE_SCHEMA_VERSION,
                    channels,
                },
            )?;
            Some(format!("{rel}/channels.json"))
        };
        let embedding = match &f.embedding {
            Some(e) => {
                std::fs::create_dir_all(dir.join("embeddings"))?;
                let rel = format!("embeddings/frame_{:04}.json", f.frame_index);
                write_json(
                    &dir.join(&rel),
                    &EmbeddingFile {
                        schema_version: EPISODE_SCHEMA_VERSION,
                        embedding: e.iter().copied().collect(),
                    },
                )?;
                Some(rel)
            }
            None => None,
        };
        frames.push(ManifestFrame {
            frame_index: f.frame_index,
            q: f.q.angles.clone(),
            timestamp: f.q.timestamp,
            heatmaps,
            detections: f.detections.clone(),
            embedding,
        });
    }
    let manifest = Manifest {
        schema_version: EPISODE_SCHEMA_VERSION,
        robot_spec: "robot.json".into(),
        intrinsics: episode.intrinsics,
        heatmap_stride: episode.heatmap_stride,
        sigma: episode.sigma,
        frames,
        ground_truth,
        scenario,
    };
    let path = dir.join(MANIFEST_FILE);
    write_json(&path, &manifest)?;
    Ok(path)
}

fn frame_error(index: usize, path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format(format!("frame {index}: {}: {e}", path.display()))
}

fn read_frame_heatmaps(index: usize, sidecar_path: &Path) -> Result<BTreeMap<usize, Heatmap<f64>>> {
    let sidecar: HeatmapSidecar =
        read_json(sidecar_path).map_err(|e| frame_error(index, sidecar_path, e))?;
    check_version(sidecar.schema_version, "heatmap sidecar")
        .map_err(|e| frame_error(index, sidecar_path, e))?;
    let base = sidecar_path.parent().unwrap_or(Path::new("."));
    let mut out = BTreeMap::new();
    for ch in &sidecar.channels {
        let path = base.join(&ch.file);
        let hm = Heatmap::<f32>::read_bin(&path).map_err(|e| frame_error(index, &path, e))?;
        if out.insert(ch.keypoint_id, hm.cast()).is_some() {
            return Err(frame_error(
                index,
                sidecar_path,
                format!("keypoint {} listed twice", ch.keypoint_id),
            ));
        }
    }
    Ok(out)
}

/// Reads an episode from its manifest. Errors in per-frame files name the frame.
pub fn read_episode(manifest_path: &Path) -> Result<Episode> {
    let manifest: Manifest = read_json(manifest_path)?;
    check_version(manifest.schema_version, "manifest")?;
    manifest.intrinsics.validate()?;
    if manifest.heatmap_stride == 0 {
        return Err(Error::Format("heatmap_stride must be positive".into()));
    }
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let robot_path = dir.join(&manifest.robot_spec);
    let robot_text = std::fs::read_to_string(&robot_path)
        .map_err(|e| Error::Io(format!("{}: {e}", robot_path.display())))?;
    let robot = RobotSpec::from_json(&robot_text)?;
    let ground_truth = match &manifest.ground_truth {
        Some(rel) => {
            let pf: PoseFile = read_json(&dir.join(rel))?;
            check_version(pf.schema_version, "ground truth")?;
            Some(pf.pose()?)
        }
        None => None,
    };
    let scenario = match &manifest.scenario {
        Some(rel) => Some(read_json(&dir.join(rel))?),
        None => None,
    };
    let mut frames = Vec::with_capacity(manifest.frames.len());
    for mf in &manifest.frames {
        let heatmaps = match &mf.heatmaps {
            Some(rel) => read_frame_heatmaps(mf.frame_index, &dir.join(rel))?,
            None => BTreeMap::new(),
        };
        let embedding = match &mf.embedding {
            Some(rel) => {
                let path = dir.join(rel);
                let ef: EmbeddingFile =
                    read_json(&path).map_err(|e| frame_error(mf.frame_index, &path, e))?;
                Some(DVector::from_vec(ef.embedding))
            }
            None => None,
        };
        if mf.heatmaps.is_none() && mf.detections.is_none() {
            return Err(Error::Format(format!(
                "frame {}: neither heatmaps nor detections given",
                mf.frame_index
            )));
        }
        let frame = FrameObservation {
            frame_index: mf.frame_index,
            q: JointState {
                angles: mf.q.clone(),
                timestamp: mf.timestamp,
            },
            heatmaps,
            detections: mf.detections.clone(),
            embedding,
        };
        frame.validate()?;
        frames.push(frame);
    }
    Ok(Episode {
        robot,
        intrinsics: manifest.intrinsics,
        heatmap_stride: manifest.heatmap_stride,
        sigma: manifest.sigma,
        frames,
        ground_truth,
        scenario,
    })
}
