//! Episode and conditioning-bundle persistence.
//!
//! An episode is one directory: `manifest.json` (schema version, provenance,
//! checksums; written last as the commit marker), `calibration.json`,
//! `trajectory.txt`, `frames/` with zero-padded indexed PNGs per role
//! (`rgb`, `depth`, `validity`, optional `robot_mask`), and an optional
//! `wrist/` directory of opaque files copied through unchanged.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::DatasetError;
use crate::geometry::{CameraModel, EgoMotion};
use crate::kinematics::JointTrajectory;
use crate::rendering::RenderedRobotFrame;
use crate::reprojection::{load_mask_png, save_mask_png, DepthMap, RgbdFrame};

pub const SCHEMA_VERSION: u32 = 1;

/// How an episode came to exist. Non-source episodes record the exact ego
/// motion so the derivation can be reproduced bitwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Source,
    Retargeted { motion: EgoMotion },
    DoubleReprojected { motion: EgoMotion },
}

impl Provenance {
    pub fn motion(&self) -> Option<&EgoMotion> {
        match self {
            Provenance::Source => None,
            Provenance::Retargeted { motion } | Provenance::DoubleReprojected { motion } => {
                Some(motion)
            }
        }
    }
}

/// An opaque wrist-camera artifact, copied through byte-for-byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WristFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// One demonstration: observation video, aligned depth and validity, the
/// 14-channel joint trajectory, camera calibration, and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub id: String,
    pub camera: CameraModel,
    pub trajectory: JointTrajectory,
    pub frames: Vec<RgbdFrame>,
    pub robot_masks: Option<Vec<Vec<bool>>>,
    pub wrist: Vec<WristFile>,
    pub provenance: Provenance,
    /// Identifier of the external repair model whose output replaced the
    /// naive-composed observation video, if any.
    pub repair_model: Option<String>,
    /// Effective tool configuration echoed by the CLI for provenance.
    pub config: Option<serde_json::Value>,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Structural invariants: frame count matches trajectory length, every
    /// frame matches the camera dimensions, masks (if any) line up.
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.frames.len() != self.trajectory.len() {
            return Err(DatasetError::LengthMismatch {
                trajectory: self.trajectory.len(),
                frames: self.frames.len(),
            });
        }
        for f in &self.frames {
            if f.width != self.camera.width || f.height != self.camera.height {
                return Err(DatasetError::Frame(
                    crate::error::FrameError::DimensionMismatch {
                        expected_w: self.camera.width,
                        expected_h: self.camera.height,
                        got_w: f.width,
                        got_h: f.height,
                    },
                ));
            }
        }
        if let Some(masks) = &self.robot_masks {
            if masks.len() != self.frames.len() {
                return Err(DatasetError::LengthMismatch {
                    trajectory: self.frames.len(),
                    frames: masks.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EpisodeManifest {
    schema_version: u32,
    id: String,
    frame_count: usize,
    width: u32,
    height: u32,
    provenance: Provenance,
    repair_model: Option<String>,
    has_robot_masks: bool,
    wrist_files: Vec<String>,
    checksums: BTreeMap<String, String>,
    config: Option<serde_json::Value>,
}

fn sha256_file(root: &Path, rel: &str) -> Result<String, DatasetError> {
    let path = root.join(rel);
    let bytes = std::fs::read(&path).map_err(|e| DatasetError::io(&path, e))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

fn read_manifest(path: &Path) -> Result<EpisodeManifest, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let manifest: EpisodeManifest =
        serde_json::from_str(&text).map_err(|e| DatasetError::Manifest {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(DatasetError::SchemaVersion {
            found: manifest.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(manifest)
}

fn verify_checksums(
    root: &Path,
    checksums: &BTreeMap<String, String>,
) -> Result<(), DatasetError> {
    for (rel, expected) in checksums {
        if &sha256_file(root, rel)? != expected {
            return Err(DatasetError::ChecksumMismatch { file: rel.clone() });
        }
    }
    Ok(())
}

pub fn save_episode(episode: &Episode, dir: &Path) -> Result<(), DatasetError> {
    episode.validate()?;
    let frames_dir = dir.join("frames");
    std::fs::create_dir_all(&frames_dir).map_err(|e| DatasetError::io(&frames_dir, e))?;

    let mut files: Vec<String> = vec!["calibration.json".into(), "trajectory.txt".into()];
    episode.camera.save(&dir.join("calibration.json"))?;
    episode.trajectory.save(&dir.join("trajectory.txt"))?;

    for (i, f) in episode.frames.iter().enumerate() {
        let rgb = format!("frames/rgb_{i:04}.png");
        let depth = format!("frames/depth_{i:04}.png");
        let validity = format!("frames/validity_{i:04}.png");
        f.save_rgb_png(&dir.join(&rgb))?;
        f.depth.save_png(&dir.join(&depth))?;
        f.save_validity_png(&dir.join(&validity))?;
        files.extend([rgb, depth, validity]);
        if let Some(masks) = &episode.robot_masks {
            let mask = format!("frames/robot_mask_{i:04}.png");
            save_mask_png(&masks[i], f.width, f.height, &dir.join(&mask))?;
            files.push(mask);
        }
    }

    let mut wrist_files = Vec::new();
    if !episode.wrist.is_empty() {
        let wrist_dir = dir.join("wrist");
        std::fs::create_dir_all(&wrist_dir).map_err(|e| DatasetError::io(&wrist_dir, e))?;
        for w in &episode.wrist {
            let rel = format!("wrist/{}", w.name);
            std::fs::write(dir.join(&rel), &w.bytes)
                .map_err(|e| DatasetError::io(dir.join(&rel), e))?;
            wrist_files.push(w.name.clone());
            files.push(rel);
        }
    }

    let mut checksums = BTreeMap::new();
    for rel in &files {
        checksums.insert(rel.clone(), sha256_file(dir, rel)?);
    }
    let manifest = EpisodeManifest {
        schema_version: SCHEMA_VERSION,
        id: episode.id.clone(),
        frame_count: episode.frames.len(),
        width: episode.camera.width,
        height: episode.camera.height,
        provenance: episode.provenance.clone(),
        repair_model: episode.repair_model.clone(),
        has_robot_masks: episode.robot_masks.is_some(),
        wrist_files,
        checksums,
        config: episode.config.clone(),
    };
    write_manifest(&manifest, &dir.join("manifest.json"))
}

fn write_manifest<T: Serialize>(manifest: &T, path: &Path) -> Result<(), DatasetError> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(path, text).map_err(|e| DatasetError::io(path, e))
}

pub fn load_episode(dir: &Path) -> Result<Episode, DatasetError> {
    let manifest = read_manifest(&dir.join("manifest.json"))?;
    verify_checksums(dir, &manifest.checksums)?;

    let calibration = dir.join("calibration.json");
    if !calibration.exists() {
        return Err(DatasetError::MissingCalibration(calibration));
    }
    let camera = CameraModel::load(&calibration)?;
    let trajectory = JointTrajectory::load(&dir.join("trajectory.txt"))?;
    if trajectory.len() != manifest.frame_count {
        return Err(DatasetError::LengthMismatch {
            trajectory: trajectory.len(),
            frames: manifest.frame_count,
        });
    }

    let frame_path = |role: &str, i: usize| -> Result<PathBuf, DatasetError> {
        let path = dir.join(format!("frames/{role}_{i:04}.png"));
        if path.exists() {
            Ok(path)
        } else {
            Err(DatasetError::MissingFrame {
                role: match role {
                    "rgb" => "rgb",
                    "depth" => "depth",
                    "validity" => "validity",
                    _ => "robot_mask",
                },
                index: i,
                dir: dir.join("frames"),
            })
        }
    };

    let mut frames = Vec::with_capacity(manifest.frame_count);
    let mut robot_masks = manifest.has_robot_masks.then(Vec::new);
    for i in 0..manifest.frame_count {
        frames.push(RgbdFrame::load_pngs(
            &frame_path("rgb", i)?,
            &frame_path("depth", i)?,
            &frame_path("validity", i)?,
        )?);
        if let Some(masks) = &mut robot_masks {
            masks.push(load_mask_png(&frame_path("robot_mask", i)?)?.0);
        }
    }

    let mut wrist = Vec::new();
    for name in &manifest.wrist_files {
        let path = dir.join("wrist").join(name);
        wrist.push(WristFile {
            name: name.clone(),
            bytes: std::fs::read(&path).map_err(|e| DatasetError::io(&path, e))?,
        });
    }

    let episode = Episode {
        id: manifest.id,
        camera,
        trajectory,
        frames,
        robot_masks,
        wrist,
        provenance: manifest.provenance,
        repair_model: manifest.repair_model,
        config: manifest.config,
    };
    episode.validate()?;
    Ok(episode)
}

/// The file package handed to the external generative repair model: the
/// hole-filled novel-view scene video plus the novel-pose robot video with
/// masks, under a checksummed manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningBundle {
    pub episode_id: String,
    pub motion: EgoMotion,
    pub camera: CameraModel,
    pub scene: Vec<RgbdFrame>,
    pub robot: Vec<RenderedRobotFrame>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BundleManifest {
    schema_version: u32,
    episode_id: String,
    motion: EgoMotion,
    frame_count: usize,
    width: u32,
    height: u32,
    checksums: BTreeMap<String, String>,
}

impl ConditioningBundle {
    pub fn len(&self) -> usize {
        self.scene.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scene.is_empty()
    }

    pub fn save(&self, dir: &Path) -> Result<(), DatasetError> {
        if self.scene.len() != self.robot.len() {
            return Err(DatasetError::LengthMismatch {
                trajectory: self.scene.len(),
                frames: self.robot.len(),
            });
        }
        for sub in ["scene", "robot"] {
            let d = dir.join(sub);
            std::fs::create_dir_all(&d).map_err(|e| DatasetError::io(&d, e))?;
        }
        let mut files = vec!["calibration.json".to_string()];
        self.camera.save(&dir.join("calibration.json"))?;
        for (i, f) in self.scene.iter().enumerate() {
            let rgb = format!("scene/rgb_{i:04}.png");
            let depth = format!("scene/depth_{i:04}.png");
            let validity = format!("scene/validity_{i:04}.png");
            f.save_rgb_png(&dir.join(&rgb))?;
            f.depth.save_png(&dir.join(&depth))?;
            f.save_validity_png(&dir.join(&validity))?;
            files.extend([rgb, depth, validity]);
        }
        for (i, r) in self.robot.iter().enumerate() {
            let rgb = format!("robot/rgb_{i:04}.png");
            let mask = format!("robot/mask_{i:04}.png");
            let depth = format!("robot/depth_{i:04}.png");
            crate::reprojection::write_rgb_png(&r.rgb, r.width, r.height, &dir.join(&rgb))?;
            save_mask_png(&r.mask, r.width, r.height, &dir.join(&mask))?;
            r.depth_map(self.camera.depth_scale).save_png(&dir.join(&depth))?;
            files.extend([rgb, mask, depth]);
        }
        let mut checksums = BTreeMap::new();
        for rel in &files {
            checksums.insert(rel.clone(), sha256_file(dir, rel)?);
        }
        let manifest = BundleManifest {
            schema_version: SCHEMA_VERSION,
            episode_id: self.episode_id.clone(),
            motion: self.motion,
            frame_count: self.scene.len(),
            width: self.camera.width,
            height: self.camera.height,
            checksums,
        };
        write_manifest(&manifest, &dir.join("manifest.json"))
    }

    pub fn load(dir: &Path) -> Result<Self, DatasetError> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|e| DatasetError::io(&path, e))?;
        let manifest: BundleManifest =
            serde_json::from_str(&text).map_err(|e| DatasetError::Manifest {
                path: path.clone(),
                detail: e.to_string(),
            })?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(DatasetError::SchemaVersion {
                found: manifest.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        verify_checksums(dir, &manifest.checksums)?;
        let camera = CameraModel::load(&dir.join("calibration.json"))?;
        let mut scene = Vec::with_capacity(manifest.frame_count);
        let mut robot = Vec::with_capacity(manifest.frame_count);
        for i in 0..manifest.frame_count {
            scene.push(RgbdFrame::load_pngs(
                &dir.join(format!("scene/rgb_{i:04}.png")),
                &dir.join(format!("scene/depth_{i:04}.png")),
                &dir.join(format!("scene/validity_{i:04}.png")),
            )?);
            let (rgb, w, h) =
                crate::reprojection::load_rgb_png(&dir.join(format!("robot/rgb_{i:04}.png")))?;
            let mask = load_mask_png(&dir.join(format!("robot/mask_{i:04}.png")))?.0;
            let depth_map = DepthMap::load_png(&dir.join(format!("robot/depth_{i:04}.png")))?;
            let depth = depth_map
                .data
                .iter()
                .map(|&d| {
                    if d == 0 {
                        f64::INFINITY
                    } else {
                        d as f64 * camera.depth_scale
                    }
                })
                .collect();
            robot.push(RenderedRobotFrame {
                width: w,
                height: h,
                rgb,
                mask,
                depth,
            });
        }
        Ok(ConditioningBundle {
            episode_id: manifest.episode_id,
            motion: manifest.motion,
            camera,
            scene,
            robot,
        })
    }
}
