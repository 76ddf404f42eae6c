//! Episode persistence and pipeline orchestration: novel-episode generation,
//! double-reprojection training pairs, repaired-video attachment, train/val
//! splitting, and data-mix manifests.

mod episode;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use episode::{
    load_episode, save_episode, ConditioningBundle, Episode, Provenance, WristFile,
    SCHEMA_VERSION,
};

use crate::error::DatasetError;
use crate::geometry::{
    camera_relative_transform, sample_ego_motion_with, EgoMotion, ViewpointRange,
};
use crate::imageops::{hole_fill, naive_compose};
use crate::kinematics::IkSchedule;
use crate::rendering::{render_robot_video, MeshCache, RenderOptions, RenderedRobotFrame};
use crate::reprojection::{
    apply_mask_with_dilation, double_reproject, reproject_frame, RgbdFrame,
};
use crate::retarget::{
    retarget_trajectory, RetargetReport, DEFAULT_FAILURE_THRESHOLD, DEFAULT_SMOOTHING_WINDOW,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default dilation (in pixels) applied to the robot mask before the robot
/// region is cut out of the scene, to swallow soft silhouette edges.
pub const DEFAULT_MASK_DILATION: u32 = 2;

/// Knobs for the generation pipeline. Defaults match the library-wide
/// retargeting and rendering defaults.
#[derive(Debug, Clone)]
pub struct GenerateConfig {
    pub schedule: IkSchedule,
    pub smoothing_window: usize,
    pub failure_threshold: f64,
    pub mask_dilation: u32,
    pub render: RenderOptions,
    pub seed: u64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            schedule: IkSchedule::default(),
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
            failure_threshold: DEFAULT_FAILURE_THRESHOLD,
            mask_dilation: DEFAULT_MASK_DILATION,
            render: RenderOptions::default(),
            seed: 0,
        }
    }
}

/// Robot silhouettes for masking: the stored per-frame masks when the
/// episode carries them, otherwise freshly rendered at the original joints.
fn original_robot_masks(
    model: &crate::kinematics::RobotModel,
    cache: &MeshCache,
    episode: &Episode,
    render: &RenderOptions,
) -> Result<Vec<Vec<bool>>, DatasetError> {
    if let Some(masks) = &episode.robot_masks {
        return Ok(masks.clone());
    }
    let video = render_robot_video(model, cache, &episode.trajectory, &episode.camera, render)
        .map_err(crate::error::RetargetError::Kinematics)?;
    Ok(video.into_iter().map(|f| f.mask).collect())
}

/// The full novel-viewpoint pipeline on one episode: retarget the joint
/// trajectory to the displaced base, cut the robot out of each frame,
/// reproject the scene to the novel viewpoint and hole-fill it, render the
/// robot at the retargeted joints, and naively compose a placeholder
/// observation video. Returns the new episode, the conditioning bundle for
/// the external repair model, and the retargeting report.
pub fn generate_novel_episode(
    model: &crate::kinematics::RobotModel,
    cache: &MeshCache,
    episode: &Episode,
    motion: &EgoMotion,
    cfg: &GenerateConfig,
) -> Result<(Episode, ConditioningBundle, RetargetReport), DatasetError> {
    episode.validate()?;
    if episode.frames.iter().any(|f| f.valid_count() == 0) {
        return Err(DatasetError::Empty("episode frame without valid depth"));
    }

    let (retargeted, report) = retarget_trajectory(
        model,
        &episode.trajectory,
        motion,
        &cfg.schedule,
        cfg.smoothing_window,
        cfg.failure_threshold,
        cfg.seed,
    )?;

    let masks = original_robot_masks(model, cache, episode, &cfg.render)?;
    let rel = camera_relative_transform(&episode.camera, motion);
    let scene: Vec<RgbdFrame> = episode
        .frames
        .par_iter()
        .zip(&masks)
        .map(|(frame, mask)| {
            let cut = apply_mask_with_dilation(
                frame,
                mask,
                frame.width,
                frame.height,
                cfg.mask_dilation,
            )?;
            let warped = reproject_frame(&cut, &episode.camera, &rel);
            Ok(hole_fill(&warped)?)
        })
        .collect::<Result<_, DatasetError>>()?;

    let robot = render_robot_video(model, cache, &retargeted, &episode.camera, &cfg.render)
        .map_err(crate::error::RetargetError::Kinematics)?;

    let composed: Vec<RgbdFrame> = scene
        .iter()
        .zip(&robot)
        .map(|(s, r)| Ok(naive_compose(s, r, episode.camera.depth_scale)?))
        .collect::<Result<_, DatasetError>>()?;

    let new_episode = Episode {
        id: format!("{}-nov", episode.id),
        camera: episode.camera.clone(),
        trajectory: retargeted,
        frames: composed,
        robot_masks: Some(robot.iter().map(|r| r.mask.clone()).collect()),
        wrist: episode.wrist.clone(),
        provenance: Provenance::Retargeted { motion: *motion },
        repair_model: None,
        config: None,
    };
    new_episode.validate()?;

    let bundle = ConditioningBundle {
        episode_id: new_episode.id.clone(),
        motion: *motion,
        camera: episode.camera.clone(),
        scene,
        robot,
    };
    Ok((new_episode, bundle, report))
}

/// Swap the observation video for the externally repaired frames; depth,
/// validity, trajectory, and masks are kept. The repair-model identifier is
/// recorded so the episode's provenance is complete.
pub fn attach_repaired_video(
    episode: &Episode,
    repaired: &[(Vec<[u8; 3]>, u32, u32)],
    repair_model: &str,
) -> Result<Episode, DatasetError> {
    if repaired.len() != episode.frames.len() {
        return Err(DatasetError::RepairedCountMismatch {
            got: repaired.len(),
            expected: episode.frames.len(),
        });
    }
    let mut out = episode.clone();
    for (frame, (rgb, w, h)) in out.frames.iter_mut().zip(repaired) {
        if *w != frame.width || *h != frame.height {
            return Err(DatasetError::Frame(
                crate::error::FrameError::DimensionMismatch {
                    expected_w: frame.width,
                    expected_h: frame.height,
                    got_w: *w,
                    got_h: *h,
                },
            ));
        }
        frame.rgb = rgb.clone();
        frame.validity = vec![true; rgb.len()];
    }
    out.repair_model = Some(repair_model.to_string());
    Ok(out)
}

/// One self-supervised repair-training sample: the double-reprojected,
/// robot-masked, hole-filled scene video; the robot video rendered from the
/// original joints; and the untouched source frames as the target.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub motion: EgoMotion,
    pub scene: Vec<RgbdFrame>,
    pub robot: Vec<RenderedRobotFrame>,
    pub target: Vec<Vec<[u8; 3]>>,
}

/// Emit `count` training pairs from one episode, each under an ego motion
/// drawn uniformly from `range`. Deterministic in `seed`; the robot video is
/// shared across pairs because it depends only on the original joints.
pub fn make_training_pairs(
    model: &crate::kinematics::RobotModel,
    cache: &MeshCache,
    episode: &Episode,
    range: &ViewpointRange,
    count: usize,
    cfg: &GenerateConfig,
    seed: u64,
) -> Result<Vec<TrainingPair>, DatasetError> {
    episode.validate()?;
    if count == 0 {
        return Ok(Vec::new());
    }
    if episode.frames.iter().any(|f| f.valid_count() == 0) {
        return Err(DatasetError::Empty("episode frame without valid depth"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let motions: Vec<EgoMotion> = (0..count)
        .map(|_| sample_ego_motion_with(range, &mut rng))
        .collect();

    let masks = original_robot_masks(model, cache, episode, &cfg.render)?;
    let robot = render_robot_video(model, cache, &episode.trajectory, &episode.camera, &cfg.render)
        .map_err(crate::error::RetargetError::Kinematics)?;
    let target: Vec<Vec<[u8; 3]>> = episode.frames.iter().map(|f| f.rgb.clone()).collect();

    motions
        .into_par_iter()
        .map(|motion| {
            let scene = episode
                .frames
                .iter()
                .zip(&masks)
                .map(|(frame, mask)| {
                    let warped = double_reproject(frame, &episode.camera, &motion);
                    let cut = apply_mask_with_dilation(
                        &warped,
                        mask,
                        frame.width,
                        frame.height,
                        cfg.mask_dilation,
                    )?;
                    Ok(hole_fill(&cut)?)
                })
                .collect::<Result<_, DatasetError>>()?;
            Ok(TrainingPair {
                motion,
                scene,
                robot: robot.clone(),
                target: target.clone(),
            })
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct PairManifest {
    schema_version: u32,
    motion: EgoMotion,
    frame_count: usize,
    width: u32,
    height: u32,
}

/// Persist one training pair: `scene/` (rgb, depth, validity), `robot/`
/// (rgb, mask, depth), `target/` (rgb), and a manifest with the motion.
pub fn save_training_pair(
    pair: &TrainingPair,
    camera: &crate::geometry::CameraModel,
    dir: &Path,
) -> Result<(), DatasetError> {
    use crate::reprojection::{save_mask_png, write_rgb_png};
    for sub in ["scene", "robot", "target"] {
        let d = dir.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| DatasetError::io(&d, e))?;
    }
    for (i, f) in pair.scene.iter().enumerate() {
        f.save_rgb_png(&dir.join(format!("scene/rgb_{i:04}.png")))?;
        f.depth.save_png(&dir.join(format!("scene/depth_{i:04}.png")))?;
        f.save_validity_png(&dir.join(format!("scene/validity_{i:04}.png")))?;
    }
    for (i, r) in pair.robot.iter().enumerate() {
        write_rgb_png(&r.rgb, r.width, r.height, &dir.join(format!("robot/rgb_{i:04}.png")))?;
        save_mask_png(&r.mask, r.width, r.height, &dir.join(format!("robot/mask_{i:04}.png")))?;
        r.depth_map(camera.depth_scale)
            .save_png(&dir.join(format!("robot/depth_{i:04}.png")))?;
    }
    for (i, t) in pair.target.iter().enumerate() {
        write_rgb_png(t, camera.width, camera.height, &dir.join(format!("target/rgb_{i:04}.png")))?;
    }
    let manifest = PairManifest {
        schema_version: SCHEMA_VERSION,
        motion: pair.motion,
        frame_count: pair.scene.len(),
        width: camera.width,
        height: camera.height,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = dir.join("manifest.json");
    std::fs::write(&path, text).map_err(|e| DatasetError::io(&path, e))
}

/// Deterministic shuffled 9:1 split; the validation side gets
/// `floor(n / 10)` items.
pub fn split_train_val<T: Clone>(
    items: &[T],
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), DatasetError> {
    if items.is_empty() {
        return Err(DatasetError::Empty("nothing to split"));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let val_count = items.len() / 10;
    let val = order[..val_count].iter().map(|&i| items[i].clone()).collect();
    let train = order[val_count..].iter().map(|&i| items[i].clone()).collect();
    Ok((train, val))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixGroup {
    Standard,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixEntry {
    pub id: String,
    pub group: MixGroup,
}

/// Declares which standard and generated episodes compose one policy
/// training set at a given standard:generated ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixManifest {
    pub schema_version: u32,
    pub ratio: String,
    pub seed: u64,
    pub entries: Vec<MixEntry>,
}

impl MixManifest {
    pub fn count(&self, group: MixGroup) -> usize {
        self.entries.iter().filter(|e| e.group == group).count()
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text).map_err(|e| DatasetError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
        let manifest: MixManifest =
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
}

/// Parse a "standard:generated" ratio like `1:0.5` into the generated-per-
/// standard factor.
pub fn parse_mix_ratio(text: &str) -> Result<f64, DatasetError> {
    let bad = || DatasetError::InvalidRatio(text.to_string());
    let (lhs, rhs) = text.split_once(':').ok_or_else(bad)?;
    let lhs: f64 = lhs.trim().parse().map_err(|_| bad())?;
    let rhs: f64 = rhs.trim().parse().map_err(|_| bad())?;
    if !(lhs > 0.0 && rhs >= 0.0 && lhs.is_finite() && rhs.is_finite()) {
        return Err(bad());
    }
    Ok(rhs / lhs)
}

/// Build a mix manifest: every standard episode, plus
/// `floor(ratio * standard_count)` generated episodes chosen by a seeded
/// shuffle. Errors if the generated pool is too small.
pub fn mix_datasets(
    standard: &[String],
    generated: &[String],
    ratio: &str,
    seed: u64,
) -> Result<MixManifest, DatasetError> {
    if standard.is_empty() {
        return Err(DatasetError::Empty("standard episode list"));
    }
    let factor = parse_mix_ratio(ratio)?;
    let needed = (factor * standard.len() as f64).floor() as usize;
    if generated.len() < needed {
        return Err(DatasetError::MixShortfall {
            needed,
            available: generated.len(),
        });
    }
    let mut pool: Vec<&String> = generated.iter().collect();
    use rand::seq::SliceRandom;
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut entries: Vec<MixEntry> = standard
        .iter()
        .map(|id| MixEntry {
            id: id.clone(),
            group: MixGroup::Standard,
        })
        .collect();
    entries.extend(pool[..needed].iter().map(|id| MixEntry {
        id: (*id).clone(),
        group: MixGroup::Generated,
    }));
    Ok(MixManifest {
        schema_version: SCHEMA_VERSION,
        ratio: ratio.to_string(),
        seed,
        entries,
    })
}
