//! Rigid-body transforms, pinhole camera model, and ego-motion sampling.
//!
//! Shared math substrate for every other module. All types are immutable
//! values and all operations are pure functions.

mod camera;
mod motion;
mod transform;

pub use camera::{CameraCalibration, CameraModel};
pub use motion::{sample_ego_motion, sample_ego_motion_with, EgoMotion, ViewpointRange};
pub use transform::RigidTransform;

/// Change-of-coordinates from the source camera frame to the novel-viewpoint
/// camera frame, under the rigid coupling of camera and base:
/// `T_cam_from_base * T_base * T_cam_from_base^-1`.
pub fn camera_relative_transform(camera: &CameraModel, motion: &EgoMotion) -> RigidTransform {
    let base = motion.to_base_transform();
    camera
        .extrinsic
        .compose(&base)
        .compose(&camera.extrinsic.inverse())
}
