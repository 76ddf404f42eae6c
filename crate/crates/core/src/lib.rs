//! Library for converting single-viewpoint egocentric robot demonstrations
//! into paired novel-viewpoint demonstrations: kinematic action retargeting
//! plus geometrically consistent novel-view scene and robot videos.

pub mod dataset;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod imageops;
pub mod kinematics;
pub mod metrics;
pub mod rendering;
pub mod reprojection;
pub mod retarget;
