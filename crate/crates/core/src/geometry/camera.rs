use std::path::Path;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::transform::RigidTransform;
use crate::error::GeometryError;

/// Pinhole camera: intrinsics, base-to-camera extrinsic, image size,
/// and depth decoding parameters.
///
/// Camera frame is right-handed with +z forward (optical axis), +x right,
/// +y down, so projection is `u = fx*X/Z + cx`, `v = fy*Y/Z + cy`.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Transform mapping base-frame points into the camera frame.
    pub extrinsic: RigidTransform,
    /// Meters per stored depth unit (1e-3 for millimeter depth).
    pub depth_scale: f64,
    /// Maximum usable depth in meters; farther points are invalid.
    pub depth_max: f64,
}

impl CameraModel {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(GeometryError::InvalidCamera("fx and fy must be positive"));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(GeometryError::InvalidCamera("cx out of image bounds"));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(GeometryError::InvalidCamera("cy out of image bounds"));
        }
        if !(self.depth_scale > 0.0) {
            return Err(GeometryError::InvalidCamera("depth_scale must be positive"));
        }
        if !(self.depth_max > 0.0) {
            return Err(GeometryError::InvalidCamera("depth_max must be positive"));
        }
        Ok(())
    }

    /// Simple centered camera used throughout the test suites.
    pub fn test_camera(width: u32, height: u32) -> Self {
        CameraModel {
            fx: width as f64,
            fy: width as f64,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
            extrinsic: RigidTransform::identity(),
            depth_scale: 1e-3,
            depth_max: 5.0,
        }
    }

    pub fn load(path: &Path) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let calib: CameraCalibration =
            serde_json::from_str(&text).map_err(|e| GeometryError::Calibration {
                path: path.to_path_buf(),
                detail: e.to_string(),
            })?;
        let model = calib.into_model();
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), GeometryError> {
        let calib = CameraCalibration::from_model(self);
        let text = serde_json::to_string_pretty(&calib).expect("calibration serializes");
        std::fs::write(path, text).map_err(|e| GeometryError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

/// On-disk calibration schema. Depth scale is stored as millimeters per
/// depth unit; the in-memory model uses meters per unit. The extrinsic is a
/// 4x4 row-major homogeneous matrix mapping base coordinates to camera
/// coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraCalibration {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub depth_scale_mm_per_unit: f64,
    pub depth_max_m: f64,
    pub extrinsic: [[f64; 4]; 4],
}

impl CameraCalibration {
    pub fn from_model(m: &CameraModel) -> Self {
        let h = m.extrinsic.to_homogeneous();
        let mut extrinsic = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                extrinsic[r][c] = h[(r, c)];
            }
        }
        CameraCalibration {
            fx: m.fx,
            fy: m.fy,
            cx: m.cx,
            cy: m.cy,
            width: m.width,
            height: m.height,
            depth_scale_mm_per_unit: m.depth_scale * 1000.0,
            depth_max_m: m.depth_max,
            extrinsic,
        }
    }

    pub fn into_model(self) -> CameraModel {
        let mut h = Matrix4::identity();
        for r in 0..4 {
            for c in 0..4 {
                h[(r, c)] = self.extrinsic[r][c];
            }
        }
        CameraModel {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
            extrinsic: RigidTransform::from_homogeneous(&h),
            depth_scale: self.depth_scale_mm_per_unit / 1000.0,
            depth_max: self.depth_max_m,
        }
    }
}
