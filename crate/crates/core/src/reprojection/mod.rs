//! RGB-D novel-view reprojection: depth alignment, backprojection to a point
//! cloud, rigid transformation, z-buffered bilinear splatting into the target
//! view, and the double-reprojection pass used to build training pairs.

mod frame;

pub use frame::{load_mask_png, load_rgb_png, save_mask_png, write_rgb_png, DepthMap, RgbdFrame};

use nalgebra::Vector3;

use crate::error::FrameError;
use crate::geometry::{camera_relative_transform, CameraModel, EgoMotion, RigidTransform};

/// Bilinear splat weights below this threshold are not deposited; keeps
/// identity reprojection from leaking float-roundoff weights into
/// neighboring pixels.
pub const WEIGHT_EPS: f64 = 1e-8;

/// Camera-frame points (meters, z > 0) with colors in [0,1].
#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub colors: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            colors: self.colors.clone(),
        }
    }
}

/// Resample depth to the RGB resolution by nearest neighbor and recompute
/// validity. Nearest neighbor avoids mixing foreground/background depths
/// across object edges.
pub fn align_depth_to_rgb(frame: &RgbdFrame, camera: &CameraModel) -> RgbdFrame {
    let (w, h) = (frame.width, frame.height);
    let mut depth = Vec::with_capacity((w * h) as usize);
    let (dw, dh) = (frame.depth.width, frame.depth.height);
    for y in 0..h {
        let sy = (y as u64 * dh as u64 / h as u64) as u32;
        for x in 0..w {
            let sx = (x as u64 * dw as u64 / w as u64) as u32;
            depth.push(frame.depth.get(sx, sy));
        }
    }
    let mut out = RgbdFrame {
        width: w,
        height: h,
        rgb: frame.rgb.clone(),
        depth: DepthMap {
            width: w,
            height: h,
            data: depth,
        },
        validity: frame.validity.clone(),
    };
    recompute_validity(&mut out, camera);
    out
}

fn recompute_validity(frame: &mut RgbdFrame, camera: &CameraModel) {
    for i in 0..frame.validity.len() {
        let d = frame.depth.data[i];
        let z = d as f64 * camera.depth_scale;
        frame.validity[i] = frame.validity[i] && d != 0 && z <= camera.depth_max;
    }
}

/// Zero out and invalidate every pixel under the mask dilated by a disc of
/// `dilation_radius` pixels.
pub fn apply_mask_with_dilation(
    frame: &RgbdFrame,
    mask: &[bool],
    mask_width: u32,
    mask_height: u32,
    dilation_radius: u32,
) -> Result<RgbdFrame, FrameError> {
    if mask_width != frame.width || mask_height != frame.height {
        return Err(FrameError::DimensionMismatch {
            expected_w: frame.width,
            expected_h: frame.height,
            got_w: mask_width,
            got_h: mask_height,
        });
    }
    let dilated = dilate_disc(mask, frame.width, frame.height, dilation_radius);
    let mut out = frame.clone();
    for (i, &m) in dilated.iter().enumerate() {
        if m {
            out.rgb[i] = [0, 0, 0];
            out.depth.data[i] = 0;
            out.validity[i] = false;
        }
    }
    Ok(out)
}

/// Morphological dilation with a disc structuring element
/// (dx^2 + dy^2 <= r^2).
pub fn dilate_disc(mask: &[bool], width: u32, height: u32, radius: u32) -> Vec<bool> {
    if radius == 0 {
        return mask.to_vec();
    }
    let r = radius as i64;
    let r2 = r * r;
    let mut out = vec![false; mask.len()];
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            if !mask[(y * width as i64 + x) as usize] {
                continue;
            }
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx * dx + dy * dy > r2 {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx >= 0 && ny >= 0 && nx < width as i64 && ny < height as i64 {
                        out[(ny * width as i64 + nx) as usize] = true;
                    }
                }
            }
        }
    }
    out
}

/// Backproject every valid pixel through the pinhole model:
/// `z = d*s`, `X = (u-cx)*z/fx`, `Y = (v-cy)*z/fy`. Pixels with z <= 0 or
/// z > depth_max are excluded; colors are normalized to [0,1].
pub fn backproject(frame: &RgbdFrame, camera: &CameraModel) -> PointCloud {
    debug_assert_eq!(frame.depth.width, frame.width, "depth must be aligned");
    let mut cloud = PointCloud::default();
    for v in 0..frame.height {
        for u in 0..frame.width {
            let i = (v * frame.width + u) as usize;
            if !frame.validity[i] {
                continue;
            }
            let z = frame.depth.data[i] as f64 * camera.depth_scale;
            if z <= 0.0 || z > camera.depth_max {
                continue;
            }
            let x = (u as f64 - camera.cx) * z / camera.fx;
            let y = (v as f64 - camera.cy) * z / camera.fy;
            let [r, g, b] = frame.rgb[i];
            cloud.points.push(Vector3::new(x, y, z));
            cloud
                .colors
                .push([r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0]);
        }
    }
    cloud
}

/// One bilinear splat deposit: pixel index plus weight.
#[inline]
fn splat_targets(u: f64, v: f64) -> [(i64, i64, f64); 4] {
    let x0 = u.floor();
    let y0 = v.floor();
    let fu = u - x0;
    let fv = v - y0;
    let (x0, y0) = (x0 as i64, y0 as i64);
    [
        (x0, y0, (1.0 - fu) * (1.0 - fv)),
        (x0 + 1, y0, fu * (1.0 - fv)),
        (x0, y0 + 1, (1.0 - fu) * fv),
        (x0 + 1, y0 + 1, fu * fv),
    ]
}

/// Forward-warp a point cloud into an image with bilinear splatting and a
/// per-pixel min-depth z-buffer. Splats farther than `depth_scale` (one
/// stored-depth quantum) behind the per-pixel minimum are discarded; the
/// rest blend with weight normalization. Accumulation runs in point-index
/// order so the result is deterministic.
pub fn project_zbuffer(cloud: &PointCloud, camera: &CameraModel) -> RgbdFrame {
    let (w, h) = (camera.width, camera.height);
    let n = (w * h) as usize;
    let depth_eps = camera.depth_scale;

    // pass 1: per-pixel minimum splat depth
    let mut min_depth = vec![f64::INFINITY; n];
    let visit = |p: &Vector3<f64>, f: &mut dyn FnMut(usize, f64)| {
        let z = p.z;
        if z <= 0.0 {
            return;
        }
        let u = camera.fx * p.x / z + camera.cx;
        let v = camera.fy * p.y / z + camera.cy;
        for (x, y, wgt) in splat_targets(u, v) {
            if wgt < WEIGHT_EPS || x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                continue;
            }
            f((y as usize) * w as usize + x as usize, wgt);
        }
    };
    for p in &cloud.points {
        visit(p, &mut |i, _| {
            if p.z < min_depth[i] {
                min_depth[i] = p.z;
            }
        });
    }

    // pass 2: accumulate splats within depth_eps of the minimum
    let mut acc = vec![[0.0f64; 3]; n];
    let mut wsum = vec![0.0f64; n];
    for (pi, p) in cloud.points.iter().enumerate() {
        let color = cloud.colors[pi];
        visit(p, &mut |i, wgt| {
            if p.z <= min_depth[i] + depth_eps {
                for c in 0..3 {
                    acc[i][c] += color[c] * wgt;
                }
                wsum[i] += wgt;
            }
        });
    }

    let mut frame = RgbdFrame::empty(w, h);
    for i in 0..n {
        if wsum[i] > 0.0 {
            for c in 0..3 {
                frame.rgb[i][c] = ((acc[i][c] / wsum[i]) * 255.0).round().clamp(0.0, 255.0) as u8;
            }
            let stored = (min_depth[i] / camera.depth_scale).round();
            frame.depth.data[i] = stored.clamp(0.0, u16::MAX as f64) as u16;
            frame.validity[i] = true;
        }
    }
    frame
}

/// Algorithm: backproject, rigidly transform into the target camera, splat.
/// Invalid output pixels mark disocclusion holes.
pub fn reproject_frame(
    frame: &RgbdFrame,
    camera: &CameraModel,
    relative: &RigidTransform,
) -> RgbdFrame {
    let cloud = backproject(frame, camera).transformed(relative);
    project_zbuffer(&cloud, camera)
}

/// Warp to the sampled novel viewpoint and back to the source view, reusing
/// the splatted novel-view depth for the return trip. The output is
/// pixel-aligned with the source frame but carries the occlusion holes and
/// resampling artifacts a real novel-view synthesis would see.
pub fn double_reproject(frame: &RgbdFrame, camera: &CameraModel, motion: &EgoMotion) -> RgbdFrame {
    let rel = camera_relative_transform(camera, motion);
    let novel = reproject_frame(frame, camera, &rel);
    reproject_frame(&novel, camera, &rel.inverse())
}
