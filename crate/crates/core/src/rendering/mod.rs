//! Off-screen software rasterization of the robot's link meshes under FK:
//! robot-only RGB, coverage mask, and depth per frame.

mod mesh;

pub use mesh::{load_mesh, write_binary_stl, TriangleMesh};

use std::collections::HashMap;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{KinematicsError, MeshError};
use crate::geometry::CameraModel;
use crate::kinematics::{JointTrajectory, RobotModel, DOF};
use crate::reprojection::DepthMap;

/// Directional light (camera frame) for the flat Lambert term.
const LIGHT_DIR: Vector3<f64> = Vector3::new(0.3, -0.4, -0.85);
const AMBIENT: f64 = 0.35;
const DIFFUSE: f64 = 0.65;
/// Triangles with any vertex closer than this are rejected rather than
/// clipped; robot geometry never approaches the camera in this pipeline.
const NEAR_PLANE: f64 = 1e-6;

/// One rendered frame: background pixels have mask false, rgb black, and
/// depth +infinity; covered pixels carry camera-space z in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedRobotFrame {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<[u8; 3]>,
    pub mask: Vec<bool>,
    pub depth: Vec<f64>,
}

impl RenderedRobotFrame {
    pub fn empty(width: u32, height: u32) -> Self {
        let n = (width * height) as usize;
        RenderedRobotFrame {
            width,
            height,
            rgb: vec![[0; 3]; n],
            mask: vec![false; n],
            depth: vec![f64::INFINITY; n],
        }
    }

    pub fn covered(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Depth quantized to stored units (millimeters at the default scale);
    /// empty pixels become 0.
    pub fn depth_map(&self, depth_scale: f64) -> DepthMap {
        let data = self
            .depth
            .iter()
            .map(|&z| {
                if z.is_finite() {
                    (z / depth_scale).round().clamp(0.0, u16::MAX as f64) as u16
                } else {
                    0
                }
            })
            .collect();
        DepthMap {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// A camera-frame triangle with its flat shading color.
#[derive(Debug, Clone)]
pub struct SceneTriangle {
    pub vertices: [Vector3<f64>; 3],
    pub color: [f64; 3],
}

#[derive(Debug, Clone, Copy)]
pub struct RenderOptions {
    /// Supersampling factor for RGB only (1 = off). Mask and depth always
    /// come from the single-sample pass so masks stay binary.
    pub supersample: u32,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { supersample: 1 }
    }
}

#[inline]
fn edge(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64) -> f64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Tie rule for pixels exactly on an edge: accept top edges (horizontal,
/// interior below in y-down coordinates) and left edges (pointing up),
/// so adjacent triangles never double-cover or gap on a shared edge.
#[inline]
fn edge_accepts(e: f64, dx: f64, dy: f64) -> bool {
    if e > 0.0 {
        return true;
    }
    if e < 0.0 {
        return false;
    }
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

/// Z-buffered rasterization with pixel-center sampling, the top-left fill
/// rule, perspective-correct depth via interpolated 1/z, and flat Lambert
/// shading. On exact depth ties the earlier triangle wins, so output is
/// deterministic for a fixed triangle order.
pub fn rasterize_triangles(triangles: &[SceneTriangle], camera: &CameraModel) -> RenderedRobotFrame {
    let mut frame = RenderedRobotFrame::empty(camera.width, camera.height);
    let (w, h) = (camera.width as i64, camera.height as i64);
    let light = LIGHT_DIR.normalize();

    for tri in triangles {
        let [a, b, c] = tri.vertices;
        if a.z <= NEAR_PLANE || b.z <= NEAR_PLANE || c.z <= NEAR_PLANE {
            continue;
        }
        let project = |p: &Vector3<f64>| {
            (
                camera.fx * p.x / p.z + camera.cx,
                camera.fy * p.y / p.z + camera.cy,
            )
        };
        let mut screen = [project(&a), project(&b), project(&c)];
        let mut z = [a.z, b.z, c.z];
        let area2 = edge(
            screen[0].0, screen[0].1, screen[1].0, screen[1].1, screen[2].0, screen[2].1,
        );
        if area2 == 0.0 {
            continue;
        }
        if area2 < 0.0 {
            screen.swap(1, 2);
            z.swap(1, 2);
        }
        let area2 = area2.abs();

        // flat shading from the camera-space face normal (two-sided)
        let normal = (b - a).cross(&(c - a));
        let shade = if normal.norm() > 0.0 {
            AMBIENT + DIFFUSE * normal.normalize().dot(&light).abs()
        } else {
            AMBIENT
        };
        let rgb: [u8; 3] = std::array::from_fn(|i| {
            ((tri.color[i] * shade).clamp(0.0, 1.0) * 255.0).round() as u8
        });

        let min_x = screen.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let max_x = screen.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
        let min_y = screen.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let max_y = screen.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let x0 = (min_x - 0.5).floor().max(0.0) as i64;
        let x1 = (max_x - 0.5).ceil().min(w as f64 - 1.0) as i64;
        let y0 = (min_y - 0.5).floor().max(0.0) as i64;
        let y1 = (max_y - 0.5).ceil().min(h as f64 - 1.0) as i64;

        for py in y0..=y1 {
            for px in x0..=x1 {
                let (cx, cy) = (px as f64 + 0.5, py as f64 + 0.5);
                let e0 = edge(screen[1].0, screen[1].1, screen[2].0, screen[2].1, cx, cy);
                let e1 = edge(screen[2].0, screen[2].1, screen[0].0, screen[0].1, cx, cy);
                let e2 = edge(screen[0].0, screen[0].1, screen[1].0, screen[1].1, cx, cy);
                let inside = edge_accepts(e0, screen[2].0 - screen[1].0, screen[2].1 - screen[1].1)
                    && edge_accepts(e1, screen[0].0 - screen[2].0, screen[0].1 - screen[2].1)
                    && edge_accepts(e2, screen[1].0 - screen[0].0, screen[1].1 - screen[0].1);
                if !inside {
                    continue;
                }
                let (b0, b1, b2) = (e0 / area2, e1 / area2, e2 / area2);
                let inv_z = b0 / z[0] + b1 / z[1] + b2 / z[2];
                let depth = 1.0 / inv_z;
                let i = (py * w + px) as usize;
                if depth < frame.depth[i] {
                    frame.depth[i] = depth;
                    frame.rgb[i] = rgb;
                    frame.mask[i] = true;
                }
            }
        }
    }
    frame
}

/// Meshes for every link that has a visual, keyed by link name and carrying
/// the URDF material color.
#[derive(Debug, Clone, Default)]
pub struct MeshCache {
    meshes: HashMap<String, TriangleMesh>,
}

impl MeshCache {
    pub fn load(model: &RobotModel) -> Result<Self, MeshError> {
        let mut meshes = HashMap::new();
        for link in &model.links {
            if let Some(visual) = &link.visual {
                let mut mesh = load_mesh(&visual.mesh_path)?;
                mesh.color = visual.color;
                meshes.insert(link.name.clone(), mesh);
            }
        }
        Ok(MeshCache { meshes })
    }

    pub fn get(&self, link: &str) -> Option<&TriangleMesh> {
        self.meshes.get(link)
    }
}

/// Collect the robot's triangles in the camera frame for one configuration.
fn robot_triangles(
    model: &RobotModel,
    cache: &MeshCache,
    config: &[f64; DOF],
    camera: &CameraModel,
) -> Result<Vec<SceneTriangle>, KinematicsError> {
    let poses = model.link_poses(config)?;
    let mut triangles = Vec::new();
    for link in &model.links {
        let (Some(visual), Some(mesh)) = (&link.visual, cache.get(&link.name)) else {
            continue;
        };
        let pose = poses[&link.name].compose(&visual.origin);
        let to_cam = camera.extrinsic.compose(&pose);
        for t in &mesh.triangles {
            triangles.push(SceneTriangle {
                vertices: [
                    to_cam.apply(&mesh.vertices[t[0]]),
                    to_cam.apply(&mesh.vertices[t[1]]),
                    to_cam.apply(&mesh.vertices[t[2]]),
                ],
                color: mesh.color,
            });
        }
    }
    Ok(triangles)
}

/// Render the robot at one configuration: FK poses -> camera frame ->
/// rasterization. With `supersample > 1` the RGB channel is averaged from a
/// higher-resolution pass while mask and depth stay single-sample.
pub fn rasterize_robot(
    model: &RobotModel,
    cache: &MeshCache,
    config: &[f64; DOF],
    camera: &CameraModel,
    options: &RenderOptions,
) -> Result<RenderedRobotFrame, KinematicsError> {
    let triangles = robot_triangles(model, cache, config, camera)?;
    let mut frame = rasterize_triangles(&triangles, camera);
    if options.supersample > 1 {
        let k = options.supersample;
        let mut hi_cam = camera.clone();
        hi_cam.width = camera.width * k;
        hi_cam.height = camera.height * k;
        hi_cam.fx = camera.fx * k as f64;
        hi_cam.fy = camera.fy * k as f64;
        hi_cam.cx = camera.cx * k as f64;
        hi_cam.cy = camera.cy * k as f64;
        let hi = rasterize_triangles(&triangles, &hi_cam);
        for y in 0..camera.height {
            for x in 0..camera.width {
                let i = (y * camera.width + x) as usize;
                if !frame.mask[i] {
                    continue;
                }
                let mut acc = [0.0f64; 3];
                let mut n = 0u32;
                for sy in 0..k {
                    for sx in 0..k {
                        let hi_i = ((y * k + sy) * hi_cam.width + x * k + sx) as usize;
                        if hi.mask[hi_i] {
                            for c in 0..3 {
                                acc[c] += hi.rgb[hi_i][c] as f64;
                            }
                            n += 1;
                        }
                    }
                }
                if n > 0 {
                    frame.rgb[i] = std::array::from_fn(|c| (acc[c] / n as f64).round() as u8);
                }
            }
        }
    }
    Ok(frame)
}

/// One rendered frame per trajectory timestep, frame-parallel.
pub fn render_robot_video(
    model: &RobotModel,
    cache: &MeshCache,
    trajectory: &JointTrajectory,
    camera: &CameraModel,
    options: &RenderOptions,
) -> Result<Vec<RenderedRobotFrame>, KinematicsError> {
    trajectory
        .frames
        .par_iter()
        .map(|config| rasterize_robot(model, cache, config, camera, options))
        .collect()
}
