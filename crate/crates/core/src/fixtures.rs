//! Shipped synthetic fixtures: small robots, meshes, and scenes used by the
//! test suites and by the CLI's demo data generator.

use std::path::Path;

use crate::kinematics::{load_robot_model, ArmConfig, RobotConfig, RobotModel};
use crate::reprojection::RgbdFrame;

/// Planar two-revolute-joint chain, link lengths 0.3 m and 0.2 m along +x.
pub const TWO_LINK_URDF: &str = r#"<?xml version="1.0"?>
<robot name="two_link_planar">
  <link name="base_link"/>
  <link name="link1"/>
  <link name="link2"/>
  <link name="ee_link"/>
  <joint name="j1" type="revolute">
    <parent link="base_link"/>
    <child link="link1"/>
    <origin xyz="0 0 0"/>
    <axis xyz="0 0 1"/>
    <limit lower="-3.1" upper="3.1"/>
  </joint>
  <joint name="j2" type="revolute">
    <parent link="link1"/>
    <child link="link2"/>
    <origin xyz="0.3 0 0"/>
    <axis xyz="0 0 1"/>
    <limit lower="-3.1" upper="3.1"/>
  </joint>
  <joint name="ee_fixed" type="fixed">
    <parent link="link2"/>
    <child link="ee_link"/>
    <origin xyz="0.2 0 0"/>
  </joint>
</robot>
"#;

pub fn two_link_config() -> RobotConfig {
    let arm = ArmConfig {
        mount_link: "base_link".into(),
        ee_link: "ee_link".into(),
        joints: vec!["j1".into(), "j2".into()],
        gripper_joints: vec![],
    };
    RobotConfig {
        base_link: "base_link".into(),
        left: arm.clone(),
        right: arm,
    }
}

pub fn two_link_model() -> RobotModel {
    load_robot_model(TWO_LINK_URDF, &two_link_config(), Path::new(".")).expect("fixture parses")
}

fn dual_arm_side(prefix: &str, mount_y: f64) -> String {
    format!(
        r#"  <link name="{p}_mount"/>
  <link name="{p}_link1">
    <visual>
      <origin xyz="0 0 0.025"/>
      <geometry><mesh filename="meshes/seg_short.obj"/></geometry>
      <material name="gray"><color rgba="0.55 0.55 0.6 1"/></material>
    </visual>
  </link>
  <link name="{p}_link2">
    <visual>
      <origin xyz="0.20 0 0"/>
      <geometry><mesh filename="meshes/seg_long.obj"/></geometry>
      <material name="gray"><color rgba="0.5 0.52 0.58 1"/></material>
    </visual>
  </link>
  <link name="{p}_link3">
    <visual>
      <origin xyz="0.14 0 0"/>
      <geometry><mesh filename="meshes/seg_mid.obj"/></geometry>
      <material name="gray"><color rgba="0.5 0.5 0.55 1"/></material>
    </visual>
  </link>
  <link name="{p}_link4">
    <visual>
      <origin xyz="0.08 0 0"/>
      <geometry><mesh filename="meshes/seg_wrist.obj"/></geometry>
    </visual>
  </link>
  <link name="{p}_link5">
    <visual>
      <origin xyz="0.05 0 0"/>
      <geometry><mesh filename="meshes/seg_tiny.obj"/></geometry>
    </visual>
  </link>
  <link name="{p}_link6"/>
  <link name="{p}_ee"/>
  <link name="{p}_finger_link">
    <visual>
      <geometry><mesh filename="meshes/finger.obj"/></geometry>
      <material name="dark"><color rgba="0.25 0.25 0.28 1"/></material>
    </visual>
  </link>
  <joint name="{p}_mount_fixed" type="fixed">
    <parent link="base_link"/>
    <child link="{p}_mount"/>
    <origin xyz="0 {y} 0"/>
  </joint>
  <joint name="{p}_j1" type="revolute">
    <parent link="{p}_mount"/>
    <child link="{p}_link1"/>
    <origin xyz="0 0 0.05"/>
    <axis xyz="0 0 1"/>
    <limit lower="-2.8" upper="2.8"/>
  </joint>
  <joint name="{p}_j2" type="revolute">
    <parent link="{p}_link1"/>
    <child link="{p}_link2"/>
    <origin xyz="0 0 0.05"/>
    <axis xyz="0 1 0"/>
    <limit lower="-1.9" upper="1.9"/>
  </joint>
  <joint name="{p}_j3" type="revolute">
    <parent link="{p}_link2"/>
    <child link="{p}_link3"/>
    <origin xyz="0.40 0 0"/>
    <axis xyz="0 1 0"/>
    <limit lower="-2.2" upper="2.2"/>
  </joint>
  <joint name="{p}_j4" type="revolute">
    <parent link="{p}_link3"/>
    <child link="{p}_link4"/>
    <origin xyz="0.28 0 0"/>
    <axis xyz="1 0 0"/>
    <limit lower="-2.9" upper="2.9"/>
  </joint>
  <joint name="{p}_j5" type="revolute">
    <parent link="{p}_link4"/>
    <child link="{p}_link5"/>
    <origin xyz="0.16 0 0"/>
    <axis xyz="0 1 0"/>
    <limit lower="-1.9" upper="1.9"/>
  </joint>
  <joint name="{p}_j6" type="revolute">
    <parent link="{p}_link5"/>
    <child link="{p}_link6"/>
    <origin xyz="0.10 0 0"/>
    <axis xyz="1 0 0"/>
    <limit lower="-2.9" upper="2.9"/>
  </joint>
  <joint name="{p}_ee_fixed" type="fixed">
    <parent link="{p}_link6"/>
    <child link="{p}_ee"/>
    <origin xyz="0.08 0 0"/>
  </joint>
  <joint name="{p}_finger" type="prismatic">
    <parent link="{p}_ee"/>
    <child link="{p}_finger_link"/>
    <origin xyz="0.02 0 0"/>
    <axis xyz="0 1 0"/>
    <limit lower="0" upper="0.04"/>
  </joint>
"#,
        p = prefix,
        y = mount_y
    )
}

/// Dual 6-DoF arm with mounts at y = ±0.34 m (0.68 m arm separation),
/// prismatic gripper fingers, and cuboid link meshes.
pub fn dual_arm_urdf() -> String {
    format!(
        r#"<?xml version="1.0"?>
<robot name="dual_arm_fixture">
  <link name="base_link">
    <visual>
      <origin xyz="-0.05 0 -0.05"/>
      <geometry><mesh filename="meshes/base.obj"/></geometry>
      <material name="base_gray"><color rgba="0.4 0.4 0.45 1"/></material>
    </visual>
  </link>
{left}{right}</robot>
"#,
        left = dual_arm_side("l", 0.34),
        right = dual_arm_side("r", -0.34),
    )
}

pub fn dual_arm_config() -> RobotConfig {
    let arm = |p: &str| ArmConfig {
        mount_link: format!("{p}_mount"),
        ee_link: format!("{p}_ee"),
        joints: (1..=6).map(|i| format!("{p}_j{i}")).collect(),
        gripper_joints: vec![format!("{p}_finger")],
    };
    RobotConfig {
        base_link: "base_link".into(),
        left: arm("l"),
        right: arm("r"),
    }
}

/// Axis-aligned cuboid OBJ centered at the origin, quad faces.
pub fn cuboid_obj(sx: f64, sy: f64, sz: f64) -> String {
    let (hx, hy, hz) = (sx / 2.0, sy / 2.0, sz / 2.0);
    let v = [
        (-hx, -hy, -hz),
        (hx, -hy, -hz),
        (hx, hy, -hz),
        (-hx, hy, -hz),
        (-hx, -hy, hz),
        (hx, -hy, hz),
        (hx, hy, hz),
        (-hx, hy, hz),
    ];
    let mut out = String::from("# cuboid\n");
    for (x, y, z) in v {
        out.push_str(&format!("v {x} {y} {z}\n"));
    }
    // outward-facing quads
    out.push_str("f 1 4 3 2\n"); // -z
    out.push_str("f 5 6 7 8\n"); // +z
    out.push_str("f 1 2 6 5\n"); // -y
    out.push_str("f 3 4 8 7\n"); // +y
    out.push_str("f 2 3 7 6\n"); // +x
    out.push_str("f 4 1 5 8\n"); // -x
    out
}

/// Write the dual-arm URDF, robot config, and link meshes under `dir` and
/// load the resulting model.
pub fn write_dual_arm_fixture(dir: &Path) -> std::io::Result<RobotModel> {
    let meshes = dir.join("meshes");
    std::fs::create_dir_all(&meshes)?;
    let shapes: &[(&str, (f64, f64, f64))] = &[
        ("base", (0.30, 0.80, 0.10)),
        ("seg_short", (0.06, 0.06, 0.07)),
        ("seg_long", (0.40, 0.05, 0.05)),
        ("seg_mid", (0.28, 0.045, 0.045)),
        ("seg_wrist", (0.16, 0.04, 0.04)),
        ("seg_tiny", (0.10, 0.035, 0.035)),
        ("finger", (0.04, 0.02, 0.02)),
    ];
    for (name, (sx, sy, sz)) in shapes {
        std::fs::write(meshes.join(format!("{name}.obj")), cuboid_obj(*sx, *sy, *sz))?;
    }
    let urdf = dual_arm_urdf();
    std::fs::write(dir.join("robot.urdf"), &urdf)?;
    let config = dual_arm_config();
    config
        .save(&dir.join("robot_config.json"))
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    load_robot_model(&urdf, &config, dir).map_err(|e| std::io::Error::other(e.to_string()))
}

/// A nominal mid-workspace arm posture for the dual-arm fixture.
pub fn dual_arm_home() -> [f64; crate::kinematics::DOF] {
    let mut q = [0.0; crate::kinematics::DOF];
    // both arms: elbow bent, end effector in front of the base
    for base in [0, 7] {
        q[base] = 0.0;
        q[base + 1] = 0.9;
        q[base + 2] = -1.6;
        q[base + 3] = 0.0;
        q[base + 4] = 0.7;
        q[base + 5] = 0.0;
    }
    q
}

/// Smooth synthetic joint trajectory around the home posture, built from
/// low-frequency sinusoids so every frame stays well inside the limits.
pub fn smooth_trajectory(frames: usize, phase_seed: u64) -> crate::kinematics::JointTrajectory {
    use crate::kinematics::DOF;
    let home = dual_arm_home();
    let phase = phase_seed as f64 * 0.7;
    let mut rows = Vec::with_capacity(frames);
    for t in 0..frames {
        let s = t as f64 / frames.max(2) as f64;
        let mut row = [0.0; DOF];
        for c in 0..DOF {
            if c == 6 || c == 13 {
                // gripper: slow open/close ramp
                row[c] = 0.02 + 0.015 * (2.0 * std::f64::consts::PI * s).sin();
            } else {
                // low-frequency: locally monotonic almost everywhere, so a
                // short median filter is close to the identity on it
                let amp = 0.25;
                let freq = 0.3 + (c % 3) as f64 * 0.1;
                row[c] = home[c]
                    + amp * (2.0 * std::f64::consts::PI * freq * s + phase + c as f64).sin() * 0.5;
            }
        }
        rows.push(row);
    }
    crate::kinematics::JointTrajectory::new(rows).expect("finite by construction")
}

/// Camera posed at `eye` (robot base frame, z up) looking at `target`,
/// with the usual z-forward / y-down optical convention.
pub fn look_at_camera(
    eye: nalgebra::Vector3<f64>,
    target: nalgebra::Vector3<f64>,
    width: u32,
    height: u32,
) -> crate::geometry::CameraModel {
    use nalgebra::{Matrix3, Vector3};
    let z_cam = (target - eye).normalize();
    let up = Vector3::new(0.0, 0.0, 1.0);
    let x_cam = (-up).cross(&z_cam).normalize();
    let y_cam = z_cam.cross(&x_cam);
    // rows of the base->camera rotation are the camera axes in base coords
    let rot = Matrix3::from_rows(&[x_cam.transpose(), y_cam.transpose(), z_cam.transpose()]);
    let mut cam = crate::geometry::CameraModel::test_camera(width, height);
    cam.extrinsic = crate::geometry::RigidTransform::new(rot, -(rot * eye));
    cam
}

/// Constant-depth plane with a smooth sinusoidal texture filling the image,
/// used by the reprojection and metrics suites.
pub fn textured_plane_frame(camera: &crate::geometry::CameraModel, depth_m: f64) -> RgbdFrame {
    let (w, h) = (camera.width, camera.height);
    let mut frame = RgbdFrame::empty(w, h);
    let stored = (depth_m / camera.depth_scale).round() as u16;
    for y in 0..h {
        for x in 0..w {
            let i = frame.index(x, y);
            let (u, v) = (x as f64 / w as f64, y as f64 / h as f64);
            let r = 0.5 + 0.45 * (2.0 * std::f64::consts::PI * 1.5 * u).sin();
            let g = 0.5 + 0.45 * (2.0 * std::f64::consts::PI * 2.5 * v).cos();
            let b = 0.5 + 0.45 * (2.0 * std::f64::consts::PI * (u + v)).sin();
            frame.rgb[i] = [
                (r * 255.0).round() as u8,
                (g * 255.0).round() as u8,
                (b * 255.0).round() as u8,
            ];
            frame.depth.data[i] = stored;
            frame.validity[i] = true;
        }
    }
    frame
}

/// Camera placement used by the episode fixture: off to the side, looking
/// at the arms, with the textured plane behind them.
pub fn fixture_episode_camera(width: u32, height: u32) -> crate::geometry::CameraModel {
    look_at_camera(
        nalgebra::Vector3::new(-0.6, 0.0, 0.9),
        nalgebra::Vector3::new(0.6, 0.0, 0.0),
        width,
        height,
    )
}

/// Complete synthetic source episode: the dual-arm robot moving along a
/// smooth trajectory in front of a textured constant-depth plane, with
/// per-frame robot masks and a couple of opaque wrist files.
pub fn synthetic_episode(
    model: &RobotModel,
    cache: &crate::rendering::MeshCache,
    camera: &crate::geometry::CameraModel,
    frames: usize,
    phase_seed: u64,
) -> crate::dataset::Episode {
    let trajectory = smooth_trajectory(frames, phase_seed);
    let backdrop = textured_plane_frame(camera, 1.8);
    let robot = crate::rendering::render_robot_video(
        model,
        cache,
        &trajectory,
        camera,
        &crate::rendering::RenderOptions::default(),
    )
    .expect("fixture trajectory renders");
    let composed: Vec<RgbdFrame> = robot
        .iter()
        .map(|r| {
            crate::imageops::naive_compose(&backdrop, r, camera.depth_scale)
                .expect("matching dimensions")
        })
        .collect();
    crate::dataset::Episode {
        id: format!("fixture-{phase_seed}"),
        camera: camera.clone(),
        trajectory,
        frames: composed,
        robot_masks: Some(robot.into_iter().map(|r| r.mask).collect()),
        wrist: vec![
            crate::dataset::WristFile {
                name: "wrist_left.bin".into(),
                bytes: vec![1, 2, 3, 4, 5],
            },
            crate::dataset::WristFile {
                name: "wrist_right.bin".into(),
                bytes: vec![9, 8, 7],
            },
        ],
        provenance: crate::dataset::Provenance::Source,
        repair_model: None,
        config: None,
    }
}
