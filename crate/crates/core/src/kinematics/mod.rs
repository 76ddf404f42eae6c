//! Robot model, forward kinematics over the kinematic chain, and the damped
//! least-squares inverse kinematics solver.

mod ik;
mod trajectory;
mod urdf;

pub use ik::{geometric_jacobian, pose_error, solve_ik, IkResult, IkSchedule, IkStage, IkStatus};
pub use trajectory::JointTrajectory;
pub use urdf::{load_robot_model, ArmConfig, RobotConfig};

use std::collections::HashMap;
use std::path::PathBuf;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::KinematicsError;
use crate::geometry::RigidTransform;

pub const ARM_DOF: usize = 6;
/// Channel layout of a trajectory frame: [L6, Lg, R6, Rg].
pub const DOF: usize = 14;
pub const LEFT_GRIPPER_CHANNEL: usize = 6;
pub const RIGHT_GRIPPER_CHANNEL: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Left,
    Right,
}

impl Arm {
    pub fn label(&self) -> &'static str {
        match self {
            Arm::Left => "L",
            Arm::Right => "R",
        }
    }

    /// Index range of this arm's joint channels in a 14-DoF frame.
    pub fn joint_channels(&self) -> std::ops::Range<usize> {
        match self {
            Arm::Left => 0..6,
            Arm::Right => 7..13,
        }
    }

    pub fn gripper_channel(&self) -> usize {
        match self {
            Arm::Left => LEFT_GRIPPER_CHANNEL,
            Arm::Right => RIGHT_GRIPPER_CHANNEL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
    Fixed,
}

#[derive(Debug, Clone)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub parent: usize,
    pub child: usize,
    pub origin: RigidTransform,
    pub axis: Vector3<f64>,
    /// Required for revolute/prismatic joints.
    pub limits: Option<(f64, f64)>,
}

impl Joint {
    /// Local transform contributed by this joint at value `q`.
    fn local_transform(&self, q: f64) -> RigidTransform {
        match self.kind {
            JointKind::Fixed => self.origin,
            JointKind::Revolute => {
                let rot = Matrix3::from(nalgebra::Rotation3::from_scaled_axis(self.axis * q));
                self.origin
                    .compose(&RigidTransform::new(rot, Vector3::zeros()))
            }
            JointKind::Prismatic => self
                .origin
                .compose(&RigidTransform::from_translation(self.axis * q)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinkVisual {
    pub mesh_path: PathBuf,
    pub origin: RigidTransform,
    /// RGB in [0,1]; default gray when the URDF gives no material.
    pub color: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct Link {
    pub name: String,
    pub visual: Option<LinkVisual>,
}

#[derive(Debug, Clone)]
pub struct ArmChain {
    pub mount_link: usize,
    pub ee_link: usize,
    /// Joint indices from mount towards the end effector, in chain order.
    /// Six for the dual-arm robots; test fixtures may use fewer.
    pub joints: Vec<usize>,
    /// Joints driven by the single gripper channel.
    pub gripper_joints: Vec<usize>,
}

impl ArmChain {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }
}

/// Kinematic tree plus per-arm chain metadata. Immutable after load.
#[derive(Debug, Clone)]
pub struct RobotModel {
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
    pub base_link: usize,
    left: ArmChain,
    right: ArmChain,
    /// children[link] = joints whose parent is `link`, in declaration order.
    children: Vec<Vec<usize>>,
    /// parent_joint[link] = joint whose child is `link` (None for the base).
    parent_joint: Vec<Option<usize>>,
}

impl RobotModel {
    pub(crate) fn build(
        links: Vec<Link>,
        joints: Vec<Joint>,
        base_link: usize,
        left: ArmChain,
        right: ArmChain,
    ) -> Self {
        let mut children = vec![Vec::new(); links.len()];
        let mut parent_joint = vec![None; links.len()];
        for (ji, j) in joints.iter().enumerate() {
            children[j.parent].push(ji);
            parent_joint[j.child] = Some(ji);
        }
        RobotModel {
            links,
            joints,
            base_link,
            left,
            right,
            children,
            parent_joint,
        }
    }

    pub fn arm(&self, arm: Arm) -> &ArmChain {
        match arm {
            Arm::Left => &self.left,
            Arm::Right => &self.right,
        }
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn joint_limits(&self, arm: Arm) -> Vec<(f64, f64)> {
        self.arm(arm)
            .joints
            .iter()
            .map(|&ji| self.joints[ji].limits.expect("actuated limits"))
            .collect()
    }

    /// Mount pose of an arm in the robot base frame (fixed ancestors only).
    pub fn mount_pose(&self, arm: Arm) -> RigidTransform {
        let mount = self.arm(arm).mount_link;
        let path = self.path_to_base(mount);
        let mut pose = RigidTransform::identity();
        for &ji in &path {
            pose = pose.compose(&self.joints[ji].local_transform(0.0));
        }
        pose
    }

    /// Joint indices from the base link down to `link`, in chain order.
    fn path_to_base(&self, link: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut current = link;
        while current != self.base_link {
            let ji = self.parent_joint[current].expect("validated tree");
            path.push(ji);
            current = self.joints[ji].parent;
        }
        path.reverse();
        path
    }

    fn check_limits(&self, arm: Arm, joints: &[f64]) -> Result<(), KinematicsError> {
        let chain = self.arm(arm);
        assert_eq!(joints.len(), chain.dof(), "joint vector length");
        for (i, &q) in joints.iter().enumerate() {
            let j = &self.joints[chain.joints[i]];
            let (lo, hi) = j.limits.expect("actuated limits");
            if !(q >= lo && q <= hi) {
                return Err(KinematicsError::JointOutOfLimits {
                    joint: j.name.clone(),
                    value: q,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(())
    }

    /// End-effector pose in the robot base frame.
    pub fn forward_kinematics(
        &self,
        arm: Arm,
        joints: &[f64],
    ) -> Result<RigidTransform, KinematicsError> {
        self.check_limits(arm, joints)?;
        Ok(self.fk_unchecked(arm, joints))
    }

    /// FK without the limit check; the IK inner loop clamps to limits itself.
    pub(crate) fn fk_unchecked(&self, arm: Arm, joints: &[f64]) -> RigidTransform {
        self.chain_poses(arm, joints).ee
    }

    /// Poses of each actuated joint frame plus the end effector, base frame.
    pub(crate) fn chain_poses(&self, arm: Arm, joints: &[f64]) -> ChainPoses {
        let chain = self.arm(arm);
        let path = self.path_to_base(chain.ee_link);
        let mut pose = RigidTransform::identity();
        let mut joint_origins = vec![Vector3::zeros(); chain.dof()];
        let mut joint_axes = vec![Vector3::zeros(); chain.dof()];
        for &ji in &path {
            let joint = &self.joints[ji];
            if let Some(slot) = chain.joints.iter().position(|&a| a == ji) {
                // record the joint frame before applying its motion
                let at_joint = pose.compose(&joint.origin);
                joint_origins[slot] = at_joint.translation();
                joint_axes[slot] = at_joint.rotate(&joint.axis);
                pose = pose.compose(&joint.local_transform(joints[slot]));
            } else {
                pose = pose.compose(&joint.local_transform(0.0));
            }
        }
        ChainPoses {
            ee: pose,
            joint_origins,
            joint_axes,
        }
    }

    /// Pose of every link in the base frame for a full 14-DoF configuration.
    pub fn link_poses(
        &self,
        config: &[f64; DOF],
    ) -> Result<HashMap<String, RigidTransform>, KinematicsError> {
        self.validate_config(config)?;
        Ok(self.link_poses_unchecked(config))
    }

    pub(crate) fn link_poses_unchecked(
        &self,
        config: &[f64; DOF],
    ) -> HashMap<String, RigidTransform> {
        let values = self.joint_values(config);
        let mut poses = HashMap::with_capacity(self.links.len());
        let mut stack = vec![(self.base_link, RigidTransform::identity())];
        while let Some((link, pose)) = stack.pop() {
            for &ji in &self.children[link] {
                let joint = &self.joints[ji];
                let child_pose = pose.compose(&joint.local_transform(values[ji]));
                stack.push((joint.child, child_pose));
            }
            poses.insert(self.links[link].name.clone(), pose);
        }
        poses
    }

    /// Per-joint values for a full configuration; unlisted joints sit at zero.
    fn joint_values(&self, config: &[f64; DOF]) -> Vec<f64> {
        let mut values = vec![0.0; self.joints.len()];
        for arm in [Arm::Left, Arm::Right] {
            let chain = self.arm(arm);
            let q = arm_joints(config, arm);
            for (slot, &ji) in chain.joints.iter().enumerate() {
                values[ji] = q[slot];
            }
            let g = config[arm.gripper_channel()];
            for &ji in &chain.gripper_joints {
                let (lo, hi) = self.joints[ji].limits.unwrap_or((f64::MIN, f64::MAX));
                values[ji] = g.clamp(lo, hi);
            }
        }
        values
    }

    /// Validate the arm-joint channels of a full configuration.
    pub fn validate_config(&self, config: &[f64; DOF]) -> Result<(), KinematicsError> {
        for arm in [Arm::Left, Arm::Right] {
            let q = arm_joints(config, arm);
            self.check_limits(arm, &q[..self.arm(arm).dof()])?;
        }
        Ok(())
    }
}

pub(crate) struct ChainPoses {
    pub ee: RigidTransform,
    pub joint_origins: Vec<Vector3<f64>>,
    pub joint_axes: Vec<Vector3<f64>>,
}

/// Extract one arm's joint channels from a 14-DoF frame. For chains with
/// fewer than 6 joints only the leading entries are meaningful.
pub fn arm_joints(config: &[f64; DOF], arm: Arm) -> [f64; ARM_DOF] {
    let r = arm.joint_channels();
    std::array::from_fn(|i| config[r.start + i])
}
