//! Action retargeting: transplant a joint trajectory recorded at the source
//! viewpoint onto a displaced robot base so the end effectors keep tracing
//! the same world-frame motion. FK gives the original tool poses, the ego
//! motion maps them into the displaced base frame, and damped least-squares
//! IK recovers joint angles; failed frames are interpolated and converged
//! ones optionally median-smoothed.

use rayon::prelude::*;

use crate::error::{KinematicsError, RetargetError};
use crate::geometry::{EgoMotion, RigidTransform};
use crate::kinematics::{
    arm_joints, pose_error, solve_ik, Arm, IkSchedule, IkStatus, JointTrajectory, RobotModel, DOF,
};

/// Hard-error threshold: more than this fraction of unsolvable frames on
/// either arm aborts the retarget instead of interpolating through them.
pub const DEFAULT_FAILURE_THRESHOLD: f64 = 0.5;

/// Default median-filter window (frames) for converged joint sequences.
pub const DEFAULT_SMOOTHING_WINDOW: usize = 5;

#[derive(Debug, Clone)]
pub struct ArmReport {
    /// Final per-frame status, in trajectory order.
    pub status: Vec<IkStatus>,
    /// Errors of converged frames against their targets, before smoothing.
    pub max_pos_error: f64,
    pub mean_pos_error: f64,
    pub max_rot_error: f64,
    pub mean_rot_error: f64,
    /// Frames filled by joint-space interpolation.
    pub filled: usize,
}

impl ArmReport {
    pub fn converged(&self) -> usize {
        self.status.iter().filter(|s| s.is_converged()).count()
    }
}

#[derive(Debug, Clone)]
pub struct RetargetReport {
    pub frames: usize,
    pub left: ArmReport,
    pub right: ArmReport,
}

impl RetargetReport {
    pub fn arm(&self, arm: Arm) -> &ArmReport {
        match arm {
            Arm::Left => &self.left,
            Arm::Right => &self.right,
        }
    }
}

/// Retarget a trajectory to the viewpoint displaced by `motion`.
///
/// Per arm and frame: FK under the original joints, target = `T_v * pose`,
/// then IK seeded from the original joints. Converged frames are median
/// filtered per channel across the converged subsequence (window
/// `smoothing_window`, odd, 1 disables); frames that failed every IK stage
/// are filled by linear interpolation between their nearest converged
/// neighbors (held at the ends). Gripper channels pass through bitwise.
pub fn retarget_trajectory(
    model: &RobotModel,
    trajectory: &JointTrajectory,
    motion: &EgoMotion,
    schedule: &IkSchedule,
    smoothing_window: usize,
    failure_threshold: f64,
    seed: u64,
) -> Result<(JointTrajectory, RetargetReport), RetargetError> {
    schedule.validate()?;
    if smoothing_window == 0 || smoothing_window % 2 == 0 {
        return Err(KinematicsError::InvalidSchedule(format!(
            "smoothing window must be odd and >= 1, got {smoothing_window}"
        ))
        .into());
    }
    trajectory.validate_against(model)?;
    let t_v = motion.to_base_transform();
    let n = trajectory.frames.len();

    let mut frames = trajectory.frames.clone();
    let mut reports = Vec::with_capacity(2);
    for arm in [Arm::Left, Arm::Right] {
        let chain_dof = model.arm(arm).dof();
        let results: Vec<_> = (0..n)
            .into_par_iter()
            .map(|t| {
                let q = arm_joints(&trajectory.frames[t], arm);
                let q = &q[..chain_dof];
                let pose = model.forward_kinematics(arm, q).expect("validated frames");
                let target = t_v.compose(&pose);
                let frame_seed = per_frame_seed(seed, arm, t);
                solve_ik(model, arm, &target, q, schedule, frame_seed).expect("validated inputs")
            })
            .collect();

        let mut status: Vec<IkStatus> = results.iter().map(|r| r.status).collect();
        let failed = status.iter().filter(|s| !s.is_converged()).count();
        let report_errors = |status: &[IkStatus]| {
            let mut max_p = 0.0f64;
            let mut max_r = 0.0f64;
            let (mut sum_p, mut sum_r, mut count) = (0.0f64, 0.0f64, 0usize);
            for (r, s) in results.iter().zip(status) {
                if s.is_converged() {
                    max_p = max_p.max(r.pos_error);
                    max_r = max_r.max(r.rot_error);
                    sum_p += r.pos_error;
                    sum_r += r.rot_error;
                    count += 1;
                }
            }
            let denom = count.max(1) as f64;
            (max_p, sum_p / denom, max_r, sum_r / denom)
        };
        let (max_pos_error, mean_pos_error, max_rot_error, mean_rot_error) =
            report_errors(&status);

        if failed as f64 > failure_threshold * n as f64 {
            return Err(RetargetError::TooManyFailures {
                arm: arm.label(),
                failed,
                total: n,
                threshold: failure_threshold * 100.0,
            });
        }

        // joint sequence: converged frames carry IK output, others the
        // original joints until interpolation fill replaces them
        let mut joints: Vec<Vec<f64>> = results.iter().map(|r| r.joints.clone()).collect();
        median_filter_converged(&mut joints, &status, smoothing_window);
        fill_failed_frames(&mut joints, &mut status);

        let channels = arm.joint_channels();
        for t in 0..n {
            for (slot, value) in joints[t].iter().enumerate() {
                frames[t][channels.start + slot] = *value;
            }
            // gripper channel left untouched: bitwise pass-through
        }
        reports.push(ArmReport {
            filled: status
                .iter()
                .filter(|s| **s == IkStatus::InterpolationFilled)
                .count(),
            status,
            max_pos_error,
            mean_pos_error,
            max_rot_error,
            mean_rot_error,
        });
    }

    let right = reports.pop().expect("two arms");
    let left = reports.pop().expect("two arms");
    let report = RetargetReport {
        frames: n,
        left,
        right,
    };
    let mut out = JointTrajectory::new(frames).map_err(RetargetError::Kinematics)?;
    out.timestamps = trajectory.timestamps.clone();
    Ok((out, report))
}

fn per_frame_seed(seed: u64, arm: Arm, frame: usize) -> u64 {
    let arm_bit = match arm {
        Arm::Left => 0u64,
        Arm::Right => 1u64,
    };
    seed ^ (frame as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(arm_bit.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Median filter each joint channel across the subsequence of converged
/// frames; failed frames neither contribute nor change.
fn median_filter_converged(joints: &mut [Vec<f64>], status: &[IkStatus], window: usize) {
    if window <= 1 {
        return;
    }
    let converged: Vec<usize> = status
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_converged())
        .map(|(i, _)| i)
        .collect();
    if converged.is_empty() {
        return;
    }
    let dof = joints[converged[0]].len();
    let half = window / 2;
    let mut filtered: Vec<Vec<f64>> = Vec::with_capacity(converged.len());
    for (k, &_t) in converged.iter().enumerate() {
        // shrink the window symmetrically near the ends so the median stays
        // centered and never phase-shifts the sequence
        let h = half.min(k).min(converged.len() - 1 - k);
        let (lo, hi) = (k - h, k + h);
        let mut row = vec![0.0; dof];
        let mut values: Vec<f64> = Vec::with_capacity(hi - lo + 1);
        for (c, slot) in row.iter_mut().enumerate() {
            values.clear();
            values.extend(converged[lo..=hi].iter().map(|&i| joints[i][c]));
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite joints"));
            *slot = values[values.len() / 2];
        }
        filtered.push(row);
    }
    for (k, &t) in converged.iter().enumerate() {
        joints[t] = filtered[k].clone();
    }
}

/// Replace failed frames by linear interpolation between the nearest
/// converged frames on each side; ends are held at the nearest neighbor.
fn fill_failed_frames(joints: &mut [Vec<f64>], status: &mut [IkStatus]) {
    let n = joints.len();
    let converged: Vec<usize> = status
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_converged())
        .map(|(i, _)| i)
        .collect();
    debug_assert!(!converged.is_empty(), "threshold check ran first");
    for t in 0..n {
        if status[t].is_converged() {
            continue;
        }
        let prev = converged.iter().rev().find(|&&i| i < t).copied();
        let next = converged.iter().find(|&&i| i > t).copied();
        joints[t] = match (prev, next) {
            (Some(a), Some(b)) => {
                let alpha = (t - a) as f64 / (b - a) as f64;
                joints[a]
                    .iter()
                    .zip(&joints[b])
                    .map(|(&qa, &qb)| qa + alpha * (qb - qa))
                    .collect()
            }
            (Some(a), None) => joints[a].clone(),
            (None, Some(b)) => joints[b].clone(),
            (None, None) => unreachable!("threshold check guarantees a converged frame"),
        };
        status[t] = IkStatus::InterpolationFilled;
    }
}

/// Per-frame deviation between the retargeted trajectory's FK and the
/// transformed original targets. `pos`/`rot` are the worse of the two arms.
#[derive(Debug, Clone, Copy)]
pub struct PoseDeviation {
    pub pos: f64,
    pub rot: f64,
}

#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub deviations: Vec<PoseDeviation>,
    pub max_pos: f64,
    pub max_rot: f64,
}

impl ReplayReport {
    /// Fraction of frames with both errors under the given thresholds.
    pub fn fraction_within(&self, pos_tol: f64, rot_tol: f64) -> f64 {
        if self.deviations.is_empty() {
            return 1.0;
        }
        let ok = self
            .deviations
            .iter()
            .filter(|d| d.pos <= pos_tol && d.rot <= rot_tol)
            .count();
        ok as f64 / self.deviations.len() as f64
    }
}

/// Compare `FK(retargeted)` against `T_v * FK(original)` frame by frame.
pub fn replay_consistency_check(
    model: &RobotModel,
    original: &JointTrajectory,
    retargeted: &JointTrajectory,
    motion: &EgoMotion,
) -> Result<ReplayReport, RetargetError> {
    if original.frames.len() != retargeted.frames.len() {
        return Err(RetargetError::LengthMismatch {
            left: original.frames.len(),
            right: retargeted.frames.len(),
        });
    }
    original.validate_against(model)?;
    retargeted.validate_against(model)?;
    let t_v = motion.to_base_transform();
    let mut deviations = Vec::with_capacity(original.frames.len());
    let mut max_pos = 0.0f64;
    let mut max_rot = 0.0f64;
    for (qo, qr) in original.frames.iter().zip(&retargeted.frames) {
        let mut dev = PoseDeviation { pos: 0.0, rot: 0.0 };
        for arm in [Arm::Left, Arm::Right] {
            let dof = model.arm(arm).dof();
            let target = t_v.compose(&fk_arm(model, arm, qo, dof));
            let actual = fk_arm(model, arm, qr, dof);
            let (p, r) = pose_error(&target, &actual);
            dev.pos = dev.pos.max(p);
            dev.rot = dev.rot.max(r);
        }
        max_pos = max_pos.max(dev.pos);
        max_rot = max_rot.max(dev.rot);
        deviations.push(dev);
    }
    Ok(ReplayReport {
        deviations,
        max_pos,
        max_rot,
    })
}

fn fk_arm(model: &RobotModel, arm: Arm, frame: &[f64; DOF], dof: usize) -> RigidTransform {
    let q = arm_joints(frame, arm);
    model
        .forward_kinematics(arm, &q[..dof])
        .expect("validated frames")
}
