use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::KinematicsError;
use crate::geometry::RigidTransform;

use super::{Arm, RobotModel};

/// One escalation stage: convergence tolerances and the LM iteration budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkStage {
    pub pos_tol: f64,
    pub rot_tol: f64,
    pub max_iters: usize,
}

/// Tolerance-escalation schedule for the damped least-squares solver.
/// Stage tolerances must be strictly increasing (each stage only loosens).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IkSchedule {
    pub stages: Vec<IkStage>,
    pub restarts_per_stage: usize,
    pub lambda_init: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Per-joint freeze flags; frozen joints stay at their init values.
    #[serde(default)]
    pub mask: Option<Vec<bool>>,
}

impl Default for IkSchedule {
    fn default() -> Self {
        IkSchedule {
            stages: vec![
                IkStage {
                    pos_tol: 1e-3,
                    rot_tol: 1e-2,
                    max_iters: 100,
                },
                IkStage {
                    pos_tol: 5e-3,
                    rot_tol: 5e-2,
                    max_iters: 100,
                },
                IkStage {
                    pos_tol: 1e-2,
                    rot_tol: 1e-1,
                    max_iters: 200,
                },
            ],
            restarts_per_stage: 5,
            lambda_init: 1e-3,
            lambda_up: 10.0,
            lambda_down: 10.0,
            lambda_min: 1e-9,
            lambda_max: 1e3,
            mask: None,
        }
    }
}

impl IkSchedule {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if self.stages.is_empty() {
            return Err(KinematicsError::InvalidSchedule("no stages".into()));
        }
        for w in self.stages.windows(2) {
            if !(w[1].pos_tol > w[0].pos_tol && w[1].rot_tol > w[0].rot_tol) {
                return Err(KinematicsError::InvalidSchedule(
                    "stage tolerances must be strictly increasing".into(),
                ));
            }
        }
        if self.stages.iter().any(|s| s.max_iters == 0) || self.restarts_per_stage == 0 {
            return Err(KinematicsError::InvalidSchedule(
                "iteration and restart counts must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, KinematicsError> {
        let text = std::fs::read_to_string(path).map_err(|e| KinematicsError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let s: IkSchedule = serde_json::from_str(&text)
            .map_err(|e| KinematicsError::Parse(format!("{}: {e}", path.display())))?;
        s.validate()?;
        Ok(s)
    }

    /// Loosest tolerances of the schedule.
    pub fn final_stage(&self) -> IkStage {
        *self.stages.last().expect("validated schedule")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IkStatus {
    /// Converged within the tolerances of stage `stage` (0-based).
    Converged { stage: usize },
    /// Frame was filled by joint-space interpolation at the trajectory level.
    InterpolationFilled,
    Failed,
}

impl IkStatus {
    pub fn is_converged(&self) -> bool {
        matches!(self, IkStatus::Converged { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkResult {
    pub joints: Vec<f64>,
    pub status: IkStatus,
    pub pos_error: f64,
    pub rot_error: f64,
}

/// Pose residual: position difference in meters stacked with the axis-angle
/// vector of `R_target * R_current^T`.
fn pose_residual(target: &RigidTransform, current: &RigidTransform) -> DVector<f64> {
    let dp = target.translation() - current.translation();
    let rel = RigidTransform::new(
        target.rotation_matrix() * current.rotation_matrix().transpose(),
        Vector3::zeros(),
    );
    let dw = rel.rotation_log();
    DVector::from_vec(vec![dp.x, dp.y, dp.z, dw.x, dw.y, dw.z])
}

/// Geometric Jacobian of the end-effector pose, base frame, one column per
/// actuated chain joint. Rows 0-2 are linear velocity, rows 3-5 angular.
pub fn geometric_jacobian(model: &RobotModel, arm: Arm, joints: &[f64]) -> DMatrix<f64> {
    let chain = model.arm(arm);
    let poses = model.chain_poses(arm, joints);
    let p_e = poses.ee.translation();
    let mut jac = DMatrix::zeros(6, chain.dof());
    for (col, &ji) in chain.joints.iter().enumerate() {
        let z = poses.joint_axes[col];
        match model.joints[ji].kind {
            super::JointKind::Revolute => {
                let lin = z.cross(&(p_e - poses.joint_origins[col]));
                for r in 0..3 {
                    jac[(r, col)] = lin[r];
                    jac[(r + 3, col)] = z[r];
                }
            }
            super::JointKind::Prismatic => {
                for r in 0..3 {
                    jac[(r, col)] = z[r];
                }
            }
            super::JointKind::Fixed => unreachable!("fixed joints are never actuated"),
        }
    }
    jac
}

/// Damped least-squares (Levenberg-Marquardt) IK with tolerance escalation
/// and seeded random restarts. Deterministic for identical inputs and seed.
pub fn solve_ik(
    model: &RobotModel,
    arm: Arm,
    target: &RigidTransform,
    init: &[f64],
    schedule: &IkSchedule,
    seed: u64,
) -> Result<IkResult, KinematicsError> {
    schedule.validate()?;
    let chain = model.arm(arm);
    assert_eq!(init.len(), chain.dof(), "init length");
    model.forward_kinematics(arm, init)?; // limit check on init
    if let Some(mask) = &schedule.mask {
        if mask.len() != chain.dof() {
            return Err(KinematicsError::InvalidSchedule(format!(
                "mask length {} does not match chain DoF {}",
                mask.len(),
                chain.dof()
            )));
        }
    }

    let limits = model.joint_limits(arm);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut best: Option<IkResult> = None;
    for (stage_idx, stage) in schedule.stages.iter().enumerate() {
        // first attempt from init, then uniform restarts within limits
        for attempt in 0..=schedule.restarts_per_stage {
            let start: Vec<f64> = if attempt == 0 {
                init.to_vec()
            } else {
                limits
                    .iter()
                    .enumerate()
                    .map(|(i, &(lo, hi))| {
                        let v = rng.gen_range(lo..=hi);
                        if schedule.mask.as_ref().is_some_and(|m| m[i]) {
                            init[i]
                        } else {
                            v
                        }
                    })
                    .collect()
            };
            let (q, pos_err, rot_err) =
                lm_minimize(model, arm, target, &start, init, stage, schedule, &limits);
            if pos_err <= stage.pos_tol && rot_err <= stage.rot_tol {
                return Ok(IkResult {
                    joints: q,
                    status: IkStatus::Converged { stage: stage_idx },
                    pos_error: pos_err,
                    rot_error: rot_err,
                });
            }
            let candidate = IkResult {
                joints: q,
                status: IkStatus::Failed,
                pos_error: pos_err,
                rot_error: rot_err,
            };
            let better = match &best {
                None => true,
                Some(b) => pos_err + rot_err < b.pos_error + b.rot_error,
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    Ok(best.expect("at least one attempt ran"))
}

#[allow(clippy::too_many_arguments)]
fn lm_minimize(
    model: &RobotModel,
    arm: Arm,
    target: &RigidTransform,
    start: &[f64],
    init: &[f64],
    stage: &IkStage,
    schedule: &IkSchedule,
    limits: &[(f64, f64)],
) -> (Vec<f64>, f64, f64) {
    let n = start.len();
    let mask = schedule.mask.as_deref();
    let clamp = |q: &mut Vec<f64>| {
        for i in 0..n {
            if mask.is_some_and(|m| m[i]) {
                q[i] = init[i];
            } else {
                q[i] = q[i].clamp(limits[i].0, limits[i].1);
            }
        }
    };

    let mut q = start.to_vec();
    clamp(&mut q);
    let mut lambda = schedule.lambda_init;
    let mut residual = pose_residual(target, &model.fk_unchecked(arm, &q));
    let mut cost = residual.norm_squared();

    for _ in 0..stage.max_iters {
        let pos_err = residual.rows(0, 3).norm();
        let rot_err = residual.rows(3, 3).norm();
        if pos_err <= stage.pos_tol && rot_err <= stage.rot_tol {
            break;
        }
        let mut jac = geometric_jacobian(model, arm, &q);
        if let Some(m) = mask {
            for (i, &frozen) in m.iter().enumerate() {
                if frozen {
                    jac.column_mut(i).fill(0.0);
                }
            }
        }
        let jt = jac.transpose();
        let mut normal = &jt * &jac;
        for i in 0..n {
            normal[(i, i)] += lambda;
        }
        let rhs = &jt * &residual;
        let step = match normal.cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => {
                lambda = (lambda * schedule.lambda_up).min(schedule.lambda_max);
                continue;
            }
        };
        let mut q_new = q.clone();
        for i in 0..n {
            q_new[i] += step[i];
        }
        clamp(&mut q_new);
        let residual_new = pose_residual(target, &model.fk_unchecked(arm, &q_new));
        let cost_new = residual_new.norm_squared();
        if cost_new < cost {
            q = q_new;
            residual = residual_new;
            cost = cost_new;
            lambda = (lambda / schedule.lambda_down).max(schedule.lambda_min);
        } else {
            lambda = (lambda * schedule.lambda_up).min(schedule.lambda_max);
            if lambda >= schedule.lambda_max && cost_new >= cost {
                // saturated damping cannot make progress
                break;
            }
        }
    }
    let pos_err = residual.rows(0, 3).norm();
    let rot_err = residual.rows(3, 3).norm();
    (q, pos_err, rot_err)
}

/// Position/orientation error between an FK pose and a target.
pub fn pose_error(target: &RigidTransform, actual: &RigidTransform) -> (f64, f64) {
    let r = pose_residual(target, actual);
    (r.rows(0, 3).norm(), r.rows(3, 3).norm())
}
