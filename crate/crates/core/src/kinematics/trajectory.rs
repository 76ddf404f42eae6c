use std::path::Path;

use crate::error::KinematicsError;

use super::{arm_joints, Arm, RobotModel, DOF};

/// Time-indexed 14-DoF dual-arm sequence, laid out as
/// [L arm joints (rad) x6, L gripper, R arm joints x6, R gripper].
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory {
    pub frames: Vec<[f64; DOF]>,
    pub timestamps: Option<Vec<f64>>,
}

impl JointTrajectory {
    pub fn new(frames: Vec<[f64; DOF]>) -> Result<Self, KinematicsError> {
        let t = Self {
            frames,
            timestamps: None,
        };
        t.check_finite()?;
        Ok(t)
    }

    pub fn with_timestamps(mut self, timestamps: Vec<f64>) -> Self {
        assert_eq!(timestamps.len(), self.frames.len());
        self.timestamps = Some(timestamps);
        self
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    fn check_finite(&self) -> Result<(), KinematicsError> {
        if self.frames.is_empty() {
            return Err(KinematicsError::EmptyTrajectory);
        }
        for (fi, frame) in self.frames.iter().enumerate() {
            for (ci, v) in frame.iter().enumerate() {
                if !v.is_finite() {
                    return Err(KinematicsError::NonFiniteTrajectory {
                        frame: fi,
                        channel: ci,
                    });
                }
            }
        }
        Ok(())
    }

    /// Check every arm-joint value against the model's limits, reporting the
    /// offending frame index.
    pub fn validate_against(&self, model: &RobotModel) -> Result<(), KinematicsError> {
        self.check_finite()?;
        for (fi, frame) in self.frames.iter().enumerate() {
            for arm in [Arm::Left, Arm::Right] {
                let q = arm_joints(frame, arm);
                if let Err(e) = model
                    .forward_kinematics(arm, &q[..model.arm(arm).dof()])
                    .map(|_| ())
                {
                    return Err(KinematicsError::TrajectoryFrame {
                        frame: fi,
                        source: Box::new(e),
                    });
                }
            }
        }
        Ok(())
    }

    /// Plain-text table: one row per frame, 14 joint columns plus an optional
    /// trailing timestamp column. Values round-trip bitwise (shortest f64).
    pub fn save(&self, path: &Path) -> Result<(), KinematicsError> {
        let mut out = String::new();
        for (fi, frame) in self.frames.iter().enumerate() {
            let mut row: Vec<String> = frame.iter().map(|v| format!("{v}")).collect();
            if let Some(ts) = &self.timestamps {
                row.push(format!("{}", ts[fi]));
            }
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| KinematicsError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, KinematicsError> {
        let text = std::fs::read_to_string(path).map_err(|e| KinematicsError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut frames = Vec::new();
        let mut timestamps: Option<Vec<f64>> = None;
        for (li, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| {
                    KinematicsError::Parse(format!(
                        "{} line {}: {e}",
                        path.display(),
                        li + 1
                    ))
                })?;
            match vals.len() {
                DOF => {
                    if timestamps.is_some() {
                        return Err(KinematicsError::Parse(format!(
                            "{} line {}: inconsistent column count",
                            path.display(),
                            li + 1
                        )));
                    }
                    frames.push(std::array::from_fn(|i| vals[i]));
                }
                n if n == DOF + 1 => {
                    let ts = timestamps.get_or_insert_with(Vec::new);
                    if ts.len() != frames.len() {
                        return Err(KinematicsError::Parse(format!(
                            "{} line {}: inconsistent column count",
                            path.display(),
                            li + 1
                        )));
                    }
                    frames.push(std::array::from_fn(|i| vals[i]));
                    ts.push(vals[DOF]);
                }
                n => {
                    return Err(KinematicsError::Parse(format!(
                        "{} line {}: expected {DOF} or {} columns, got {n}",
                        path.display(),
                        li + 1,
                        DOF + 1
                    )));
                }
            }
        }
        let mut t = Self::new(frames)?;
        t.timestamps = timestamps;
        Ok(t)
    }
}
