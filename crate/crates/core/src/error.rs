use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid camera model: {0}")]
    InvalidCamera(&'static str),
    #[error("invalid {component} range [{lower}, {upper}]")]
    InvalidRange {
        component: &'static str,
        lower: f64,
        upper: f64,
    },
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad calibration file {path}: {detail}")]
    Calibration { path: PathBuf, detail: String },
}

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("URDF parse error: {0}")]
    Parse(String),
    #[error("joint cycle detected involving {joints:?}")]
    Cycle { joints: Vec<String> },
    #[error("link {child} has multiple parent joints ({first}, {second})")]
    MultipleParents {
        child: String,
        first: String,
        second: String,
    },
    #[error("dangling link reference {link} in joint {joint}")]
    DanglingLink { link: String, joint: String },
    #[error("actuated joint {joint} is missing finite limits")]
    MissingLimit { joint: String },
    #[error("joint {joint} limits inverted: lower {lower} >= upper {upper}")]
    InvertedLimits {
        joint: String,
        lower: f64,
        upper: f64,
    },
    #[error("joint {joint} value {value} outside limits [{lower}, {upper}]")]
    JointOutOfLimits {
        joint: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("unknown joint {0} in robot config")]
    UnknownJoint(String),
    #[error("unknown link {0}")]
    UnknownLink(String),
    #[error("arm {arm} chain from {mount} to {ee} is disconnected at joint {joint}")]
    BrokenChain {
        arm: String,
        mount: String,
        ee: String,
        joint: String,
    },
    #[error("trajectory frame {frame}: {source}")]
    TrajectoryFrame {
        frame: usize,
        #[source]
        source: Box<KinematicsError>,
    },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("non-finite value at trajectory frame {frame}, channel {channel}")]
    NonFiniteTrajectory { frame: usize, channel: usize },
    #[error("invalid IK schedule: {0}")]
    InvalidSchedule(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum RetargetError {
    #[error("{0}")]
    Kinematics(#[from] KinematicsError),
    #[error(
        "retargeting failed: {failed} of {total} frames unsolvable for arm {arm} \
         (threshold {threshold:.0}%)"
    )]
    TooManyFailures {
        arm: &'static str,
        failed: usize,
        total: usize,
        threshold: f64,
    },
    #[error("trajectory length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: u32,
        expected_h: u32,
        got_w: u32,
        got_h: u32,
    },
    #[error("frame has no valid pixels")]
    NoValidPixels,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed mesh file {path}: {detail}")]
    Malformed { path: PathBuf, detail: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("sequence length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("image {0}x{1} smaller than the {2}x{2} SSIM window")]
    TooSmall(u32, u32, u32),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("schema version mismatch: found {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("trajectory length {trajectory} does not match frame count {frames}")]
    LengthMismatch { trajectory: usize, frames: usize },
    #[error("missing calibration file at {0}")]
    MissingCalibration(PathBuf),
    #[error("missing {role} frame {index} in {dir}")]
    MissingFrame {
        role: &'static str,
        index: usize,
        dir: PathBuf,
    },
    #[error("checksum mismatch for {file}")]
    ChecksumMismatch { file: String },
    #[error("repaired video has {got} frames, episode has {expected}")]
    RepairedCountMismatch { got: usize, expected: usize },
    #[error("not enough generated episodes: need {needed}, have {available}")]
    MixShortfall { needed: usize, available: usize },
    #[error("invalid mix ratio {0:?}")]
    InvalidRatio(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("{0}")]
    Geometry(#[from] GeometryError),
    #[error("{0}")]
    Kinematics(#[from] KinematicsError),
    #[error("{0}")]
    Retarget(#[from] RetargetError),
    #[error("{0}")]
    Frame(#[from] FrameError),
    #[error("image error in {path}: {detail}")]
    Image { path: PathBuf, detail: String },
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad manifest {path}: {detail}")]
    Manifest { path: PathBuf, detail: String },
}

impl DatasetError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }
}
