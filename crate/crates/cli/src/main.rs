//! `egoshift` — command-line pipeline turning single-viewpoint egocentric
//! robot demonstrations into paired novel-viewpoint demonstrations.
//!
//! Exit codes: 0 success, 2 usage error, 3 data/schema error, 4 numerical
//! failure (e.g. the retargeting failure threshold was exceeded). Errors are
//! printed to stderr as one machine-parseable line: `error[<class>] <detail>`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use egoshift_core::dataset::{
    attach_repaired_video, generate_novel_episode, load_episode, make_training_pairs,
    mix_datasets, save_episode, save_training_pair, GenerateConfig, MixGroup,
};
use egoshift_core::error::{
    DatasetError, FrameError, GeometryError, KinematicsError, MetricsError, RetargetError,
};
use egoshift_core::geometry::{
    camera_relative_transform, sample_ego_motion, EgoMotion, ViewpointRange,
};
use egoshift_core::kinematics::{load_robot_model, IkSchedule, JointTrajectory, RobotConfig, RobotModel};
use egoshift_core::metrics::video_metrics;
use egoshift_core::rendering::{render_robot_video, MeshCache, RenderOptions};
use egoshift_core::reprojection::{load_rgb_png, reproject_frame, save_mask_png, write_rgb_png};
use egoshift_core::retarget::{replay_consistency_check, retarget_trajectory, RetargetReport};

#[derive(Parser)]
#[command(
    name = "egoshift",
    version,
    about = "Generate paired novel-egocentric-viewpoint robot demonstrations"
)]
struct Cli {
    /// Worker threads for frame- and episode-parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the built-in dual-arm robot and a synthetic demo episode.
    Fixture(FixtureArgs),
    /// Retarget an episode's joint trajectory to a displaced base.
    Retarget(RetargetArgs),
    /// Reproject an episode's frames to a novel viewpoint.
    Reproject(ReprojectArgs),
    /// Render the robot video (rgb, mask, depth) for an episode.
    RenderRobot(RenderRobotArgs),
    /// Run the full pipeline: retarget, reproject, hole-fill, render, compose.
    Generate(GenerateArgs),
    /// Emit double-reprojection training pairs for the repair model.
    MakePairs(MakePairsArgs),
    /// Attach an externally repaired observation video to an episode.
    Attach(AttachArgs),
    /// Build a data-mix manifest from standard and generated episode pools.
    Mix(MixArgs),
    /// Compare two frame directories with PSNR/SSIM.
    EvalVideo(EvalVideoArgs),
    /// Check a retargeted episode's poses against the transformed originals.
    ReplayCheck(ReplayCheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Profile {
    /// 320x240 frames; dx, dy in [-0.1, 0.1] m, yaw in [-10, 10] deg.
    Sim,
    /// 640x480 frames; dx limited to [-0.1, 0.0] m (no forward motion).
    Real,
}

impl Profile {
    fn range(self) -> ViewpointRange {
        match self {
            Profile::Sim => ViewpointRange::sim_profile(),
            Profile::Real => ViewpointRange::real_profile(),
        }
    }

    fn resolution(self) -> (u32, u32) {
        match self {
            Profile::Sim => (320, 240),
            Profile::Real => (640, 480),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Profile::Sim => "sim",
            Profile::Real => "real",
        }
    }
}

/// Shared knobs for the commands that run the retargeting solver.
#[derive(Args)]
struct SolverArgs {
    /// IK schedule JSON file (defaults to the built-in escalation schedule).
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Median-filter window over converged frames (odd; 1 disables).
    #[arg(long, default_value_t = egoshift_core::retarget::DEFAULT_SMOOTHING_WINDOW)]
    smoothing_window: usize,
    /// Abort when this fraction of frames fails every IK stage.
    #[arg(long, default_value_t = egoshift_core::retarget::DEFAULT_FAILURE_THRESHOLD)]
    failure_threshold: f64,
}

impl SolverArgs {
    fn schedule(&self) -> Result<IkSchedule, CliError> {
        match &self.schedule {
            None => Ok(IkSchedule::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError {
                    class: ErrorClass::Data,
                    message: format!("cannot read schedule {}: {e}", path.display()),
                })?;
                serde_json::from_str(&text).map_err(|e| CliError {
                    class: ErrorClass::Data,
                    message: format!("bad schedule {}: {e}", path.display()),
                })
            }
        }
    }
}

#[derive(Args)]
struct MotionArgs {
    /// Base displacement dx in meters.
    #[arg(long, allow_hyphen_values = true)]
    dx: f64,
    /// Base displacement dy in meters.
    #[arg(long, allow_hyphen_values = true)]
    dy: f64,
    /// Base yaw in degrees.
    #[arg(long, allow_hyphen_values = true)]
    dtheta_deg: f64,
}

impl MotionArgs {
    fn motion(&self) -> EgoMotion {
        EgoMotion::new(self.dx, self.dy, self.dtheta_deg.to_radians())
    }
}

#[derive(Args)]
struct FixtureArgs {
    /// Output directory (receives robot/ and episode/).
    #[arg(long)]
    out: PathBuf,
    /// Number of frames in the demo episode.
    #[arg(long, default_value_t = 20)]
    frames: usize,
    /// Frame width (defaults to a small fast size; use --profile for full-size frames).
    #[arg(long, default_value_t = 80)]
    width: u32,
    /// Frame height.
    #[arg(long, default_value_t = 80)]
    height: u32,
    /// Use a profile's full resolution instead of --width/--height.
    #[arg(long)]
    profile: Option<Profile>,
    /// Trajectory phase seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RetargetArgs {
    #[arg(long)]
    episode: PathBuf,
    /// Robot directory containing robot.urdf and robot_config.json.
    #[arg(long)]
    robot: PathBuf,
    #[command(flatten)]
    motion: MotionArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReprojectArgs {
    #[arg(long)]
    episode: PathBuf,
    #[command(flatten)]
    motion: MotionArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderRobotArgs {
    #[arg(long)]
    episode: PathBuf,
    #[arg(long)]
    robot: PathBuf,
    /// Override trajectory file (defaults to the episode's own).
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// RGB supersampling factor.
    #[arg(long, default_value_t = 1)]
    supersample: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    episode: PathBuf,
    #[arg(long)]
    robot: PathBuf,
    /// Explicit motion as dx,dy,dtheta-deg (e.g. "0.05,-0.1,5").
    #[arg(long, conflicts_with_all = ["sample", "range"])]
    motion: Option<String>,
    /// Sample the motion uniformly from the profile range instead.
    #[arg(long, requires = "range")]
    sample: bool,
    /// Viewpoint range profile for --sample.
    #[arg(long, value_enum)]
    range: Option<Profile>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Robot-mask dilation radius in pixels.
    #[arg(long, default_value_t = egoshift_core::dataset::DEFAULT_MASK_DILATION)]
    mask_dilation: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (receives episode/ and bundle/).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MakePairsArgs {
    #[arg(long)]
    episode: PathBuf,
    #[arg(long)]
    robot: PathBuf,
    /// Viewpoint range profile for motion sampling.
    #[arg(long, value_enum)]
    range: Profile,
    /// Number of pairs to emit.
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = egoshift_core::dataset::DEFAULT_MASK_DILATION)]
    mask_dilation: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AttachArgs {
    #[arg(long)]
    episode: PathBuf,
    /// Directory of repaired frames named rgb_0000.png, rgb_0001.png, ...
    #[arg(long)]
    repaired: PathBuf,
    /// Repair-model identifier recorded in the output manifest
    /// (default: read from the repaired directory's manifest, else "unknown").
    #[arg(long)]
    repair_model: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MixArgs {
    /// Directory whose episode subdirectories form the standard pool.
    #[arg(long)]
    standard: PathBuf,
    /// Directory whose episode subdirectories form the generated pool.
    #[arg(long)]
    generated: PathBuf,
    /// standard:generated ratio, e.g. 1:0, 1:0.5, 1:1, 1:3.
    #[arg(long)]
    ratio: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output manifest file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalVideoArgs {
    /// Predicted frames: a directory of rgb_*.png (or an episode directory).
    #[arg(long)]
    pred: PathBuf,
    /// Reference frames, same layout.
    #[arg(long = "ref")]
    reference: PathBuf,
}

#[derive(Args)]
struct ReplayCheckArgs {
    /// Source episode directory.
    #[arg(long)]
    original: PathBuf,
    /// Retargeted episode directory (motion read from its provenance).
    #[arg(long)]
    retargeted: PathBuf,
    #[arg(long)]
    robot: PathBuf,
    /// Position tolerance in meters for the reported fraction.
    #[arg(long, default_value_t = 5e-3)]
    pos_tol: f64,
    /// Rotation tolerance in radians for the reported fraction.
    #[arg(long, default_value_t = 5e-2)]
    rot_tol: f64,
    /// Fail (exit 4) when the within-tolerance fraction drops below this.
    #[arg(long)]
    min_fraction: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl ErrorClass {
    fn tag(self) -> &'static str {
        match self {
            ErrorClass::Usage => "usage",
            ErrorClass::Data => "data",
            ErrorClass::Numerical => "numerical",
        }
    }

    fn code(self) -> u8 {
        match self {
            ErrorClass::Usage => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numerical => 4,
        }
    }
}

struct CliError {
    class: ErrorClass,
    message: String,
}

fn usage_error(message: impl Into<String>) -> CliError {
    CliError {
        class: ErrorClass::Usage,
        message: message.into(),
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let class = match &e {
            DatasetError::Retarget(r) => return r.clone_class(e.to_string()),
            DatasetError::Frame(FrameError::NoValidPixels) => ErrorClass::Numerical,
            DatasetError::InvalidRatio(_) => ErrorClass::Usage,
            DatasetError::Kinematics(KinematicsError::InvalidSchedule(_)) => ErrorClass::Usage,
            _ => ErrorClass::Data,
        };
        CliError {
            class,
            message: e.to_string(),
        }
    }
}

trait RetargetClass {
    fn clone_class(&self, message: String) -> CliError;
}

impl RetargetClass for RetargetError {
    fn clone_class(&self, message: String) -> CliError {
        let class = match self {
            RetargetError::TooManyFailures { .. } => ErrorClass::Numerical,
            RetargetError::Kinematics(KinematicsError::InvalidSchedule(_)) => ErrorClass::Usage,
            _ => ErrorClass::Data,
        };
        CliError { class, message }
    }
}

impl From<RetargetError> for CliError {
    fn from(e: RetargetError) -> Self {
        let message = e.to_string();
        e.clone_class(message)
    }
}

impl From<KinematicsError> for CliError {
    fn from(e: KinematicsError) -> Self {
        let class = match &e {
            KinematicsError::InvalidSchedule(_) => ErrorClass::Usage,
            _ => ErrorClass::Data,
        };
        CliError {
            class,
            message: e.to_string(),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        let class = match &e {
            GeometryError::InvalidRange { .. } => ErrorClass::Usage,
            _ => ErrorClass::Data,
        };
        CliError {
            class,
            message: e.to_string(),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError {
            class: ErrorClass::Data,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error[usage] --jobs must be at least 1");
            return ExitCode::from(2);
        }
        // ignore failure: the pool can only be initialized once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}] {}", e.class.tag(), e.message);
            ExitCode::from(e.class.code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Fixture(a) => cmd_fixture(a),
        Command::Retarget(a) => cmd_retarget(a),
        Command::Reproject(a) => cmd_reproject(a),
        Command::RenderRobot(a) => cmd_render_robot(a),
        Command::Generate(a) => cmd_generate(a),
        Command::MakePairs(a) => cmd_make_pairs(a),
        Command::Attach(a) => cmd_attach(a),
        Command::Mix(a) => cmd_mix(a),
        Command::EvalVideo(a) => cmd_eval_video(a),
        Command::ReplayCheck(a) => cmd_replay_check(a),
    }
}

fn load_robot(dir: &Path) -> Result<(RobotModel, MeshCache), CliError> {
    let urdf_path = dir.join("robot.urdf");
    let urdf = std::fs::read_to_string(&urdf_path).map_err(|e| CliError {
        class: ErrorClass::Data,
        message: format!("cannot read {}: {e}", urdf_path.display()),
    })?;
    let config = RobotConfig::load(&dir.join("robot_config.json"))?;
    let model = load_robot_model(&urdf, &config, dir)?;
    let cache = MeshCache::load(&model).map_err(|e| CliError {
        class: ErrorClass::Data,
        message: e.to_string(),
    })?;
    Ok((model, cache))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError {
        class: ErrorClass::Data,
        message: format!("cannot create {}: {e}", path.display()),
    })
}

fn write_json(value: &serde_json::Value, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, serde_json::to_string_pretty(value).expect("json serializes"))
        .map_err(|e| CliError {
            class: ErrorClass::Data,
            message: format!("cannot write {}: {e}", path.display()),
        })
}

fn parse_motion_triplet(text: &str) -> Result<EgoMotion, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(usage_error(format!(
            "--motion expects dx,dy,dtheta-deg, got {text:?}"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage_error(format!("--motion expects three numbers, got {text:?}")))?;
    Ok(EgoMotion::new(nums[0], nums[1], nums[2].to_radians()))
}

fn report_json(report: &RetargetReport, motion: &EgoMotion) -> serde_json::Value {
    let arm = |a: &egoshift_core::retarget::ArmReport| {
        serde_json::json!({
            "converged": a.converged(),
            "filled": a.filled,
            "max_pos_error_m": a.max_pos_error,
            "mean_pos_error_m": a.mean_pos_error,
            "max_rot_error_rad": a.max_rot_error,
            "mean_rot_error_rad": a.mean_rot_error,
        })
    };
    serde_json::json!({
        "frames": report.frames,
        "motion": { "dx_m": motion.dx, "dy_m": motion.dy, "dtheta_rad": motion.dtheta },
        "left": arm(&report.left),
        "right": arm(&report.right),
    })
}

fn cmd_fixture(a: FixtureArgs) -> Result<(), CliError> {
    let (width, height) = a.profile.map_or((a.width, a.height), Profile::resolution);
    let robot_dir = a.out.join("robot");
    create_dir(&robot_dir)?;
    let model = egoshift_core::fixtures::write_dual_arm_fixture(&robot_dir).map_err(|e| {
        CliError {
            class: ErrorClass::Data,
            message: format!("cannot write robot fixture: {e}"),
        }
    })?;
    let cache = MeshCache::load(&model).map_err(|e| CliError {
        class: ErrorClass::Data,
        message: e.to_string(),
    })?;
    let camera = egoshift_core::fixtures::fixture_episode_camera(width, height);
    let mut episode =
        egoshift_core::fixtures::synthetic_episode(&model, &cache, &camera, a.frames, a.seed);
    episode.config = Some(serde_json::json!({
        "command": "fixture",
        "frames": a.frames,
        "width": width,
        "height": height,
        "seed": a.seed,
    }));
    let episode_dir = a.out.join("episode");
    save_episode(&episode, &episode_dir)?;
    println!(
        "fixture robot={} episode={} frames={}",
        robot_dir.display(),
        episode_dir.display(),
        a.frames
    );
    Ok(())
}

fn cmd_retarget(a: RetargetArgs) -> Result<(), CliError> {
    let (model, _cache) = load_robot(&a.robot)?;
    let episode = load_episode(&a.episode)?;
    let motion = a.motion.motion();
    let schedule = a.solver.schedule()?;
    let (trajectory, report) = retarget_trajectory(
        &model,
        &episode.trajectory,
        &motion,
        &schedule,
        a.solver.smoothing_window,
        a.solver.failure_threshold,
        a.seed,
    )?;
    create_dir(&a.out)?;
    trajectory.save(&a.out.join("trajectory.txt"))?;
    let mut report_value = report_json(&report, &motion);
    report_value["config"] = serde_json::json!({
        "command": "retarget",
        "episode": a.episode.display().to_string(),
        "seed": a.seed,
        "smoothing_window": a.solver.smoothing_window,
        "failure_threshold": a.solver.failure_threshold,
    });
    write_json(&report_value, &a.out.join("report.json"))?;
    println!(
        "retarget frames={} left_converged={} right_converged={}",
        report.frames,
        report.left.converged(),
        report.right.converged()
    );
    Ok(())
}

fn cmd_reproject(a: ReprojectArgs) -> Result<(), CliError> {
    let episode = load_episode(&a.episode)?;
    let motion = a.motion.motion();
    let rel = camera_relative_transform(&episode.camera, &motion);
    let frames_dir = a.out.join("frames");
    create_dir(&frames_dir)?;
    use rayon::prelude::*;
    let warped: Vec<_> = episode
        .frames
        .par_iter()
        .map(|f| reproject_frame(f, &episode.camera, &rel))
        .collect();
    for (i, f) in warped.iter().enumerate() {
        f.save_rgb_png(&frames_dir.join(format!("rgb_{i:04}.png")))?;
        f.depth.save_png(&frames_dir.join(format!("depth_{i:04}.png")))?;
        f.save_validity_png(&frames_dir.join(format!("validity_{i:04}.png")))?;
    }
    write_json(
        &serde_json::json!({
            "command": "reproject",
            "episode": a.episode.display().to_string(),
            "motion": { "dx_m": motion.dx, "dy_m": motion.dy, "dtheta_rad": motion.dtheta },
            "frames": warped.len(),
        }),
        &a.out.join("manifest.json"),
    )?;
    println!("reproject frames={}", warped.len());
    Ok(())
}

fn cmd_render_robot(a: RenderRobotArgs) -> Result<(), CliError> {
    let (model, cache) = load_robot(&a.robot)?;
    let episode = load_episode(&a.episode)?;
    let trajectory = match &a.trajectory {
        Some(path) => JointTrajectory::load(path)?,
        None => episode.trajectory.clone(),
    };
    if a.supersample == 0 {
        return Err(usage_error("--supersample must be at least 1"));
    }
    let options = RenderOptions {
        supersample: a.supersample,
    };
    let video = render_robot_video(&model, &cache, &trajectory, &episode.camera, &options)?;
    let frames_dir = a.out.join("frames");
    create_dir(&frames_dir)?;
    for (i, r) in video.iter().enumerate() {
        write_rgb_png(&r.rgb, r.width, r.height, &frames_dir.join(format!("rgb_{i:04}.png")))?;
        save_mask_png(&r.mask, r.width, r.height, &frames_dir.join(format!("mask_{i:04}.png")))?;
        r.depth_map(episode.camera.depth_scale)
            .save_png(&frames_dir.join(format!("depth_{i:04}.png")))?;
    }
    write_json(
        &serde_json::json!({
            "command": "render-robot",
            "episode": a.episode.display().to_string(),
            "frames": video.len(),
            "supersample": a.supersample,
        }),
        &a.out.join("manifest.json"),
    )?;
    println!("render-robot frames={}", video.len());
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> Result<(), CliError> {
    let (model, cache) = load_robot(&a.robot)?;
    let episode = load_episode(&a.episode)?;
    let motion = match (&a.motion, a.sample) {
        (Some(text), false) => parse_motion_triplet(text)?,
        (None, true) => {
            let profile = a.range.expect("clap enforces --range with --sample");
            sample_ego_motion(&profile.range(), a.seed)
        }
        _ => {
            return Err(usage_error(
                "exactly one of --motion or --sample --range <profile> is required",
            ))
        }
    };
    let cfg = GenerateConfig {
        schedule: a.solver.schedule()?,
        smoothing_window: a.solver.smoothing_window,
        failure_threshold: a.solver.failure_threshold,
        mask_dilation: a.mask_dilation,
        render: RenderOptions::default(),
        seed: a.seed,
    };
    let (mut novel, bundle, report) =
        generate_novel_episode(&model, &cache, &episode, &motion, &cfg)?;
    novel.config = Some(serde_json::json!({
        "command": "generate",
        "episode": a.episode.display().to_string(),
        "motion": { "dx_m": motion.dx, "dy_m": motion.dy, "dtheta_rad": motion.dtheta },
        "sampled": a.sample,
        "range": a.range.map(Profile::name),
        "seed": a.seed,
        "smoothing_window": cfg.smoothing_window,
        "failure_threshold": cfg.failure_threshold,
        "mask_dilation": cfg.mask_dilation,
    }));
    save_episode(&novel, &a.out.join("episode"))?;
    bundle.save(&a.out.join("bundle"))?;
    write_json(&report_json(&report, &motion), &a.out.join("report.json"))?;
    println!(
        "generate episode={} bundle={} frames={} motion={},{},{}deg",
        a.out.join("episode").display(),
        a.out.join("bundle").display(),
        novel.len(),
        motion.dx,
        motion.dy,
        motion.dtheta.to_degrees()
    );
    Ok(())
}

fn cmd_make_pairs(a: MakePairsArgs) -> Result<(), CliError> {
    let (model, cache) = load_robot(&a.robot)?;
    let episode = load_episode(&a.episode)?;
    let cfg = GenerateConfig {
        mask_dilation: a.mask_dilation,
        ..GenerateConfig::default()
    };
    let pairs = make_training_pairs(
        &model,
        &cache,
        &episode,
        &a.range.range(),
        a.count,
        &cfg,
        a.seed,
    )?;
    create_dir(&a.out)?;
    for (i, pair) in pairs.iter().enumerate() {
        save_training_pair(pair, &episode.camera, &a.out.join(format!("pair_{i:04}")))?;
    }
    write_json(
        &serde_json::json!({
            "command": "make-pairs",
            "episode": a.episode.display().to_string(),
            "range": a.range.name(),
            "count": a.count,
            "seed": a.seed,
            "mask_dilation": a.mask_dilation,
        }),
        &a.out.join("manifest.json"),
    )?;
    println!("make-pairs count={}", pairs.len());
    Ok(())
}

fn cmd_attach(a: AttachArgs) -> Result<(), CliError> {
    let episode = load_episode(&a.episode)?;
    let mut repaired = Vec::with_capacity(episode.len());
    for i in 0..episode.len() {
        let path = a.repaired.join(format!("rgb_{i:04}.png"));
        if !path.exists() {
            return Err(CliError {
                class: ErrorClass::Data,
                message: format!("missing repaired frame {}", path.display()),
            });
        }
        repaired.push(load_rgb_png(&path)?);
    }
    // reject surplus frames so an off-by-one repaired set cannot slip through
    let surplus = a.repaired.join(format!("rgb_{:04}.png", episode.len()));
    if surplus.exists() {
        return Err(CliError {
            class: ErrorClass::Data,
            message: format!(
                "repaired video has more frames than the episode ({} expected)",
                episode.len()
            ),
        });
    }
    let repair_model = match a.repair_model {
        Some(id) => id,
        None => std::fs::read_to_string(a.repaired.join("manifest.json"))
            .ok()
            .and_then(|text| serde_json::from_str::<serde_json::Value>(&text).ok())
            .and_then(|v| v["repair_model"].as_str().map(String::from))
            .unwrap_or_else(|| "unknown".to_string()),
    };
    let attached = attach_repaired_video(&episode, &repaired, &repair_model)?;
    save_episode(&attached, &a.out)?;
    println!(
        "attach episode={} repair_model={repair_model}",
        a.out.display()
    );
    Ok(())
}

/// Episode ids: names of subdirectories that contain a manifest, sorted.
fn episode_ids(dir: &Path) -> Result<Vec<String>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError {
        class: ErrorClass::Data,
        message: format!("cannot read {}: {e}", dir.display()),
    })?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError {
            class: ErrorClass::Data,
            message: format!("cannot read {}: {e}", dir.display()),
        })?;
        if entry.path().join("manifest.json").exists() {
            ids.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    ids.sort();
    Ok(ids)
}

fn cmd_mix(a: MixArgs) -> Result<(), CliError> {
    let standard = episode_ids(&a.standard)?;
    let generated = episode_ids(&a.generated)?;
    let manifest = mix_datasets(&standard, &generated, &a.ratio, a.seed)?;
    manifest.save(&a.out)?;
    println!(
        "mix standard={} generated={} ratio={} out={}",
        manifest.count(MixGroup::Standard),
        manifest.count(MixGroup::Generated),
        a.ratio,
        a.out.display()
    );
    Ok(())
}

/// Collect rgb_*.png frames from a plain directory or an episode directory.
fn load_video(dir: &Path) -> Result<Vec<(Vec<[u8; 3]>, u32, u32)>, CliError> {
    let frames_dir = if dir.join("frames").is_dir() {
        dir.join("frames")
    } else {
        dir.to_path_buf()
    };
    let mut names: Vec<String> = std::fs::read_dir(&frames_dir)
        .map_err(|e| CliError {
            class: ErrorClass::Data,
            message: format!("cannot read {}: {e}", frames_dir.display()),
        })?
        .filter_map(|entry| {
            let name = entry.ok()?.file_name().to_string_lossy().into_owned();
            (name.starts_with("rgb_") && name.ends_with(".png")).then_some(name)
        })
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(CliError {
            class: ErrorClass::Data,
            message: format!("no rgb_*.png frames in {}", frames_dir.display()),
        });
    }
    names
        .iter()
        .map(|n| Ok(load_rgb_png(&frames_dir.join(n))?))
        .collect()
}

fn format_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

fn cmd_eval_video(a: EvalVideoArgs) -> Result<(), CliError> {
    let pred = load_video(&a.pred)?;
    let reference = load_video(&a.reference)?;
    let metrics = video_metrics(&pred, &reference)?;
    println!("frame psnr_db ssim");
    for (i, m) in metrics.per_frame.iter().enumerate() {
        println!("{i} {} {:.6}", format_db(m.psnr), m.ssim);
    }
    println!(
        "mean {} {:.6}",
        format_db(metrics.mean_psnr),
        metrics.mean_ssim
    );
    Ok(())
}

fn cmd_replay_check(a: ReplayCheckArgs) -> Result<(), CliError> {
    let (model, _cache) = load_robot(&a.robot)?;
    let original = load_episode(&a.original)?;
    let retargeted = load_episode(&a.retargeted)?;
    let motion = *retargeted.provenance.motion().ok_or_else(|| CliError {
        class: ErrorClass::Data,
        message: format!(
            "episode {} has no retargeting provenance (is it a source episode?)",
            a.retargeted.display()
        ),
    })?;
    let report = replay_consistency_check(
        &model,
        &original.trajectory,
        &retargeted.trajectory,
        &motion,
    )?;
    let fraction = report.fraction_within(a.pos_tol, a.rot_tol);
    println!(
        "replay-check frames={} max_pos_m={:.6} max_rot_rad={:.6} fraction_within={:.4} pos_tol={} rot_tol={}",
        report.deviations.len(),
        report.max_pos,
        report.max_rot,
        fraction,
        a.pos_tol,
        a.rot_tol
    );
    if let Some(min) = a.min_fraction {
        if fraction < min {
            return Err(CliError {
                class: ErrorClass::Numerical,
                message: format!("replay fraction {fraction:.4} below required {min}"),
            });
        }
    }
    Ok(())
}
