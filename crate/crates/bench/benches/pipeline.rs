//! Benchmarks for the hot paths of the viewpoint-shift pipeline: point
//! splatting, triangle rasterization, IK solving, and whole-frame
//! double reprojection.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use egoshift_core::fixtures::{textured_plane_frame, write_dual_arm_fixture};
use egoshift_core::geometry::{CameraModel, EgoMotion};
use egoshift_core::imageops::hole_fill;
use egoshift_core::kinematics::{solve_ik, Arm, IkSchedule};
use egoshift_core::rendering::{rasterize_triangles, SceneTriangle};
use egoshift_core::reprojection::{double_reproject, project_zbuffer, PointCloud};
use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cloud = PointCloud::default();
    for _ in 0..n {
        let z = rng.gen_range(0.4..4.5);
        let x = rng.gen_range(-0.7..0.7) * z;
        let y = rng.gen_range(-0.7..0.7) * z;
        cloud.points.push(Vector3::new(x, y, z));
        cloud.colors.push([
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
        ]);
    }
    cloud
}

fn random_scene(n: usize, seed: u64) -> Vec<SceneTriangle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let center = Vector3::new(
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
                rng.gen_range(0.5..3.0),
            );
            let vertex = |rng: &mut ChaCha8Rng| {
                center
                    + Vector3::new(
                        rng.gen_range(-0.4..0.4),
                        rng.gen_range(-0.4..0.4),
                        rng.gen_range(-0.3..0.3),
                    )
            };
            SceneTriangle {
                vertices: [vertex(&mut rng), vertex(&mut rng), vertex(&mut rng)],
                color: [
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                ],
            }
        })
        .collect()
}

fn bench_splatting(c: &mut Criterion) {
    let cam = CameraModel::test_camera(320, 240);
    let cloud = random_cloud(320 * 240, 1);
    c.bench_function("splat 76.8k points to 320x240", |b| {
        b.iter(|| project_zbuffer(black_box(&cloud), &cam))
    });
}

fn bench_rasterizer(c: &mut Criterion) {
    let cam = CameraModel::test_camera(320, 240);
    let scene = random_scene(500, 2);
    c.bench_function("rasterize 500 triangles at 320x240", |b| {
        b.iter(|| rasterize_triangles(black_box(&scene), &cam))
    });
}

fn bench_ik(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let model = write_dual_arm_fixture(dir.path()).unwrap();
    let limits = model.joint_limits(Arm::Left);
    let schedule = IkSchedule::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q: Vec<f64> = limits
        .iter()
        .map(|(lo, hi)| rng.gen_range(*lo..*hi))
        .collect();
    let target = model.forward_kinematics(Arm::Left, &q).unwrap();
    let init: Vec<f64> = q
        .iter()
        .zip(&limits)
        .map(|(v, (lo, hi))| (v + rng.gen_range(-0.3..0.3)).clamp(*lo, *hi))
        .collect();
    c.bench_function("IK solve, perturbed init", |b| {
        b.iter(|| solve_ik(&model, Arm::Left, black_box(&target), &init, &schedule, 0))
    });
}

fn bench_double_reprojection(c: &mut Criterion) {
    let cam = CameraModel::test_camera(320, 240);
    let frame = textured_plane_frame(&cam, 1.5);
    let motion = EgoMotion::new(0.06, -0.04, 5f64.to_radians());
    c.bench_function("double-reproject 320x240 frame", |b| {
        b.iter(|| double_reproject(black_box(&frame), &cam, &motion))
    });
    let holey = double_reproject(&frame, &cam, &motion);
    c.bench_function("hole-fill 320x240 frame", |b| {
        b.iter(|| hole_fill(black_box(&holey)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_splatting,
    bench_rasterizer,
    bench_ik,
    bench_double_reprojection
);
criterion_main!(benches);
