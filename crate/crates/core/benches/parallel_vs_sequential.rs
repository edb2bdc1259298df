use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use roomgen::geometry::{accessible_grid, rasterize_bev, render_depth_labels, CameraIntrinsics, CameraPose, Vec3};
use roomgen::layout::OptimizerSchedule;
use roomgen::planner::{all_targets, plan_trajectory, TrajectoryParams};
use roomgen::synth::count_program;
use roomgen::{optimize_layout, par, parse_program, AssetCatalog, SceneState};

fn scene() -> SceneState {
    let cat = AssetCatalog::builtin();
    let p = parse_program(&count_program(20, 0), &cat).unwrap();
    optimize_layout(&p, &cat, &OptimizerSchedule::with_seed(0)).unwrap().scene
}

// Each workload runs twice: on the default pool and pinned to one worker.
fn both<R: Send>(c: &mut Criterion, name: &str, f: impl Fn() -> R + Sync + Send) {
    let mut g = c.benchmark_group(name);
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("parallel", ""), |b| b.iter(|| black_box(f())));
    g.bench_function(BenchmarkId::new("sequential", ""), |b| b.iter(|| par::single_threaded(|| black_box(f()))));
    g.finish();
}

fn bench_render(c: &mut Criterion) {
    let s = scene();
    let (lo, hi) = s.room.bounds();
    let eye = Vec3::new(lo.x + 0.3, lo.y + 0.3, 1.2);
    let pose = CameraPose::looking_at(eye, Vec3::new(hi.x, hi.y, 0.5));
    let k = CameraIntrinsics::with_square_pixels(90f64.to_radians(), 640, 480);
    both(c, "render_640x480", || render_depth_labels(&s, &pose, &k).unwrap());
}

fn bench_grids(c: &mut Criterion) {
    let s = scene();
    both(c, "accessible_grid", || accessible_grid(&s, 0.05, 0.25).unwrap());
    both(c, "bev_raster", || rasterize_bev(&s, 0.02).unwrap());
}

fn bench_plan(c: &mut Criterion) {
    let s = scene();
    let params = TrajectoryParams::default();
    let targets = all_targets(&s);
    both(c, "plan_trajectory", || plan_trajectory(&s, &targets, &params, 3).unwrap());
}

fn bench_seeds(c: &mut Criterion) {
    let cat = AssetCatalog::builtin();
    let p = parse_program(&count_program(20, 1), &cat).unwrap();
    both(c, "optimize_8_seeds", || {
        par::map_range(8, |s| optimize_layout(&p, &cat, &OptimizerSchedule::with_seed(s as u64)).unwrap().stats.steps)
    });
}

criterion_group!(benches, bench_render, bench_grids, bench_plan, bench_seeds);
criterion_main!(benches);
