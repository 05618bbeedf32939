use criterion::{criterion_group, criterion_main, Criterion};
use homesim::render::{render, Camera, PresetName, RenderPreset};
use homesim::sensors::{lidar_scan_clean, scan_to_occupancy, sensor_pose, GridConfig, LidarConfig};

fn camera(c: &mut Criterion) {
    let env = bench::env(PresetName::VisualRL);
    let snap = env.world().snapshot();
    let lights = &env.world().scene.lights;
    let mut g = c.benchmark_group("render");
    g.sample_size(20);
    for name in [PresetName::VisualRL, PresetName::HighFidelity] {
        let preset = RenderPreset::named(name);
        let cam = Camera::robot_view(&env.robot().base, &env.config().robot, preset.width, preset.height);
        g.bench_function(format!("{name:?}"), |b| b.iter(|| render(&snap, lights, &cam, &preset, None).unwrap()));
    }
    g.finish();
}

fn range(c: &mut Criterion) {
    let env = bench::env(PresetName::VisualRL);
    let snap = env.world().snapshot();
    let base = env.robot().base.placement();
    let mut g = c.benchmark_group("range");
    for (name, cfg) in [("lidar_1", LidarConfig::default()), ("lidar_16", LidarConfig::sixteen_beam())] {
        let pose = sensor_pose(&base, &cfg);
        g.bench_function(name, |b| b.iter(|| lidar_scan_clean(&snap, &pose, &cfg)));
    }
    let cfg = LidarConfig::default();
    let pose = sensor_pose(&base, &cfg);
    let scan = lidar_scan_clean(&snap, &pose, &cfg);
    let grid = GridConfig::centered([base.x, base.y], 10.0, 0.05);
    g.bench_function("occupancy", |b| b.iter(|| scan_to_occupancy(&scan, &pose, grid.clone())));
    g.finish();
}

criterion_group!(benches, camera, range);
criterion_main!(benches);
