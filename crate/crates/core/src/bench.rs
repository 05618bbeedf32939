//! Throughput measurements for rendering, sensing and stepping.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::env::{Action, Channel, Env, EnvConfig, EnvError, TaskKind};
use crate::physics::{step_world, ControlCommands};
use crate::render::{render, Camera, FlowSource, PresetName, RenderPreset};
use crate::scene::Scene;
use crate::sensors::{lidar_scan_clean, scan_to_occupancy, sensor_pose, GridConfig, LidarConfig};

/// Rates in Hz over a set of timed samples. `mean` is samples over total time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

impl RateStats {
    pub fn from_durations(samples: &[Duration]) -> Self {
        // Guard against timer resolution producing zero-length samples.
        let secs: Vec<f64> = samples.iter().map(|d| d.as_secs_f64().max(1e-9)).collect();
        let total: f64 = secs.iter().sum();
        let slowest = secs.iter().copied().fold(0.0, f64::max);
        let fastest = secs.iter().copied().fold(f64::INFINITY, f64::min);
        if secs.is_empty() {
            return RateStats { mean: 0.0, min: 0.0, max: 0.0, samples: 0 };
        }
        RateStats { mean: secs.len() as f64 / total, min: 1.0 / slowest, max: 1.0 / fastest, samples: secs.len() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderRow {
    pub modality: String,
    /// `None` for range sensors, which do not depend on the render preset.
    pub preset: Option<PresetName>,
    pub fps: RateStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub preset: PresetName,
    pub hz: RateStats,
    /// Simulated seconds per wall-clock second.
    pub realtime_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub scene: String,
    pub objects: usize,
    pub steps: usize,
    pub render: Vec<RenderRow>,
    pub physics_substep: RateStats,
    /// Env-step physics alone (all substeps, no sensing).
    pub physics_step: RateStats,
    pub physics_realtime_factor: f64,
    pub full_step: Vec<StepRow>,
}

impl BenchReport {
    pub fn full_step_for(&self, preset: PresetName) -> Option<&StepRow> {
        self.full_step.iter().find(|r| r.preset == preset)
    }

    pub fn render_for(&self, modality: &str, preset: Option<PresetName>) -> Option<&RenderRow> {
        self.render.iter().find(|r| r.modality == modality && r.preset == preset)
    }

    /// Every rate row, labelled.
    pub fn rows(&self) -> Vec<(String, RateStats)> {
        let mut rows: Vec<(String, RateStats)> = self.render.iter().map(|r| (format!("{} {}", r.modality, preset_label(r.preset)), r.fps)).collect();
        rows.push(("physics substep".into(), self.physics_substep));
        rows.push(("physics step".into(), self.physics_step));
        rows.extend(self.full_step.iter().map(|r| (format!("full step {}", preset_label(Some(r.preset))), r.hz)));
        rows
    }

    /// Plain-text tables: render rates, then step rates.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scene {} ({} objects), {} samples per row", self.scene, self.objects, self.steps);
        let _ = writeln!(s, "{:<14} {:<13} {:>10} {:>10} {:>10}", "modality", "preset", "mean fps", "max fps", "min fps");
        for r in &self.render {
            let _ = writeln!(s, "{:<14} {:<13} {:>10.1} {:>10.1} {:>10.1}", r.modality, preset_label(r.preset), r.fps.mean, r.fps.max, r.fps.min);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<28} {:>10} {:>10}", "step", "mean Hz", "realtime");
        let _ = writeln!(s, "{:<28} {:>10.1} {:>10}", "physics substep", self.physics_substep.mean, "-");
        let _ = writeln!(s, "{:<28} {:>10.1} {:>9.2}x", "physics only", self.physics_step.mean, self.physics_realtime_factor);
        for r in &self.full_step {
            let _ = writeln!(s, "{:<28} {:>10.1} {:>9.2}x", format!("full step {}", preset_label(Some(r.preset))), r.hz.mean, r.realtime_factor);
        }
        s
    }
}

fn preset_label(p: Option<PresetName>) -> &'static str {
    match p {
        Some(PresetName::VisualRL) => "visualrl",
        Some(PresetName::HighFidelity) => "highfidelity",
        None => "-",
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

/// Constant drive used while measuring: a slow arc so views keep changing.
const BENCH_DRIVE: (f64, f64) = (0.3, 0.5);

fn bench_env(scene: &Scene, preset: PresetName, channels: &[Channel]) -> Result<Env, EnvError> {
    let mut config = EnvConfig::new(scene.clone(), TaskKind::PointGoal).with_sensors(channels);
    config.task.params.min_distance = 0.0;
    config.preset = preset;
    config.max_steps = u64::MAX;
    let mut env = Env::new(config)?;
    env.reset(0)?;
    Ok(env)
}

/// Measures every modality and step rate, `steps` samples each.
pub fn run_bench(scene: &Scene, presets: &[PresetName], steps: usize) -> Result<BenchReport, EnvError> {
    let steps = steps.max(1);
    let env = bench_env(scene, PresetName::VisualRL, &[])?;
    let world = env.world();
    let snap = world.snapshot();
    let base = env.robot().base;
    let mut rows = vec![];

    for &preset in presets {
        let p = RenderPreset::named(preset);
        let cam = |i: usize| {
            let mut b = base;
            b.yaw += std::f64::consts::TAU * i as f64 / steps as f64;
            Camera::robot_view(&b, &env.config().robot, p.width, p.height)
        };
        let render_err = |e: crate::render::RenderError| EnvError::Render(e.to_string());
        let mut plain = vec![];
        let mut flow = vec![];
        for i in 0..steps {
            let (r, d) = timed(|| render(&snap, &world.scene.lights, &cam(i), &p, None));
            r.map_err(render_err)?;
            plain.push(d);
            let prev = cam(i.wrapping_sub(1));
            let (r, d) = timed(|| render(&snap, &world.scene.lights, &cam(i), &p, Some(FlowSource { snapshot: &snap, camera: &prev })));
            r.map_err(render_err)?;
            flow.push(d);
        }
        // Color, depth, normals and both segmentations come from one pass.
        rows.push(RenderRow { modality: "camera".into(), preset: Some(preset), fps: RateStats::from_durations(&plain) });
        rows.push(RenderRow { modality: "camera+flow".into(), preset: Some(preset), fps: RateStats::from_durations(&flow) });
    }

    for (name, cfg) in [("lidar 1-beam", LidarConfig::default()), ("lidar 16-beam", LidarConfig::sixteen_beam())] {
        let pose = sensor_pose(&base.placement(), &cfg);
        let samples: Vec<Duration> = (0..steps).map(|_| timed(|| lidar_scan_clean(&snap, &pose, &cfg)).1).collect();
        rows.push(RenderRow { modality: name.into(), preset: None, fps: RateStats::from_durations(&samples) });
    }
    let lidar = LidarConfig::default();
    let pose = sensor_pose(&base.placement(), &lidar);
    let grid = GridConfig::centered([base.x, base.y], env.config().occupancy.size, env.config().occupancy.resolution);
    let samples: Vec<Duration> = (0..steps)
        .map(|_| timed(|| scan_to_occupancy(&lidar_scan_clean(&snap, &pose, &lidar), &pose, grid.clone())).1)
        .collect();
    rows.push(RenderRow { modality: "occupancy".into(), preset: None, fps: RateStats::from_durations(&samples) });

    let cmds = ControlCommands { linear: BENCH_DRIVE.0, angular: BENCH_DRIVE.1, arm_target: None };
    let mut single = world.clone();
    single.config.substeps_per_step = 1;
    let physics = |w: &crate::physics::World, n: usize| {
        let mut state = env.state().clone();
        (0..n)
            .map(|_| {
                let ((next, _), d) = timed(|| step_world(w, &state, &cmds));
                state = next;
                d
            })
            .collect::<Vec<_>>()
    };
    let physics_substep = RateStats::from_durations(&physics(&single, steps * world.config.substeps_per_step as usize));
    let physics_step = RateStats::from_durations(&physics(world, steps));
    let step_dt = f64::from(world.config.substeps_per_step) * world.state.substep_dt;

    let mut full_step = vec![];
    for &preset in presets {
        let mut env = bench_env(scene, preset, &[Channel::Rgb, Channel::Depth])?;
        let action = Action::Base { linear: BENCH_DRIVE.0, angular: BENCH_DRIVE.1 };
        let mut samples = vec![];
        let mut episode = 0;
        while samples.len() < steps {
            let (r, d) = timed(|| env.step(&action));
            samples.push(d);
            if r?.done {
                episode += 1;
                env.reset(episode)?;
            }
        }
        let hz = RateStats::from_durations(&samples);
        full_step.push(StepRow { preset, hz, realtime_factor: hz.mean * step_dt });
    }

    Ok(BenchReport {
        scene: scene.name.clone(),
        objects: scene.objects.len(),
        steps,
        render: rows,
        physics_substep,
        physics_step,
        physics_realtime_factor: physics_step.mean * step_dt,
        full_step,
    })
}
