//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use homesim::env::{Env, EnvConfig, TaskKind};
use homesim::physics::{PhysicsConfig, RobotSpec, World};
use homesim::render::PresetName;
use homesim::scene::procedural::furnished_room;
use homesim::scene::Scene;

/// Object count used throughout; the performance target is stated for this size.
pub const OBJECTS: usize = 50;

pub fn scene() -> Scene {
    furnished_room(OBJECTS, 1)
}

pub fn world() -> World {
    World::new(Arc::new(scene()), RobotSpec::default(), PhysicsConfig::default())
}

/// Reset PointGoal environment rendering RGB and depth at `preset`.
pub fn env(preset: PresetName) -> Env {
    use homesim::env::Channel;
    let mut config = EnvConfig::new(scene(), TaskKind::PointGoal).with_sensors(&[Channel::Rgb, Channel::Depth]);
    config.preset = preset;
    config.task.params.min_distance = 0.0;
    config.max_steps = u64::MAX;
    let mut env = Env::new(config).expect("fixture config is valid");
    env.reset(0).expect("fixture resets");
    env
}
