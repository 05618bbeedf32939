use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::hash::fnv1a;
use crate::physics::{PhysicsConfig, RobotSpec};
use crate::randomize::RandomizationSpec;
use crate::render::{PresetName, RenderPreset};
use crate::scene::{load_scene, to_canonical_string, Scene, SceneError};
use crate::sensors::LidarConfig;

/// Scene given by file path (relative to the config file) or inline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SceneSource {
    Path(String),
    Inline(Box<Scene>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Rgb,
    Depth,
    Normals,
    Semantic,
    Instance,
    OpticalFlow,
    SceneFlow,
    Lidar,
    Occupancy,
    Velocities,
    Goal,
    Waypoints,
}

impl Channel {
    /// Channels that need a rendered frame.
    pub fn is_frame(self) -> bool {
        matches!(
            self,
            Channel::Rgb | Channel::Depth | Channel::Normals | Channel::Semantic | Channel::Instance | Channel::OpticalFlow | Channel::SceneFlow
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    PointGoal,
    ObjectNav,
    PushJoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskParams {
    /// PointGoal success radius (m).
    pub goal_tolerance: f64,
    /// PointGoal geodesic start-goal distance bounds (m).
    pub min_distance: f64,
    pub max_distance: f64,
    /// ObjectNav target class.
    pub target_class: Option<String>,
    /// PushJoint target object; the first object with a movable joint if absent.
    pub target_object: Option<u32>,
    /// PushJoint success band as a fraction of the joint range.
    pub joint_tolerance: f64,
    /// Waypoint spacing (m) and count for the waypoint channel.
    pub waypoint_spacing: f64,
    pub waypoint_count: usize,
}

impl Default for TaskParams {
    fn default() -> Self {
        TaskParams {
            goal_tolerance: 0.36,
            min_distance: 1.0,
            max_distance: 10.0,
            target_class: None,
            target_object: None,
            joint_tolerance: 0.1,
            waypoint_spacing: 0.5,
            waypoint_count: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    #[serde(default)]
    pub params: TaskParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub success: f64,
    pub progress: f64,
    pub step: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { success: 10.0, progress: 1.0, step: -0.01 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Base,
    Manipulation,
    MobileManipulation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActionSpace {
    pub kind: ActionKind,
    /// Largest end-effector translation per step (m).
    pub max_ee_step: f64,
    /// Largest end-effector yaw change per step (rad).
    pub max_ee_rotation: f64,
}

impl Default for ActionSpace {
    fn default() -> Self {
        ActionSpace { kind: ActionKind::Base, max_ee_step: 0.02, max_ee_rotation: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OccupancyConfig {
    /// Side of the square robot-centered map (m).
    pub size: f64,
    pub resolution: f64,
}

impl Default for OccupancyConfig {
    fn default() -> Self {
        OccupancyConfig { size: 10.0, resolution: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub scene: SceneSource,
    #[serde(default)]
    pub robot: RobotSpec,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub sensors: Vec<Channel>,
    #[serde(default)]
    pub lidar: LidarConfig,
    #[serde(default)]
    pub occupancy: OccupancyConfig,
    #[serde(default = "default_preset")]
    pub preset: PresetName,
    pub task: TaskSpec,
    #[serde(default)]
    pub randomization: RandomizationSpec,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default)]
    pub reward: RewardWeights,
    #[serde(default)]
    pub action_space: ActionSpace,
    /// End the episode when the base is blocked by a collision.
    #[serde(default)]
    pub stop_on_collision: bool,
}

fn default_preset() -> PresetName {
    PresetName::VisualRL
}

fn default_max_steps() -> u64 {
    500
}

impl EnvConfig {
    /// Config with defaults for an inline scene.
    pub fn new(scene: Scene, task: TaskKind) -> Self {
        EnvConfig {
            scene: SceneSource::Inline(Box::new(scene)),
            robot: RobotSpec::default(),
            physics: PhysicsConfig::default(),
            sensors: vec![],
            lidar: LidarConfig::default(),
            occupancy: OccupancyConfig::default(),
            preset: default_preset(),
            task: TaskSpec { kind: task, params: TaskParams::default() },
            randomization: RandomizationSpec::default(),
            max_steps: default_max_steps(),
            reward: RewardWeights::default(),
            action_space: ActionSpace::default(),
            stop_on_collision: false,
        }
    }

    pub fn with_sensors(mut self, sensors: &[Channel]) -> Self {
        self.sensors = sensors.to_vec();
        self
    }

    /// Parses a config; relative scene paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, EnvError> {
        let mut cfg: EnvConfig = serde_json::from_str(text).map_err(|e| EnvError::Config(e.to_string()))?;
        if let (SceneSource::Path(p), Some(dir)) = (&cfg.scene, base_dir) {
            let path = PathBuf::from(p);
            if path.is_relative() {
                cfg.scene = SceneSource::Path(dir.join(path).to_string_lossy().into_owned());
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EnvError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| EnvError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent()).map_err(|e| match e {
            EnvError::Config(m) => EnvError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::Config(m.into()));
        if self.max_steps < 1 {
            return bad("max_steps must be at least 1");
        }
        if self.physics.substeps_per_step < 1 {
            return bad("physics.substeps_per_step must be at least 1");
        }
        let p = &self.task.params;
        if !(p.goal_tolerance > 0.0) {
            return bad("task.params.goal_tolerance must be positive");
        }
        if !(p.min_distance >= 0.0 && p.max_distance >= p.min_distance) {
            return bad("task.params distance bounds are inverted");
        }
        if !(p.waypoint_spacing > 0.0) {
            return bad("task.params.waypoint_spacing must be positive");
        }
        if self.task.kind == TaskKind::ObjectNav && p.target_class.is_none() {
            return bad("objectnav task needs task.params.target_class");
        }
        if !(self.action_space.max_ee_step > 0.0 && self.action_space.max_ee_rotation >= 0.0) {
            return bad("action_space bounds must be positive");
        }
        if !(self.occupancy.size > 0.0 && self.occupancy.resolution > 0.0) {
            return bad("occupancy size and resolution must be positive");
        }
        if self.sensors.contains(&Channel::Lidar) || self.sensors.contains(&Channel::Occupancy) {
            self.lidar.validate().map_err(|m| EnvError::Config(format!("lidar: {m}")))?;
        }
        self.randomization.validate().map_err(|e| EnvError::Config(format!("randomization: {e}")))?;
        Ok(())
    }

    pub fn channels(&self) -> BTreeSet<Channel> {
        self.sensors.iter().copied().collect()
    }

    pub fn render_preset(&self) -> RenderPreset {
        RenderPreset::named(self.preset)
    }

    pub fn load_scene(&self) -> Result<Scene, EnvError> {
        let scene = match &self.scene {
            SceneSource::Inline(s) => (**s).clone(),
            SceneSource::Path(p) => load_scene(p).map_err(|e| match e {
                SceneError::Io(m) => EnvError::Io(m),
                e => EnvError::Scene(format!("{p}: {e}")),
            })?,
        };
        scene.validate().map_err(|e| EnvError::Scene(e.to_string()))?;
        Ok(scene)
    }

    /// FNV-1a of the canonical JSON encoding.
    pub fn config_hash(&self) -> u64 {
        fnv1a(to_canonical_string(self).as_bytes())
    }
}
