//! Config-driven environment with the usual reset/step loop: scene, robot,
//! sensors, task, reward and episode metrics.

mod config;
mod follower;
mod metrics;
mod pushes;

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::{ActionKind, ActionSpace, Channel, EnvConfig, OccupancyConfig, RewardWeights, SceneSource, TaskKind, TaskParams, TaskSpec};
pub use follower::{run_episode, run_episodes, write_results, RunSummary, WaypointFollower};
pub use metrics::{compute_spl, objectnav_success, success_rate, EpisodeRecord, Termination, OBJECTNAV_MIN_FRACTION};
pub use pushes::{sample_camera_poses, sample_pushes, CameraPose, PushRecord, PUSH_MAX_FORCE, PUSH_TARGET};

use crate::geometry::Snapshot;
use crate::hash::{sub_seed, Fnv1a};
use crate::math::{point_in_polygon, wrap_angle, Vec2, Vec3};
use crate::physics::{
    forward_kinematics, grasp, inverse_kinematics, release, step_world, BasePose, Candidate, ControlCommands, RobotState, World, WorldState,
};
use crate::plan::{resample_polyline, LayoutGrid, LAYOUT_RESOLUTION};
use crate::randomize::randomize;
use crate::render::{render, Camera, FlowSource, RenderPreset, SensorFrame};
use crate::scene::Scene;
use crate::sensors::{lidar_scan, scan_to_occupancy, sensor_pose, GridConfig, LidarScan, OccupancyGrid};

/// Rejection-sampling budget for episode starts and goals.
pub const SAMPLING_ATTEMPTS: usize = 1000;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("scene error: {0}")]
    Scene(String),
    #[error("no valid episode after {attempts} sampling attempts: {detail}")]
    SamplingFailure { attempts: usize, detail: String },
    #[error("step called on a finished episode")]
    SteppingDoneEnv,
    #[error("step called before reset")]
    NotReset,
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("render error: {0}")]
    Render(String),
    #[error("empty input")]
    EmptyInput,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    /// Base velocity command (m/s, rad/s).
    Base { linear: f64, angular: f64 },
    /// End-effector translation in the base frame (m) and gripper command.
    Manipulation { translation: [f64; 3], gripper_closed: bool },
    /// `ee_delta` is (dx, dy, dz, roll, pitch, yaw) in the base frame. The arm
    /// has no wrist roll or pitch, so only the yaw component is used.
    MobileManipulation { extend_arm: bool, linear: f64, angular: f64, ee_delta: [f64; 6], gripper_closed: bool },
}

impl Action {
    pub fn zero(kind: ActionKind) -> Self {
        match kind {
            ActionKind::Base => Action::Base { linear: 0.0, angular: 0.0 },
            ActionKind::Manipulation => Action::Manipulation { translation: [0.0; 3], gripper_closed: false },
            ActionKind::MobileManipulation => {
                Action::MobileManipulation { extend_arm: false, linear: 0.0, angular: 0.0, ee_delta: [0.0; 6], gripper_closed: false }
            }
        }
    }

    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Base { .. } => ActionKind::Base,
            Action::Manipulation { .. } => ActionKind::Manipulation,
            Action::MobileManipulation { .. } => ActionKind::MobileManipulation,
        }
    }
}

/// Requested channels only; every other field is `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub tick: u64,
    pub width: u32,
    pub height: u32,
    pub rgb: Option<Vec<[f32; 3]>>,
    pub depth: Option<Vec<f32>>,
    pub normals: Option<Vec<[f32; 3]>>,
    pub semantic: Option<Vec<u16>>,
    pub instance: Option<Vec<u32>>,
    pub optical_flow: Option<Vec<[f32; 2]>>,
    pub scene_flow: Option<Vec<[f32; 3]>>,
    pub lidar: Option<LidarScan>,
    pub occupancy: Option<OccupancyGrid>,
    /// (linear m/s, angular rad/s)
    pub velocities: Option<[f64; 2]>,
    /// Goal in the robot frame (m).
    pub goal: Option<[f64; 2]>,
    /// Upcoming waypoints in the robot frame (m).
    pub waypoints: Option<Vec<[f64; 2]>>,
}

impl Observation {
    pub fn channels(&self) -> BTreeSet<Channel> {
        let present = [
            (Channel::Rgb, self.rgb.is_some()),
            (Channel::Depth, self.depth.is_some()),
            (Channel::Normals, self.normals.is_some()),
            (Channel::Semantic, self.semantic.is_some()),
            (Channel::Instance, self.instance.is_some()),
            (Channel::OpticalFlow, self.optical_flow.is_some()),
            (Channel::SceneFlow, self.scene_flow.is_some()),
            (Channel::Lidar, self.lidar.is_some()),
            (Channel::Occupancy, self.occupancy.is_some()),
            (Channel::Velocities, self.velocities.is_some()),
            (Channel::Goal, self.goal.is_some()),
            (Channel::Waypoints, self.waypoints.is_some()),
        ];
        present.into_iter().filter(|(_, p)| *p).map(|(c, _)| c).collect()
    }

    /// FNV-1a over the bit patterns of every present channel.
    pub fn hash(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.u64(self.tick).u64(u64::from(self.width)).u64(u64::from(self.height));
        fn floats<'a>(h: &mut Fnv1a, tag: &str, v: Option<impl Iterator<Item = &'a f32>>) {
            h.str(tag);
            match v {
                None => {
                    h.u64(0);
                }
                Some(it) => {
                    h.u64(1);
                    it.for_each(|x| {
                        h.u64(u64::from(x.to_bits()));
                    });
                }
            }
        }
        floats(&mut h, "rgb", self.rgb.as_ref().map(|v| v.iter().flatten()));
        floats(&mut h, "depth", self.depth.as_ref().map(|v| v.iter()));
        floats(&mut h, "normals", self.normals.as_ref().map(|v| v.iter().flatten()));
        floats(&mut h, "optical_flow", self.optical_flow.as_ref().map(|v| v.iter().flatten()));
        floats(&mut h, "scene_flow", self.scene_flow.as_ref().map(|v| v.iter().flatten()));
        h.str("semantic");
        for s in self.semantic.iter().flatten() {
            h.u64(u64::from(*s));
        }
        h.str("instance");
        for s in self.instance.iter().flatten() {
            h.u64(u64::from(*s));
        }
        h.str("lidar");
        if let Some(l) = &self.lidar {
            l.ranges.iter().for_each(|r| {
                h.f64(*r);
            });
            l.status.iter().for_each(|s| {
                h.u64(*s as u64);
            });
        }
        h.str("occupancy");
        if let Some(o) = &self.occupancy {
            o.cells.iter().for_each(|c| {
                h.u64(*c as u64);
            });
        }
        h.str("vectors");
        for v in self.velocities.iter().chain(self.goal.iter()).chain(self.waypoints.iter().flatten()) {
            v.iter().for_each(|x| {
                h.f64(*x);
            });
        }
        h.finish()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvInfo {
    pub tick: u64,
    pub termination: Option<Termination>,
    pub success: bool,
    /// Some action component was outside its bounds.
    pub clamped: bool,
    pub base_blocked: bool,
    pub arm_blocked: bool,
    pub ik_failed: bool,
    pub grasped: Option<u32>,
    pub contacts: Vec<String>,
    /// Dense progress term before weighting.
    pub progress: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: EnvInfo,
}

/// Sampled task instance for the current episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskState {
    PointGoal { goal: [f64; 2] },
    ObjectNav { target: u32, goal: [f64; 2] },
    PushJoint { object: u32, joint: usize, rest: f64, range: f64 },
}

#[derive(Clone, Debug)]
struct Episode {
    seed: u64,
    task: TaskState,
    lidar_rng: ChaCha8Rng,
    steps: u64,
    path_length: f64,
    potential: f64,
    shortest: f64,
    termination: Option<Termination>,
    success: bool,
    previous_view: Option<(Snapshot, Camera)>,
}

pub struct Env {
    config: EnvConfig,
    channels: BTreeSet<Channel>,
    preset: RenderPreset,
    base_scene: Arc<Scene>,
    /// Walls-only grid for geodesic distances; walls are never randomized.
    layout: LayoutGrid,
    world: World,
    episode: Option<Episode>,
}

impl Env {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let scene = Arc::new(config.load_scene()?);
        // A robot center can never be inside a blocked cell: blocked cells lie
        // within footprint - 0.05 + res/√2 < footprint of a wall.
        let clearance = (config.robot.footprint_radius - 0.05).max(0.0);
        let layout = LayoutGrid::from_scene(&scene, LAYOUT_RESOLUTION, clearance);
        let world = World::new(scene.clone(), config.robot.clone(), config.physics.clone());
        Ok(Env { channels: config.channels(), preset: config.render_preset(), config, base_scene: scene, layout, world, episode: None })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn state(&self) -> &WorldState {
        &self.world.state
    }

    /// Replaces the world state (e.g. after an interaction applied outside `step`).
    pub fn set_state(&mut self, state: WorldState) {
        self.world.state = state;
    }

    pub fn layout(&self) -> &LayoutGrid {
        &self.layout
    }

    pub fn task(&self) -> Option<&TaskState> {
        self.episode.as_ref().map(|e| &e.task)
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().is_some_and(|e| e.termination.is_some())
    }

    pub fn steps(&self) -> u64 {
        self.episode.as_ref().map_or(0, |e| e.steps)
    }

    /// Simulated seconds since reset.
    pub fn sim_time(&self) -> f64 {
        self.world.state.tick as f64 * f64::from(self.config.physics.substeps_per_step) * self.world.state.substep_dt
    }

    pub fn robot(&self) -> &RobotState {
        self.world.state.robot.as_ref().expect("environment always has a robot")
    }

    pub fn reset(&mut self, seed: u64) -> Result<Observation, EnvError> {
        let r = &self.config.randomization;
        let scene = if r.randomize_materials || r.randomize_objects || r.randomize_dynamics {
            let mut spec = r.clone();
            spec.seed = sub_seed(seed ^ r.seed.rotate_left(32), "randomization");
            Arc::new(randomize(&self.base_scene, &spec).map_err(|e| EnvError::Scene(e.to_string()))?.0)
        } else {
            self.base_scene.clone()
        };
        let mut world = World::new(scene, self.config.robot.clone(), self.config.physics.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, "episode"));
        let task = self.sample_task(&mut world, &mut rng)?;
        self.world = world;
        let mut episode = Episode {
            seed,
            task,
            lidar_rng: ChaCha8Rng::seed_from_u64(sub_seed(seed, "lidar")),
            steps: 0,
            path_length: 0.0,
            potential: 0.0,
            shortest: 0.0,
            termination: None,
            success: false,
            previous_view: None,
        };
        episode.potential = self.potential(&episode.task);
        episode.shortest = episode.potential;
        self.episode = Some(episode);
        let (obs, _) = self.observe()?;
        Ok(obs)
    }

    fn room_bounds(&self) -> Option<([f64; 2], [f64; 2])> {
        let pts: Vec<&[f64; 2]> = self.base_scene.rooms.iter().flat_map(|r| r.polygon.iter()).collect();
        if pts.is_empty() {
            return None;
        }
        let lo = pts.iter().fold([f64::INFINITY; 2], |a, p| [a[0].min(p[0]), a[1].min(p[1])]);
        let hi = pts.iter().fold([f64::NEG_INFINITY; 2], |a, p| [a[0].max(p[0]), a[1].max(p[1])]);
        Some((lo, hi))
    }

    /// Inside a room, clear of walls on the layout grid and collision-free.
    fn pose_is_free(&self, world: &World, snap: &Snapshot, state: &WorldState, base: &BasePose) -> bool {
        let p = Vec2::new(base.x, base.y);
        let in_room = self.base_scene.rooms.iter().any(|r| point_in_polygon(p, &r.polygon.iter().map(|q| Vec2::from(*q)).collect::<Vec<_>>()));
        in_room
            && self.layout.is_free(p)
            && !world.check_collision_in(snap, state, &Candidate::Robot { base: *base, arm: self.config.robot.arm.home.clone() }).colliding
    }

    fn sample_free_pose(&self, world: &World, snap: &Snapshot, rng: &mut ChaCha8Rng) -> Option<BasePose> {
        let (lo, hi) = self.room_bounds()?;
        let base = BasePose::new(rng.gen_range(lo[0]..=hi[0]), rng.gen_range(lo[1]..=hi[1]), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        self.pose_is_free(world, snap, &world.state, &base).then_some(base)
    }

    fn sample_task(&self, world: &mut World, rng: &mut ChaCha8Rng) -> Result<TaskState, EnvError> {
        let p = &self.config.task.params;
        let fail = |detail: &str| EnvError::SamplingFailure { attempts: SAMPLING_ATTEMPTS, detail: detail.into() };
        match self.config.task.kind {
            TaskKind::PointGoal => {
                let snap = world.snapshot();
                for _ in 0..SAMPLING_ATTEMPTS {
                    let (Some(start), Some(goal)) = (self.sample_free_pose(world, &snap, rng), self.sample_free_pose(world, &snap, rng)) else { continue };
                    let Ok(d) = self.layout.geodesic_distance(Vec2::new(start.x, start.y), Vec2::new(goal.x, goal.y)) else { continue };
                    if d >= p.min_distance && d <= p.max_distance {
                        world.state.robot = Some(RobotState::at(start, &self.config.robot.arm));
                        return Ok(TaskState::PointGoal { goal: [goal.x, goal.y] });
                    }
                }
                Err(fail("no start/goal pair within the geodesic distance bounds"))
            }
            TaskKind::ObjectNav => {
                let class = p.target_class.as_deref().expect("validated");
                let candidates: Vec<&crate::scene::ObjectInstance> = world.scene.objects.iter().filter(|o| o.class_label == class).collect();
                if candidates.is_empty() {
                    return Err(EnvError::Config(format!("no object of class {class} in scene")));
                }
                let target = candidates[rng.gen_range(0..candidates.len())];
                let goal = [target.bbox.center[0], target.bbox.center[1]];
                let target = target.id;
                let snap = world.snapshot();
                for _ in 0..SAMPLING_ATTEMPTS {
                    let Some(start) = self.sample_free_pose(world, &snap, rng) else { continue };
                    if self.layout.geodesic_distance(Vec2::new(start.x, start.y), Vec2::from(goal)).is_ok() || !self.layout.is_free(Vec2::from(goal)) {
                        world.state.robot = Some(RobotState::at(start, &self.config.robot.arm));
                        return Ok(TaskState::ObjectNav { target, goal });
                    }
                }
                Err(fail("no free start pose"))
            }
            TaskKind::PushJoint => {
                let found = world.scene.objects.iter().enumerate().find_map(|(oi, o)| {
                    if p.target_object.is_some_and(|id| id != o.id) {
                        return None;
                    }
                    o.model.joints.iter().position(|j| j.range() > 0.0).map(|j| (oi, j))
                });
                let Some((oi, j)) = found else { return Err(EnvError::Config("no object with a movable joint".into())) };
                let obj = &world.scene.objects[oi];
                let joint = &obj.model.joints[j];
                let [lo, hi] = joint.limits;
                let q = rng.gen_range((lo + hi) / 2.0..=hi);
                let (object, rest, range) = (obj.id, joint.clamp(joint.position), joint.range());
                world.state.joint_positions.insert((object, j), q);
                let snap = world.snapshot();
                for _ in 0..SAMPLING_ATTEMPTS {
                    if let Some(start) = self.sample_free_pose(world, &snap, rng) {
                        world.state.robot = Some(RobotState::at(start, &self.config.robot.arm));
                        return Ok(TaskState::PushJoint { object, joint: j, rest, range });
                    }
                }
                Err(fail("no free start pose"))
            }
        }
    }

    /// Distance-to-go: geodesic meters for navigation, joint distance from
    /// rest for PushJoint.
    fn potential(&self, task: &TaskState) -> f64 {
        let base = self.robot().base;
        match task {
            TaskState::PointGoal { goal } | TaskState::ObjectNav { goal, .. } => {
                let (a, b) = (Vec2::new(base.x, base.y), Vec2::from(*goal));
                self.layout.geodesic_distance(a, b).unwrap_or_else(|_| (b - a).norm())
            }
            TaskState::PushJoint { object, joint, rest, .. } => {
                (self.world.state.joint_positions.get(&(*object, *joint)).copied().unwrap_or(*rest) - rest).abs()
            }
        }
    }

    fn goal_xy(&self) -> Option<[f64; 2]> {
        match self.task()? {
            TaskState::PointGoal { goal } | TaskState::ObjectNav { goal, .. } => Some(*goal),
            TaskState::PushJoint { .. } => None,
        }
    }

    /// Walls-only shortest path from the robot to the navigation goal.
    pub fn shortest_path(&self) -> Option<Vec<Vec2>> {
        let goal = self.goal_xy()?;
        let base = self.robot().base;
        self.layout.shortest_path(Vec2::new(base.x, base.y), Vec2::from(goal)).ok()
    }

    /// Upcoming waypoints in the world frame.
    pub fn expert_waypoints(&self) -> Option<Vec<Vec2>> {
        let p = &self.config.task.params;
        Some(resample_polyline(&self.shortest_path()?, p.waypoint_spacing, p.waypoint_count))
    }

    fn to_robot_frame(&self, p: Vec2) -> [f64; 2] {
        let b = self.robot().base;
        let q = b.placement().inverse_apply(Vec3::new(p.x, p.y, 0.0));
        [q.x, q.y]
    }

    /// Scene before per-episode randomization.
    pub fn base_scene(&self) -> &Scene {
        &self.base_scene
    }

    /// All buffers from the robot camera, without flow. Episode state is untouched.
    pub fn render_frame(&self) -> Result<SensorFrame, EnvError> {
        render(&self.world.snapshot(), &self.world.scene.lights, &self.camera(), &self.preset, None).map_err(|e| EnvError::Render(e.to_string()))
    }

    pub fn camera(&self) -> Camera {
        Camera::robot_view(&self.robot().base, &self.config.robot, self.preset.width, self.preset.height)
    }

    /// Renders from the robot camera, with flow against the previous view.
    fn render_view(&mut self, snap: &Snapshot) -> Result<SensorFrame, EnvError> {
        let camera = self.camera();
        let flow = self.channels.iter().any(|c| matches!(c, Channel::OpticalFlow | Channel::SceneFlow));
        let ep = self.episode.as_ref().expect("episode active");
        let previous = ep.previous_view.as_ref().filter(|_| flow).map(|(s, c)| FlowSource { snapshot: s, camera: c });
        let frame = render(snap, &self.world.scene.lights, &camera, &self.preset, previous).map_err(|e| EnvError::Render(e.to_string()))?;
        if flow {
            self.episode.as_mut().expect("episode active").previous_view = Some((snap.clone(), camera));
        }
        Ok(frame)
    }

    /// Observation of the current state; also returns the frame when one was rendered.
    fn observe(&mut self) -> Result<(Observation, Option<SensorFrame>), EnvError> {
        let snap = self.world.snapshot();
        let ch = self.channels.clone();
        let objectnav = matches!(self.task(), Some(TaskState::ObjectNav { .. }));
        let frame = if ch.iter().any(|c| c.is_frame()) || objectnav { Some(self.render_view(&snap)?) } else { None };
        let mut obs = Observation { tick: self.world.state.tick, ..Default::default() };
        if let Some(f) = &frame {
            let pick = |c: Channel| ch.contains(&c);
            if ch.iter().any(|c| c.is_frame()) {
                obs.width = f.width;
                obs.height = f.height;
            }
            obs.rgb = pick(Channel::Rgb).then(|| f.rgb.clone());
            obs.depth = pick(Channel::Depth).then(|| f.depth.clone());
            obs.normals = pick(Channel::Normals).then(|| f.normals.clone());
            obs.semantic = pick(Channel::Semantic).then(|| f.semantic.clone());
            obs.instance = pick(Channel::Instance).then(|| f.instance.clone());
            obs.optical_flow = pick(Channel::OpticalFlow).then(|| f.optical_flow.clone());
            obs.scene_flow = pick(Channel::SceneFlow).then(|| f.scene_flow.clone());
        }
        if ch.contains(&Channel::Lidar) || ch.contains(&Channel::Occupancy) {
            let base = self.robot().base;
            let pose = sensor_pose(&base.placement(), &self.config.lidar);
            let rng = &mut self.episode.as_mut().expect("episode active").lidar_rng;
            let mut scan = lidar_scan(&snap, &pose, &self.config.lidar, rng);
            scan.tick = self.world.state.tick;
            if ch.contains(&Channel::Occupancy) {
                let grid = GridConfig::centered([base.x, base.y], self.config.occupancy.size, self.config.occupancy.resolution);
                obs.occupancy = Some(scan_to_occupancy(&scan, &pose, grid));
            }
            if ch.contains(&Channel::Lidar) {
                obs.lidar = Some(scan);
            }
        }
        if ch.contains(&Channel::Velocities) {
            let (v, w) = self.robot().velocity;
            obs.velocities = Some([v, w]);
        }
        if ch.contains(&Channel::Goal) {
            obs.goal = Some(self.goal_xy().map_or([0.0; 2], |g| self.to_robot_frame(Vec2::from(g))));
        }
        if ch.contains(&Channel::Waypoints) {
            let count = self.config.task.params.waypoint_count;
            let pts = self.expert_waypoints().unwrap_or_default();
            let mut out: Vec<[f64; 2]> = pts.iter().map(|p| self.to_robot_frame(*p)).collect();
            // Unreachable goals and non-navigation tasks report the robot's own position.
            out.resize(count, out.last().copied().unwrap_or([0.0; 2]));
            obs.waypoints = Some(out);
        }
        Ok((obs, frame))
    }

    /// Clamps the action and turns it into physics commands, applying gripper
    /// changes to the state first.
    fn commands(&mut self, action: &Action, info: &mut EnvInfo) -> Result<ControlCommands, EnvError> {
        if action.kind() != self.config.action_space.kind {
            return Err(EnvError::InvalidAction(format!("expected a {:?} action", self.config.action_space.kind)));
        }
        let space = self.config.action_space;
        let spec = &self.config.robot;
        let robot = self.robot().clone();
        let finite = |v: f64, info: &mut EnvInfo| {
            if v.is_finite() {
                v
            } else {
                info.clamped = true;
                0.0
            }
        };
        let clamp = |v: f64, lim: f64, info: &mut EnvInfo| {
            let v = finite(v, info);
            let c = v.clamp(-lim, lim);
            info.clamped |= c != v;
            c
        };
        let reach = |translation: &[f64], yaw: f64, info: &mut EnvInfo| -> Option<Vec<f64>> {
            let mut t = Vec3::new(finite(translation[0], info), finite(translation[1], info), finite(translation[2], info));
            if t.norm() > space.max_ee_step {
                t *= space.max_ee_step / t.norm();
                info.clamped = true;
            }
            let yaw = clamp(yaw, space.max_ee_rotation, info);
            let current = forward_kinematics(&robot.arm_target, &spec.arm).ok()?.position;
            let mut q = if t.norm() > 0.0 {
                match inverse_kinematics(current + t, &spec.arm, &robot.arm_target) {
                    Ok(q) => q,
                    Err(_) => {
                        info.ik_failed = true;
                        robot.arm_target.clone()
                    }
                }
            } else {
                robot.arm_target.clone()
            };
            if yaw != 0.0 {
                if let Some(first) = spec.arm.joints.iter().position(|j| j.axis == crate::physics::ArmAxis::Yaw) {
                    q[first] += yaw;
                }
            }
            Some(q)
        };
        let (linear, angular, arm_target, gripper_closed) = match action {
            Action::Base { linear, angular } => (*linear, *angular, None, None),
            Action::Manipulation { translation, gripper_closed } => (0.0, 0.0, reach(translation, 0.0, info), Some(*gripper_closed)),
            Action::MobileManipulation { extend_arm, linear, angular, ee_delta, gripper_closed } => {
                let target = if *extend_arm { reach(&ee_delta[..3], ee_delta[5], info) } else { Some(spec.arm.home.clone()) };
                (*linear, *angular, target, Some(*gripper_closed))
            }
        };
        if let Some(closed) = gripper_closed {
            if closed && robot.gripper_open {
                let (next, held) = grasp(&self.world, &self.world.state);
                self.world.state = next;
                info.grasped = held;
            } else if !closed && !robot.gripper_open {
                self.world.state = release(&self.world, &self.world.state);
            }
        }
        Ok(ControlCommands { linear, angular, arm_target })
    }

    fn check_success(&self, task: &TaskState, frame: Option<&SensorFrame>, potential: f64) -> bool {
        let p = &self.config.task.params;
        match task {
            TaskState::PointGoal { goal } => {
                let b = self.robot().base;
                (Vec2::new(b.x, b.y) - Vec2::from(*goal)).norm() <= p.goal_tolerance
            }
            TaskState::ObjectNav { target, .. } => frame.is_some_and(|f| objectnav_success(f, *target)),
            TaskState::PushJoint { range, .. } => potential <= p.joint_tolerance * range,
        }
    }

    pub fn step(&mut self, action: &Action) -> Result<StepResult, EnvError> {
        let ep = self.episode.as_ref().ok_or(EnvError::NotReset)?;
        if ep.termination.is_some() {
            return Err(EnvError::SteppingDoneEnv);
        }
        let mut info = EnvInfo::default();
        let cmds = self.commands(action, &mut info)?;
        let before = self.robot().base;
        let (next, step) = step_world(&self.world, &self.world.state, &cmds);
        self.world.state = next;
        info.clamped |= step.clamped;
        info.base_blocked = step.base_blocked;
        info.arm_blocked = step.arm_blocked;
        info.contacts = step.contacts.iter().map(|c| c.describe()).collect();
        info.tick = self.world.state.tick;
        let after = self.robot().base;

        let (observation, frame) = self.observe()?;
        let task = self.episode.as_ref().expect("episode active").task.clone();
        let potential = self.potential(&task);
        let success = self.check_success(&task, frame.as_ref(), potential);
        let w = self.config.reward;
        let max_steps = self.config.max_steps;
        let stop_on_collision = self.config.stop_on_collision;

        let ep = self.episode.as_mut().expect("episode active");
        ep.steps += 1;
        ep.path_length += (Vec2::new(after.x, after.y) - Vec2::new(before.x, before.y)).norm();
        info.progress = ep.potential - potential;
        ep.potential = potential;
        let mut reward = w.progress * info.progress + w.step;
        if success {
            reward += w.success;
        }
        ep.termination = if success {
            Some(Termination::Success)
        } else if stop_on_collision && info.base_blocked {
            Some(Termination::Collision)
        } else if ep.steps >= max_steps {
            Some(Termination::Timeout)
        } else {
            None
        };
        ep.success = success;
        info.success = success;
        info.termination = ep.termination;
        Ok(StepResult { observation, reward, done: ep.termination.is_some(), info })
    }

    /// Record of the current episode once it is done.
    pub fn episode_record(&self) -> Option<EpisodeRecord> {
        let ep = self.episode.as_ref()?;
        Some(EpisodeRecord {
            seed: ep.seed,
            success: ep.success,
            p: ep.path_length,
            l: ep.shortest,
            steps: ep.steps,
            reason: ep.termination?,
        })
    }

    /// Heading error and distance from the robot to `target` (world frame).
    pub fn bearing(&self, target: Vec2) -> (f64, f64) {
        let b = self.robot().base;
        let d = target - Vec2::new(b.x, b.y);
        (wrap_angle(d.y.atan2(d.x) - b.yaw), d.norm())
    }
}
