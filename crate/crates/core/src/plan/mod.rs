//! Sampling-based motion planning for the base and the arm, shortcut
//! smoothing, and layout-only geodesic waypoints.

mod prm;
mod rrt;
mod shortcut;
mod waypoints;

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hash::Fnv1a;
use crate::physics::{BasePose, World};
use crate::scene::scene_hash;

pub use prm::LazyPrm;
pub use shortcut::{path_duration, sample_trajectory, segment_duration, shortcut, Limits, DEFAULT_SHORTCUT_ROUNDS};
pub use waypoints::{geodesic_waypoints, resample_polyline, LayoutGrid, LAYOUT_RESOLUTION};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("start configuration is out of bounds or in collision")]
    InvalidStart,
    #[error("goal configuration is out of bounds or in collision")]
    InvalidGoal,
    #[error("no path found after {iterations} iterations")]
    NoPathFound { iterations: usize },
    #[error("goal is unreachable in the layout")]
    Unreachable,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Config = Vec<f64>;

/// Collision-free test for one configuration. Bounds are checked separately.
pub type Validity = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    /// (x, y, yaw)
    Base,
    /// Joint vector.
    Arm,
}

#[derive(Clone)]
pub struct PlanSpace {
    pub kind: SpaceKind,
    pub bounds: Vec<[f64; 2]>,
    pub step_resolution: f64,
    /// Identifies the world the predicate was built from. Roadmaps are reused
    /// only while it stays the same.
    pub key: u64,
    valid: Validity,
}

impl std::fmt::Debug for PlanSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlanSpace").field("kind", &self.kind).field("bounds", &self.bounds).field("step_resolution", &self.step_resolution).field("key", &self.key).finish()
    }
}

fn world_key(world: &World) -> u64 {
    Fnv1a::new().u64(scene_hash(&world.scene)).u64(world.state.state_hash()).finish()
}

impl PlanSpace {
    pub fn new(kind: SpaceKind, bounds: Vec<[f64; 2]>, step_resolution: f64, key: u64, valid: Validity) -> Result<Self, PlanError> {
        if bounds.is_empty() || bounds.iter().any(|b| !(b[0] < b[1])) {
            return Err(PlanError::InvalidParams("bounds need lo < hi in every dimension".into()));
        }
        if !(step_resolution > 0.0) {
            return Err(PlanError::InvalidParams("step_resolution must be positive".into()));
        }
        Ok(PlanSpace { kind, bounds, step_resolution, key, valid })
    }

    /// Base configurations (x, y, yaw) in `xy_bounds`, with the arm held at its
    /// current (or home) pose. Collision is checked against a snapshot taken now.
    pub fn for_base(world: &World, x: [f64; 2], y: [f64; 2]) -> Result<Self, PlanError> {
        let snap = Arc::new(world.snapshot());
        let arm = world.state.robot.as_ref().map(|r| r.arm.clone()).unwrap_or_else(|| world.robot_spec.arm.home.clone());
        let w = Arc::new(world.clone());
        let valid: Validity = Arc::new(move |q: &[f64]| w.robot_contacts(&snap, &w.state, &BasePose::new(q[0], q[1], q[2]), &arm).is_empty());
        PlanSpace::new(SpaceKind::Base, vec![x, y, [-PI, PI]], 0.05, world_key(world), valid)
    }

    /// Arm joint space within joint limits, with the base held where it is.
    pub fn for_arm(world: &World) -> Result<Self, PlanError> {
        let robot = world.state.robot.as_ref().ok_or_else(|| PlanError::InvalidParams("world has no robot".into()))?;
        let base = robot.base;
        let snap = Arc::new(world.snapshot());
        let w = Arc::new(world.clone());
        let bounds = world.robot_spec.arm.joints.iter().map(|j| j.limits).collect();
        let valid: Validity = Arc::new(move |q: &[f64]| w.robot_contacts(&snap, &w.state, &base, q).is_empty());
        PlanSpace::new(SpaceKind::Arm, bounds, 0.05, world_key(world), valid)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn in_bounds(&self, q: &[f64]) -> bool {
        q.len() == self.dim() && q.iter().zip(&self.bounds).all(|(v, b)| *v >= b[0] && *v <= b[1])
    }

    pub fn is_valid(&self, q: &[f64]) -> bool {
        self.in_bounds(q) && (self.valid)(q)
    }

    /// Checks the straight segment `a -> b` at `step_resolution`, excluding `a`.
    pub fn motion_valid(&self, a: &[f64], b: &[f64]) -> bool {
        let n = interpolation_steps(distance(a, b), self.step_resolution);
        (1..=n).all(|i| self.is_valid(&lerp(a, b, i as f64 / n as f64)))
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Config {
        self.bounds.iter().map(|b| rng.gen_range(b[0]..=b[1])).collect()
    }
}

/// Number of equal sub-steps no longer than `resolution`, at least one.
pub fn interpolation_steps(d: f64, resolution: f64) -> usize {
    ((d / resolution).ceil() as usize).max(1)
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn lerp(a: &[f64], b: &[f64], s: f64) -> Config {
    a.iter().zip(b).map(|(x, y)| x + (y - x) * s).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "rrt")]
    Rrt,
    #[serde(rename = "birrt")]
    BiRrt,
    #[serde(rename = "lazyprm")]
    LazyPrm,
}

impl std::str::FromStr for Algorithm {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rrt" => Ok(Algorithm::Rrt),
            "birrt" => Ok(Algorithm::BiRrt),
            "lazyprm" => Ok(Algorithm::LazyPrm),
            _ => Err(PlanError::InvalidParams(format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub algorithm: Algorithm,
    pub waypoints: Vec<Config>,
    pub length: f64,
    pub iterations_used: usize,
}

impl Path {
    pub fn new(algorithm: Algorithm, waypoints: Vec<Config>, iterations_used: usize) -> Self {
        let length = polyline_length(&waypoints);
        Path { algorithm, waypoints, length, iterations_used }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("path serializes")
    }

    /// True if every consecutive pair passes `space.motion_valid` and the
    /// first waypoint is valid.
    pub fn is_valid_in(&self, space: &PlanSpace) -> bool {
        !self.waypoints.is_empty() && space.is_valid(&self.waypoints[0]) && self.waypoints.windows(2).all(|w| space.motion_valid(&w[0], &w[1]))
    }
}

pub fn polyline_length(waypoints: &[Config]) -> f64 {
    waypoints.windows(2).map(|w| distance(&w[0], &w[1])).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    pub max_iterations: usize,
    pub goal_bias: f64,
    pub steer_step: f64,
    pub goal_tolerance: f64,
    pub prm_samples: usize,
    pub prm_k: usize,
    pub seed: u64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams { max_iterations: 5000, goal_bias: 0.05, steer_step: 0.2, goal_tolerance: 0.1, prm_samples: 500, prm_k: 10, seed: 0 }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<(), PlanError> {
        let ok = self.max_iterations > 0
            && (0.0..=1.0).contains(&self.goal_bias)
            && self.steer_step > 0.0
            && self.goal_tolerance > 0.0
            && self.prm_samples > 0
            && self.prm_k > 0;
        if ok {
            Ok(())
        } else {
            Err(PlanError::InvalidParams("parameters must be positive and goal_bias in [0, 1]".into()))
        }
    }
}

fn check_query(space: &PlanSpace, start: &[f64], goal: &[f64], params: &PlannerParams) -> Result<(), PlanError> {
    params.validate()?;
    if !space.is_valid(start) {
        return Err(PlanError::InvalidStart);
    }
    if !space.is_valid(goal) {
        return Err(PlanError::InvalidGoal);
    }
    Ok(())
}

/// Plans a collision-free path from `start` to `goal`. Deterministic in
/// `params.seed`.
pub fn plan(space: &PlanSpace, start: &[f64], goal: &[f64], algorithm: Algorithm, params: &PlannerParams) -> Result<Path, PlanError> {
    check_query(space, start, goal, params)?;
    match algorithm {
        Algorithm::Rrt => rrt::rrt(space, start, goal, params),
        Algorithm::BiRrt => rrt::birrt(space, start, goal, params),
        Algorithm::LazyPrm => LazyPrm::new().query(space, start, goal, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(side: f64) -> PlanSpace {
        PlanSpace::new(SpaceKind::Base, vec![[0.0, side], [0.0, side]], 0.05, 0, Arc::new(|_: &[f64]| true)).unwrap()
    }

    #[test]
    fn bad_bounds_rejected() {
        assert!(PlanSpace::new(SpaceKind::Arm, vec![[1.0, 1.0]], 0.05, 0, Arc::new(|_: &[f64]| true)).is_err());
    }

    #[test]
    fn interpolation_covers_endpoint() {
        assert_eq!(interpolation_steps(0.0, 0.05), 1);
        assert_eq!(interpolation_steps(0.1, 0.05), 2);
        assert_eq!(interpolation_steps(0.11, 0.05), 3);
    }

    #[test]
    fn open_space_all_algorithms() {
        let space = open(10.0);
        for alg in [Algorithm::Rrt, Algorithm::BiRrt, Algorithm::LazyPrm] {
            let p = plan(&space, &[1.0, 1.0], &[9.0, 9.0], alg, &PlannerParams::default()).unwrap();
            assert_eq!(p.waypoints[0], vec![1.0, 1.0]);
            assert!(distance(p.waypoints.last().unwrap(), &[9.0, 9.0]) <= 0.1);
            assert!(p.length >= 8.0 * 2f64.sqrt() - 1e-9);
        }
    }

    #[test]
    fn params_validation() {
        let p = PlannerParams { goal_bias: 1.5, ..Default::default() };
        assert!(plan(&open(1.0), &[0.5, 0.5], &[0.6, 0.6], Algorithm::Rrt, &p).is_err());
    }
}
