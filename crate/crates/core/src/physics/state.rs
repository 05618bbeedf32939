use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::arm::ArmSpec;
use crate::hash::Fnv1a;
use crate::math::Placement;

pub const SUBSTEP_DT: f64 = 1.0 / 120.0;
pub const SUBSTEPS_PER_STEP: u32 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub footprint_radius: f64,
    pub body_height: f64,
    /// m/s
    pub max_linear: f64,
    /// rad/s
    pub max_angular: f64,
    pub arm: ArmSpec,
    /// Magic-grasp attach distance from the end effector.
    pub grasp_distance: f64,
    pub camera_height: f64,
    pub camera_pitch: f64,
    pub camera_fov: f64,
}

impl Default for RobotSpec {
    fn default() -> Self {
        RobotSpec {
            footprint_radius: 0.18,
            body_height: 0.6,
            max_linear: 1.0,
            max_angular: std::f64::consts::PI,
            arm: ArmSpec::default(),
            grasp_distance: 0.05,
            camera_height: 1.1,
            camera_pitch: -0.2,
            camera_fov: 1.2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasePose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl BasePose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw }
    }

    pub fn placement(&self) -> Placement {
        Placement::new(self.x, self.y, 0.0, self.yaw)
    }
}

/// Object rigidly held by the gripper, with its pose relative to the end effector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub object: u32,
    pub offset: Placement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub base: BasePose,
    /// (linear m/s, angular rad/s) applied during the last step.
    pub velocity: (f64, f64),
    pub arm: Vec<f64>,
    pub arm_target: Vec<f64>,
    pub gripper_open: bool,
    pub attached: Option<Attachment>,
}

impl RobotState {
    pub fn at(base: BasePose, arm: &ArmSpec) -> Self {
        RobotState {
            base,
            velocity: (0.0, 0.0),
            arm: arm.home.clone(),
            arm_target: arm.home.clone(),
            gripper_open: true,
            attached: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub robot: Option<RobotState>,
    /// Keyed by (object id, joint index).
    pub joint_positions: BTreeMap<(u32, usize), f64>,
    pub joint_velocities: BTreeMap<(u32, usize), f64>,
    /// Poses of free bodies that have left their bbox placement.
    pub free_body_poses: BTreeMap<u32, Placement>,
    pub tick: u64,
    pub substep_dt: f64,
}

impl WorldState {
    /// 64-bit FNV-1a over the canonical binary encoding (bit-exact floats,
    /// maps in key order).
    pub fn state_hash(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.u64(self.tick).f64(self.substep_dt);
        match &self.robot {
            None => {
                h.u64(0);
            }
            Some(r) => {
                h.u64(1).f64(r.base.x).f64(r.base.y).f64(r.base.yaw).f64(r.velocity.0).f64(r.velocity.1);
                h.u64(r.arm.len() as u64);
                r.arm.iter().chain(&r.arm_target).for_each(|v| {
                    h.f64(*v);
                });
                h.u64(u64::from(r.gripper_open));
                match r.attached {
                    None => h.u64(0),
                    Some(a) => h.u64(1).u64(u64::from(a.object)).f64(a.offset.x).f64(a.offset.y).f64(a.offset.z).f64(a.offset.yaw),
                };
            }
        }
        h.u64(self.joint_positions.len() as u64);
        for ((o, j), q) in &self.joint_positions {
            h.u64(u64::from(*o)).u64(*j as u64).f64(*q);
        }
        h.u64(self.joint_velocities.len() as u64);
        for ((o, j), v) in &self.joint_velocities {
            h.u64(u64::from(*o)).u64(*j as u64).f64(*v);
        }
        h.u64(self.free_body_poses.len() as u64);
        for (o, p) in &self.free_body_poses {
            h.u64(u64::from(*o)).f64(p.x).f64(p.y).f64(p.z).f64(p.yaw);
        }
        h.finish()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicsConfig {
    pub substeps_per_step: u32,
    pub gravity: f64,
    /// Applied when a push does not specify otherwise.
    pub max_push_force: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig { substeps_per_step: SUBSTEPS_PER_STEP, gravity: 9.81, max_push_force: 60.0 }
    }
}
