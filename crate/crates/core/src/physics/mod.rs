//! Fixed-timestep kinematic and quasi-static world stepping.

pub mod arm;
mod grasp;
mod push;
mod state;
mod step;
mod world;

pub use arm::{forward_kinematics, inverse_kinematics, ArmAxis, ArmJoint, ArmSpec, EndEffectorPose};
pub use grasp::{grasp, release, support_height};
pub use push::{apply_push, surface_at, PushOutcome, PushTarget, CONTACT_TOLERANCE, MOVED_THRESHOLD};
pub use state::{Attachment, BasePose, PhysicsConfig, RobotSpec, RobotState, WorldState, SUBSTEPS_PER_STEP, SUBSTEP_DT};
pub use step::{integrate_unicycle, step_world, ControlCommands, StepInfo};
pub use world::{wall_obb, Body, Candidate, CollisionReport, Contact, Other, RobotGeometry, World};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PhysicsError {
    #[error("joint vector has {got} entries, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("target unreachable (residual {residual:.4} m)")]
    Unreachable { residual: f64 },
    #[error("point is not on any surface: {0}")]
    InvalidContact(String),
}
