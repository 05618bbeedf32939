//! Teleoperation service: a JSON-over-WebSocket session that streams frames,
//! folds client commands into a 20 Hz control loop, and records demonstrations
//! that replay bit-exactly.

mod demo;
mod protocol;
mod server;
mod session;

pub use demo::{apply_interaction, replay, DemoHeader, DemoLog, DemoRecord, DivergenceReport, Interaction, InteractionResult, TeleopAction};
pub use protocol::{AckDetail, ClickMode, ClientMessage, FrameState, RandomAxis, ServerMessage, StreamMode};
pub use server::{serve, ServerHandle};
pub use session::{Session, DRIVE_HOLD_TICKS};

use crate::env::{ActionKind, EnvConfig, EnvError};
use crate::physics::SUBSTEP_DT;

pub const TICK_RATE_HZ: u32 = 20;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TeleopError {
    #[error("cannot bind {0}")]
    Bind(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Env(EnvError),
    #[error("log config hash {log} does not match environment {env}")]
    ConfigMismatch { log: String, env: String },
    #[error("corrupt log: {0}")]
    CorruptLog(String),
    #[error("clicked pixel shows no surface")]
    OutOfView,
    #[error("target unreachable: {0}")]
    Unreachable(String),
    #[error("interaction failed: {0}")]
    Physics(String),
    #[error("{0}")]
    Protocol(String),
}

impl TeleopError {
    /// Error code sent to clients.
    pub fn code(&self) -> &'static str {
        match self {
            TeleopError::Bind(_) => "bind",
            TeleopError::Io(_) => "io",
            TeleopError::Env(_) => "env",
            TeleopError::ConfigMismatch { .. } => "config_mismatch",
            TeleopError::CorruptLog(_) => "corrupt_log",
            TeleopError::OutOfView => "out_of_view",
            TeleopError::Unreachable(_) => "unreachable",
            TeleopError::Physics(_) => "interaction_failed",
            TeleopError::Protocol(_) => "invalid_command",
        }
    }
}

/// The environment config a teleop session actually runs: one step per
/// 20 Hz tick, base velocity actions, and no step limit.
pub fn teleop_config(config: &EnvConfig) -> EnvConfig {
    let mut c = config.clone();
    c.physics.substeps_per_step = (1.0 / (f64::from(TICK_RATE_HZ) * SUBSTEP_DT)).round() as u32;
    c.action_space.kind = ActionKind::Base;
    c.max_steps = u64::MAX;
    c
}
