use serde::{Deserialize, Serialize};

use crate::env::TaskState;
use crate::physics::{BasePose, PushOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClickMode {
    Push,
    Pull,
    Pick,
    Place,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomAxis {
    Materials,
    Objects,
    Dynamics,
}

/// Frame content selected by `cmd_mode`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamMode {
    Rgb,
    /// RGB plus raw depth.
    Rgbd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello {
        #[serde(default)]
        client: Option<String>,
    },
    /// Normalized drive command in [-1, 1].
    CmdDrive { forward: f64, turn: f64 },
    CmdClick { u: i64, v: i64, mode: ClickMode },
    CmdGripper { open: bool },
    CmdMode { mode: StreamMode },
    RecordStart,
    RecordStop,
    Reset { seed: u64 },
    Randomize { axes: Vec<RandomAxis> },
}

impl ClientMessage {
    pub fn name(&self) -> &'static str {
        match self {
            ClientMessage::Hello { .. } => "hello",
            ClientMessage::CmdDrive { .. } => "cmd_drive",
            ClientMessage::CmdClick { .. } => "cmd_click",
            ClientMessage::CmdGripper { .. } => "cmd_gripper",
            ClientMessage::CmdMode { .. } => "cmd_mode",
            ClientMessage::RecordStart => "record_start",
            ClientMessage::RecordStop => "record_stop",
            ClientMessage::Reset { .. } => "reset",
            ClientMessage::Randomize { .. } => "randomize",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameState {
    pub base: BasePose,
    pub velocity: [f64; 2],
    pub gripper_open: bool,
    pub held: Option<u32>,
    pub episode_seed: u64,
    pub recording: bool,
    pub task: Option<TaskState>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AckDetail {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub push: Option<PushOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grasped: Option<u32>,
    /// Where a finished demonstration was written, if anywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demo: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demo_ticks: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello { tick: u64, tick_rate_hz: u32, width: u32, height: u32 },
    Frame {
        tick: u64,
        /// Base-64 PNG.
        rgb: String,
        /// Base-64 little-endian f32 planar depth (m), row-major.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth: Option<String>,
        state: FrameState,
    },
    Ack {
        tick: u64,
        command: String,
        #[serde(flatten)]
        detail: AckDetail,
    },
    Error { code: String, detail: String },
}

impl ServerMessage {
    pub fn error(code: &str, detail: impl Into<String>) -> Self {
        ServerMessage::Error { code: code.into(), detail: detail.into() }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}
