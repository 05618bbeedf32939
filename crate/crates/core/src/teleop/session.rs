use std::path::PathBuf;

use base64::Engine;

use super::demo::{apply_interaction, hex, DemoLog, DemoRecord, Interaction, TeleopAction};
use super::protocol::{AckDetail, ClickMode, ClientMessage, FrameState, RandomAxis, ServerMessage, StreamMode};
use super::{teleop_config, TeleopError, TICK_RATE_HZ};
use crate::env::{Action, Env, EnvConfig, PUSH_TARGET};
use crate::hash::sub_seed;
use crate::render::{encode_png_rgb, SensorFrame};

/// A drive command keeps acting for this many ticks unless renewed.
pub const DRIVE_HOLD_TICKS: u64 = 5;

/// One teleoperated environment. Transport-agnostic: the server feeds it
/// client text at tick boundaries and calls [`Session::tick`] at 20 Hz.
pub struct Session {
    config: EnvConfig,
    env: Env,
    seed: u64,
    drive: (f64, f64),
    drive_age: u64,
    /// Interactions applied since the last tick.
    events: Vec<Interaction>,
    /// Records since the last reset.
    history: Vec<DemoRecord>,
    recording_from: Option<u64>,
    stream: StreamMode,
    frame: SensorFrame,
    demo_dir: Option<PathBuf>,
    demos: Vec<DemoLog>,
    randomizations: u64,
}

impl Session {
    pub fn new(config: EnvConfig, seed: u64, demo_dir: Option<PathBuf>) -> Result<Self, TeleopError> {
        let mut env = Env::new(teleop_config(&config)).map_err(TeleopError::Env)?;
        env.reset(seed).map_err(TeleopError::Env)?;
        let frame = env.render_frame().map_err(TeleopError::Env)?;
        Ok(Session {
            config,
            env,
            seed,
            drive: (0.0, 0.0),
            drive_age: DRIVE_HOLD_TICKS,
            events: vec![],
            history: vec![],
            recording_from: None,
            stream: StreamMode::Rgb,
            frame,
            demo_dir,
            demos: vec![],
            randomizations: 0,
        })
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    /// The user config, before teleop adjustments.
    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tick_count(&self) -> u64 {
        self.env.state().tick
    }

    pub fn is_recording(&self) -> bool {
        self.recording_from.is_some()
    }

    /// Demonstrations finalized so far.
    pub fn demos(&self) -> &[DemoLog] {
        &self.demos
    }

    pub fn current_frame(&self) -> &SensorFrame {
        &self.frame
    }

    pub fn hello(&self) -> ServerMessage {
        ServerMessage::Hello { tick: self.tick_count(), tick_rate_hz: TICK_RATE_HZ, width: self.frame.width, height: self.frame.height }
    }

    fn ack(&self, command: &str, detail: AckDetail) -> ServerMessage {
        ServerMessage::Ack { tick: self.tick_count(), command: command.into(), detail }
    }

    /// Parses and handles one client message; always exactly one reply.
    pub fn handle_text(&mut self, text: &str) -> ServerMessage {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle(&msg),
            Err(e) => ServerMessage::error("malformed", e.to_string()),
        }
    }

    pub fn handle(&mut self, msg: &ClientMessage) -> ServerMessage {
        match self.apply(msg) {
            Ok(detail) => self.ack(msg.name(), detail),
            Err(e) => ServerMessage::error(e.code(), e.to_string()),
        }
    }

    fn apply(&mut self, msg: &ClientMessage) -> Result<AckDetail, TeleopError> {
        let mut detail = AckDetail::default();
        match msg {
            ClientMessage::Hello { .. } => {}
            ClientMessage::CmdDrive { forward, turn } => {
                if !forward.is_finite() || !turn.is_finite() {
                    return Err(TeleopError::Protocol("drive values must be finite".into()));
                }
                let spec = &self.env.config().robot;
                self.drive = (forward.clamp(-1.0, 1.0) * spec.max_linear, turn.clamp(-1.0, 1.0) * spec.max_angular);
                self.drive_age = 0;
            }
            ClientMessage::CmdClick { u, v, mode } => {
                let interaction = self.click_interaction(*u, *v, *mode)?;
                let result = apply_interaction(&mut self.env, &interaction)?;
                self.events.push(interaction);
                detail.push = result.push;
                detail.grasped = result.grasped;
            }
            ClientMessage::CmdGripper { open } => {
                let interaction = Interaction::Gripper { open: *open };
                detail.grasped = apply_interaction(&mut self.env, &interaction)?.grasped;
                self.events.push(interaction);
            }
            ClientMessage::CmdMode { mode } => self.stream = *mode,
            ClientMessage::RecordStart => {
                if self.recording_from.is_some() {
                    return Err(TeleopError::Protocol("already recording".into()));
                }
                self.recording_from = Some(self.tick_count());
            }
            ClientMessage::RecordStop => {
                let (path, ticks) = self.finalize()?.ok_or_else(|| TeleopError::Protocol("not recording".into()))?;
                detail.demo = path;
                detail.demo_ticks = Some(ticks);
            }
            ClientMessage::Reset { seed } => {
                self.finalize()?;
                self.restart(*seed)?;
                detail.seed = Some(*seed);
            }
            ClientMessage::Randomize { axes } => {
                self.finalize()?;
                let r = &mut self.config.randomization;
                r.randomize_materials = axes.contains(&RandomAxis::Materials);
                r.randomize_objects = axes.contains(&RandomAxis::Objects);
                r.randomize_dynamics = axes.contains(&RandomAxis::Dynamics);
                self.randomizations += 1;
                let seed = sub_seed(self.seed, &format!("randomize/{}", self.randomizations));
                self.env = Env::new(teleop_config(&self.config)).map_err(TeleopError::Env)?;
                self.restart(seed)?;
                detail.seed = Some(seed);
            }
        }
        Ok(detail)
    }

    /// Unprojects the clicked pixel of the current frame onto the surface it shows.
    fn click_interaction(&self, u: i64, v: i64, mode: ClickMode) -> Result<Interaction, TeleopError> {
        let f = &self.frame;
        if u < 0 || v < 0 || u >= i64::from(f.width) || v >= i64::from(f.height) {
            return Err(TeleopError::OutOfView);
        }
        if f.depth[f.index(u as u32, v as u32)] <= 0.0 {
            return Err(TeleopError::OutOfView);
        }
        let cam = self.env.camera();
        let dir = cam.ray(u as f64 + 0.5, v as f64 + 0.5);
        let snap = self.env.world().snapshot();
        let hit = snap.raycast(&cam.origin(), &dir, cam.far).ok_or(TeleopError::OutOfView)?;
        let n = if hit.normal.dot(&dir) > 0.0 { -hit.normal } else { hit.normal };
        let point: [f64; 3] = hit.point.into();
        let max_force = self.env.config().physics.max_push_force;
        Ok(match mode {
            ClickMode::Push => Interaction::Push { point, direction: (-n).into(), max_force, target: PUSH_TARGET },
            ClickMode::Pull => Interaction::Push { point, direction: n.into(), max_force, target: PUSH_TARGET },
            ClickMode::Pick => Interaction::Pick { point },
            ClickMode::Place => Interaction::Place { point },
        })
    }

    /// Replaces the simulator state, e.g. to stage a scene, and re-renders.
    /// Any recording is dropped since it could no longer be replayed.
    pub fn set_state(&mut self, state: crate::physics::WorldState) -> Result<(), TeleopError> {
        self.env.set_state(state);
        self.recording_from = None;
        self.history.clear();
        self.events.clear();
        self.frame = self.env.render_frame().map_err(TeleopError::Env)?;
        Ok(())
    }

    fn restart(&mut self, seed: u64) -> Result<(), TeleopError> {
        self.env.reset(seed).map_err(TeleopError::Env)?;
        self.seed = seed;
        self.history.clear();
        self.events.clear();
        self.drive_age = DRIVE_HOLD_TICKS;
        self.frame = self.env.render_frame().map_err(TeleopError::Env)?;
        Ok(())
    }

    /// Ends the current recording, if any. Returns the saved path (when a
    /// demo directory is set) and the number of demonstration ticks.
    pub fn finalize(&mut self) -> Result<Option<(Option<String>, usize)>, TeleopError> {
        let Some(from) = self.recording_from.take() else { return Ok(None) };
        let log = DemoLog { header: DemoLog::header_for(&self.env, self.seed, from), records: self.history.clone() };
        let ticks = log.records.iter().filter(|r| r.tick > from).count();
        let path = match &self.demo_dir {
            Some(dir) => {
                let p = dir.join(format!("demo_{}_{:03}.jsonl", self.seed, self.demos.len()));
                log.save(&p)?;
                Some(p.to_string_lossy().into_owned())
            }
            None => None,
        };
        self.demos.push(log);
        Ok(Some((path, ticks)))
    }

    /// One control step: folded action, env step, record, frame.
    pub fn tick(&mut self) -> Result<ServerMessage, TeleopError> {
        let (linear, angular) = if self.drive_age < DRIVE_HOLD_TICKS { self.drive } else { (0.0, 0.0) };
        self.drive_age = self.drive_age.saturating_add(1);
        let action = Action::Base { linear, angular };
        let result = self.env.step(&action).map_err(TeleopError::Env)?;
        let state = self.env.state();
        self.history.push(DemoRecord {
            tick: state.tick,
            robot: self.env.robot().clone(),
            state_hash: hex(state.state_hash()),
            action: TeleopAction { action, events: std::mem::take(&mut self.events) },
            task: self.env.task().cloned(),
        });
        self.frame = self.env.render_frame().map_err(TeleopError::Env)?;
        let message = self.frame_message()?;
        if result.done {
            // Task solved: close the demonstration and start the next episode.
            self.finalize()?;
            self.restart(self.seed.wrapping_add(1))?;
        }
        Ok(message)
    }

    pub fn frame_message(&self) -> Result<ServerMessage, TeleopError> {
        let b64 = base64::engine::general_purpose::STANDARD;
        let png = encode_png_rgb(&self.frame).map_err(|e| TeleopError::Io(e.to_string()))?;
        let depth = (self.stream == StreamMode::Rgbd).then(|| {
            let bytes: Vec<u8> = self.frame.depth.iter().flat_map(|d| d.to_le_bytes()).collect();
            b64.encode(bytes)
        });
        let r = self.env.robot();
        Ok(ServerMessage::Frame {
            tick: self.tick_count(),
            rgb: b64.encode(png),
            depth,
            state: FrameState {
                base: r.base,
                velocity: [r.velocity.0, r.velocity.1],
                gripper_open: r.gripper_open,
                held: r.attached.map(|a| a.object),
                episode_seed: self.seed,
                recording: self.is_recording(),
                task: self.env.task().cloned(),
            },
        })
    }
}
