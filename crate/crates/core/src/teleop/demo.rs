use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{teleop_config, TeleopError, TICK_RATE_HZ};
use crate::env::{Action, Env, EnvConfig, TaskState};
use crate::math::Vec3;
use crate::physics::{apply_push, grasp, inverse_kinematics, release, PushOutcome, RobotState};
use crate::scene::scene_hash;

/// A discrete intervention applied at a tick boundary, before the step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Interaction {
    Push { point: [f64; 3], direction: [f64; 3], max_force: f64, target: f64 },
    /// Reach the point and close the gripper.
    Pick { point: [f64; 3] },
    /// Reach above the point and open the gripper.
    Place { point: [f64; 3] },
    Gripper { open: bool },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionResult {
    pub push: Option<PushOutcome>,
    pub grasped: Option<u32>,
}

/// Height above a clicked placement point at which the object is let go (m).
const PLACE_CLEARANCE: f64 = 0.1;

/// Reaches are kinematic: the arm is set to the IK solution at once.
fn reach(env: &mut Env, point: [f64; 3]) -> Result<(), TeleopError> {
    let mut state = env.state().clone();
    let spec = env.config().robot.arm.clone();
    let robot = state.robot.as_mut().expect("env has a robot");
    let target = robot.base.placement().inverse_apply(Vec3::from(point));
    let q = inverse_kinematics(target, &spec, &robot.arm).map_err(|e| TeleopError::Unreachable(e.to_string()))?;
    robot.arm = q.clone();
    robot.arm_target = q;
    env.set_state(state);
    Ok(())
}

pub fn apply_interaction(env: &mut Env, interaction: &Interaction) -> Result<InteractionResult, TeleopError> {
    let mut out = InteractionResult::default();
    match interaction {
        Interaction::Push { point, direction, max_force, target } => {
            let (next, outcome) = apply_push(env.world(), env.state(), Vec3::from(*point), Vec3::from(*direction), *max_force, *target)
                .map_err(|e| TeleopError::Physics(e.to_string()))?;
            env.set_state(next);
            out.push = Some(outcome);
        }
        Interaction::Pick { point } => {
            reach(env, *point)?;
            let (next, held) = grasp(env.world(), env.state());
            env.set_state(next);
            out.grasped = held;
        }
        Interaction::Place { point } => {
            reach(env, [point[0], point[1], point[2] + PLACE_CLEARANCE])?;
            let next = release(env.world(), env.state());
            env.set_state(next);
        }
        Interaction::Gripper { open: true } => {
            let next = release(env.world(), env.state());
            env.set_state(next);
        }
        Interaction::Gripper { open: false } => {
            let (next, held) = grasp(env.world(), env.state());
            env.set_state(next);
            out.grasped = held;
        }
    }
    Ok(out)
}

/// Everything applied during one tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeleopAction {
    pub action: Action,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<Interaction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoHeader {
    /// Hex FNV-1a of the effective environment config.
    pub config_hash: String,
    pub scene_hash: String,
    pub seed: u64,
    pub tick_rate_hz: u32,
    /// First tick of the demonstration proper; earlier records lead up to it.
    #[serde(default)]
    pub record_from_tick: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoRecord {
    /// Tick reached by this step.
    pub tick: u64,
    pub robot: RobotState,
    pub state_hash: String,
    pub action: TeleopAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskState>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoLog {
    pub header: DemoHeader,
    pub records: Vec<DemoRecord>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: DemoHeader,
}

pub fn hex(v: u64) -> String {
    format!("{v:016x}")
}

impl DemoLog {
    /// Header for an episode of `env` (built with the teleop config).
    pub fn header_for(env: &Env, seed: u64, record_from_tick: u64) -> DemoHeader {
        DemoHeader {
            config_hash: hex(env.config().config_hash()),
            scene_hash: hex(scene_hash(env.base_scene())),
            seed,
            tick_rate_hz: TICK_RATE_HZ,
            record_from_tick,
        }
    }

    pub fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", serde_json::to_string(&HeaderLine { header: self.header.clone() }).expect("header serializes"))?;
        for r in &self.records {
            writeln!(out, "{}", serde_json::to_string(r).expect("record serializes"))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), TeleopError> {
        let io = |e: std::io::Error| TeleopError::Io(format!("{}: {e}", path.display()));
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        self.write(&mut f).map_err(io)?;
        f.flush().map_err(io)
    }

    /// Parses and validates: header first, 20 Hz, strictly increasing ticks.
    pub fn read(input: impl BufRead) -> Result<Self, TeleopError> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let corrupt = |line: usize, m: String| TeleopError::CorruptLog(format!("line {}: {m}", line + 1));
        let (i, first) = lines.next().ok_or_else(|| TeleopError::CorruptLog("empty log".into()))?;
        let first = first.map_err(|e| corrupt(i, e.to_string()))?;
        let header = serde_json::from_str::<HeaderLine>(&first).map_err(|e| corrupt(i, format!("bad header: {e}")))?.header;
        if header.tick_rate_hz != TICK_RATE_HZ {
            return Err(corrupt(i, format!("tick_rate_hz is {}, expected {TICK_RATE_HZ}", header.tick_rate_hz)));
        }
        let mut records: Vec<DemoRecord> = vec![];
        for (i, line) in lines {
            let line = line.map_err(|e| corrupt(i, e.to_string()))?;
            let r: DemoRecord = serde_json::from_str(&line).map_err(|e| corrupt(i, e.to_string()))?;
            if records.last().is_some_and(|p| r.tick <= p.tick) {
                return Err(corrupt(i, format!("tick {} does not increase", r.tick)));
            }
            records.push(r);
        }
        Ok(DemoLog { header, records })
    }

    pub fn load(path: &Path) -> Result<Self, TeleopError> {
        let f = std::fs::File::open(path).map_err(|e| TeleopError::Io(format!("{}: {e}", path.display())))?;
        Self::read(std::io::BufReader::new(f))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub ticks: usize,
    /// Largest absolute difference over base pose, arm joints and velocities.
    pub max_divergence: f64,
    pub hash_mismatches: usize,
    pub first_mismatch_tick: Option<u64>,
    pub final_hash_match: bool,
}

fn robot_divergence(a: &RobotState, b: &RobotState) -> f64 {
    let mut d = [a.base.x - b.base.x, a.base.y - b.base.y, a.base.yaw - b.base.yaw, a.velocity.0 - b.velocity.0, a.velocity.1 - b.velocity.1]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for (x, y) in a.arm.iter().zip(&b.arm) {
        d = d.max((x - y).abs());
    }
    if a.arm.len() != b.arm.len() || a.gripper_open != b.gripper_open || a.attached.map(|x| x.object) != b.attached.map(|x| x.object) {
        d = f64::INFINITY;
    }
    d
}

/// Rebuilds the environment from `config` and the header seed, re-applies
/// every recorded action, and compares states tick by tick.
pub fn replay(log: &DemoLog, config: &EnvConfig) -> Result<DivergenceReport, TeleopError> {
    let mut env = Env::new(teleop_config(config)).map_err(TeleopError::Env)?;
    let expected = hex(env.config().config_hash());
    let scene = hex(scene_hash(env.base_scene()));
    if log.header.config_hash != expected || log.header.scene_hash != scene {
        return Err(TeleopError::ConfigMismatch { log: log.header.config_hash.clone(), env: expected });
    }
    env.reset(log.header.seed).map_err(TeleopError::Env)?;
    let mut report = DivergenceReport { ticks: 0, max_divergence: 0.0, hash_mismatches: 0, first_mismatch_tick: None, final_hash_match: true };
    for r in &log.records {
        for e in &r.action.events {
            // Failed interactions are never recorded; a failure here is divergence.
            if apply_interaction(&mut env, e).is_err() {
                report.max_divergence = f64::INFINITY;
            }
        }
        env.step(&r.action.action).map_err(TeleopError::Env)?;
        report.ticks += 1;
        let state = env.state();
        if state.tick != r.tick {
            return Err(TeleopError::CorruptLog(format!("record tick {} replays to tick {}", r.tick, state.tick)));
        }
        report.max_divergence = report.max_divergence.max(robot_divergence(&r.robot, env.robot()));
        let matches = hex(state.state_hash()) == r.state_hash;
        if !matches {
            report.hash_mismatches += 1;
            report.first_mismatch_tick.get_or_insert(r.tick);
        }
        report.final_hash_match = matches;
    }
    Ok(report)
}
