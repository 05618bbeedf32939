use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compute_spl, success_rate, Action, ActionKind, Env, EnvConfig, EnvError, EpisodeRecord};
use crate::plan::resample_polyline;

/// Pure pursuit on the walls-only shortest path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaypointFollower {
    /// Arc length along the path to the pursued point (m).
    pub lookahead: f64,
    /// Angular velocity per radian of heading error.
    pub gain: f64,
    /// Turn in place above this heading error (rad).
    pub turn_in_place: f64,
}

impl Default for WaypointFollower {
    fn default() -> Self {
        WaypointFollower { lookahead: 0.5, gain: 4.0, turn_in_place: 0.6 }
    }
}

impl WaypointFollower {
    pub fn act(&self, env: &Env) -> Action {
        let kind = env.config().action_space.kind;
        let Some(path) = env.shortest_path() else { return Action::zero(kind) };
        let target = resample_polyline(&path, self.lookahead, 1)[0];
        let (alpha, _) = env.bearing(target);
        let spec = &env.config().robot;
        let angular = (self.gain * alpha).clamp(-spec.max_angular, spec.max_angular);
        let linear = if alpha.abs() > self.turn_in_place { 0.0 } else { spec.max_linear * alpha.cos() };
        match kind {
            ActionKind::Base => Action::Base { linear, angular },
            ActionKind::MobileManipulation => {
                Action::MobileManipulation { extend_arm: false, linear, angular, ee_delta: [0.0; 6], gripper_closed: false }
            }
            ActionKind::Manipulation => Action::zero(kind),
        }
    }
}

/// Runs one follower episode to termination.
pub fn run_episode(env: &mut Env, seed: u64, policy: &WaypointFollower) -> Result<EpisodeRecord, EnvError> {
    env.reset(seed)?;
    loop {
        let action = policy.act(env);
        if env.step(&action)?.done {
            return Ok(env.episode_record().expect("episode finished"));
        }
    }
}

/// Runs seeds `seed..seed + n` on up to `parallel` threads; results are in seed order.
pub fn run_episodes(config: &EnvConfig, n: u64, seed: u64, parallel: usize) -> Result<Vec<EpisodeRecord>, EnvError> {
    let policy = WaypointFollower::default();
    let seeds: Vec<u64> = (0..n).map(|i| seed + i).collect();
    let chunk = seeds.len().div_ceil(parallel.max(1)).max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(parallel.max(1)).build().map_err(|e| EnvError::Config(e.to_string()))?;
    let results: Vec<Result<Vec<EpisodeRecord>, EnvError>> = pool.install(|| {
        seeds
            .par_chunks(chunk)
            .map(|chunk| {
                let mut env = Env::new(config.clone())?;
                chunk.iter().map(|s| run_episode(&mut env, *s, &policy)).collect()
            })
            .collect()
    });
    let mut out = vec![];
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub episodes: usize,
    pub success_rate: f64,
    pub spl: f64,
}

impl RunSummary {
    pub fn of(records: &[EpisodeRecord]) -> Option<Self> {
        Some(RunSummary { episodes: records.len(), success_rate: success_rate(records).ok()?, spl: compute_spl(records).ok()? })
    }
}

#[derive(Serialize)]
struct ResultsHeader {
    config_hash: String,
    seed: u64,
    episodes: u64,
}

/// Header line, one line per record, then a summary line when non-empty.
pub fn write_results(path: &Path, config: &EnvConfig, seed: u64, records: &[EpisodeRecord]) -> Result<Option<RunSummary>, EnvError> {
    let io = |e: std::io::Error| EnvError::Io(format!("{}: {e}", path.display()));
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let header = ResultsHeader { config_hash: format!("{:016x}", config.config_hash()), seed, episodes: records.len() as u64 };
    writeln!(f, "{}", serde_json::json!({ "header": header })).map_err(io)?;
    for r in records {
        writeln!(f, "{}", serde_json::to_string(r).expect("record serializes")).map_err(io)?;
    }
    let summary = RunSummary::of(records);
    if let Some(s) = &summary {
        writeln!(f, "{}", serde_json::json!({ "summary": s })).map_err(io)?;
    }
    f.flush().map_err(io)?;
    Ok(summary)
}
