use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::render::SensorFrame;

/// Fraction of the image the ObjectNav target must cover.
pub const OBJECTNAV_MIN_FRACTION: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Success,
    Timeout,
    Collision,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub success: bool,
    /// Agent path length (m).
    pub p: f64,
    /// Shortest path length (m).
    pub l: f64,
    pub steps: u64,
    pub reason: Termination,
}

/// Success weighted by path length: mean of `S·l / max(p, l)`.
pub fn compute_spl(episodes: &[EpisodeRecord]) -> Result<f64, EnvError> {
    if episodes.is_empty() {
        return Err(EnvError::EmptyInput);
    }
    let total: f64 = episodes
        .iter()
        .map(|e| if e.success && e.l > 0.0 { e.l / e.p.max(e.l) } else { 0.0 })
        .sum();
    Ok(total / episodes.len() as f64)
}

pub fn success_rate(episodes: &[EpisodeRecord]) -> Result<f64, EnvError> {
    if episodes.is_empty() {
        return Err(EnvError::EmptyInput);
    }
    Ok(episodes.iter().filter(|e| e.success).count() as f64 / episodes.len() as f64)
}

/// True iff the target instance covers at least 5% of the frame.
pub fn objectnav_success(frame: &SensorFrame, target: u32) -> bool {
    let n = frame.len();
    if n == 0 {
        return false;
    }
    let count = frame.instance.iter().filter(|i| **i == target).count();
    count as f64 >= OBJECTNAV_MIN_FRACTION * n as f64
}
