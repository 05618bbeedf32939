//! Shortcut smoothing under a rest-to-rest time parameterization: every
//! segment starts and ends at zero velocity and follows the time-optimal
//! trapezoidal profile allowed by per-dimension velocity and acceleration
//! limits.

use rand::Rng;

use super::{distance, lerp, polyline_length, Config, Path, PlanSpace};

pub const DEFAULT_SHORTCUT_ROUNDS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct Limits {
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
}

impl Limits {
    pub fn uniform(dim: usize, velocity: f64, acceleration: f64) -> Self {
        Limits { velocity: vec![velocity; dim], acceleration: vec![acceleration; dim] }
    }
}

/// Velocity and acceleration limits of the path parameter s ∈ [0, 1] on the
/// segment `a -> b`, or `None` if the segment is degenerate.
fn scalar_limits(a: &[f64], b: &[f64], limits: &Limits) -> Option<(f64, f64)> {
    let mut vs = f64::INFINITY;
    let mut acc = f64::INFINITY;
    for (d, (x, y)) in a.iter().zip(b).enumerate() {
        let delta = (y - x).abs();
        if delta > 0.0 {
            vs = vs.min(limits.velocity[d] / delta);
            acc = acc.min(limits.acceleration[d] / delta);
        }
    }
    vs.is_finite().then_some((vs, acc))
}

pub fn segment_duration(a: &[f64], b: &[f64], limits: &Limits) -> f64 {
    match scalar_limits(a, b, limits) {
        None => 0.0,
        Some((v, acc)) if v * v / acc <= 1.0 => 1.0 / v + v / acc,
        Some((_, acc)) => 2.0 / acc.sqrt(),
    }
}

pub fn path_duration(waypoints: &[Config], limits: &Limits) -> f64 {
    waypoints.windows(2).map(|w| segment_duration(&w[0], &w[1], limits)).sum()
}

/// Path parameter at time `t` of a rest-to-rest profile with limits (v, acc).
fn profile(t: f64, total: f64, v: f64, acc: f64) -> f64 {
    let t = t.clamp(0.0, total);
    let ta = if v * v / acc <= 1.0 { v / acc } else { total / 2.0 };
    let peak = acc * ta;
    let s = if t < ta {
        0.5 * acc * t * t
    } else if t <= total - ta {
        0.5 * acc * ta * ta + peak * (t - ta)
    } else {
        let r = total - t;
        1.0 - 0.5 * acc * r * r
    };
    s.clamp(0.0, 1.0)
}

/// Configuration at time `t` along the timed path.
pub fn sample_trajectory(waypoints: &[Config], limits: &Limits, t: f64) -> Config {
    let mut t = t.max(0.0);
    for w in waypoints.windows(2) {
        let d = segment_duration(&w[0], &w[1], limits);
        if t <= d {
            return match scalar_limits(&w[0], &w[1], limits) {
                Some((v, acc)) => lerp(&w[0], &w[1], profile(t, d, v, acc)),
                None => w[0].clone(),
            };
        }
        t -= d;
    }
    waypoints.last().cloned().unwrap_or_default()
}

/// Segment index and configuration at time `t` (path shape only: position
/// along the segment is the profile's parameter).
fn locate(waypoints: &[Config], limits: &Limits, t: f64) -> (usize, Config) {
    let mut t = t;
    for (i, w) in waypoints.windows(2).enumerate() {
        let d = segment_duration(&w[0], &w[1], limits);
        if t <= d {
            return (i, sample_trajectory(&waypoints[i..i + 2], limits, t));
        }
        t -= d;
    }
    let last = waypoints.len() - 2;
    (last, waypoints[last + 1].clone())
}

/// Repeatedly replaces the stretch between two random times with a straight
/// segment, keeping the change only if it is collision-free and shortens
/// the duration without lengthening the path.
pub fn shortcut(space: &PlanSpace, path: &Path, limits: &Limits, rounds: usize, rng: &mut impl Rng) -> Path {
    let mut best = path.waypoints.clone();
    if best.len() < 3 {
        return path.clone();
    }
    let mut length = polyline_length(&best);
    let mut duration = path_duration(&best, limits);
    for _ in 0..rounds {
        let (t1, t2) = {
            let a = rng.gen_range(0.0..=duration);
            let b = rng.gen_range(0.0..=duration);
            (a.min(b), a.max(b))
        };
        let (i, q1) = locate(&best, limits, t1);
        let (j, q2) = locate(&best, limits, t2);
        if i >= j {
            continue;
        }
        let mut candidate: Vec<Config> = best[..=i].to_vec();
        if distance(&q1, &best[i]) > 0.0 {
            candidate.push(q1.clone());
        }
        candidate.push(q2.clone());
        let rest = &best[j + 1..];
        if distance(&q2, &rest[0]) == 0.0 {
            candidate.extend_from_slice(&rest[1..]);
        } else {
            candidate.extend_from_slice(rest);
        }
        let new_length = polyline_length(&candidate);
        let new_duration = path_duration(&candidate, limits);
        if new_length <= length && new_duration < duration && space.motion_valid(&q1, &q2) {
            best = candidate;
            length = new_length;
            duration = new_duration;
        }
    }
    Path::new(path.algorithm, best, path.iterations_used)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_and_triangle_durations() {
        let l = Limits::uniform(1, 1.0, 1.0);
        // Triangle: 2·sqrt(d/a).
        assert!((segment_duration(&[0.0], &[0.5], &l) - 2.0 * 0.5f64.sqrt()).abs() < 1e-12);
        // Trapezoid: d/v + v/a.
        assert!((segment_duration(&[0.0], &[3.0], &l) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn profile_endpoints() {
        let l = Limits::uniform(2, 1.0, 2.0);
        let w = vec![vec![0.0, 0.0], vec![2.0, 1.0]];
        let d = path_duration(&w, &l);
        assert_eq!(sample_trajectory(&w, &l, 0.0), vec![0.0, 0.0]);
        let end = sample_trajectory(&w, &l, d);
        assert!(distance(&end, &[2.0, 1.0]) < 1e-12);
        let mid = sample_trajectory(&w, &l, d / 2.0);
        assert!(distance(&mid, &[1.0, 0.5]) < 1e-12);
    }
}
