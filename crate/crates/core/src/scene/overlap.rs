use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::Scene;
use crate::hash::sub_seed;
use crate::math::{Obb, Vec3};

pub const OVERLAP_SAMPLES: usize = 4096;
const REMOVE_ABOVE: f64 = 0.8;
const MAX_SHRINK_STEPS: u32 = 20;

/// Fraction of the smaller box's volume inside the other box, estimated from
/// [`OVERLAP_SAMPLES`] uniform points. Exactly 0 for separated boxes.
pub fn overlap_fraction(a: &Obb, b: &Obb, seed: u64) -> f64 {
    if !a.aabb().overlaps(&b.aabb()) || !a.intersects(b) {
        return 0.0;
    }
    let (small, other) = if a.volume() <= b.volume() { (a, b) } else { (b, a) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = crate::math::Placement::new(small.center.x, small.center.y, small.center.z, small.yaw);
    let inside = (0..OVERLAP_SAMPLES)
        .filter(|_| {
            let local = Vec3::new(
                rng.gen_range(-1.0..1.0) * small.half.x,
                rng.gen_range(-1.0..1.0) * small.half.y,
                rng.gen_range(-1.0..1.0) * small.half.z,
            );
            other.contains(frame.apply(local))
        })
        .count();
    inside as f64 / OVERLAP_SAMPLES as f64
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    /// `(removed id, kept id, overlap fraction)`.
    pub removed: Vec<(u32, u32, f64)>,
    /// Cumulative uniform shrink per object, e.g. 0.12 = 12 %.
    pub shrunk: BTreeMap<u32, f64>,
    /// Pairs still overlapping after the shrink budget: `(a, b, fraction)`.
    pub flagged: Vec<(u32, u32, f64)>,
}

impl OverlapReport {
    pub fn is_empty(&self) -> bool {
        self.removed.is_empty() && self.shrunk.is_empty() && self.flagged.is_empty()
    }
}

fn pair_seed(scene_seed: u64, a: u32, b: u32) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    sub_seed(scene_seed ^ ((u64::from(lo) << 32) | u64::from(hi)), "overlap")
}

/// Remove objects overlapping another by more than 80 % of the smaller
/// volume (the larger id of the pair goes), then shrink the larger-id member
/// of each remaining overlapping pair in 1 % steps up to 20 % cumulative.
pub fn resolve_overlaps(scene: &Scene) -> (Scene, OverlapReport) {
    let mut out = scene.clone();
    let mut report = OverlapReport::default();
    out.objects.sort_by_key(|o| o.id);
    let original: Vec<[f64; 3]> = out.objects.iter().map(|o| o.bbox.half_extents).collect();
    let n = out.objects.len();

    let mut removed = BTreeSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if removed.contains(&i) || removed.contains(&j) {
                continue;
            }
            let (a, b) = (&out.objects[i], &out.objects[j]);
            let f = overlap_fraction(&a.bbox.obb(), &b.bbox.obb(), pair_seed(scene.seed, a.id, b.id));
            if f > REMOVE_ABOVE {
                removed.insert(j);
                report.removed.push((b.id, a.id, f));
            }
        }
    }

    let mut steps = vec![0u32; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if removed.contains(&i) || removed.contains(&j) {
                continue;
            }
            let seed = pair_seed(scene.seed, out.objects[i].id, out.objects[j].id);
            let fixed = out.objects[i].bbox.obb();
            let mut f = overlap_fraction(&fixed, &out.objects[j].bbox.obb(), seed);
            while f > 0.0 && steps[j] < MAX_SHRINK_STEPS {
                steps[j] += 1;
                let k = 1.0 - f64::from(steps[j]) / 100.0;
                out.objects[j].bbox.half_extents = original[j].map(|h| h * k);
                f = overlap_fraction(&fixed, &out.objects[j].bbox.obb(), seed);
            }
            if f > 0.0 {
                report.flagged.push((out.objects[i].id, out.objects[j].id, f));
            }
        }
    }
    for (j, s) in steps.iter().enumerate() {
        if *s > 0 && !removed.contains(&j) {
            report.shrunk.insert(out.objects[j].id, f64::from(*s) / 100.0);
        }
    }
    let mut idx = 0;
    out.objects.retain(|_| {
        let keep = !removed.contains(&idx);
        idx += 1;
        keep
    });
    (out, report)
}
