use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fill::{fill_bounding_box, BoxPlacement};
use super::materials::default_materials;
use super::model::{v2, ArticulatedObject, Light, Material, Room, Scene, WallSegment};
use super::SceneError;
use crate::hash::sub_seed;
use crate::math::{point_segment_distance_2d, polygon_is_simple, Vec2};

pub type AssetPool = BTreeMap<String, Vec<ArticulatedObject>>;

/// Door or window cut into a wall, spanning `sill..top` vertically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Opening {
    pub a: [f64; 2],
    pub b: [f64; 2],
    #[serde(default)]
    pub sill: f64,
    pub top: f64,
}

/// Neutral floorplan document: the scene schema with boxes in place of models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Floorplan {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rooms: Vec<Room>,
    #[serde(default)]
    pub walls: Vec<WallSegment>,
    #[serde(default)]
    pub doors: Vec<Opening>,
    #[serde(default)]
    pub windows: Vec<Opening>,
    #[serde(default)]
    pub objects: Vec<BoxPlacement>,
    #[serde(default)]
    pub lights: Vec<Light>,
    #[serde(default)]
    pub materials: BTreeMap<String, Material>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImportReport {
    /// `(placement id, class)` for boxes whose class has no model in the pool.
    pub skipped: Vec<(u32, String)>,
}

const COLLINEAR_TOL: f64 = 0.01;

/// Parameter interval of `opening` along wall `a`-`b`, if it lies on the wall.
fn opening_interval(a: Vec2, b: Vec2, o: &Opening) -> Option<(f64, f64)> {
    let (oa, ob) = (v2(o.a), v2(o.b));
    if point_segment_distance_2d(oa, a, b) > COLLINEAR_TOL || point_segment_distance_2d(ob, a, b) > COLLINEAR_TOL {
        return None;
    }
    let e = b - a;
    let param = |p: Vec2| ((p - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
    let (s0, s1) = (param(oa), param(ob));
    let (s0, s1) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
    (s1 > s0).then_some((s0, s1))
}

fn build_walls(plan: &Floorplan) -> Result<Vec<WallSegment>, SceneError> {
    let openings: Vec<&Opening> = plan.doors.iter().chain(plan.windows.iter()).collect();
    let mut used = vec![false; openings.len()];
    let mut out = Vec::new();
    for (wi, w) in plan.walls.iter().enumerate() {
        let (a, b) = (v2(w.a), v2(w.b));
        if a == b || !(w.height > 0.0) {
            return Err(SceneError::Import(format!("walls[{wi}] is degenerate")));
        }
        let top = w.base + w.height;
        let mut cuts: Vec<(f64, f64, f64, f64)> = Vec::new();
        for (oi, o) in openings.iter().enumerate() {
            if let Some((s0, s1)) = opening_interval(a, b, o) {
                if !(o.top > o.sill) {
                    return Err(SceneError::Import(format!("opening {oi} has top <= sill")));
                }
                used[oi] = true;
                cuts.push((s0, s1, o.sill.max(w.base), o.top.min(top)));
            }
        }
        cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let at = |s: f64| {
            let p = a + (b - a) * s;
            [p.x, p.y]
        };
        let mut cursor = 0.0;
        for &(s0, s1, sill, otop) in &cuts {
            if s0 > cursor {
                out.push(WallSegment { a: at(cursor), b: at(s0), height: w.height, base: w.base });
            }
            if sill > w.base {
                out.push(WallSegment { a: at(s0), b: at(s1), height: sill - w.base, base: w.base });
            }
            if otop < top {
                out.push(WallSegment { a: at(s0), b: at(s1), height: top - otop, base: otop });
            }
            cursor = cursor.max(s1);
        }
        if cursor < 1.0 {
            out.push(WallSegment { a: at(cursor), b: at(1.0), height: w.height, base: w.base });
        }
    }
    if let Some(oi) = used.iter().position(|u| !u) {
        return Err(SceneError::Import(format!("opening {oi} does not lie on any wall")));
    }
    Ok(out)
}

/// Build a scene from structural elements, then fill every placement box with
/// a model of its class drawn from `asset_pool`.
pub fn import_floorplan(plan: &Floorplan, asset_pool: &AssetPool) -> Result<(Scene, ImportReport), SceneError> {
    for (i, r) in plan.rooms.iter().enumerate() {
        let poly: Vec<Vec2> = r.polygon.iter().map(|p| v2(*p)).collect();
        if !polygon_is_simple(&poly) {
            return Err(SceneError::Import(format!("rooms[{i}] polygon is not simple")));
        }
    }
    let walls = build_walls(plan)?;
    let mut ids = BTreeSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(plan.seed, "import"));
    let mut report = ImportReport::default();
    let mut objects = Vec::new();
    for p in &plan.objects {
        if !ids.insert(p.id) {
            return Err(SceneError::Import(format!("duplicate placement id {}", p.id)));
        }
        match asset_pool.get(&p.class_label).filter(|v| !v.is_empty()) {
            Some(models) => {
                let model = models[rng.gen_range(0..models.len())].clone();
                objects.push(fill_bounding_box(p, model)?);
            }
            None => report.skipped.push((p.id, p.class_label.clone())),
        }
    }
    let scene = Scene {
        name: plan.name.clone(),
        seed: plan.seed,
        rooms: plan.rooms.clone(),
        walls,
        objects,
        lights: plan.lights.clone(),
        materials: if plan.materials.is_empty() { default_materials() } else { plan.materials.clone() },
    };
    scene.validate().map_err(|e| SceneError::Import(e.to_string()))?;
    Ok((scene, report))
}
