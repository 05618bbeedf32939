//! Seeded domain randomization of link materials, object models and link
//! dynamics. Each axis draws from its own sub-seeded stream.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hash::sub_seed;
use crate::scene::materials::default_materials;
use crate::scene::procedural::default_asset_pool;
use crate::scene::{fill_bounding_box, AssetPool, BoxPlacement, Material, Scene, SceneError, ValidationError};

pub const JITTER_RANGE: [f64; 2] = [0.8, 1.25];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolMaterial {
    pub name: String,
    #[serde(flatten)]
    pub material: Material,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomizationSpec {
    pub seed: u64,
    pub randomize_materials: bool,
    pub randomize_objects: bool,
    pub randomize_dynamics: bool,
    /// Material family to interchangeable materials.
    pub material_pools: BTreeMap<String, Vec<PoolMaterial>>,
    pub asset_pool: AssetPool,
}

impl Default for RandomizationSpec {
    /// All axes off, with the built-in material table and asset pool.
    fn default() -> Self {
        let mut material_pools: BTreeMap<String, Vec<PoolMaterial>> = BTreeMap::new();
        for (name, material) in default_materials() {
            material_pools.entry(material.family.clone()).or_default().push(PoolMaterial { name, material });
        }
        RandomizationSpec {
            seed: 0,
            randomize_materials: false,
            randomize_objects: false,
            randomize_dynamics: false,
            material_pools,
            asset_pool: default_asset_pool(),
        }
    }
}

impl RandomizationSpec {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let err = |path: String, message: &str| Err(ValidationError { path, message: message.into() });
        for (family, pool) in &self.material_pools {
            if pool.is_empty() {
                return err(format!("material_pools.{family}"), "pool is empty");
            }
            for m in pool {
                if m.material.family != *family {
                    return err(format!("material_pools.{family}.{}", m.name), "material belongs to another family");
                }
                m.material.validate(&format!("material_pools.{family}.{}", m.name))?;
            }
        }
        for (class, pool) in &self.asset_pool {
            if pool.is_empty() {
                return err(format!("asset_pool.{class}"), "pool is empty");
            }
        }
        Ok(())
    }
}

/// A link whose material family has no pool; the link was left unchanged.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingPool {
    pub object: u32,
    pub link: usize,
    pub family: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RandomizationReport {
    pub missing_pools: Vec<MissingPool>,
    /// Objects whose class has no models in the asset pool.
    pub missing_classes: Vec<(u32, String)>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RandomizeError {
    #[error(transparent)]
    Spec(#[from] ValidationError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

fn stream(spec: &RandomizationSpec, axis: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(spec.seed, axis))
}

/// Adds missing entries for `names` from the built-in table.
fn ensure_materials<'a>(scene: &mut Scene, names: impl Iterator<Item = &'a String>) {
    let builtin = default_materials();
    for n in names {
        if !scene.materials.contains_key(n) {
            if let Some(m) = builtin.get(n) {
                scene.materials.insert(n.clone(), m.clone());
            }
        }
    }
}

/// Replaces each link's material with a uniform draw from its family's pool.
pub fn randomize_materials(scene: &Scene, spec: &RandomizationSpec) -> (Scene, RandomizationReport) {
    let mut out = scene.clone();
    let mut report = RandomizationReport::default();
    let mut rng = stream(spec, "materials");
    for obj in &mut out.objects {
        for (li, link) in obj.model.links.iter_mut().enumerate() {
            let family = scene.materials.get(&link.material).map(|m| m.family.clone());
            match family.as_ref().and_then(|f| spec.material_pools.get(f)).filter(|p| !p.is_empty()) {
                Some(pool) => {
                    let pick = &pool[rng.gen_range(0..pool.len())];
                    link.material = pick.name.clone();
                    out.materials.entry(pick.name.clone()).or_insert_with(|| pick.material.clone());
                }
                None => {
                    let family = family.unwrap_or_else(|| format!("<unknown material {}>", link.material));
                    log::warn!("object {} link {li}: no material pool for family {family}", obj.id);
                    report.missing_pools.push(MissingPool { object: obj.id, link: li, family });
                }
            }
        }
    }
    (out, report)
}

/// Swaps each object's model for a uniform draw of the same class, refit to
/// the same bounding box.
pub fn randomize_objects(scene: &Scene, spec: &RandomizationSpec) -> Result<(Scene, RandomizationReport), RandomizeError> {
    let mut out = scene.clone();
    let mut report = RandomizationReport::default();
    let mut rng = stream(spec, "objects");
    for obj in &mut out.objects {
        let Some(pool) = spec.asset_pool.get(&obj.class_label).filter(|p| !p.is_empty()) else {
            log::warn!("object {}: class {} absent from asset pool, model kept", obj.id, obj.class_label);
            report.missing_classes.push((obj.id, obj.class_label.clone()));
            continue;
        };
        let model = pool[rng.gen_range(0..pool.len())].clone();
        let placement = BoxPlacement { id: obj.id, class_label: obj.class_label.clone(), bbox: obj.bbox, is_static: obj.is_static, room: obj.room };
        *obj = fill_bounding_box(&placement, model)?;
    }
    let names: Vec<String> = out.objects.iter().flat_map(|o| o.model.links.iter().map(|l| l.material.clone())).collect();
    ensure_materials(&mut out, names.iter());
    Ok((out, report))
}

fn jitter(rng: &mut ChaCha8Rng) -> f64 {
    let [lo, hi] = JITTER_RANGE;
    rng.gen_range(lo.ln()..=hi.ln()).exp().clamp(lo, hi)
}

/// Sets each link's friction and density from its material's table entry,
/// each scaled by an independent jitter factor. Link masses then follow from
/// density and volume.
pub fn randomize_dynamics(scene: &Scene, spec: &RandomizationSpec) -> Scene {
    let mut out = scene.clone();
    let mut rng = stream(spec, "dynamics");
    for obj in &mut out.objects {
        for li in 0..obj.model.links.len() {
            let Some(m) = scene.materials.get(&obj.model.links[li].material) else { continue };
            let (friction, density) = (m.friction * jitter(&mut rng), m.density * jitter(&mut rng));
            let link = &mut obj.model.links[li];
            link.friction = Some(friction);
            link.density = Some(density);
            link.mass = None;
        }
    }
    out
}

/// Object, material and dynamics randomization in that order, as enabled.
pub fn randomize(scene: &Scene, spec: &RandomizationSpec) -> Result<(Scene, RandomizationReport), RandomizeError> {
    spec.validate()?;
    let mut report = RandomizationReport::default();
    let mut s = scene.clone();
    if spec.randomize_objects {
        let (next, r) = randomize_objects(&s, spec)?;
        s = next;
        report.missing_classes = r.missing_classes;
    }
    if spec.randomize_materials {
        let (next, r) = randomize_materials(&s, spec);
        s = next;
        report.missing_pools = r.missing_pools;
    }
    if spec.randomize_dynamics {
        s = randomize_dynamics(&s, spec);
    }
    s.validate()?;
    Ok((s, report))
}
