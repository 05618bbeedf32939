use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::vocab::class_id;
use super::{SceneError, ValidationError};
use crate::math::{polygon_is_simple, Aabb, Obb, Placement, Vec2, Vec3};

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn is_false(v: &bool) -> bool {
    !*v
}

pub(crate) fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

pub(crate) fn v2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rooms: Vec<Room>,
    #[serde(default)]
    pub walls: Vec<WallSegment>,
    #[serde(default)]
    pub objects: Vec<ObjectInstance>,
    #[serde(default)]
    pub lights: Vec<Light>,
    #[serde(default)]
    pub materials: BTreeMap<String, Material>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub id: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub polygon: Vec<[f64; 2]>,
    #[serde(default)]
    pub floor_z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ceiling_z: Option<f64>,
}

/// Vertical rectangle over the 2D segment `a`-`b`, spanning `base..base + height`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallSegment {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub height: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub base: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub center: [f64; 3],
    pub yaw: f64,
    pub half_extents: [f64; 3],
}

impl BoundingBox {
    pub fn obb(&self) -> Obb {
        Obb::new(v3(self.center), self.yaw, v3(self.half_extents))
    }

    pub fn placement(&self) -> Placement {
        Placement::new(self.center[0], self.center[1], self.center[2], self.yaw)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: u32,
    #[serde(rename = "class")]
    pub class_label: String,
    pub bbox: BoundingBox,
    /// Root fixed to the world. Joints of a static object still move.
    #[serde(rename = "static", default, skip_serializing_if = "is_false")]
    pub is_static: bool,
    pub model: ArticulatedObject,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArticulatedObject {
    pub links: Vec<Link>,
    #[serde(default)]
    pub joints: Vec<Joint>,
    #[serde(default, skip_serializing_if = "is_zero_usize")]
    pub root: usize,
}

fn is_zero_usize(v: &usize) -> bool {
    *v == 0
}

/// Axis-aligned box in the model's native frame at zero joint configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
    pub material: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub friction: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub kind: JointKind,
    pub parent: usize,
    pub child: usize,
    pub axis: [f64; 3],
    pub anchor: [f64; 3],
    pub limits: [f64; 2],
    /// Resistance torque (revolute, N·m) or force (prismatic, N).
    #[serde(default)]
    pub friction: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub damping: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub position: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub family: String,
    pub albedo: [f64; 3],
    pub roughness: f64,
    pub metallic: f64,
    pub friction: f64,
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Light {
    /// `direction` is the direction of travel of the light.
    Directional { direction: [f64; 3], intensity: [f64; 3] },
    Point { position: [f64; 3], intensity: [f64; 3] },
}

impl Link {
    pub fn native_obb(&self) -> Obb {
        Obb::new(v3(self.center), 0.0, v3(self.half_extents))
    }
}

impl Joint {
    pub fn range(&self) -> f64 {
        self.limits[1] - self.limits[0]
    }

    pub fn clamp(&self, q: f64) -> f64 {
        q.clamp(self.limits[0], self.limits[1])
    }
}

impl ArticulatedObject {
    /// A single-link rigid box.
    pub fn single_box(half_extents: [f64; 3], material: &str) -> Self {
        ArticulatedObject {
            links: vec![Link {
                name: "body".into(),
                center: [0.0, 0.0, 0.0],
                half_extents,
                material: material.into(),
                mass: None,
                density: None,
                friction: None,
            }],
            joints: vec![],
            root: 0,
        }
    }

    /// AABB of all links in the native frame at zero configuration.
    pub fn native_aabb(&self) -> Aabb {
        self.links.iter().fold(Aabb::empty(), |acc, l| acc.union(&l.native_obb().aabb()))
    }

    /// Index of the joint whose child is each link (`None` for the root).
    pub fn parent_joints(&self) -> Vec<Option<usize>> {
        let mut parents = vec![None; self.links.len()];
        for (j, joint) in self.joints.iter().enumerate() {
            if joint.child < parents.len() {
                parents[joint.child] = Some(j);
            }
        }
        parents
    }

    /// Links in breadth-first order from the root.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.links.len());
        let mut queue = VecDeque::from([self.root]);
        while let Some(l) = queue.pop_front() {
            order.push(l);
            for j in self.joints.iter().filter(|j| j.parent == l) {
                queue.push_back(j.child);
            }
        }
        order
    }

    pub(crate) fn validate(&self, path: &str, materials: &BTreeMap<String, Material>) -> Result<(), ValidationError> {
        let err = |p: String, m: String| Err(ValidationError { path: p, message: m });
        if self.links.is_empty() {
            return err(format!("{path}.links"), "model has no links".into());
        }
        if self.root >= self.links.len() {
            return err(format!("{path}.root"), "root link out of range".into());
        }
        for (i, l) in self.links.iter().enumerate() {
            let lp = format!("{path}.links[{i}]");
            if l.half_extents.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
                return err(format!("{lp}.half_extents"), "half-extents must be positive".into());
            }
            let Some(mat) = materials.get(&l.material) else {
                return err(format!("{lp}.material"), format!("unknown material '{}'", l.material));
            };
            match (l.mass, l.density) {
                (Some(m), _) if !(m > 0.0) => return err(format!("{lp}.mass"), "mass must be positive".into()),
                (None, Some(d)) if !(d > 0.0) => return err(format!("{lp}.density"), "density must be positive".into()),
                (None, None) if !(mat.density > 0.0) => return err(format!("{lp}.material"), "material density must be positive".into()),
                _ => {}
            }
            if let Some(f) = l.friction {
                if !(f >= 0.0) {
                    return err(format!("{lp}.friction"), "friction must be non-negative".into());
                }
            }
        }
        let mut children = BTreeSet::new();
        for (j, joint) in self.joints.iter().enumerate() {
            let jp = format!("{path}.joints[{j}]");
            if joint.parent >= self.links.len() || joint.child >= self.links.len() || joint.parent == joint.child {
                return err(jp, "joint references invalid links".into());
            }
            if joint.child == self.root {
                return err(jp, "root link cannot be a joint child".into());
            }
            if !children.insert(joint.child) {
                return err(jp, format!("link {} has more than one parent joint", joint.child));
            }
            if !(joint.limits[0] <= joint.limits[1]) {
                return err(format!("{jp}.limits"), format!("joint {j} has lo > hi ({} > {})", joint.limits[0], joint.limits[1]));
            }
            let axis = v3(joint.axis);
            if (axis.norm() - 1.0).abs() > 1e-6 {
                return err(format!("{jp}.axis"), "axis must be a unit vector".into());
            }
            if joint.kind == JointKind::Revolute && (axis.z.abs() - 1.0).abs() > 1e-6 {
                return err(format!("{jp}.axis"), "revolute axes must be vertical".into());
            }
            if joint.position < joint.limits[0] || joint.position > joint.limits[1] {
                return err(format!("{jp}.position"), "position outside limits".into());
            }
            if !(joint.friction >= 0.0) || !(joint.damping >= 0.0) {
                return err(jp, "friction and damping must be non-negative".into());
            }
        }
        if self.topological_order().len() != self.links.len() {
            return err(format!("{path}.joints"), "joint graph is not a tree rooted at the root link".into());
        }
        let ext = self.native_aabb().extent();
        if ext.iter().any(|e| !(*e > 0.0)) {
            return err(format!("{path}.links"), "model has zero extent".into());
        }
        Ok(())
    }
}

impl ObjectInstance {
    /// Per-axis factors mapping the model's native extent onto the bbox.
    pub fn scale(&self) -> Vec3 {
        let ext = self.model.native_aabb().extent();
        let full = v3(self.bbox.half_extents) * 2.0;
        full.component_div(&ext)
    }

    pub fn rest_joint_positions(&self) -> Vec<f64> {
        self.model.joints.iter().map(|j| j.position).collect()
    }

    /// Link boxes after scaling, in the object frame (origin at bbox center).
    pub fn scaled_links(&self) -> Vec<Obb> {
        let c = self.model.native_aabb().center();
        let s = self.scale();
        self.model
            .links
            .iter()
            .map(|l| Obb::new((v3(l.center) - c).component_mul(&s), 0.0, v3(l.half_extents).component_mul(&s)))
            .collect()
    }

    /// Per-link transforms in the object frame for the given joint positions.
    pub fn link_transforms(&self, joint_positions: &[f64]) -> Vec<Placement> {
        let c = self.model.native_aabb().center();
        let s = self.scale();
        let parents = self.model.parent_joints();
        let mut out = vec![Placement::IDENTITY; self.model.links.len()];
        for l in self.model.topological_order() {
            let Some(j) = parents[l] else { continue };
            let joint = &self.model.joints[j];
            let q = joint_positions.get(j).copied().unwrap_or(joint.position);
            let local = match joint.kind {
                JointKind::Revolute => {
                    let anchor = (v3(joint.anchor) - c).component_mul(&s);
                    Placement::about_vertical(anchor, q * joint.axis[2].signum())
                }
                JointKind::Prismatic => {
                    let d = v3(joint.axis) * q;
                    Placement::new(d.x, d.y, d.z, 0.0)
                }
            };
            out[l] = out[joint.parent].compose(&local);
        }
        out
    }

    /// World-space link boxes. `placement` overrides the bbox pose for free bodies.
    pub fn posed_links(&self, joint_positions: &[f64], placement: Option<Placement>) -> Vec<Obb> {
        let base = placement.unwrap_or_else(|| self.bbox.placement());
        let transforms = self.link_transforms(joint_positions);
        self.scaled_links()
            .into_iter()
            .zip(transforms)
            .map(|(b, t)| {
                let world = base.compose(&t);
                Obb::new(world.apply(b.center), world.yaw, b.half)
            })
            .collect()
    }

    pub fn link_volume(&self, link: usize) -> f64 {
        let s = self.scale();
        let h = v3(self.model.links[link].half_extents).component_mul(&s);
        8.0 * h.x * h.y * h.z
    }

    pub fn link_mass(&self, link: usize, materials: &BTreeMap<String, Material>) -> f64 {
        let l = &self.model.links[link];
        match (l.mass, l.density) {
            (Some(m), _) => m,
            (None, Some(d)) => d * self.link_volume(link),
            (None, None) => materials.get(&l.material).map(|m| m.density).unwrap_or(1.0) * self.link_volume(link),
        }
    }

    pub fn total_mass(&self, materials: &BTreeMap<String, Material>) -> f64 {
        (0..self.model.links.len()).map(|i| self.link_mass(i, materials)).sum()
    }

    pub fn link_friction(&self, link: usize, materials: &BTreeMap<String, Material>) -> f64 {
        let l = &self.model.links[link];
        l.friction.or_else(|| materials.get(&l.material).map(|m| m.friction)).unwrap_or(0.0)
    }
}

impl Material {
    pub(crate) fn validate(&self, path: &str) -> Result<(), ValidationError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let msg = if !self.albedo.iter().all(|a| unit(*a)) {
            Some("albedo outside [0,1]")
        } else if !unit(self.roughness) {
            Some("roughness outside [0,1]")
        } else if !unit(self.metallic) {
            Some("metallic outside [0,1]")
        } else if !(self.friction >= 0.0) {
            Some("friction must be non-negative")
        } else if !(self.density > 0.0) {
            Some("density must be positive")
        } else {
            None
        };
        match msg {
            Some(m) => Err(ValidationError { path: path.into(), message: m.into() }),
            None => Ok(()),
        }
    }
}

impl Scene {
    pub fn empty(name: &str) -> Self {
        Scene {
            name: name.into(),
            seed: 0,
            rooms: vec![],
            walls: vec![],
            objects: vec![],
            lights: vec![],
            materials: super::materials::default_materials(),
        }
    }

    pub fn object(&self, id: u32) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_index(&self, id: u32) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let err = |p: String, m: String| Err(ValidationError { path: p, message: m });
        for (name, m) in &self.materials {
            m.validate(&format!("materials.{name}"))?;
        }
        let mut room_ids = BTreeSet::new();
        for (i, r) in self.rooms.iter().enumerate() {
            if !room_ids.insert(r.id) {
                return err(format!("rooms[{i}].id"), format!("duplicate room id {}", r.id));
            }
            let poly: Vec<Vec2> = r.polygon.iter().map(|p| v2(*p)).collect();
            if !polygon_is_simple(&poly) {
                return err(format!("rooms[{i}].polygon"), "room polygon is not simple".into());
            }
            if let Some(c) = r.ceiling_z {
                if !(c > r.floor_z) {
                    return err(format!("rooms[{i}].ceiling_z"), "ceiling must be above floor".into());
                }
            }
        }
        for (i, w) in self.walls.iter().enumerate() {
            if !(w.height > 0.0) {
                return err(format!("walls[{i}].height"), "wall height must be positive".into());
            }
            if w.a == w.b {
                return err(format!("walls[{i}]"), "wall has zero length".into());
            }
        }
        let mut ids = BTreeSet::new();
        for (i, o) in self.objects.iter().enumerate() {
            let p = format!("objects[{i}]");
            if o.id == 0 {
                return err(format!("{p}.id"), "instance id 0 is reserved for background".into());
            }
            if !ids.insert(o.id) {
                return err(format!("{p}.id"), format!("duplicate instance id {}", o.id));
            }
            if class_id(&o.class_label).is_none() {
                return err(format!("{p}.class"), format!("class '{}' not in vocabulary", o.class_label));
            }
            if o.bbox.half_extents.iter().any(|h| !(*h > 0.0)) {
                return err(format!("{p}.bbox.half_extents"), "half-extents must be positive".into());
            }
            if let Some(r) = o.room {
                if !room_ids.contains(&r) {
                    return err(format!("{p}.room"), format!("unknown room {r}"));
                }
            }
            o.model.validate(&format!("{p}.model"), &self.materials)?;
        }
        for (i, l) in self.lights.iter().enumerate() {
            let (Light::Directional { intensity, .. } | Light::Point { intensity, .. }) = l;
            if intensity.iter().any(|v| !(*v >= 0.0)) {
                return err(format!("lights[{i}].intensity"), "intensity must be non-negative".into());
            }
            if let Light::Directional { direction, .. } = l {
                if (v3(*direction).norm() - 1.0).abs() > 1e-6 {
                    return err(format!("lights[{i}].direction"), "direction must be a unit vector".into());
                }
            }
        }
        Ok(())
    }

    /// Validation that also reports model fitting failures as scene errors.
    pub fn check(&self) -> Result<(), SceneError> {
        self.validate().map_err(SceneError::Validation)
    }
}
