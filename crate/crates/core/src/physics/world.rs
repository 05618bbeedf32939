use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::arm::joint_positions;
use super::state::{BasePose, PhysicsConfig, RobotSpec, RobotState, WorldState, SUBSTEP_DT};
use crate::geometry::{Shape, Snapshot, SurfaceKind};
use crate::math::{point_rect_distance_2d, point_segment_distance_2d, Aabb, Obb, Placement, Vec2, Vec3};
use crate::scene::{JointKind, Scene};

/// Scene plus its mutable physical state. The scene itself is never mutated.
#[derive(Clone, Debug)]
pub struct World {
    pub scene: Arc<Scene>,
    pub robot_spec: RobotSpec,
    pub config: PhysicsConfig,
    pub state: WorldState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Body {
    Base,
    ArmLink(usize),
    Object(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Other {
    Surface(SurfaceKind),
    Robot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Contact {
    pub body: Body,
    pub other: Other,
}

impl Contact {
    pub fn describe(&self) -> String {
        let other = match self.other {
            Other::Surface(k) => k.label(),
            Other::Robot => "robot".into(),
        };
        format!("{:?} <-> {other}", self.body)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Candidate {
    Robot { base: BasePose, arm: Vec<f64> },
    Object { id: u32, pose: Placement },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CollisionReport {
    pub colliding: bool,
    pub contacts: Vec<Contact>,
}

impl CollisionReport {
    fn from_contacts(mut contacts: Vec<Contact>) -> Self {
        contacts.sort();
        contacts.dedup();
        CollisionReport { colliding: !contacts.is_empty(), contacts }
    }
}

/// Zero-thickness box standing on a wall segment.
pub fn wall_obb(a: Vec2, b: Vec2, z0: f64, z1: f64) -> Obb {
    let e = b - a;
    let mid = (a + b) * 0.5;
    Obb::new(Vec3::new(mid.x, mid.y, 0.5 * (z0 + z1)), e.y.atan2(e.x), Vec3::new(0.5 * e.norm(), 0.0, 0.5 * (z1 - z0)))
}

/// Robot body as primitives: footprint cylinder and arm capsules.
#[derive(Clone, Debug)]
pub struct RobotGeometry {
    pub center: Vec2,
    pub radius: f64,
    pub height: f64,
    pub arm: Vec<(Vec3, Vec3)>,
    pub arm_radius: f64,
}

impl RobotGeometry {
    pub fn base_aabb(&self) -> Aabb {
        Aabb {
            min: Vec3::new(self.center.x - self.radius, self.center.y - self.radius, 0.0),
            max: Vec3::new(self.center.x + self.radius, self.center.y + self.radius, self.height),
        }
    }

    pub fn segment_aabb(&self, (a, b): &(Vec3, Vec3)) -> Aabb {
        let r = Vec3::repeat(self.arm_radius);
        Aabb { min: a.inf(b) - r, max: a.sup(b) + r }
    }

    /// Exact primitive test of the footprint cylinder against a box.
    pub fn base_hits_box(&self, b: &Obb) -> bool {
        let (z0, z1) = b.z_range();
        z1 > 0.0 && z0 < self.height && point_rect_distance_2d(self.center, b) < self.radius
    }

    pub fn base_hits_wall(&self, a: Vec2, b: Vec2, z0: f64, z1: f64) -> bool {
        z1 > 0.0 && z0 < self.height && point_segment_distance_2d(self.center, a, b) < self.radius
    }

    pub fn link_hits_box(&self, seg: &(Vec3, Vec3), b: &Obb) -> bool {
        b.distance_to_segment(seg.0, seg.1) < self.arm_radius
    }
}

impl World {
    pub fn new(scene: Arc<Scene>, robot_spec: RobotSpec, config: PhysicsConfig) -> Self {
        let mut joint_positions = std::collections::BTreeMap::new();
        for o in &scene.objects {
            for (j, joint) in o.model.joints.iter().enumerate() {
                joint_positions.insert((o.id, j), joint.position);
            }
        }
        let state = WorldState {
            robot: None,
            joint_positions,
            joint_velocities: Default::default(),
            free_body_poses: Default::default(),
            tick: 0,
            substep_dt: SUBSTEP_DT,
        };
        World { scene, robot_spec, config, state }
    }

    pub fn with_robot(mut self, base: BasePose) -> Self {
        self.state.robot = Some(RobotState::at(base, &self.robot_spec.arm));
        self
    }

    pub fn joint_vector(&self, state: &WorldState, object_index: usize) -> Vec<f64> {
        let o = &self.scene.objects[object_index];
        (0..o.model.joints.len())
            .map(|j| state.joint_positions.get(&(o.id, j)).copied().unwrap_or(o.model.joints[j].position))
            .collect()
    }

    pub fn object_placement(&self, state: &WorldState, object_index: usize) -> Placement {
        let o = &self.scene.objects[object_index];
        state.free_body_poses.get(&o.id).copied().unwrap_or_else(|| o.bbox.placement())
    }

    /// World link boxes and link transforms of one object.
    pub fn posed_object(&self, state: &WorldState, object_index: usize) -> (Vec<Obb>, Vec<Placement>) {
        let o = &self.scene.objects[object_index];
        let q = self.joint_vector(state, object_index);
        let base = self.object_placement(state, object_index);
        let boxes = o.posed_links(&q, Some(base));
        let transforms = o.link_transforms(&q).iter().map(|t| base.compose(t)).collect();
        (boxes, transforms)
    }

    pub fn snapshot_of(&self, state: &WorldState) -> Snapshot {
        Snapshot::build(&self.scene, state.tick, |i| self.posed_object(state, i))
    }

    pub fn snapshot(&self) -> Snapshot {
        self.snapshot_of(&self.state)
    }

    /// World positions of the arm mount and each link tip.
    pub fn arm_points(&self, base: &BasePose, arm: &[f64]) -> Vec<Vec3> {
        let p = base.placement();
        joint_positions(arm, &self.robot_spec.arm).map(|pts| pts.into_iter().map(|v| p.apply(v)).collect()).unwrap_or_default()
    }

    pub fn end_effector(&self, base: &BasePose, arm: &[f64]) -> Vec3 {
        self.arm_points(base, arm).last().copied().unwrap_or_else(|| Vec3::new(base.x, base.y, 0.0))
    }

    /// Yaw-only frame at the end effector, used for attachments.
    pub fn end_effector_frame(&self, base: &BasePose, arm: &[f64]) -> Placement {
        let p = self.end_effector(base, arm);
        let yaw: f64 = base.yaw
            + self.robot_spec.arm.joints.iter().zip(arm).filter(|(j, _)| j.axis == super::arm::ArmAxis::Yaw).map(|(_, q)| *q).sum::<f64>();
        Placement::new(p.x, p.y, p.z, yaw)
    }

    pub fn robot_geometry(&self, base: &BasePose, arm: &[f64]) -> RobotGeometry {
        let pts = self.arm_points(base, arm);
        let arm_segments = pts.windows(2).filter(|w| (w[1] - w[0]).norm() > 0.0).map(|w| (w[0], w[1])).collect();
        RobotGeometry {
            center: Vec2::new(base.x, base.y),
            radius: self.robot_spec.footprint_radius,
            height: self.robot_spec.body_height,
            arm: arm_segments,
            arm_radius: self.robot_spec.arm.link_radius,
        }
    }

    fn attached_object(&self, state: &WorldState) -> Option<u32> {
        state.robot.as_ref().and_then(|r| r.attached.map(|a| a.object))
    }

    /// Robot-versus-environment contacts in `snap`. Floors, ceilings and the
    /// held object are ignored.
    pub fn robot_contacts(&self, snap: &Snapshot, state: &WorldState, base: &BasePose, arm: &[f64]) -> Vec<Contact> {
        let geo = self.robot_geometry(base, arm);
        let held = self.attached_object(state);
        let mut contacts = Vec::new();
        let skip = |k: &SurfaceKind| match k {
            SurfaceKind::Floor(_) | SurfaceKind::Ceiling(_) => true,
            SurfaceKind::Link { object, .. } => Some(*object) == held,
            SurfaceKind::Wall(_) => false,
        };
        snap.query_aabb(&geo.base_aabb(), |p| {
            let prim = &snap.prims[p];
            if skip(&prim.kind) {
                return;
            }
            let hit = match &prim.shape {
                Shape::Box(b) => geo.base_hits_box(b),
                Shape::Wall { a, b, z0, z1 } => geo.base_hits_wall(*a, *b, *z0, *z1),
                _ => false,
            };
            if hit {
                contacts.push(Contact { body: Body::Base, other: Other::Surface(prim.kind) });
            }
        });
        for (i, seg) in geo.arm.iter().enumerate() {
            snap.query_aabb(&geo.segment_aabb(seg), |p| {
                let prim = &snap.prims[p];
                if skip(&prim.kind) {
                    return;
                }
                let hit = match &prim.shape {
                    Shape::Box(b) => geo.link_hits_box(seg, b),
                    Shape::Wall { a, b, z0, z1 } => geo.link_hits_box(seg, &wall_obb(*a, *b, *z0, *z1)),
                    _ => false,
                };
                if hit {
                    contacts.push(Contact { body: Body::ArmLink(i), other: Other::Surface(prim.kind) });
                }
            });
        }
        contacts
    }

    /// Contacts of `boxes` (links of object `id`) with everything but the object itself.
    pub fn object_contacts(&self, snap: &Snapshot, state: &WorldState, id: u32, boxes: &[Obb]) -> Vec<Contact> {
        let mut contacts = Vec::new();
        for b in boxes {
            snap.query_aabb(&b.aabb(), |p| {
                let prim = &snap.prims[p];
                let hit = match (&prim.kind, &prim.shape) {
                    (SurfaceKind::Link { object, .. }, _) if *object == id => false,
                    (_, Shape::Box(o)) => b.intersects(o),
                    (_, Shape::Wall { a, b: e, z0, z1 }) => b.intersects(&wall_obb(*a, *e, *z0, *z1)),
                    _ => false,
                };
                if hit {
                    contacts.push(Contact { body: Body::Object(id), other: Other::Surface(prim.kind) });
                }
            });
        }
        if let Some(r) = &state.robot {
            if r.attached.map(|a| a.object) != Some(id) {
                let geo = self.robot_geometry(&r.base, &r.arm);
                if boxes.iter().any(|b| geo.base_hits_box(b) || geo.arm.iter().any(|s| geo.link_hits_box(s, b))) {
                    contacts.push(Contact { body: Body::Object(id), other: Other::Robot });
                }
            }
        }
        contacts
    }

    /// Collision query for a hypothetical robot configuration or object pose
    /// against the current state.
    pub fn check_collision(&self, candidate: &Candidate) -> CollisionReport {
        let snap = self.snapshot();
        self.check_collision_in(&snap, &self.state, candidate)
    }

    pub fn check_collision_in(&self, snap: &Snapshot, state: &WorldState, candidate: &Candidate) -> CollisionReport {
        let contacts = match candidate {
            Candidate::Robot { base, arm } => self.robot_contacts(snap, state, base, arm),
            Candidate::Object { id, pose } => match self.scene.object_index(*id) {
                Some(oi) => {
                    let o = &self.scene.objects[oi];
                    let boxes = o.posed_links(&self.joint_vector(state, oi), Some(*pose));
                    self.object_contacts(snap, state, *id, &boxes)
                }
                None => vec![],
            },
        };
        CollisionReport::from_contacts(contacts)
    }

    /// True if the robot (if any) is collision-free in the current state.
    pub fn robot_is_free(&self) -> bool {
        match &self.state.robot {
            None => true,
            Some(r) => !self.check_collision(&Candidate::Robot { base: r.base, arm: r.arm.clone() }).colliding,
        }
    }

    /// Nearest joint with a non-empty range on the path from `link` to the root.
    pub fn movable_joint(&self, object_index: usize, link: usize) -> Option<usize> {
        let model = &self.scene.objects[object_index].model;
        let parents = model.parent_joints();
        let mut l = link;
        while let Some(j) = parents[l] {
            if model.joints[j].range() > 0.0 {
                return Some(j);
            }
            l = model.joints[j].parent;
        }
        None
    }

    /// Links moved by `joint`: its child and all descendants.
    pub fn joint_subtree(&self, object_index: usize, joint: usize) -> Vec<usize> {
        let model = &self.scene.objects[object_index].model;
        let mut out = vec![model.joints[joint].child];
        let mut i = 0;
        while i < out.len() {
            let l = out[i];
            out.extend(model.joints.iter().filter(|j| j.parent == l).map(|j| j.child));
            i += 1;
        }
        out
    }

    pub fn joint_kind(&self, object_index: usize, joint: usize) -> JointKind {
        self.scene.objects[object_index].model.joints[joint].kind
    }
}
