//! Quasi-static push resolution: free bodies slide when the horizontal force
//! beats Coulomb friction, jointed links move when the generalized force beats
//! joint friction. Motion is capped by limits and by the first collision.

use serde::{Deserialize, Serialize};

use super::state::WorldState;
use super::world::World;
use super::PhysicsError;
use crate::geometry::{Shape, Snapshot, SurfaceKind};
use crate::math::{point_in_polygon, point_segment_distance_2d, Aabb, Obb, Placement, Vec2, Vec3};
use crate::scene::JointKind;

/// A push counts as a success above this contact-point displacement (m).
pub const MOVED_THRESHOLD: f64 = 0.10;
/// Maximum distance from the push point to the surface it targets (m).
pub const CONTACT_TOLERANCE: f64 = 1e-3;
/// Largest motion of any point of the moving body between collision checks (m).
const SWEEP_STEP: f64 = 0.01;
const SWEEP_BISECTIONS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PushTarget {
    Static,
    FreeBody { object: u32 },
    Joint { object: u32, joint: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushOutcome {
    pub moved: bool,
    /// Contact-point displacement (m).
    pub displacement: f64,
    pub contact_point: [f64; 3],
    /// Driving force (N) for free bodies and prismatic joints, torque (N·m) for revolute joints.
    pub applied: f64,
    pub target: PushTarget,
}

impl PushOutcome {
    fn new(point: Vec3, displacement: f64, applied: f64, target: PushTarget) -> Self {
        PushOutcome {
            moved: displacement > MOVED_THRESHOLD,
            displacement,
            contact_point: [point.x, point.y, point.z],
            applied,
            target,
        }
    }
}

fn distance_to_surface(shape: &Shape, p: Vec3) -> f64 {
    match shape {
        Shape::Box(b) => b.surface_distance(p),
        Shape::Wall { a, b, z0, z1 } => {
            let dh = point_segment_distance_2d(Vec2::new(p.x, p.y), *a, *b);
            let dz = (z0 - p.z).max(p.z - z1).max(0.0);
            dh.hypot(dz)
        }
        Shape::Floor { polygon, z } | Shape::Ceiling { polygon, z } => {
            if point_in_polygon(Vec2::new(p.x, p.y), polygon) {
                (p.z - z).abs()
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Surface the point lies on (within `CONTACT_TOLERANCE`). Object links win
/// over structure, then the nearest surface, then the lower primitive index.
pub fn surface_at(snap: &Snapshot, point: Vec3) -> Option<SurfaceKind> {
    let r = Vec3::repeat(CONTACT_TOLERANCE);
    let mut best: Option<(bool, f64, usize)> = None;
    snap.query_aabb(&Aabb { min: point - r, max: point + r }, |i| {
        let d = distance_to_surface(&snap.prims[i].shape, point);
        if d > CONTACT_TOLERANCE {
            return;
        }
        let structure = !matches!(snap.prims[i].kind, SurfaceKind::Link { .. });
        let key = (structure, d, i);
        if best.map_or(true, |b| (key.0, key.1, key.2) < (b.0, b.1, b.2)) {
            best = Some(key);
        }
    });
    best.map(|(_, _, i)| snap.prims[i].kind)
}

/// Largest fraction in [0, 1] of a motion for which `free` holds, checking at
/// `n` evenly spaced fractions and bisecting inside the first blocked interval.
fn sweep(n: usize, free: impl Fn(f64) -> bool) -> f64 {
    let n = n.max(1);
    for k in 1..=n {
        let f = k as f64 / n as f64;
        if !free(f) {
            let (mut lo, mut hi) = ((k - 1) as f64 / n as f64, f);
            for _ in 0..SWEEP_BISECTIONS {
                let mid = 0.5 * (lo + hi);
                if free(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return lo;
        }
    }
    1.0
}

/// Pushes the surface at `point` along `direction`.
pub fn apply_push(
    world: &World,
    state: &WorldState,
    point: Vec3,
    direction: Vec3,
    max_force: f64,
    target_displacement: f64,
) -> Result<(WorldState, PushOutcome), PhysicsError> {
    let norm = direction.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(PhysicsError::InvalidContact("push direction must be non-zero".into()));
    }
    let d = direction / norm;
    let snap = world.snapshot_of(state);
    let kind = surface_at(&snap, point).ok_or_else(|| {
        PhysicsError::InvalidContact(format!("({:.4}, {:.4}, {:.4})", point.x, point.y, point.z))
    })?;
    let stay = |applied| Ok((state.clone(), PushOutcome::new(point, 0.0, applied, PushTarget::Static)));
    let SurfaceKind::Link { object, link } = kind else { return stay(0.0) };
    let oi = world.scene.object_index(object).expect("snapshot object exists in scene");
    let held = state.robot.as_ref().and_then(|r| r.attached).map(|a| a.object) == Some(object);
    if held {
        return stay(0.0);
    }
    match world.movable_joint(oi, link) {
        Some(j) => Ok(push_joint(world, state, &snap, oi, j, point, d, max_force, target_displacement)),
        None if world.scene.objects[oi].is_static => stay(0.0),
        None => Ok(push_free_body(world, state, &snap, oi, point, d, max_force, target_displacement)),
    }
}

#[allow(clippy::too_many_arguments)]
fn push_free_body(
    world: &World,
    state: &WorldState,
    snap: &Snapshot,
    oi: usize,
    point: Vec3,
    d: Vec3,
    max_force: f64,
    target: f64,
) -> (WorldState, PushOutcome) {
    let o = &world.scene.objects[oi];
    let mu = o.link_friction(o.model.root, &world.scene.materials);
    let weight = o.total_mass(&world.scene.materials) * world.config.gravity;
    let horizontal = Vec3::new(d.x, d.y, 0.0);
    let applied = max_force * horizontal.norm();
    let target_kind = PushTarget::FreeBody { object: o.id };
    if !(applied > mu * weight) {
        return (state.clone(), PushOutcome::new(point, 0.0, applied, target_kind));
    }
    let shift = horizontal * target;
    let start = world.object_placement(state, oi);
    let q = world.joint_vector(state, oi);
    let at = |f: f64| Placement { x: start.x + shift.x * f, y: start.y + shift.y * f, ..start };
    let free = |f: f64| {
        let boxes = o.posed_links(&q, Some(at(f)));
        world.object_contacts(snap, state, o.id, &boxes).is_empty()
    };
    let frac = sweep((shift.norm() / SWEEP_STEP).ceil() as usize, free);
    let mut next = state.clone();
    if frac > 0.0 {
        next.free_body_poses.insert(o.id, at(frac));
    }
    (next, PushOutcome::new(point, shift.norm() * frac, applied, target_kind))
}

#[allow(clippy::too_many_arguments)]
fn push_joint(
    world: &World,
    state: &WorldState,
    snap: &Snapshot,
    oi: usize,
    j: usize,
    point: Vec3,
    d: Vec3,
    max_force: f64,
    target: f64,
) -> (WorldState, PushOutcome) {
    let o = &world.scene.objects[oi];
    let joint = &o.model.joints[j];
    let target_kind = PushTarget::Joint { object: o.id, joint: j };
    let parent_pose = snap.link_poses[&(o.id, joint.parent)];
    let child_pose = snap.link_poses[&(o.id, joint.child)];
    let q0 = world.joint_vector(state, oi);
    let subtree = world.joint_subtree(oi, j);
    let base = world.object_placement(state, oi);

    // Generalized force, desired joint change, and the largest point speed
    // per unit joint motion (for sweep resolution).
    let (applied, delta, speed) = match joint.kind {
        JointKind::Revolute => {
            let c = o.model.native_aabb().center();
            let anchor_local = (Vec3::from(joint.anchor) - c).component_mul(&o.scale());
            let anchor = parent_pose.apply(anchor_local);
            let r = Vec2::new(point.x - anchor.x, point.y - anchor.y);
            let lever = r.norm();
            if lever < 1e-9 {
                return (state.clone(), PushOutcome::new(point, 0.0, 0.0, target_kind));
            }
            let s = joint.axis[2].signum();
            let t = Vec3::new(-r.y, r.x, 0.0) * (s / lever);
            let force_t = max_force * d.dot(&t);
            let torque = lever * force_t;
            let (boxes, _) = world.posed_object(state, oi);
            let reach = subtree
                .iter()
                .flat_map(|l| boxes[*l].corners_2d())
                .map(|p| (p - Vec2::new(anchor.x, anchor.y)).norm())
                .fold(lever, f64::max);
            (torque.abs(), force_t.signum() * target / lever, reach)
        }
        JointKind::Prismatic => {
            let axis = parent_pose.rotate(Vec3::from(joint.axis));
            let force_a = max_force * d.dot(&axis);
            (force_a.abs(), force_a.signum() * target, 1.0)
        }
    };
    if !(applied > joint.friction) {
        return (state.clone(), PushOutcome::new(point, 0.0, applied, target_kind));
    }
    let q_start = q0[j];
    let q_goal = joint.clamp(q_start + delta);
    let span = q_goal - q_start;
    let config = |f: f64| {
        let mut q = q0.clone();
        q[j] = q_start + span * f;
        q
    };
    let free = |f: f64| {
        let all = o.posed_links(&config(f), Some(base));
        let moving: Vec<Obb> = subtree.iter().map(|l| all[*l]).collect();
        world.object_contacts(snap, state, o.id, &moving).is_empty()
    };
    let frac = if span == 0.0 { 0.0 } else { sweep((span.abs() * speed / SWEEP_STEP).ceil() as usize, free) };
    let mut next = state.clone();
    let q_final = q_start + span * frac;
    next.joint_positions.insert((o.id, j), q_final);
    next.joint_velocities.remove(&(o.id, j));
    let new_child = base.compose(&o.link_transforms(&config(frac))[joint.child]);
    let moved_point = new_child.apply(child_pose.inverse_apply(point));
    (next, PushOutcome::new(point, (moved_point - point).norm(), applied, target_kind))
}
