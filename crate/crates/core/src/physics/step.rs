use serde::{Deserialize, Serialize};

use super::push::apply_push;
use super::state::{BasePose, WorldState};
use super::world::{Contact, Other, World};
use crate::geometry::SurfaceKind;
use crate::math::wrap_angle;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlCommands {
    /// m/s
    pub linear: f64,
    /// rad/s
    pub angular: f64,
    /// Joint targets; `None` keeps the current target.
    #[serde(default)]
    pub arm_target: Option<Vec<f64>>,
}

impl ControlCommands {
    pub fn drive(linear: f64, angular: f64) -> Self {
        ControlCommands { linear, angular, arm_target: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepInfo {
    /// Some command component was outside actuator bounds.
    pub clamped: bool,
    pub base_blocked: bool,
    pub arm_blocked: bool,
    pub contacts: Vec<Contact>,
}

/// Exact unicycle motion over `dt`.
pub fn integrate_unicycle(p: &BasePose, v: f64, w: f64, dt: f64) -> BasePose {
    let yaw = p.yaw + w * dt;
    let (x, y) = if w.abs() < 1e-12 {
        (p.x + v * dt * p.yaw.cos(), p.y + v * dt * p.yaw.sin())
    } else {
        let r = v / w;
        (p.x + r * (yaw.sin() - p.yaw.sin()), p.y - r * (yaw.cos() - p.yaw.cos()))
    };
    BasePose { x, y, yaw: wrap_angle(yaw) }
}

const STOP_BISECTIONS: usize = 40;

/// Advances one environment step (`config.substeps_per_step` substeps).
/// Pure: the input state is not modified.
pub fn step_world(world: &World, state: &WorldState, cmds: &ControlCommands) -> (WorldState, StepInfo) {
    let spec = &world.robot_spec;
    let mut info = StepInfo::default();
    let mut next = state.clone();
    let dt = state.substep_dt;

    let v = cmds.linear.clamp(-spec.max_linear, spec.max_linear);
    let w = cmds.angular.clamp(-spec.max_angular, spec.max_angular);
    info.clamped |= v != cmds.linear || w != cmds.angular || !cmds.linear.is_finite() || !cmds.angular.is_finite();
    let (v, w) = (if v.is_finite() { v } else { 0.0 }, if w.is_finite() { w } else { 0.0 });

    if let Some(robot) = next.robot.as_mut() {
        if let Some(target) = &cmds.arm_target {
            if target.len() == spec.arm.dof() {
                let mut t: Vec<f64> = target.iter().map(|x| if x.is_finite() { *x } else { 0.0 }).collect();
                spec.arm.clamp(&mut t);
                info.clamped |= t != *target;
                robot.arm_target = t;
            } else {
                info.clamped = true;
            }
        }
    }

    let mut snap = world.snapshot_of(&next);
    let mut base_stopped = false;
    for _ in 0..world.config.substeps_per_step {
        advance_joints(world, &mut next, dt);
        let Some(robot) = next.robot.clone() else { continue };

        if !base_stopped && (v != 0.0 || w != 0.0) {
            let free = |f: f64| {
                let p = integrate_unicycle(&robot.base, v, w, dt * f);
                world.robot_contacts(&snap, &next, &p, &robot.arm).is_empty()
            };
            let target = integrate_unicycle(&robot.base, v, w, dt);
            let contacts = world.robot_contacts(&snap, &next, &target, &robot.arm);
            let new_base = if contacts.is_empty() {
                target
            } else {
                info.contacts.extend(contacts);
                base_stopped = true;
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..STOP_BISECTIONS {
                    let mid = 0.5 * (lo + hi);
                    if free(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                integrate_unicycle(&robot.base, v, w, dt * lo)
            };
            next.robot.as_mut().unwrap().base = new_base;
        }

        let robot = next.robot.clone().unwrap();
        if robot.arm != robot.arm_target {
            let candidate: Vec<f64> = robot
                .arm
                .iter()
                .zip(&robot.arm_target)
                .zip(&spec.arm.joints)
                .map(|((q, t), j)| {
                    let step = j.max_velocity * dt;
                    (q + (t - q).clamp(-step, step)).clamp(j.limits[0], j.limits[1])
                })
                .collect();
            let contacts = world.robot_contacts(&snap, &next, &robot.base, &candidate);
            if contacts.is_empty() {
                next.robot.as_mut().unwrap().arm = candidate;
            } else if push_with_arm(world, &mut next, &robot.arm, &candidate, &contacts) {
                snap = world.snapshot_of(&next);
                if world.robot_contacts(&snap, &next, &robot.base, &candidate).is_empty() {
                    next.robot.as_mut().unwrap().arm = candidate;
                } else {
                    info.arm_blocked = true;
                }
            } else {
                info.arm_blocked = true;
                info.contacts.extend(contacts);
            }
        }
        follow_attachment(world, &mut next);
    }

    if let Some(r) = next.robot.as_mut() {
        r.velocity = if base_stopped { (0.0, 0.0) } else { (v, w) };
    }
    info.base_blocked = base_stopped;
    info.contacts.sort();
    info.contacts.dedup();
    next.tick = state.tick + 1;
    (next, info)
}

/// Integrates joint velocities and applies damping decay.
fn advance_joints(world: &World, state: &mut WorldState, dt: f64) {
    let keys: Vec<(u32, usize)> = state.joint_velocities.keys().copied().collect();
    for key in keys {
        let Some(oi) = world.scene.object_index(key.0) else { continue };
        let Some(joint) = world.scene.objects[oi].model.joints.get(key.1) else { continue };
        let vel = state.joint_velocities[&key];
        let q = state.joint_positions.get(&key).copied().unwrap_or(joint.position);
        let q_new = joint.clamp(q + vel * dt);
        let mut vel_new = vel * (1.0 - joint.damping * dt).max(0.0);
        if q_new != q + vel * dt {
            vel_new = 0.0;
        }
        state.joint_positions.insert(key, q_new);
        if vel_new.abs() < 1e-9 {
            state.joint_velocities.remove(&key);
        } else {
            state.joint_velocities.insert(key, vel_new);
        }
    }
}

/// Keeps a held object rigidly at its offset from the end effector.
fn follow_attachment(world: &World, state: &mut WorldState) {
    let Some(robot) = &state.robot else { return };
    let Some(att) = robot.attached else { return };
    let frame = world.end_effector_frame(&robot.base, &robot.arm);
    state.free_body_poses.insert(att.object, frame.compose(&att.offset));
}

/// When the arm is blocked by a link that sits on a movable joint, pushes
/// that joint along the end-effector motion. Returns true if anything moved.
fn push_with_arm(world: &World, state: &mut WorldState, from: &[f64], to: &[f64], contacts: &[Contact]) -> bool {
    let Some(robot) = state.robot.clone() else { return false };
    let a = world.end_effector(&robot.base, from);
    let b = world.end_effector(&robot.base, to);
    let motion = b - a;
    if motion.norm() < 1e-12 {
        return false;
    }
    for c in contacts {
        let Other::Surface(SurfaceKind::Link { object, link }) = c.other else { continue };
        let Some(oi) = world.scene.object_index(object) else { continue };
        if world.movable_joint(oi, link).is_none() {
            continue;
        }
        let (boxes, _) = world.posed_object(state, oi);
        let point = boxes[link].closest_point(a);
        if boxes[link].contains(a) {
            continue;
        }
        if let Ok((s, outcome)) = apply_push(world, state, point, motion.normalize(), world.config.max_push_force, motion.norm()) {
            if outcome.displacement > 0.0 {
                *state = s;
                return true;
            }
        }
    }
    false
}
