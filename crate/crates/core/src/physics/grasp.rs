use super::state::{Attachment, WorldState};
use super::world::World;
use crate::geometry::{Shape, Snapshot, SurfaceKind};
use crate::math::{point_in_polygon, point_rect_distance_2d, Vec2};

/// Closes the gripper. Attaches the nearest non-static object whose surface
/// is within `grasp_distance` of the end effector.
pub fn grasp(world: &World, state: &WorldState) -> (WorldState, Option<u32>) {
    let mut next = state.clone();
    let Some(robot) = next.robot.as_mut() else { return (next, None) };
    robot.gripper_open = false;
    if let Some(a) = robot.attached {
        return (next, Some(a.object));
    }
    let ee = world.end_effector(&robot.base, &robot.arm);
    let mut best: Option<(f64, usize)> = None;
    for (oi, o) in world.scene.objects.iter().enumerate() {
        if o.is_static {
            continue;
        }
        let (boxes, _) = world.posed_object(state, oi);
        let d = boxes.iter().map(|b| b.distance_to_point(ee)).fold(f64::INFINITY, f64::min);
        if d <= world.robot_spec.grasp_distance && best.map_or(true, |b| d < b.0) {
            best = Some((d, oi));
        }
    }
    let Some((_, oi)) = best else { return (next, None) };
    let id = world.scene.objects[oi].id;
    let frame = world.end_effector_frame(&robot.base, &robot.arm);
    let pose = world.object_placement(state, oi);
    robot.attached = Some(Attachment { object: id, offset: frame.inverse().compose(&pose) });
    next.free_body_poses.insert(id, pose);
    (next, Some(id))
}

/// Highest support plane at `xy` whose top is at or below `z` (floors and
/// object link tops), ignoring object `exclude`.
pub fn support_height(snap: &Snapshot, xy: Vec2, z: f64, exclude: u32) -> Option<f64> {
    let eps = 1e-6;
    snap.prims
        .iter()
        .filter_map(|p| match (&p.shape, &p.kind) {
            (Shape::Floor { polygon, z: fz }, _) if point_in_polygon(xy, polygon) => Some(*fz),
            (Shape::Box(b), SurfaceKind::Link { object, .. }) if *object != exclude && point_rect_distance_2d(xy, b) == 0.0 => {
                Some(b.center.z + b.half.z)
            }
            _ => None,
        })
        .filter(|top| *top <= z + eps)
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))))
}

/// Opens the gripper and drops the held object onto the support plane below it.
pub fn release(world: &World, state: &WorldState) -> WorldState {
    let mut next = state.clone();
    let Some(robot) = next.robot.as_mut() else { return next };
    robot.gripper_open = true;
    let Some(att) = robot.attached.take() else { return next };
    let Some(oi) = world.scene.object_index(att.object) else { return next };
    let pose = world.object_placement(state, oi);
    let (boxes, _) = world.posed_object(state, oi);
    let bottom = boxes.iter().map(|b| b.center.z - b.half.z).fold(f64::INFINITY, f64::min);
    let snap = world.snapshot_of(&next);
    if let Some(top) = support_height(&snap, Vec2::new(pose.x, pose.y), bottom, att.object) {
        let mut settled = pose;
        settled.z += top - bottom;
        next.free_body_poses.insert(att.object, settled);
    }
    next
}
