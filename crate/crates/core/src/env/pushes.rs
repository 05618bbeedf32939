use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::SurfaceKind;
use crate::math::{point_in_polygon, Vec2, Vec3};
use crate::physics::{apply_push, BasePose, Candidate, PushOutcome, World};
use crate::render::Camera;

/// Push force cap (N).
pub const PUSH_MAX_FORCE: f64 = 60.0;
/// Commanded contact-point displacement (m).
pub const PUSH_TARGET: f64 = 0.30;
const ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: [f64; 3],
    pub yaw: f64,
    pub pitch: f64,
    pub fov: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraPose {
    pub fn camera(&self) -> Camera {
        Camera::new(Vec3::from(self.position), self.yaw, self.pitch, self.fov, self.width, self.height)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushRecord {
    pub location: usize,
    pub camera: CameraPose,
    pub pixel: [u32; 2],
    pub point: [f64; 3],
    /// Surface normal facing the camera.
    pub normal: [f64; 3],
    pub surface: SurfaceKind,
    pub outcome: PushOutcome,
    /// Contact point moved more than 10 cm.
    pub success: bool,
}

/// Camera poses in free space 0.8 to 2.5 m from a random object, 1.0 to 1.6 m
/// high, looking at the object's center. Rooms without objects are viewed
/// from random free poses with a random heading.
pub fn sample_camera_poses(world: &World, n: usize, rng: &mut impl Rng) -> Vec<CameraPose> {
    let scene = &world.scene;
    let rooms: Vec<Vec<Vec2>> = scene.rooms.iter().map(|r| r.polygon.iter().map(|p| Vec2::from(*p)).collect()).collect();
    let pts: Vec<&Vec2> = rooms.iter().flatten().collect();
    let lo = pts.iter().fold(Vec2::repeat(f64::INFINITY), |a, p| a.inf(p));
    let hi = pts.iter().fold(Vec2::repeat(f64::NEG_INFINITY), |a, p| a.sup(p));
    let snap = world.snapshot();
    let arm = world.robot_spec.arm.home.clone();
    let free = |p: Vec2| {
        rooms.iter().any(|r| point_in_polygon(p, r))
            && !world.check_collision_in(&snap, &world.state, &Candidate::Robot { base: BasePose::new(p.x, p.y, 0.0), arm: arm.clone() }).colliding
    };
    let mut out = Vec::with_capacity(n);
    if pts.is_empty() {
        return out;
    }
    for _ in 0..n {
        for _ in 0..ATTEMPTS {
            let height = rng.gen_range(1.0..=1.6);
            let (p, yaw, pitch) = if scene.objects.is_empty() {
                let p = Vec2::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y));
                (p, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI), -0.3)
            } else {
                let o = &scene.objects[rng.gen_range(0..scene.objects.len())];
                let c = world.object_placement(&world.state, scene.object_index(o.id).expect("object exists"));
                let r = rng.gen_range(0.8..=2.5);
                let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                let p = Vec2::new(c.x + r * theta.cos(), c.y + r * theta.sin());
                let yaw = (c.y - p.y).atan2(c.x - p.x);
                (p, yaw, (o.bbox.center[2] - height).atan2(r))
            };
            if free(p) {
                out.push(CameraPose { position: [p.x, p.y, height], yaw, pitch, fov: 1.2, width: 128, height: 128 });
                break;
            }
        }
    }
    out
}

/// `per_location` pushes per camera at random pixels with a surface hit,
/// each applied along the negative surface normal to the initial state.
pub fn sample_pushes(world: &World, cameras: &[CameraPose], per_location: usize, rng: &mut impl Rng) -> Vec<PushRecord> {
    let snap = world.snapshot();
    let mut out = Vec::with_capacity(cameras.len() * per_location);
    for (location, pose) in cameras.iter().enumerate() {
        let cam = pose.camera();
        for _ in 0..per_location {
            for _ in 0..ATTEMPTS {
                let pixel = [rng.gen_range(0..pose.width), rng.gen_range(0..pose.height)];
                let dir = cam.ray(pixel[0] as f64 + 0.5, pixel[1] as f64 + 0.5);
                let Some(hit) = snap.raycast(&cam.origin(), &dir, cam.far) else { continue };
                let normal = if hit.normal.dot(&dir) > 0.0 { -hit.normal } else { hit.normal };
                let surface = snap.prims[hit.prim].kind;
                let Ok((_, outcome)) = apply_push(world, &world.state, hit.point, -normal, PUSH_MAX_FORCE, PUSH_TARGET) else { continue };
                out.push(PushRecord {
                    location,
                    camera: *pose,
                    pixel,
                    point: hit.point.into(),
                    normal: normal.into(),
                    surface,
                    success: outcome.moved,
                    outcome,
                });
                break;
            }
        }
    }
    out
}
