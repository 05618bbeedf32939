//! CPU ray-cast renderer producing aligned RGB, depth, normal, segmentation
//! and flow buffers.

mod export;
mod flow;
pub mod shading;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Snapshot, SurfaceKind};
use crate::math::Vec3;
use crate::physics::{BasePose, RobotSpec};
use crate::scene::Light;

pub use export::{encode_png_rgb, read_raw_f32, write_png_ids, write_png_rgb, write_raw_f32, RAW_MAGIC};
pub use flow::compute_flow;
pub use shading::{schlick_fresnel, shade, shadow_test, ShadingParams};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("bad raw file: {0}")]
    BadRaw(String),
}

/// Pinhole camera looking along `yaw`/`pitch` (radians, pitch positive up).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: [f64; 3],
    pub yaw: f64,
    pub pitch: f64,
    pub vertical_fov: f64,
    pub width: u32,
    pub height: u32,
    pub near: f64,
    pub far: f64,
}

impl Camera {
    pub fn new(position: Vec3, yaw: f64, pitch: f64, vertical_fov: f64, width: u32, height: u32) -> Self {
        Camera { position: position.into(), yaw, pitch, vertical_fov, width, height, near: 0.01, far: 100.0 }
    }

    /// Head camera of a robot at `base`.
    pub fn robot_view(base: &BasePose, spec: &RobotSpec, width: u32, height: u32) -> Self {
        Camera::new(Vec3::new(base.x, base.y, spec.camera_height), base.yaw, spec.camera_pitch, spec.camera_fov, width, height)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::InvalidCamera("width and height must be at least 1".into()));
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(RenderError::InvalidCamera("need 0 < near < far".into()));
        }
        if !(self.vertical_fov > 0.0 && self.vertical_fov < std::f64::consts::PI) {
            return Err(RenderError::InvalidCamera("vertical_fov must be in (0, π)".into()));
        }
        Ok(())
    }

    pub fn origin(&self) -> Vec3 {
        Vec3::from(self.position)
    }

    /// Forward, right and up unit vectors.
    pub fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let f = Vec3::new(cp * cy, cp * sy, sp);
        let r = Vec3::new(sy, -cy, 0.0);
        (f, r, r.cross(&f))
    }

    fn tan_half(&self) -> (f64, f64) {
        let ty = (self.vertical_fov / 2.0).tan();
        (ty * self.width as f64 / self.height as f64, ty)
    }

    /// Unit ray direction through image position (`u`, `v`) in pixels, where
    /// pixel (i, j) covers [i, i+1) × [j, j+1).
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        RayGen::new(self).ray(u, v)
    }

    /// Image position of a world point, or `None` behind the camera.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        let (f, r, up) = self.basis();
        let d = p - self.origin();
        let z = d.dot(&f);
        if z <= 0.0 {
            return None;
        }
        let (tx, ty) = self.tan_half();
        let x = d.dot(&r) / z / tx;
        let y = d.dot(&up) / z / ty;
        Some(((x + 1.0) * self.width as f64 / 2.0, (1.0 - y) * self.height as f64 / 2.0))
    }

    /// World point at planar depth `depth` along the ray through (`u`, `v`).
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vec3 {
        let d = self.ray(u, v);
        let (f, _, _) = self.basis();
        self.origin() + d * (depth / d.dot(&f))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    VisualRL,
    HighFidelity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderPreset {
    pub name: PresetName,
    pub width: u32,
    pub height: u32,
    pub pbr: bool,
    pub msaa: bool,
    pub shadows: bool,
    pub ambient: f64,
    pub background: [f64; 3],
}

impl RenderPreset {
    pub fn visual_rl() -> Self {
        RenderPreset { name: PresetName::VisualRL, width: 128, height: 128, pbr: true, msaa: false, shadows: false, ambient: 0.3, background: [0.1; 3] }
    }

    pub fn high_fidelity() -> Self {
        RenderPreset { name: PresetName::HighFidelity, width: 512, height: 512, pbr: true, msaa: true, shadows: true, ambient: 0.3, background: [0.1; 3] }
    }

    pub fn named(name: PresetName) -> Self {
        match name {
            PresetName::VisualRL => Self::visual_rl(),
            PresetName::HighFidelity => Self::high_fidelity(),
        }
    }
}

/// Camera quantities shared by every ray of a frame.
struct RayGen {
    origin: Vec3,
    f: Vec3,
    r: Vec3,
    up: Vec3,
    tx: f64,
    ty: f64,
    w: f64,
    h: f64,
}

impl RayGen {
    fn new(cam: &Camera) -> Self {
        let (f, r, up) = cam.basis();
        let (tx, ty) = cam.tan_half();
        RayGen { origin: cam.origin(), f, r, up, tx, ty, w: cam.width as f64, h: cam.height as f64 }
    }

    fn ray(&self, u: f64, v: f64) -> Vec3 {
        let x = (2.0 * u / self.w - 1.0) * self.tx;
        let y = (1.0 - 2.0 * v / self.h) * self.ty;
        (self.f + self.r * x + self.up * y).normalize()
    }
}

/// Per-pixel buffers in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorFrame {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<[f32; 3]>,
    /// Planar depth in meters, 0 where nothing was hit.
    pub depth: Vec<f32>,
    pub normals: Vec<[f32; 3]>,
    pub semantic: Vec<u16>,
    pub instance: Vec<u32>,
    /// Pixels per frame.
    pub optical_flow: Vec<[f32; 2]>,
    /// Meters per frame.
    pub scene_flow: Vec<[f32; 3]>,
    /// Surface seen through each pixel center.
    pub surface: Vec<Option<SurfaceKind>>,
    pub tick: u64,
}

impl SensorFrame {
    pub fn len(&self) -> usize {
        (self.width * self.height) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, u: u32, v: u32) -> usize {
        (v * self.width + u) as usize
    }
}

/// Previous camera and snapshot for flow computation.
#[derive(Clone, Copy)]
pub struct FlowSource<'a> {
    pub snapshot: &'a Snapshot,
    pub camera: &'a Camera,
}

/// Stratified 2×2 sub-pixel offsets used for MSAA.
const MSAA_OFFSETS: [(f64, f64); 4] = [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)];

struct PixelSample {
    rgb: Vec3,
    depth: f32,
    normal: [f32; 3],
    semantic: u16,
    instance: u32,
    surface: Option<SurfaceKind>,
}

fn trace(snap: &Snapshot, lights: &[Light], cam: &Camera, rays: &RayGen, preset: &RenderPreset, u: f64, v: f64, want_color: bool) -> PixelSample {
    let dir = rays.ray(u, v);
    let origin = rays.origin;
    let cos = dir.dot(&rays.f);
    let background = Vec3::from(preset.background);
    let miss = PixelSample { rgb: background, depth: 0.0, normal: [0.0; 3], semantic: 0, instance: 0, surface: None };
    let Some(hit) = snap.raycast(&origin, &dir, cam.far / cos) else { return miss };
    let depth = hit.t * cos;
    if depth < cam.near {
        return miss;
    }
    let prim = &snap.prims[hit.prim];
    let n = if hit.normal.dot(&dir) > 0.0 { -hit.normal } else { hit.normal };
    let rgb = if want_color {
        let shadowed = preset.shadows && shadow_test(&hit.point, &n, snap);
        let params = ShadingParams { ambient: preset.ambient, shadows: preset.shadows };
        let mut appearance = prim.appearance;
        if !preset.pbr {
            appearance.metallic = 0.0;
            appearance.roughness = 1.0;
        }
        shade(&hit.point, &n, &-dir, &appearance, lights, shadowed, &params)
    } else {
        Vec3::zeros()
    };
    PixelSample {
        rgb,
        depth: depth as f32,
        normal: [n.x as f32, n.y as f32, n.z as f32],
        semantic: prim.semantic,
        instance: prim.instance,
        surface: Some(prim.kind),
    }
}

/// Renders every channel. Flow is filled when `previous` is given, else zero.
pub fn render(snap: &Snapshot, lights: &[Light], camera: &Camera, preset: &RenderPreset, previous: Option<FlowSource>) -> Result<SensorFrame, RenderError> {
    camera.validate()?;
    let (w, h) = (camera.width, camera.height);
    let rays = RayGen::new(camera);
    let samples: Vec<PixelSample> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (u, v) = ((i % w) as f64, (i / w) as f64);
            let mut s = trace(snap, lights, camera, &rays, preset, u + 0.5, v + 0.5, !preset.msaa);
            if preset.msaa {
                s.rgb = MSAA_OFFSETS.iter().map(|(du, dv)| trace(snap, lights, camera, &rays, preset, u + du, v + dv, true).rgb).sum::<Vec3>() / 4.0;
            }
            s
        })
        .collect();
    let n = samples.len();
    let mut frame = SensorFrame {
        width: w,
        height: h,
        rgb: Vec::with_capacity(n),
        depth: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        semantic: Vec::with_capacity(n),
        instance: Vec::with_capacity(n),
        optical_flow: vec![[0.0; 2]; n],
        scene_flow: vec![[0.0; 3]; n],
        surface: Vec::with_capacity(n),
        tick: snap.tick,
    };
    for s in samples {
        frame.rgb.push([s.rgb.x as f32, s.rgb.y as f32, s.rgb.z as f32]);
        frame.depth.push(s.depth);
        frame.normals.push(s.normal);
        frame.semantic.push(s.semantic);
        frame.instance.push(s.instance);
        frame.surface.push(s.surface);
    }
    if let Some(prev) = previous {
        let (of, sf) = compute_flow(prev.snapshot, prev.camera, snap, camera, &frame);
        frame.optical_flow = of;
        frame.scene_flow = sf;
    }
    Ok(frame)
}

/// Point `i` is `(i/n, radical inverse of i in base 2)`.
pub fn hammersley_sequence(n: usize) -> Vec<[f64; 2]> {
    (0..n).map(|i| [i as f64 / n as f64, (i as u32).reverse_bits() as f64 / 4294967296.0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hammersley_four() {
        assert_eq!(hammersley_sequence(4), vec![[0.0, 0.0], [0.25, 0.5], [0.5, 0.25], [0.75, 0.75]]);
    }

    #[test]
    fn project_inverts_ray() {
        let cam = Camera::new(Vec3::new(1.0, 2.0, 1.2), 0.7, -0.3, 1.1, 64, 48);
        for (u, v) in [(0.5, 0.5), (10.25, 40.0), (63.5, 1.5)] {
            let p = cam.unproject(u, v, 3.0);
            let (pu, pv) = cam.project(&p).unwrap();
            assert!((pu - u).abs() < 1e-9 && (pv - v).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_camera() {
        let mut cam = Camera::new(Vec3::zeros(), 0.0, 0.0, 1.0, 0, 10);
        assert!(cam.validate().is_err());
        cam.width = 4;
        cam.near = 0.0;
        assert!(cam.validate().is_err());
    }
}
