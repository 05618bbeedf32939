//! Lambert diffuse plus a Cook-Torrance specular lobe with GGX distribution,
//! Smith-GGX visibility and Schlick Fresnel.

use std::f64::consts::PI;

use crate::geometry::{Appearance, Snapshot};
use crate::math::Vec3;
use crate::scene::Light;

/// Offset along the normal before casting secondary rays (m).
pub const SHADOW_BIAS: f64 = 1e-4;

/// Schlick's approximation `F0 + (1 - F0)(1 - cos θ)^5`.
pub fn schlick_fresnel(f0: f64, cos_theta: f64) -> f64 {
    f0 + (1.0 - f0) * (1.0 - cos_theta).powi(5)
}

fn alpha(roughness: f64) -> f64 {
    (roughness * roughness).max(1e-3)
}

/// GGX normal distribution.
pub fn ggx_distribution(n_dot_h: f64, roughness: f64) -> f64 {
    let a2 = alpha(roughness).powi(2);
    let d = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0;
    a2 / (PI * d * d)
}

/// Smith masking term for one direction.
pub fn smith_g1(n_dot_x: f64, roughness: f64) -> f64 {
    let a2 = alpha(roughness).powi(2);
    2.0 * n_dot_x / (n_dot_x + (a2 + (1.0 - a2) * n_dot_x * n_dot_x).sqrt())
}

/// Specular reflectance toward `v` from light direction `l` (both pointing
/// away from the surface), already multiplied by `n·l`.
pub fn specular_term(n: &Vec3, v: &Vec3, l: &Vec3, appearance: &Appearance) -> Vec3 {
    let n_dot_l = n.dot(l);
    let n_dot_v = n.dot(v);
    if n_dot_l <= 0.0 || n_dot_v <= 0.0 {
        return Vec3::zeros();
    }
    let h = (v + l).normalize();
    let f0 = Vec3::repeat(0.04).lerp(&appearance.albedo, appearance.metallic);
    let v_dot_h = v.dot(&h).max(0.0);
    let d = ggx_distribution(n.dot(&h).max(0.0), appearance.roughness);
    let g = smith_g1(n_dot_l, appearance.roughness) * smith_g1(n_dot_v, appearance.roughness);
    let f = f0.map(|c| schlick_fresnel(c, v_dot_h));
    // Radiance units fold π into the light intensity, matching the diffuse term.
    f * (PI * d * g / (4.0 * n_dot_v))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadingParams {
    pub ambient: f64,
    pub shadows: bool,
}

/// True iff a ray from `point` toward +z hits non-ceiling geometry.
pub fn shadow_test(point: &Vec3, normal: &Vec3, snap: &Snapshot) -> bool {
    let origin = point + normal * SHADOW_BIAS;
    snap.raycast_filtered(&origin, &Vec3::z(), f64::INFINITY, |p| !p.is_ceiling()).is_some()
}

/// Outgoing color at a surface point, clamped to [0, 1]. `v` points from the
/// surface toward the viewer. Shadowed points get only the ambient term.
pub fn shade(point: &Vec3, n: &Vec3, v: &Vec3, appearance: &Appearance, lights: &[Light], shadowed: bool, params: &ShadingParams) -> Vec3 {
    let diffuse_color = appearance.albedo * (1.0 - appearance.metallic);
    let mut c = appearance.albedo * params.ambient;
    if !shadowed {
        for light in lights {
            let (l, radiance) = match light {
                Light::Directional { direction, intensity } => (-Vec3::from(*direction).normalize(), Vec3::from(*intensity)),
                Light::Point { position, intensity } => {
                    let d = Vec3::from(*position) - point;
                    let r2 = d.norm_squared().max(1e-6);
                    (d / r2.sqrt(), Vec3::from(*intensity) / r2)
                }
            };
            let n_dot_l = n.dot(&l);
            if n_dot_l <= 0.0 {
                continue;
            }
            let direct = diffuse_color * n_dot_l + specular_term(n, v, &l, appearance);
            c += direct.component_mul(&radiance);
        }
    }
    c.map(|x| x.clamp(0.0, 1.0))
}
