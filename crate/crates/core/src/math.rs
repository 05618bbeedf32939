//! Geometry primitives shared by the scene model, physics, sensors and planners.
//!
//! Everything here is 2.5D: boxes rotate only about +z, walls are vertical
//! rectangles standing on 2D segments.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Translation plus a rotation about +z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl Default for Placement {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Placement {
    pub const IDENTITY: Placement = Placement { x: 0.0, y: 0.0, z: 0.0, yaw: 0.0 };

    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self { x, y, z, yaw }
    }

    pub fn translation(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
    }

    pub fn inverse_rotate(&self, v: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z)
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotate(p) + self.translation()
    }

    pub fn inverse_apply(&self, p: Vec3) -> Vec3 {
        self.inverse_rotate(p - self.translation())
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Placement) -> Placement {
        let t = self.apply(other.translation());
        Placement::new(t.x, t.y, t.z, self.yaw + other.yaw)
    }

    pub fn inverse(&self) -> Placement {
        let t = self.inverse_rotate(-self.translation());
        Placement::new(t.x, t.y, t.z, -self.yaw)
    }

    /// Rotation by `angle` about a vertical axis through `pivot`.
    pub fn about_vertical(pivot: Vec3, angle: f64) -> Placement {
        let rot = Placement::new(0.0, 0.0, 0.0, angle);
        let t = pivot - rot.rotate(pivot);
        Placement::new(t.x, t.y, t.z, angle)
    }
}

/// Box rotated about +z by `yaw`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obb {
    pub center: Vec3,
    pub yaw: f64,
    pub half: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb { min: Vec3::repeat(f64::INFINITY), max: Vec3::repeat(f64::NEG_INFINITY) }
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb { min: self.min.inf(&o.min), max: self.max.sup(&o.max) }
    }

    pub fn include(&mut self, p: Vec3) {
        self.min = self.min.inf(&p);
        self.max = self.max.sup(&p);
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= o.max[i] && o.min[i] <= self.max[i])
    }

    /// Slab test; returns the entry parameter clipped to `[t_min, t_max]`.
    pub fn ray_entry(&self, origin: &Vec3, inv_dir: &Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let mut lo = t_min;
        let mut hi = t_max;
        for i in 0..3 {
            let mut t0 = (self.min[i] - origin[i]) * inv_dir[i];
            let mut t1 = (self.max[i] - origin[i]) * inv_dir[i];
            if t0.is_nan() || t1.is_nan() {
                // Ray parallel to and on a slab boundary.
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            lo = lo.max(t0);
            hi = hi.min(t1);
            if lo > hi {
                return None;
            }
        }
        Some(lo)
    }
}

impl Obb {
    pub fn new(center: Vec3, yaw: f64, half: Vec3) -> Self {
        Self { center, yaw, half }
    }

    fn frame(&self) -> Placement {
        Placement::new(self.center.x, self.center.y, self.center.z, self.yaw)
    }

    pub fn to_local(&self, p: Vec3) -> Vec3 {
        self.frame().inverse_apply(p)
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half.x * self.half.y * self.half.z
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let l = self.to_local(p);
        l.x.abs() < self.half.x && l.y.abs() < self.half.y && l.z.abs() < self.half.z
    }

    pub fn corners_2d(&self) -> [Vec2; 4] {
        let f = self.frame();
        let h = self.half;
        [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)].map(|(sx, sy)| {
            let w = f.apply(Vec3::new(sx * h.x, sy * h.y, 0.0));
            Vec2::new(w.x, w.y)
        })
    }

    pub fn aabb(&self) -> Aabb {
        let mut bb = Aabb::empty();
        for c in self.corners_2d() {
            bb.include(Vec3::new(c.x, c.y, self.center.z - self.half.z));
            bb.include(Vec3::new(c.x, c.y, self.center.z + self.half.z));
        }
        bb
    }

    pub fn z_range(&self) -> (f64, f64) {
        (self.center.z - self.half.z, self.center.z + self.half.z)
    }

    /// Euclidean distance from `p` to the solid box (0 inside).
    pub fn distance_to_point(&self, p: Vec3) -> f64 {
        let l = self.to_local(p);
        let d = Vec3::new(
            (l.x.abs() - self.half.x).max(0.0),
            (l.y.abs() - self.half.y).max(0.0),
            (l.z.abs() - self.half.z).max(0.0),
        );
        d.norm()
    }

    /// Closest point on (or in) the box to `p`.
    pub fn closest_point(&self, p: Vec3) -> Vec3 {
        let l = self.to_local(p);
        let c = Vec3::new(
            l.x.clamp(-self.half.x, self.half.x),
            l.y.clamp(-self.half.y, self.half.y),
            l.z.clamp(-self.half.z, self.half.z),
        );
        self.frame().apply(c)
    }

    /// Distance from `p` to the box surface (inside points measure to the nearest face).
    pub fn surface_distance(&self, p: Vec3) -> f64 {
        let l = self.to_local(p);
        let outside = self.distance_to_point(p);
        if outside > 0.0 {
            return outside;
        }
        (self.half.x - l.x.abs()).min(self.half.y - l.y.abs()).min(self.half.z - l.z.abs())
    }

    /// Outward normal of the face nearest to `p`.
    pub fn face_normal_near(&self, p: Vec3) -> Vec3 {
        let l = self.to_local(p);
        let gaps = [
            (self.half.x - l.x.abs(), Vec3::new(l.x.signum(), 0.0, 0.0)),
            (self.half.y - l.y.abs(), Vec3::new(0.0, l.y.signum(), 0.0)),
            (self.half.z - l.z.abs(), Vec3::new(0.0, 0.0, l.z.signum())),
        ];
        let n = gaps
            .iter()
            .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
            .map(|g| g.1)
            .unwrap_or(Vec3::z());
        self.frame().rotate(n)
    }

    /// Nearest intersection with the box surface along the ray, with outward normal.
    pub fn ray_intersect(&self, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Option<(f64, Vec3)> {
        let (sn, cs) = self.yaw.sin_cos();
        let rel = origin - self.center;
        let o = Vec3::new(cs * rel.x + sn * rel.y, -sn * rel.x + cs * rel.y, rel.z);
        let d = Vec3::new(cs * dir.x + sn * dir.y, -sn * dir.x + cs * dir.y, dir.z);
        let mut lo = t_min;
        let mut hi = t_max;
        let mut axis_lo = usize::MAX;
        let mut axis_hi = usize::MAX;
        for i in 0..3 {
            if d[i] == 0.0 {
                if o[i].abs() > self.half[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d[i];
            let mut t0 = (-self.half[i] - o[i]) * inv;
            let mut t1 = (self.half[i] - o[i]) * inv;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            if t0 > lo {
                lo = t0;
                axis_lo = i;
            }
            if t1 < hi {
                hi = t1;
                axis_hi = i;
            }
            if lo > hi {
                return None;
            }
        }
        // Origin outside: entry face. Origin inside: exit face.
        let (t, axis) = if axis_lo != usize::MAX { (lo, axis_lo) } else if axis_hi != usize::MAX { (hi, axis_hi) } else { return None };
        if t < t_min || t > t_max {
            return None;
        }
        let mut n = Vec3::zeros();
        n[axis] = if d[axis] > 0.0 { -1.0 } else { 1.0 };
        if axis != axis_lo {
            n[axis] = -n[axis];
        }
        Some((t, Vec3::new(cs * n.x - sn * n.y, sn * n.x + cs * n.y, n.z)))
    }

    /// Separating-axis test on the footprint plus z-interval overlap.
    /// Touching boxes do not intersect.
    pub fn intersects(&self, other: &Obb) -> bool {
        let (a0, a1) = self.z_range();
        let (b0, b1) = other.z_range();
        if a1 <= b0 || b1 <= a0 {
            return false;
        }
        rects_overlap(&self.corners_2d(), &other.corners_2d())
    }

    /// Minimum distance from a 3D segment to the solid box.
    pub fn distance_to_segment(&self, a: Vec3, b: Vec3) -> f64 {
        // Distance to a convex set is convex along a segment.
        let f = |t: f64| self.distance_to_point(a + (b - a) * t);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let g = 0.5 * (5.0_f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let mut f1 = f(x1);
        let mut f2 = f(x2);
        for _ in 0..80 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = f(x2);
            }
        }
        f(0.0).min(f(1.0)).min(f(0.5 * (lo + hi)))
    }
}

fn rects_overlap(a: &[Vec2; 4], b: &[Vec2; 4]) -> bool {
    for poly in [a, b] {
        for i in 0..4 {
            let e = poly[(i + 1) % 4] - poly[i];
            let axis = Vec2::new(-e.y, e.x);
            if axis.norm_squared() == 0.0 {
                continue;
            }
            let proj = |pts: &[Vec2; 4]| {
                pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    let d = p.dot(&axis);
                    (lo.min(d), hi.max(d))
                })
            };
            let (amin, amax) = proj(a);
            let (bmin, bmax) = proj(b);
            if amax <= bmin || bmax <= amin {
                return false;
            }
        }
    }
    true
}

pub fn point_segment_distance_2d(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn segments_cross_2d(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let cross = |o: Vec2, p: Vec2, q: Vec2| (p - o).perp(&(q - o));
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

pub fn segment_segment_distance_2d(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    if segments_cross_2d(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance_2d(a, c, d)
        .min(point_segment_distance_2d(b, c, d))
        .min(point_segment_distance_2d(c, a, b))
        .min(point_segment_distance_2d(d, a, b))
}

/// Distance from a disc center to an oriented rectangle footprint (0 inside).
pub fn point_rect_distance_2d(p: Vec2, obb: &Obb) -> f64 {
    let l = obb.to_local(Vec3::new(p.x, p.y, obb.center.z));
    let dx = (l.x.abs() - obb.half.x).max(0.0);
    let dy = (l.y.abs() - obb.half.y).max(0.0);
    (dx * dx + dy * dy).sqrt()
}

/// Ray against a vertical wall rectangle spanning segment `a`-`b`, z in `[z0, z1]`.
/// The returned normal faces the ray origin.
pub fn ray_wall(origin: &Vec3, dir: &Vec3, a: Vec2, b: Vec2, z0: f64, z1: f64, t_min: f64, t_max: f64) -> Option<(f64, Vec3)> {
    let e = b - a;
    let n2 = Vec2::new(-e.y, e.x);
    let len = n2.norm();
    if len == 0.0 {
        return None;
    }
    let n2 = n2 / len;
    let denom = n2.x * dir.x + n2.y * dir.y;
    if denom == 0.0 {
        return None;
    }
    let t = (n2.x * (a.x - origin.x) + n2.y * (a.y - origin.y)) / denom;
    if t < t_min || t > t_max {
        return None;
    }
    let p = origin + dir * t;
    let s = (Vec2::new(p.x, p.y) - a).dot(&e) / e.norm_squared();
    if !(0.0..=1.0).contains(&s) || p.z < z0 || p.z > z1 {
        return None;
    }
    let sign = if denom > 0.0 { -1.0 } else { 1.0 };
    Some((t, Vec3::new(n2.x * sign, n2.y * sign, 0.0)))
}

/// Even-odd point-in-polygon.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi.y > p.y) != (pj.y > p.y) && p.x < (pj.x - pi.x) * (p.y - pi.y) / (pj.y - pi.y) + pi.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// True if no two non-adjacent edges of the closed polygon intersect.
pub fn polygon_is_simple(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in (i + 1)..n {
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segment_segment_distance_2d(a, b, c, d) == 0.0 {
                return false;
            }
        }
    }
    true
}
