//! Posed world geometry: a flat primitive list with a bounding-volume
//! hierarchy, queried by the renderer, the LiDAR and collision checks.

use std::collections::BTreeMap;

use crate::math::{point_in_polygon, ray_wall, Aabb, Obb, Placement, Vec2, Vec3};
use crate::scene::vocab::class_id;
use crate::scene::{Material, Scene};

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Box(Obb),
    Wall { a: Vec2, b: Vec2, z0: f64, z1: f64 },
    Floor { polygon: Vec<Vec2>, z: f64 },
    Ceiling { polygon: Vec<Vec2>, z: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Wall(usize),
    Floor(usize),
    Ceiling(usize),
    Link { object: u32, link: usize },
}

impl SurfaceKind {
    pub fn label(&self) -> String {
        match self {
            SurfaceKind::Wall(i) => format!("wall[{i}]"),
            SurfaceKind::Floor(i) => format!("floor[{i}]"),
            SurfaceKind::Ceiling(i) => format!("ceiling[{i}]"),
            SurfaceKind::Link { object, link } => format!("object[{object}].link[{link}]"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Appearance {
    pub albedo: Vec3,
    pub roughness: f64,
    pub metallic: f64,
}

impl Appearance {
    pub fn from_material(m: Option<&Material>) -> Self {
        match m {
            Some(m) => Appearance { albedo: Vec3::from(m.albedo), roughness: m.roughness, metallic: m.metallic },
            None => Appearance { albedo: Vec3::repeat(0.7), roughness: 0.8, metallic: 0.0 },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub kind: SurfaceKind,
    pub semantic: u16,
    /// 0 for structure.
    pub instance: u32,
    pub appearance: Appearance,
}

impl Primitive {
    pub fn aabb(&self) -> Aabb {
        match &self.shape {
            Shape::Box(b) => b.aabb(),
            Shape::Wall { a, b, z0, z1 } => Aabb {
                min: Vec3::new(a.x.min(b.x), a.y.min(b.y), *z0),
                max: Vec3::new(a.x.max(b.x), a.y.max(b.y), *z1),
            },
            Shape::Floor { polygon, z } | Shape::Ceiling { polygon, z } => {
                let mut bb = Aabb::empty();
                for p in polygon {
                    bb.include(Vec3::new(p.x, p.y, *z));
                }
                bb
            }
        }
    }

    /// Nearest hit in `[t_min, t_max]` with its surface normal.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Option<(f64, Vec3)> {
        match &self.shape {
            Shape::Box(b) => b.ray_intersect(origin, dir, t_min, t_max),
            Shape::Wall { a, b, z0, z1 } => ray_wall(origin, dir, *a, *b, *z0, *z1, t_min, t_max),
            Shape::Floor { polygon, z } | Shape::Ceiling { polygon, z } => {
                if dir.z == 0.0 {
                    return None;
                }
                let t = (z - origin.z) / dir.z;
                if t < t_min || t > t_max {
                    return None;
                }
                let p = origin + dir * t;
                if !point_in_polygon(Vec2::new(p.x, p.y), polygon) {
                    return None;
                }
                let nz = if matches!(self.shape, Shape::Floor { .. }) { 1.0 } else { -1.0 };
                Some((t, Vec3::new(0.0, 0.0, nz)))
            }
        }
    }

    pub fn is_ceiling(&self) -> bool {
        matches!(self.kind, SurfaceKind::Ceiling(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    pub normal: Vec3,
    pub prim: usize,
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { bb: Aabb, prims: Vec<usize> },
    Inner { bb: Aabb, left: usize, right: usize },
}

impl Node {
    fn bb(&self) -> &Aabb {
        match self {
            Node::Leaf { bb, .. } | Node::Inner { bb, .. } => bb,
        }
    }
}

/// Bounding-volume hierarchy over primitive AABBs, split by surface area.
#[derive(Clone, Debug, Default)]
pub struct Bvh {
    nodes: Vec<Node>,
}

const LEAF_SIZE: usize = 4;

impl Bvh {
    pub fn build(boxes: &[Aabb]) -> Self {
        let mut bvh = Bvh { nodes: Vec::new() };
        if !boxes.is_empty() {
            let idx: Vec<usize> = (0..boxes.len()).collect();
            bvh.build_node(boxes, idx);
        }
        bvh
    }

    fn build_node(&mut self, boxes: &[Aabb], mut idx: Vec<usize>) -> usize {
        let bb = idx.iter().fold(Aabb::empty(), |acc, &i| acc.union(&boxes[i]));
        let slot = self.nodes.len();
        if idx.len() <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bb, prims: idx });
            return slot;
        }
        self.nodes.push(Node::Leaf { bb, prims: vec![] });
        // Surface-area heuristic over center-sorted orders on each axis.
        let area = |b: &Aabb| {
            let e = b.extent();
            e.x * e.y + e.y * e.z + e.z * e.x
        };
        let mut best: Option<(f64, usize, usize)> = None;
        for axis in 0..3 {
            idx.sort_by(|&a, &b| boxes[a].center()[axis].total_cmp(&boxes[b].center()[axis]).then(a.cmp(&b)));
            let mut suffix = vec![0.0; idx.len()];
            let mut acc = Aabb::empty();
            for k in (1..idx.len()).rev() {
                acc = acc.union(&boxes[idx[k]]);
                suffix[k] = area(&acc);
            }
            let mut prefix = Aabb::empty();
            for k in 1..idx.len() {
                prefix = prefix.union(&boxes[idx[k - 1]]);
                let cost = area(&prefix) * k as f64 + suffix[k] * (idx.len() - k) as f64;
                if best.map_or(true, |(c, _, _)| cost < c) {
                    best = Some((cost, axis, k));
                }
            }
        }
        let (_, axis, k) = best.expect("at least two primitives");
        idx.sort_by(|&a, &b| boxes[a].center()[axis].total_cmp(&boxes[b].center()[axis]).then(a.cmp(&b)));
        let right_idx = idx.split_off(k);
        let left = self.build_node(boxes, idx);
        let right = self.build_node(boxes, right_idx);
        self.nodes[slot] = Node::Inner { bb, left, right };
        slot
    }

    /// Visit leaves whose bounds the ray enters before `t_max`. The visitor
    /// returns a new (possibly shrunk) `t_max`.
    pub fn traverse_ray(&self, origin: &Vec3, dir: &Vec3, t_min: f64, mut t_max: f64, mut visit: impl FnMut(usize, f64) -> f64) {
        if self.nodes.is_empty() {
            return;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let Some(root) = self.nodes[0].bb().ray_entry(origin, &inv, t_min, t_max) else { return };
        // Front to back: the nearer child is pushed last, and nodes entered
        // beyond the closest hit so far are skipped on pop.
        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(32);
        stack.push((0, root));
        while let Some((n, entry)) = stack.pop() {
            if entry > t_max {
                continue;
            }
            match &self.nodes[n] {
                Node::Leaf { prims, .. } => {
                    for &p in prims {
                        t_max = visit(p, t_max);
                    }
                }
                Node::Inner { left, right, .. } => {
                    let l = self.nodes[*left].bb().ray_entry(origin, &inv, t_min, t_max);
                    let r = self.nodes[*right].bb().ray_entry(origin, &inv, t_min, t_max);
                    match (l, r) {
                        (Some(tl), Some(tr)) if tr < tl => {
                            stack.push((*left, tl));
                            stack.push((*right, tr));
                        }
                        (Some(tl), Some(tr)) => {
                            stack.push((*right, tr));
                            stack.push((*left, tl));
                        }
                        (Some(tl), None) => stack.push((*left, tl)),
                        (None, Some(tr)) => stack.push((*right, tr)),
                        (None, None) => {}
                    }
                }
            }
        }
    }

    /// Visit every primitive whose leaf bounds overlap `query`.
    pub fn query_aabb(&self, query: &Aabb, mut visit: impl FnMut(usize)) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            match &self.nodes[n] {
                Node::Leaf { bb, prims } => {
                    if bb.overlaps(query) {
                        prims.iter().for_each(|&p| visit(p));
                    }
                }
                Node::Inner { bb, left, right } => {
                    if bb.overlaps(query) {
                        stack.push(*right);
                        stack.push(*left);
                    }
                }
            }
        }
    }
}

/// Immutable posed geometry of a world at one tick.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub prims: Vec<Primitive>,
    prim_boxes: Vec<Aabb>,
    bvh: Bvh,
    /// World transform of every object link (object frame ∘ joint transforms).
    pub link_poses: BTreeMap<(u32, usize), Placement>,
    pub tick: u64,
}

impl Snapshot {
    /// `posed(object_index)` yields the world boxes and transforms of each link.
    pub fn build(scene: &Scene, tick: u64, mut posed: impl FnMut(usize) -> (Vec<Obb>, Vec<Placement>)) -> Self {
        let mut prims = Vec::new();
        let look = |name: &str| Appearance::from_material(scene.materials.get(name));
        let wall_look = look("plaster");
        for (i, w) in scene.walls.iter().enumerate() {
            prims.push(Primitive {
                shape: Shape::Wall { a: Vec2::from(w.a), b: Vec2::from(w.b), z0: w.base, z1: w.base + w.height },
                kind: SurfaceKind::Wall(i),
                semantic: class_id("wall").unwrap_or(0),
                instance: 0,
                appearance: wall_look,
            });
        }
        for (i, r) in scene.rooms.iter().enumerate() {
            let polygon: Vec<Vec2> = r.polygon.iter().map(|p| Vec2::from(*p)).collect();
            prims.push(Primitive {
                shape: Shape::Floor { polygon: polygon.clone(), z: r.floor_z },
                kind: SurfaceKind::Floor(i),
                semantic: class_id("floor").unwrap_or(0),
                instance: 0,
                appearance: look("oak"),
            });
            if let Some(z) = r.ceiling_z {
                prims.push(Primitive {
                    shape: Shape::Ceiling { polygon, z },
                    kind: SurfaceKind::Ceiling(i),
                    semantic: class_id("ceiling").unwrap_or(0),
                    instance: 0,
                    appearance: wall_look,
                });
            }
        }
        let mut link_poses = BTreeMap::new();
        for (oi, o) in scene.objects.iter().enumerate() {
            let (boxes, transforms) = posed(oi);
            let semantic = class_id(&o.class_label).unwrap_or(0);
            for (li, (b, t)) in boxes.into_iter().zip(transforms).enumerate() {
                prims.push(Primitive {
                    shape: Shape::Box(b),
                    kind: SurfaceKind::Link { object: o.id, link: li },
                    semantic,
                    instance: o.id,
                    appearance: look(&o.model.links[li].material),
                });
                link_poses.insert((o.id, li), t);
            }
        }
        let prim_boxes: Vec<Aabb> = prims.iter().map(Primitive::aabb).collect();
        let bvh = Bvh::build(&prim_boxes);
        Snapshot { prims, prim_boxes, bvh, link_poses, tick }
    }

    pub fn prim_aabb(&self, i: usize) -> &Aabb {
        &self.prim_boxes[i]
    }

    pub fn raycast(&self, origin: &Vec3, dir: &Vec3, t_max: f64) -> Option<Hit> {
        self.raycast_filtered(origin, dir, t_max, |_| true)
    }

    pub fn raycast_filtered(&self, origin: &Vec3, dir: &Vec3, t_max: f64, keep: impl Fn(&Primitive) -> bool) -> Option<Hit> {
        let mut best: Option<(f64, Vec3, usize)> = None;
        self.bvh.traverse_ray(origin, dir, 0.0, t_max, |p, tm| {
            let prim = &self.prims[p];
            if !keep(prim) {
                return tm;
            }
            match prim.intersect(origin, dir, 0.0, tm) {
                // Ties resolve to the lower primitive index for determinism.
                Some((t, n)) if best.map_or(true, |(bt, _, bp)| t < bt || (t == bt && p < bp)) => {
                    best = Some((t, n, p));
                    t
                }
                _ => tm,
            }
        });
        best.map(|(t, normal, prim)| Hit { t, point: origin + dir * t, normal, prim })
    }

    /// Linear scan over every primitive; reference for [`Snapshot::raycast`].
    pub fn raycast_brute_force(&self, origin: &Vec3, dir: &Vec3, t_max: f64) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for (p, prim) in self.prims.iter().enumerate() {
            if let Some((t, n)) = prim.intersect(origin, dir, 0.0, t_max) {
                if best.map_or(true, |b| t < b.t) {
                    best = Some(Hit { t, point: origin + dir * t, normal: n, prim: p });
                }
            }
        }
        best
    }

    pub fn query_aabb(&self, query: &Aabb, visit: impl FnMut(usize)) {
        self.bvh.query_aabb(query, visit)
    }

    /// Overall scene bounds.
    pub fn bounds(&self) -> Aabb {
        self.prim_boxes.iter().fold(Aabb::empty(), |a, b| a.union(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::procedural;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn snapshot(scene: &Scene) -> Snapshot {
        Snapshot::build(scene, 0, |i| {
            let o = &scene.objects[i];
            let q = o.rest_joint_positions();
            let base = o.bbox.placement();
            (o.posed_links(&q, None), o.link_transforms(&q).iter().map(|t| base.compose(t)).collect())
        })
    }

    #[test]
    fn bvh_matches_brute_force() {
        let scene = procedural::furnished_room(30, 2);
        let snap = snapshot(&scene);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let o = Vec3::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(0.1..2.4));
            let d = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
            let a = snap.raycast(&o, &d, 20.0).map(|h| h.t);
            let b = snap.raycast_brute_force(&o, &d, 20.0).map(|h| h.t);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn ceiling_can_be_filtered() {
        let scene = procedural::empty_room(4.0, 4.0);
        let snap = snapshot(&scene);
        let up = Vec3::z();
        let o = Vec3::new(0.0, 0.0, 0.01);
        assert!(snap.raycast(&o, &up, 10.0).is_some());
        assert!(snap.raycast_filtered(&o, &up, 10.0, |p| !p.is_ceiling()).is_none());
    }
}
