//! Geodesic waypoints on an occupancy grid built from walls alone.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::PlanError;
use crate::math::{point_segment_distance_2d, Vec2};
use crate::scene::Scene;

pub const LAYOUT_RESOLUTION: f64 = 0.05;

/// Walls-only occupancy grid. A cell is blocked when a wall comes within
/// `clearance` plus half the cell diagonal of its center.
#[derive(Clone, Debug)]
pub struct LayoutGrid {
    pub origin: Vec2,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    pub clearance: f64,
    blocked: Vec<bool>,
}

impl LayoutGrid {
    pub fn from_scene(scene: &Scene, resolution: f64, clearance: f64) -> Self {
        let walls: Vec<(Vec2, Vec2)> = scene.walls.iter().map(|w| (Vec2::from(w.a), Vec2::from(w.b))).collect();
        let pts = walls.iter().flat_map(|(a, b)| [*a, *b]).chain(scene.rooms.iter().flat_map(|r| r.polygon.iter().map(|p| Vec2::from(*p))));
        let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
        for p in pts {
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        if !lo.x.is_finite() {
            lo = Vec2::zeros();
            hi = Vec2::zeros();
        }
        let pad = 2.0 * resolution;
        let origin = lo - Vec2::repeat(pad);
        let width = (((hi.x - lo.x) + 2.0 * pad) / resolution).ceil() as usize;
        let height = (((hi.y - lo.y) + 2.0 * pad) / resolution).ceil() as usize;
        let reach = clearance + resolution * std::f64::consts::FRAC_1_SQRT_2;
        let mut blocked = vec![false; width * height];
        for (a, b) in &walls {
            // Only cells near the segment's bounding box can be blocked.
            let i0 = (((a.x.min(b.x) - reach - origin.x) / resolution).floor().max(0.0)) as usize;
            let i1 = ((((a.x.max(b.x) + reach - origin.x) / resolution).ceil()) as usize).min(width);
            let j0 = (((a.y.min(b.y) - reach - origin.y) / resolution).floor().max(0.0)) as usize;
            let j1 = ((((a.y.max(b.y) + reach - origin.y) / resolution).ceil()) as usize).min(height);
            for j in j0..j1 {
                for i in i0..i1 {
                    let c = origin + Vec2::new((i as f64 + 0.5) * resolution, (j as f64 + 0.5) * resolution);
                    if point_segment_distance_2d(c, *a, *b) <= reach {
                        blocked[j * width + i] = true;
                    }
                }
            }
        }
        LayoutGrid { origin, resolution, width, height, clearance, blocked }
    }

    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let i = ((p.x - self.origin.x) / self.resolution).floor();
        let j = ((p.y - self.origin.y) / self.resolution).floor();
        (i >= 0.0 && j >= 0.0 && (i as usize) < self.width && (j as usize) < self.height).then(|| (i as usize, j as usize))
    }

    pub fn center(&self, (i, j): (usize, usize)) -> Vec2 {
        self.origin + Vec2::new((i as f64 + 0.5) * self.resolution, (j as f64 + 0.5) * self.resolution)
    }

    pub fn is_blocked(&self, (i, j): (usize, usize)) -> bool {
        self.blocked[j * self.width + i]
    }

    pub fn is_free(&self, p: Vec2) -> bool {
        self.cell_of(p).is_some_and(|c| !self.is_blocked(c))
    }

    /// Free straight-line visibility, sampled at a quarter cell.
    pub fn line_of_sight(&self, a: Vec2, b: Vec2) -> bool {
        let n = (((b - a).norm() / (self.resolution / 4.0)).ceil() as usize).max(1);
        (0..=n).all(|k| self.is_free(a + (b - a) * (k as f64 / n as f64)))
    }

    /// 8-connected A* without corner cutting.
    fn cell_path(&self, start: (usize, usize), goal: (usize, usize)) -> Option<Vec<(usize, usize)>> {
        let idx = |(i, j): (usize, usize)| j * self.width + i;
        let h = |(i, j): (usize, usize)| {
            let dx = (i as f64 - goal.0 as f64).abs();
            let dy = (j as f64 - goal.1 as f64).abs();
            dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
        };
        let n = self.width * self.height;
        let mut g = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut open = BinaryHeap::new();
        g[idx(start)] = 0.0;
        // Costs are scaled to integers so the heap order is total and deterministic.
        let key = |f: f64| (f * 1e9) as u64;
        open.push(Reverse((key(h(start)), idx(start))));
        while let Some(Reverse((_, u))) = open.pop() {
            if closed[u] {
                continue;
            }
            closed[u] = true;
            let cu = (u % self.width, u / self.width);
            if cu == goal {
                let mut out = vec![cu];
                let mut v = u;
                while v != idx(start) {
                    v = prev[v];
                    out.push((v % self.width, v / self.width));
                }
                out.reverse();
                return Some(out);
            }
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1), (-1, -1), (1, -1), (-1, 1), (1, 1)] {
                let (ni, nj) = (cu.0 as i64 + di, cu.1 as i64 + dj);
                if ni < 0 || nj < 0 || ni >= self.width as i64 || nj >= self.height as i64 {
                    continue;
                }
                let c = (ni as usize, nj as usize);
                if self.is_blocked(c) {
                    continue;
                }
                if di != 0 && dj != 0 && (self.is_blocked((ni as usize, cu.1)) || self.is_blocked((cu.0, nj as usize))) {
                    continue;
                }
                let step = if di != 0 && dj != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                let ng = g[u] + step;
                let v = idx(c);
                if ng < g[v] {
                    g[v] = ng;
                    prev[v] = u;
                    open.push(Reverse((key(ng + h(c)), v)));
                }
            }
        }
        None
    }

    /// Shortest string-pulled polyline from `start` to `goal`.
    pub fn shortest_path(&self, start: Vec2, goal: Vec2) -> Result<Vec<Vec2>, PlanError> {
        let (Some(s), Some(g)) = (self.cell_of(start), self.cell_of(goal)) else { return Err(PlanError::Unreachable) };
        if self.is_blocked(s) || self.is_blocked(g) {
            return Err(PlanError::Unreachable);
        }
        let cells = self.cell_path(s, g).ok_or(PlanError::Unreachable)?;
        let mut pts: Vec<Vec2> = cells.iter().map(|c| self.center(*c)).collect();
        pts[0] = start;
        let last = pts.len() - 1;
        pts[last] = goal;
        let mut out = vec![start];
        let mut i = 0;
        while i < last {
            let mut j = i + 1;
            while j < last && self.line_of_sight(pts[i], pts[j + 1]) {
                j += 1;
            }
            out.push(pts[j]);
            i = j;
        }
        if out.len() == 2 && out[0] == out[1] {
            out.pop();
        }
        Ok(out)
    }

    pub fn geodesic_distance(&self, start: Vec2, goal: Vec2) -> Result<f64, PlanError> {
        Ok(self.shortest_path(start, goal)?.windows(2).map(|w| (w[1] - w[0]).norm()).sum())
    }

    /// The next `count` points at `spacing` along the shortest path.
    pub fn waypoints(&self, start: Vec2, goal: Vec2, spacing: f64, count: usize) -> Result<Vec<Vec2>, PlanError> {
        Ok(resample_polyline(&self.shortest_path(start, goal)?, spacing, count))
    }
}

/// Points at arc lengths `spacing, 2·spacing, ...` along `poly`, padded with
/// its last point.
pub fn resample_polyline(poly: &[Vec2], spacing: f64, count: usize) -> Vec<Vec2> {
    let end = *poly.last().expect("non-empty polyline");
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    let mut covered = 0.0;
    for k in 1..=count {
        let target = k as f64 * spacing;
        loop {
            if seg + 1 >= poly.len() {
                out.push(end);
                break;
            }
            let len = (poly[seg + 1] - poly[seg]).norm();
            if target <= covered + len {
                let s = if len > 0.0 { (target - covered) / len } else { 0.0 };
                out.push(poly[seg] + (poly[seg + 1] - poly[seg]) * s);
                break;
            }
            covered += len;
            seg += 1;
        }
    }
    out
}

/// Next `count` waypoints at `spacing` meters on the walls-only shortest
/// path from `start` to `goal`.
pub fn geodesic_waypoints(scene: &Scene, start: [f64; 2], goal: [f64; 2], spacing: f64, count: usize) -> Result<Vec<[f64; 2]>, PlanError> {
    let grid = LayoutGrid::from_scene(scene, LAYOUT_RESOLUTION, 0.0);
    Ok(grid.waypoints(Vec2::from(start), Vec2::from(goal), spacing, count)?.iter().map(|p| [p.x, p.y]).collect())
}
