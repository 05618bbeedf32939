//! Ray-cast LiDAR with dropout noise, and occupancy grids built from scans.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Snapshot;
use crate::math::{Placement, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LidarConfig {
    pub n_rays: usize,
    pub horizontal_fov: f64,
    pub n_beams: usize,
    /// Elevation per beam (radians).
    pub vertical_angles: Vec<f64>,
    pub max_range: f64,
    pub dropout_p: f64,
    /// Sensor pose relative to the robot base.
    pub mount: Placement,
}

impl Default for LidarConfig {
    fn default() -> Self {
        LidarConfig {
            n_rays: 512,
            horizontal_fov: TAU,
            n_beams: 1,
            vertical_angles: vec![0.0],
            max_range: 10.0,
            dropout_p: 0.05,
            mount: Placement::new(0.0, 0.0, 0.35, 0.0),
        }
    }
}

impl LidarConfig {
    /// 16 beams evenly spaced over ±15°.
    pub fn sixteen_beam() -> Self {
        let lim = 15f64.to_radians();
        let vertical_angles = (0..16).map(|i| -lim + 2.0 * lim * i as f64 / 15.0).collect();
        LidarConfig { n_beams: 16, vertical_angles, mount: Placement::new(0.0, 0.0, 0.7, 0.0), ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_rays < 1 {
            return Err("n_rays must be at least 1".into());
        }
        if self.vertical_angles.len() != self.n_beams {
            return Err(format!("{} vertical angles for {} beams", self.vertical_angles.len(), self.n_beams));
        }
        if !(0.0..=1.0).contains(&self.dropout_p) {
            return Err("dropout_p must be in [0, 1]".into());
        }
        if !(self.max_range > 0.0) || !(self.horizontal_fov > 0.0 && self.horizontal_fov <= TAU) {
            return Err("max_range and horizontal_fov must be positive (fov at most 2π)".into());
        }
        Ok(())
    }

    /// Azimuth of ray `i`, counter-clockwise from −fov/2. A full circle is
    /// split into `n_rays` equal steps so the first and last rays differ.
    pub fn azimuth(&self, i: usize) -> f64 {
        let step = if (self.horizontal_fov - TAU).abs() < 1e-12 || self.n_rays == 1 {
            self.horizontal_fov / self.n_rays as f64
        } else {
            self.horizontal_fov / (self.n_rays - 1) as f64
        };
        -self.horizontal_fov / 2.0 + i as f64 * step
    }

    /// Unit direction of (beam, ray) in the sensor frame.
    pub fn direction(&self, beam: usize, ray: usize) -> Vec3 {
        let (sa, ca) = self.azimuth(ray).sin_cos();
        let (se, ce) = self.vertical_angles[beam].sin_cos();
        Vec3::new(ce * ca, ce * sa, se)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamStatus {
    Hit,
    /// Nothing within max range.
    NoReturn,
    /// Removed by dropout noise.
    Dropped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LidarScan {
    pub n_beams: usize,
    pub n_rays: usize,
    pub max_range: f64,
    /// Azimuth per ray.
    pub angles: Vec<f64>,
    /// Beam-major, `n_beams × n_rays`. No-return beams hold `max_range`.
    pub ranges: Vec<f64>,
    pub status: Vec<BeamStatus>,
    pub tick: u64,
}

impl LidarScan {
    pub fn valid(&self) -> Vec<bool> {
        self.status.iter().map(|s| *s == BeamStatus::Hit).collect()
    }

    /// Structured text export.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "tick": self.tick, "angles": self.angles, "ranges": self.ranges, "valid": self.valid() }).to_string()
    }
}

/// World pose of a sensor mounted at `config.mount` on a base at `base`.
pub fn sensor_pose(base: &Placement, config: &LidarConfig) -> Placement {
    base.compose(&config.mount)
}

/// Noise-free scan from `pose` (world frame).
pub fn lidar_scan_clean(snap: &Snapshot, pose: &Placement, config: &LidarConfig) -> LidarScan {
    let origin = pose.translation();
    let mut ranges = Vec::with_capacity(config.n_beams * config.n_rays);
    let mut status = Vec::with_capacity(ranges.capacity());
    for b in 0..config.n_beams {
        for r in 0..config.n_rays {
            let d = pose.rotate(config.direction(b, r));
            match snap.raycast(&origin, &d, config.max_range) {
                Some(h) if h.t > 0.0 => {
                    ranges.push(h.t);
                    status.push(BeamStatus::Hit);
                }
                Some(h) => {
                    ranges.push(h.t);
                    status.push(BeamStatus::Dropped);
                }
                None => {
                    ranges.push(config.max_range);
                    status.push(BeamStatus::NoReturn);
                }
            }
        }
    }
    LidarScan {
        n_beams: config.n_beams,
        n_rays: config.n_rays,
        max_range: config.max_range,
        angles: (0..config.n_rays).map(|i| config.azimuth(i)).collect(),
        ranges,
        status,
        tick: snap.tick,
    }
}

pub fn lidar_scan(snap: &Snapshot, pose: &Placement, config: &LidarConfig, rng: &mut impl Rng) -> LidarScan {
    apply_dropout(&lidar_scan_clean(snap, pose, config), config.dropout_p, rng)
}

/// Drops each beam independently with probability `p`. One draw per beam,
/// so the mask depends only on the rng state and the beam count.
pub fn apply_dropout(scan: &LidarScan, p: f64, rng: &mut impl Rng) -> LidarScan {
    let mut out = scan.clone();
    if p <= 0.0 {
        return out;
    }
    for s in out.status.iter_mut() {
        if rng.gen::<f64>() < p {
            *s = BeamStatus::Dropped;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Unknown,
    Free,
    Occupied,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// m/cell
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    /// World xy of the lower-left corner of cell (0, 0).
    pub origin: [f64; 2],
}

impl GridConfig {
    /// Square grid of `size` meters centered on `center`.
    pub fn centered(center: [f64; 2], size: f64, resolution: f64) -> Self {
        let n = (size / resolution).round() as usize;
        let half = n as f64 * resolution / 2.0;
        GridConfig { resolution, width: n, height: n, origin: [center[0] - half, center[1] - half] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub config: GridConfig,
    /// Row-major from cell (0, 0); row index grows with y.
    pub cells: Vec<Cell>,
}

impl OccupancyGrid {
    pub fn new(config: GridConfig) -> Self {
        OccupancyGrid { config, cells: vec![Cell::Unknown; config.width * config.height] }
    }

    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        let c = &self.config;
        (((x - c.origin[0]) / c.resolution).floor() as i64, ((y - c.origin[1]) / c.resolution).floor() as i64)
    }

    pub fn get(&self, i: i64, j: i64) -> Option<Cell> {
        self.idx(i, j).map(|k| self.cells[k])
    }

    fn idx(&self, i: i64, j: i64) -> Option<usize> {
        let c = &self.config;
        (i >= 0 && j >= 0 && (i as usize) < c.width && (j as usize) < c.height).then(|| j as usize * c.width + i as usize)
    }

    fn mark(&mut self, (i, j): (i64, i64), cell: Cell) {
        if let Some(k) = self.idx(i, j) {
            if !(cell == Cell::Free && self.cells[k] == Cell::Occupied) {
                self.cells[k] = cell;
            }
        }
    }

    pub fn count(&self, cell: Cell) -> usize {
        self.cells.iter().filter(|c| **c == cell).count()
    }

    /// Binary PGM: 0 occupied, 128 unknown, 255 free; top row is the largest y.
    pub fn to_pgm(&self) -> Vec<u8> {
        let c = &self.config;
        let mut out = format!("P5\n{} {}\n255\n", c.width, c.height).into_bytes();
        for j in (0..c.height).rev() {
            for i in 0..c.width {
                out.push(match self.cells[j * c.width + i] {
                    Cell::Occupied => 0,
                    Cell::Unknown => 128,
                    Cell::Free => 255,
                });
            }
        }
        out
    }

    pub fn write_pgm(&self, path: &Path) -> std::io::Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_pgm())
    }
}

/// Cells crossed by the segment from `a` to `b`, in order, ending with the
/// cell that contains `b` (grid traversal after Amanatides and Woo).
pub fn traverse_cells(grid: &OccupancyGrid, a: [f64; 2], b: [f64; 2]) -> Vec<(i64, i64)> {
    let res = grid.config.resolution;
    let start = grid.cell_of(a[0], a[1]);
    let end = grid.cell_of(b[0], b[1]);
    let d = [b[0] - a[0], b[1] - a[1]];
    let mut cell = [start.0, start.1];
    let mut step = [0i64; 2];
    let mut t_max = [f64::INFINITY; 2];
    let mut t_delta = [f64::INFINITY; 2];
    let base = [cell[0] as f64 * res + grid.config.origin[0], cell[1] as f64 * res + grid.config.origin[1]];
    for k in 0..2 {
        if d[k] > 0.0 {
            step[k] = 1;
            t_max[k] = (base[k] + res - a[k]) / d[k];
            t_delta[k] = res / d[k];
        } else if d[k] < 0.0 {
            step[k] = -1;
            t_max[k] = (base[k] - a[k]) / d[k];
            t_delta[k] = -res / d[k];
        }
    }
    let limit = ((end.0 - start.0).abs() + (end.1 - start.1).abs() + 2) as usize;
    let mut out = vec![(cell[0], cell[1])];
    while (cell[0], cell[1]) != end && out.len() <= limit {
        let k = if t_max[0] < t_max[1] { 0 } else { 1 };
        if t_max[k] > 1.0 {
            break;
        }
        cell[k] += step[k];
        t_max[k] += t_delta[k];
        out.push((cell[0], cell[1]));
    }
    if *out.last().unwrap() != end {
        out.push(end);
    }
    out
}

/// Single-beam scan into a grid: traversed cells free, hit cells occupied,
/// no-return beams free out to max range, dropped beams ignored. Occupied
/// wins over free.
pub fn scan_to_occupancy(scan: &LidarScan, sensor: &Placement, config: GridConfig) -> OccupancyGrid {
    let mut grid = OccupancyGrid::new(config);
    let a = [sensor.x, sensor.y];
    let mut hits = Vec::new();
    for (r, (&range, &status)) in scan.ranges.iter().zip(&scan.status).enumerate().take(scan.n_rays) {
        if status == BeamStatus::Dropped {
            continue;
        }
        let az = sensor.yaw + scan.angles[r];
        let b = [a[0] + range * az.cos(), a[1] + range * az.sin()];
        let cells = traverse_cells(&grid, a, b);
        let (last, before) = cells.split_last().unwrap();
        for c in before {
            grid.mark(*c, Cell::Free);
        }
        match status {
            BeamStatus::Hit => hits.push(*last),
            _ => grid.mark(*last, Cell::Free),
        }
    }
    for c in hits {
        grid.mark(c, Cell::Occupied);
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_beam(range: f64, status: BeamStatus) -> LidarScan {
        LidarScan { n_beams: 1, n_rays: 1, max_range: 10.0, angles: vec![0.0], ranges: vec![range], status: vec![status], tick: 0 }
    }

    #[test]
    fn single_hit_marks_twenty_free_then_occupied() {
        let cfg = GridConfig { resolution: 0.1, width: 40, height: 3, origin: [0.0, -0.1] };
        let g = scan_to_occupancy(&one_beam(2.0, BeamStatus::Hit), &Placement::new(0.0, 0.05, 0.0, 0.0), cfg);
        for i in 0..20 {
            assert_eq!(g.get(i, 1), Some(Cell::Free), "{i}");
        }
        assert_eq!(g.get(20, 1), Some(Cell::Occupied));
        assert_eq!(g.count(Cell::Free), 20);
        assert_eq!(g.count(Cell::Occupied), 1);
    }

    #[test]
    fn dropped_beams_leave_unknown() {
        let cfg = GridConfig::centered([0.0, 0.0], 4.0, 0.1);
        let g = scan_to_occupancy(&one_beam(2.0, BeamStatus::Dropped), &Placement::IDENTITY, cfg);
        assert_eq!(g.count(Cell::Unknown), g.cells.len());
    }

    #[test]
    fn occupied_wins_over_free() {
        let cfg = GridConfig { resolution: 0.1, width: 40, height: 3, origin: [0.0, -0.1] };
        let scan = LidarScan {
            n_beams: 1,
            n_rays: 2,
            max_range: 10.0,
            angles: vec![0.0, 0.0],
            ranges: vec![1.0, 3.0],
            status: vec![BeamStatus::Hit, BeamStatus::Hit],
            tick: 0,
        };
        let g = scan_to_occupancy(&scan, &Placement::new(0.0, 0.05, 0.0, 0.0), cfg);
        assert_eq!(g.get(10, 1), Some(Cell::Occupied));
        assert_eq!(g.get(30, 1), Some(Cell::Occupied));
    }

    #[test]
    fn pgm_values() {
        let mut g = OccupancyGrid::new(GridConfig { resolution: 1.0, width: 3, height: 1, origin: [0.0, 0.0] });
        g.cells = vec![Cell::Occupied, Cell::Unknown, Cell::Free];
        let p = g.to_pgm();
        assert!(p.starts_with(b"P5\n3 1\n255\n"));
        assert_eq!(&p[p.len() - 3..], &[0, 128, 255]);
    }

    #[test]
    fn full_circle_azimuths_hit_axes() {
        let c = LidarConfig::default();
        assert_eq!(c.azimuth(0), -std::f64::consts::PI);
        assert_eq!(c.azimuth(256), 0.0);
        assert_eq!(c.azimuth(128), -std::f64::consts::FRAC_PI_2);
        let partial = LidarConfig { horizontal_fov: 1.0, n_rays: 11, ..Default::default() };
        assert!((partial.azimuth(10) - 0.5).abs() < 1e-15);
    }
}
