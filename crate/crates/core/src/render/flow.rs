use super::{Camera, SensorFrame};
use crate::geometry::{Snapshot, SurfaceKind};

/// Flow at each pixel of `current`: where its surface point was at the
/// previous tick (undoing the link's rigid motion), and how far it moved in
/// world space and on the image. Background and unmatched pixels get zero.
pub fn compute_flow(prev: &Snapshot, prev_cam: &Camera, cur: &Snapshot, cur_cam: &Camera, current: &SensorFrame) -> (Vec<[f32; 2]>, Vec<[f32; 3]>) {
    let n = current.len();
    let mut optical = vec![[0.0f32; 2]; n];
    let mut scene = vec![[0.0f32; 3]; n];
    for i in 0..n {
        let Some(kind) = current.surface[i] else { continue };
        let depth = current.depth[i] as f64;
        if depth <= 0.0 {
            continue;
        }
        let (u, v) = ((i as u32 % current.width) as f64 + 0.5, (i as u32 / current.width) as f64 + 0.5);
        let now = cur_cam.unproject(u, v, depth);
        let before = match kind {
            SurfaceKind::Link { object, link } => {
                let (Some(old), Some(new)) = (prev.link_poses.get(&(object, link)), cur.link_poses.get(&(object, link))) else { continue };
                old.apply(new.inverse_apply(now))
            }
            _ => now,
        };
        let d = now - before;
        scene[i] = [d.x as f32, d.y as f32, d.z as f32];
        if let (Some(a), Some(b)) = (prev_cam.project(&before), cur_cam.project(&now)) {
            optical[i] = [(b.0 - a.0) as f32, (b.1 - a.1) as f32];
        }
    }
    (optical, scene)
}
