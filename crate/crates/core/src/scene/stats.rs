use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::Scene;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneStats {
    pub object_count: usize,
    pub room_count: usize,
    /// 0 by convention for a scene without rooms.
    pub objects_per_room: f64,
    pub class_histogram: BTreeMap<String, usize>,
}

pub fn scene_stats(scene: &Scene) -> SceneStats {
    let mut class_histogram = BTreeMap::new();
    for o in &scene.objects {
        *class_histogram.entry(o.class_label.clone()).or_insert(0) += 1;
    }
    let room_count = scene.rooms.len();
    SceneStats {
        object_count: scene.objects.len(),
        room_count,
        objects_per_room: if room_count == 0 { 0.0 } else { scene.objects.len() as f64 / room_count as f64 },
        class_histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::procedural;

    #[test]
    fn two_rooms_six_objects() {
        let scene = procedural::two_room_scene(&["chair", "chair", "chair", "table", "lamp", "bed"]);
        let s = scene_stats(&scene);
        assert_eq!((s.room_count, s.object_count), (2, 6));
        assert_eq!(s.objects_per_room, 3.0);
        assert_eq!(s.class_histogram["chair"], 3);
        assert_eq!(s.class_histogram["table"], 1);
    }

    #[test]
    fn empty_scene_is_all_zero() {
        let s = scene_stats(&Scene::empty("e"));
        assert_eq!((s.object_count, s.room_count, s.objects_per_room), (0, 0, 0.0));
        assert!(s.class_histogram.is_empty());
    }
}
