//! Procedural scenes and box-geometry object models used by tests, the CLI
//! and benchmarks in place of mesh assets.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::floorplan::AssetPool;
use super::materials::default_materials;
use super::model::{ArticulatedObject, BoundingBox, Joint, JointKind, Light, Link, ObjectInstance, Room, Scene, WallSegment};
use crate::hash::sub_seed;

pub const WALL_HEIGHT: f64 = 2.5;

fn link(name: &str, center: [f64; 3], half: [f64; 3], material: &str) -> Link {
    Link { name: name.into(), center, half_extents: half, material: material.into(), mass: None, density: None, friction: None }
}

fn fixed(parent: usize, child: usize) -> Joint {
    Joint {
        kind: JointKind::Prismatic,
        parent,
        child,
        axis: [0.0, 0.0, 1.0],
        anchor: [0.0, 0.0, 0.0],
        limits: [0.0, 0.0],
        friction: 0.0,
        damping: 0.0,
        position: 0.0,
    }
}

pub fn default_lights() -> Vec<Light> {
    vec![
        Light::Directional { direction: [0.0, 0.0, -1.0], intensity: [0.7, 0.7, 0.7] },
        Light::Directional { direction: [0.48, 0.6, -0.64], intensity: [0.5, 0.5, 0.48] },
    ]
}

/// Axis-aligned rectangular room with four walls.
pub fn rect_room(id: u32, min: [f64; 2], max: [f64; 2]) -> (Room, Vec<WallSegment>) {
    let c = [[min[0], min[1]], [max[0], min[1]], [max[0], max[1]], [min[0], max[1]]];
    let room = Room { id, name: String::new(), polygon: c.to_vec(), floor_z: 0.0, ceiling_z: Some(WALL_HEIGHT) };
    let walls = (0..4).map(|i| WallSegment { a: c[i], b: c[(i + 1) % 4], height: WALL_HEIGHT, base: 0.0 }).collect();
    (room, walls)
}

/// Empty room centered on the origin.
pub fn empty_room(width: f64, depth: f64) -> Scene {
    let (room, walls) = rect_room(1, [-width / 2.0, -depth / 2.0], [width / 2.0, depth / 2.0]);
    Scene { rooms: vec![room], walls, lights: default_lights(), ..Scene::empty("empty_room") }
}

/// Corridor along +x covering `x in [0, length]`, `y in [-width/2, width/2]`.
pub fn corridor(length: f64, width: f64) -> Scene {
    let (room, walls) = rect_room(1, [0.0, -width / 2.0], [length, width / 2.0]);
    Scene { rooms: vec![room], walls, lights: default_lights(), ..Scene::empty("corridor") }
}

pub fn table_model() -> ArticulatedObject {
    let mut links = vec![link("top", [0.0, 0.0, 0.72], [0.5, 0.35, 0.03], "oak")];
    let mut joints = vec![];
    for (i, (x, y)) in [(-0.45, -0.3), (0.45, -0.3), (0.45, 0.3), (-0.45, 0.3)].into_iter().enumerate() {
        links.push(link(&format!("leg{i}"), [x, y, 0.345], [0.03, 0.03, 0.345], "oak"));
        joints.push(fixed(0, i + 1));
    }
    ArticulatedObject { links, joints, root: 0 }
}

pub fn chair_model() -> ArticulatedObject {
    let links = vec![link("seat", [0.0, 0.0, 0.23], [0.22, 0.22, 0.23], "pine"), link("back", [-0.2, 0.0, 0.7], [0.02, 0.22, 0.24], "pine")];
    ArticulatedObject { links, joints: vec![fixed(0, 1)], root: 0 }
}

/// Cabinet with one sliding drawer along +x.
pub fn cabinet_model() -> ArticulatedObject {
    let links = vec![link("body", [0.0, 0.0, 0.45], [0.3, 0.4, 0.45], "walnut"), link("drawer", [0.31, 0.0, 0.7], [0.01, 0.35, 0.12], "walnut")];
    let drawer = Joint {
        kind: JointKind::Prismatic,
        parent: 0,
        child: 1,
        axis: [1.0, 0.0, 0.0],
        anchor: [0.3, 0.0, 0.7],
        limits: [0.0, 0.4],
        friction: 10.0,
        damping: 2.0,
        position: 0.0,
    };
    ArticulatedObject { links, joints: vec![drawer], root: 0 }
}

/// Door leaf hinged on a vertical post at the native origin; the leaf spans
/// `x in [post, post + width]` at zero angle.
pub fn door_model(width: f64, height: f64, friction: f64) -> ArticulatedObject {
    let post = 0.02;
    let links = vec![
        link("post", [0.0, 0.0, height / 2.0], [post, post, height / 2.0], "steel"),
        link("leaf", [post + width / 2.0, 0.0, height / 2.0], [width / 2.0, 0.02, height / 2.0], "oak"),
    ];
    let hinge = Joint {
        kind: JointKind::Revolute,
        parent: 0,
        child: 1,
        axis: [0.0, 0.0, 1.0],
        anchor: [0.0, 0.0, 0.0],
        limits: [-FRAC_PI_2, FRAC_PI_2],
        friction,
        damping: 1.0,
        position: 0.0,
    };
    ArticulatedObject { links, joints: vec![hinge], root: 0 }
}

pub fn mug_model() -> ArticulatedObject {
    let mut m = ArticulatedObject::single_box([0.04, 0.04, 0.05], "porcelain");
    m.links[0].mass = Some(0.3);
    m
}

/// Sink: basin floor surrounded by four rims.
pub fn sink_model() -> ArticulatedObject {
    let links = vec![
        link("basin", [0.0, 0.0, 0.325], [0.25, 0.2, 0.325], "porcelain"),
        link("rim_front", [0.27, 0.0, 0.45], [0.03, 0.25, 0.45], "porcelain"),
        link("rim_back", [-0.27, 0.0, 0.45], [0.03, 0.25, 0.45], "porcelain"),
        link("rim_left", [0.0, 0.22, 0.45], [0.25, 0.03, 0.45], "porcelain"),
        link("rim_right", [0.0, -0.22, 0.45], [0.25, 0.03, 0.45], "porcelain"),
    ];
    let joints = (1..5).map(|c| fixed(0, c)).collect();
    ArticulatedObject { links, joints, root: 0 }
}

pub fn box_model(material: &str) -> ArticulatedObject {
    ArticulatedObject::single_box([0.5, 0.5, 0.5], material)
}

/// Models per class for randomization and floorplan import.
pub fn default_asset_pool() -> AssetPool {
    let mut tall = table_model();
    tall.links[0].center[2] = 0.9;
    tall.links[0].half_extents = [0.4, 0.4, 0.03];
    for l in tall.links.iter_mut().skip(1) {
        l.center = [l.center[0] * 0.8, l.center[1] * 1.2, 0.435];
        l.half_extents[2] = 0.435;
    }
    let mut stool = chair_model();
    stool.links.truncate(1);
    stool.joints.clear();
    BTreeMap::from([
        ("table".to_string(), vec![table_model(), tall, box_model("pine")]),
        ("chair".to_string(), vec![chair_model(), stool]),
        ("cabinet".to_string(), vec![cabinet_model(), box_model("walnut")]),
        ("door".to_string(), vec![door_model(0.9, 2.0, 5.0)]),
        ("box".to_string(), vec![box_model("pine"), box_model("abs")]),
        ("mug".to_string(), vec![mug_model()]),
        ("sink".to_string(), vec![sink_model()]),
    ])
}

/// Object instance in room 1.
pub fn instance(id: u32, class: &str, center: [f64; 3], yaw: f64, half: [f64; 3], is_static: bool, model: ArticulatedObject) -> ObjectInstance {
    ObjectInstance {
        id,
        class_label: class.into(),
        bbox: BoundingBox { center, yaw, half_extents: half },
        is_static,
        model,
        room: Some(1),
    }
}

/// Two adjacent 5×4 m rooms holding one object per given class.
pub fn two_room_scene(classes: &[&str]) -> Scene {
    let (r1, mut walls) = rect_room(1, [0.0, 0.0], [5.0, 4.0]);
    let (r2, w2) = rect_room(2, [5.0, 0.0], [10.0, 4.0]);
    walls.extend(w2);
    let objects = classes
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let x = 1.0 + 1.4 * i as f64;
            let mut o = instance(i as u32 + 1, c, [x, 2.0, 0.3], 0.0, [0.3, 0.3, 0.3], false, box_model("pine"));
            o.room = Some(if x < 5.0 { 1 } else { 2 });
            o
        })
        .collect();
    Scene { name: "two_rooms".into(), rooms: vec![r1, r2], walls, objects, lights: default_lights(), ..Scene::empty("") }
}

/// Room with `n` non-overlapping objects on a jittered grid, leaving a clear
/// 1.2 m border along the walls and a clear center cell.
pub fn furnished_room(n: usize, seed: u64) -> Scene {
    let cols = ((n + 1) as f64).sqrt().ceil().max(3.0) as usize;
    let cell = 1.7;
    let side = cols as f64 * cell + 2.4;
    let mut scene = empty_room(side, side);
    scene.name = format!("furnished_{n}");
    scene.seed = seed;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, "furnish"));
    let pool = default_asset_pool();
    let kinds: [(&str, bool, [f64; 3]); 6] = [
        ("table", false, [0.5, 0.35, 0.375]),
        ("chair", false, [0.22, 0.22, 0.47]),
        ("cabinet", true, [0.3, 0.4, 0.45]),
        ("box", false, [0.25, 0.25, 0.25]),
        ("sink", true, [0.3, 0.25, 0.45]),
        ("door", true, [0.47, 0.02, 1.0]),
    ];
    let center_cell = (cols / 2) * cols + cols / 2;
    let mut id = 1;
    for c in 0..cols * cols {
        if scene.objects.len() == n {
            break;
        }
        if c == center_cell {
            continue;
        }
        let (ci, cj) = (c % cols, c / cols);
        let (class, is_static, half) = kinds[rng.gen_range(0..kinds.len())];
        let models = &pool[class];
        let model = models[rng.gen_range(0..models.len())].clone();
        let k: f64 = rng.gen_range(0.8..1.1);
        let half = [half[0] * k, half[1] * k, half[2]];
        let x = -side / 2.0 + 1.2 + (ci as f64 + 0.5) * cell + rng.gen_range(-0.15..0.15);
        let y = -side / 2.0 + 1.2 + (cj as f64 + 0.5) * cell + rng.gen_range(-0.15..0.15);
        let yaw = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        scene.objects.push(instance(id, class, [x, y, half[2]], yaw, half, is_static, model));
        id += 1;
    }
    scene
}

/// 6×6 m room with a single 0.9 m door leaf in the middle, hinge at
/// `(-0.47, 0)`, leaf along +x, joint friction 5 N·m.
pub fn door_scene() -> Scene {
    let mut scene = empty_room(6.0, 6.0);
    scene.name = "door".into();
    let model = door_model(0.9, 2.0, 5.0);
    // Native AABB spans x in [-0.02, 0.92]; its center maps to the bbox center.
    scene.objects.push(instance(1, "door", [0.0, 0.0, 1.0], 0.0, [0.47, 0.02, 1.0], true, model));
    scene
}

/// `side`×`side` room with `n` random static box obstacles.
pub fn obstacle_world(seed: u64, n: usize, side: f64) -> Scene {
    let (room, walls) = rect_room(1, [0.0, 0.0], [side, side]);
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, "obstacles"));
    let objects = (0..n)
        .map(|i| {
            let half = [rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0), 0.5];
            let center = [rng.gen_range(0.0..side), rng.gen_range(0.0..side), 0.5];
            let yaw = rng.gen_range(0.0..std::f64::consts::PI);
            instance(i as u32 + 1, "box", center, yaw, half, true, box_model("pine"))
        })
        .collect();
    Scene { name: format!("obstacles_{seed}"), seed, rooms: vec![room], walls, objects, lights: default_lights(), materials: default_materials() }
}
