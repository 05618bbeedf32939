use std::sync::Arc;

use homesim::geometry::Snapshot;
use homesim::math::{Placement, Vec3};
use homesim::physics::{PhysicsConfig, RobotSpec, World};
use homesim::render::shading::specular_term;
use homesim::render::*;
use homesim::scene::procedural::{box_model, empty_room, furnished_room, instance, table_model};
use homesim::scene::vocab::class_id;
use homesim::scene::{Room, Scene};
use proptest::prelude::*;

fn snapshot(scene: &Scene) -> Snapshot {
    World::new(Arc::new(scene.clone()), RobotSpec::default(), PhysicsConfig::default()).snapshot()
}

fn plain(w: u32, h: u32) -> RenderPreset {
    RenderPreset { width: w, height: h, ..RenderPreset::visual_rl() }
}

#[test]
fn wall_depth_at_center() {
    let scene = empty_room(4.0, 4.0);
    let cam = Camera::new(Vec3::new(0.0, 0.0, 1.25), 0.0, 0.0, 1.0, 65, 65);
    let f = render(&snapshot(&scene), &scene.lights, &cam, &plain(65, 65), None).unwrap();
    let i = f.index(32, 32);
    assert!((f.depth[i] as f64 - 2.0).abs() < 1e-6);
    assert_eq!(f.semantic[i], class_id("wall").unwrap());
    assert_eq!(f.instance[i], 0);
}

#[test]
fn floor_only_normals_point_up() {
    let mut scene = Scene::empty("floor");
    scene.rooms.push(Room { id: 1, name: String::new(), polygon: vec![[-50.0, -50.0], [50.0, -50.0], [50.0, 50.0], [-50.0, 50.0]], floor_z: 0.0, ceiling_z: None });
    let cam = Camera::new(Vec3::new(0.0, 0.0, 1.5), 0.3, -0.6, 1.0, 40, 30);
    let f = render(&snapshot(&scene), &scene.lights, &cam, &plain(40, 30), None).unwrap();
    let mut hits = 0;
    for i in 0..f.len() {
        if f.depth[i] > 0.0 {
            hits += 1;
            assert_eq!(f.normals[i], [0.0, 0.0, 1.0]);
        }
    }
    assert!(hits > f.len() / 2);
}

#[test]
fn instance_and_semantic_ids_propagate() {
    let mut scene = empty_room(6.0, 6.0);
    scene.objects.push(instance(5, "table", [1.5, 0.0, 0.5], 0.0, [0.5, 0.5, 0.5], true, box_model("oak")));
    let cam = Camera::new(Vec3::new(0.0, 0.0, 0.5), 0.0, 0.0, 1.0, 33, 33);
    let f = render(&snapshot(&scene), &scene.lights, &cam, &plain(33, 33), None).unwrap();
    let i = f.index(16, 16);
    assert_eq!(f.instance[i], 5);
    assert_eq!(f.semantic[i], class_id("table").unwrap());
    assert!((f.depth[i] - 1.0).abs() < 1e-6);
}

#[test]
fn frame_invariants_on_furnished_room() {
    let scene = furnished_room(30, 2);
    let snap = snapshot(&scene);
    for preset in [RenderPreset::visual_rl(), RenderPreset { width: 96, height: 96, ..RenderPreset::high_fidelity() }] {
        let cam = Camera::new(Vec3::new(0.2, -0.1, 1.1), 0.8, -0.25, 1.2, preset.width, preset.height);
        let f = render(&snap, &scene.lights, &cam, &preset, None).unwrap();
        let g = render(&snap, &scene.lights, &cam, &preset, None).unwrap();
        assert_eq!(f, g, "bit-exact determinism");
        assert_eq!(f.rgb.len(), f.len());
        assert_eq!(f.normals.len(), f.len());
        assert_eq!(f.optical_flow.len(), f.len());
        for i in 0..f.len() {
            assert!(f.rgb[i].iter().all(|c| (0.0..=1.0).contains(c)));
            if f.depth[i] > 0.0 {
                let n = f.normals[i].map(f64::from);
                assert!(((n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt() - 1.0).abs() < 1e-6);
                let (u, v) = ((i as u32 % f.width) as f64 + 0.5, (i as u32 / f.width) as f64 + 0.5);
                let p = cam.unproject(u, v, f.depth[i] as f64);
                let (pu, pv) = cam.project(&p).unwrap();
                assert!((pu - u).abs() < 0.5 && (pv - v).abs() < 0.5);
            }
        }
    }
}

#[test]
fn shadow_cases() {
    let mut scene = empty_room(6.0, 6.0);
    scene.objects.push(instance(1, "table", [1.0, 1.0, 0.375], 0.0, [0.5, 0.35, 0.375], true, table_model()));
    let snap = snapshot(&scene);
    let up = Vec3::z();
    // Room has a ceiling at 2.5 m, which must not cast shadows.
    assert!(!shadow_test(&Vec3::new(-1.0, -1.0, 0.0), &up, &snap));
    assert!(shadow_test(&Vec3::new(1.0, 1.0, 0.0), &up, &snap));
    assert!(!shadow_test(&Vec3::new(1.0, 1.0, 0.75), &up, &snap));
}

#[test]
fn static_scene_has_zero_flow() {
    let scene = furnished_room(10, 1);
    let snap = snapshot(&scene);
    let cam = Camera::new(Vec3::new(0.0, 0.0, 1.0), 0.4, -0.2, 1.2, 48, 48);
    let f = render(&snap, &scene.lights, &cam, &plain(48, 48), Some(FlowSource { snapshot: &snap, camera: &cam })).unwrap();
    assert!(f.optical_flow.iter().all(|o| o.iter().all(|x| x.abs() < 1e-4)));
    assert!(f.scene_flow.iter().all(|o| o.iter().all(|x| x.abs() < 1e-6)));
}

#[test]
fn camera_translation_matches_pinhole_oracle() {
    let scene = empty_room(40.0, 40.0);
    let snap = snapshot(&scene);
    let (w, h) = (64, 48);
    let old = Camera::new(Vec3::new(0.0, 0.0, 1.25), 0.0, 0.0, 0.4, w, h);
    // Yaw 0: the camera's right is −y.
    let new = Camera { position: [0.0, -0.1, 1.25], ..old };
    let f = render(&snap, &scene.lights, &new, &plain(w, h), Some(FlowSource { snapshot: &snap, camera: &old })).unwrap();
    let fx = w as f64 / 2.0 / ((0.4f64 / 2.0).tan() * w as f64 / h as f64);
    for i in 0..f.len() {
        if f.depth[i] > 0.0 {
            let expected = -0.1 * fx / f.depth[i] as f64;
            assert!((f.optical_flow[i][0] as f64 - expected).abs() < 0.1, "{} vs {expected}", f.optical_flow[i][0]);
            assert!(f.optical_flow[i][1].abs() < 0.1);
        }
    }
}

#[test]
fn moved_object_scene_flow() {
    let mut scene = empty_room(6.0, 6.0);
    scene.objects.push(instance(3, "box", [1.5, 0.0, 0.5], 0.0, [0.3, 0.3, 0.3], false, box_model("pine")));
    let world = World::new(Arc::new(scene.clone()), RobotSpec::default(), PhysicsConfig::default());
    let before = world.snapshot();
    let mut state = world.state.clone();
    state.free_body_poses.insert(3, Placement::new(1.6, 0.0, 0.5, 0.0));
    state.tick = 1;
    let after = world.snapshot_of(&state);
    let cam = Camera::new(Vec3::new(0.0, 0.0, 0.5), 0.0, 0.0, 1.0, 32, 32);
    let f = render(&after, &scene.lights, &cam, &plain(32, 32), Some(FlowSource { snapshot: &before, camera: &cam })).unwrap();
    let mut seen = 0;
    for i in 0..f.len() {
        if f.instance[i] == 3 {
            seen += 1;
            let s = f.scene_flow[i];
            assert!((s[0] - 0.1).abs() < 1e-5 && s[1].abs() < 1e-5 && s[2].abs() < 1e-5, "{s:?}");
        }
    }
    assert!(seen > 0);
}

#[test]
fn raw_and_png_export() {
    let scene = empty_room(4.0, 4.0);
    let cam = Camera::new(Vec3::new(0.0, 0.0, 1.25), 0.0, 0.0, 1.0, 16, 8);
    let f = render(&snapshot(&scene), &scene.lights, &cam, &plain(16, 8), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("depth.raw");
    write_raw_f32(&raw, 8, 16, 1, &f.depth).unwrap();
    let (h, w, c, data) = read_raw_f32(&raw).unwrap();
    assert_eq!((h, w, c), (8, 16, 1));
    assert_eq!(data, f.depth);
    assert_eq!(std::fs::metadata(&raw).unwrap().len(), 16 + 8 * 16 * 4);
    write_png_rgb(&f, &dir.path().join("rgb.png")).unwrap();
    let ids: Vec<u32> = f.semantic.iter().map(|s| *s as u32).collect();
    write_png_ids(&f, &ids, &dir.path().join("sem.png")).unwrap();
    let img = image::open(dir.path().join("rgb.png")).unwrap();
    assert_eq!((img.width(), img.height()), (16, 8));
}

fn unit(x: f64, y: f64, z: f64) -> Vec3 {
    let v = Vec3::new(x, y, z);
    if v.norm() < 1e-3 {
        Vec3::z()
    } else {
        v.normalize()
    }
}

proptest! {
    #[test]
    fn shading_is_bounded(
        albedo in prop::array::uniform3(0.0f64..=1.0), rough in 0.0f64..=1.0, metal in 0.0f64..=1.0,
        n in prop::array::uniform3(-1.0f64..1.0), v in prop::array::uniform3(-1.0f64..1.0), shadowed: bool,
    ) {
        let a = homesim::geometry::Appearance { albedo: Vec3::from(albedo), roughness: rough, metallic: metal };
        let scene = empty_room(4.0, 4.0);
        let c = shade(&Vec3::zeros(), &unit(n[0], n[1], n[2]), &unit(v[0], v[1], v[2]), &a, &scene.lights, shadowed, &ShadingParams { ambient: 0.3, shadows: true });
        prop_assert!(c.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn peak_specular_monotone(r1 in 0.0f64..=1.0, r2 in 0.0f64..=1.0, theta in 0.05f64..1.4) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let v = Vec3::new(theta.sin(), 0.0, theta.cos());
        let l = Vec3::new(-theta.sin(), 0.0, theta.cos());
        let at = |r| specular_term(&Vec3::z(), &v, &l, &homesim::geometry::Appearance { albedo: Vec3::repeat(0.6), roughness: r, metallic: 0.5 });
        prop_assert!(at(hi).x <= at(lo).x);
    }
}
