use std::collections::BTreeMap;
use std::sync::Arc;

use homesim::physics::{PhysicsConfig, RobotSpec, World};
use homesim::randomize::*;
use homesim::scene::procedural::{box_model, empty_room, furnished_room, instance, sink_model, table_model};
use homesim::scene::{scene_hash, ArticulatedObject, Scene};
use proptest::prelude::*;

fn spec(seed: u64, materials: bool, objects: bool, dynamics: bool) -> RandomizationSpec {
    RandomizationSpec { seed, randomize_materials: materials, randomize_objects: objects, randomize_dynamics: dynamics, ..Default::default() }
}

/// `n` single-link oak boxes.
fn wooden_scene(n: usize) -> Scene {
    let mut s = empty_room(30.0, 30.0);
    for i in 0..n {
        let x = -12.0 + (i % 10) as f64 * 2.5;
        let y = -12.0 + (i / 10) as f64 * 2.5;
        s.objects.push(instance(i as u32 + 1, "box", [x, y, 0.25], 0.0, [0.25, 0.25, 0.25], false, box_model("oak")));
    }
    s
}

fn assignment(s: &Scene) -> Vec<String> {
    s.objects.iter().flat_map(|o| o.model.links.iter().map(|l| l.material.clone())).collect()
}

#[test]
fn material_draw_is_reproducible() {
    let scene = wooden_scene(1);
    let a = randomize_materials(&scene, &spec(7, true, false, false)).0;
    let b = randomize_materials(&scene, &spec(7, true, false, false)).0;
    assert_eq!(assignment(&a), assignment(&b));
    assert!(["oak", "pine", "walnut"].contains(&assignment(&a)[0].as_str()));
    assert_eq!(a.objects[0].bbox, scene.objects[0].bbox);
}

#[test]
fn singleton_pool_is_identity() {
    let scene = wooden_scene(5);
    let mut sp = spec(3, true, false, false);
    let oak = sp.material_pools["wood"].iter().find(|m| m.name == "oak").unwrap().clone();
    sp.material_pools.insert("wood".into(), vec![oak]);
    assert_eq!(randomize_materials(&scene, &sp).0, scene);
}

#[test]
fn different_seeds_differ_on_fifty_links() {
    // All 50 draws coincide with probability 3^-50.
    let scene = wooden_scene(50);
    let a = assignment(&randomize_materials(&scene, &spec(1, true, false, false)).0);
    let b = assignment(&randomize_materials(&scene, &spec(2, true, false, false)).0);
    assert!(a.iter().zip(&b).filter(|(x, y)| x != y).count() > 0);
}

#[test]
fn material_draws_are_uniform() {
    // 3000 draws over a pool of 3: each count is Binomial(3000, 1/3) with
    // standard deviation ~25.8; allow 5 sigma.
    let scene = wooden_scene(100);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for seed in 0..30 {
        for m in assignment(&randomize_materials(&scene, &spec(seed, true, false, false)).0) {
            *counts.entry(m).or_default() += 1;
        }
    }
    assert_eq!(counts.len(), 3);
    for c in counts.values() {
        assert!((*c as f64 - 1000.0).abs() < 5.0 * 25.82, "{counts:?}");
    }
}

#[test]
fn missing_family_reported_and_link_kept() {
    let scene = wooden_scene(2);
    let mut sp = spec(1, true, false, false);
    sp.material_pools.remove("wood");
    let (out, report) = randomize_materials(&scene, &sp);
    assert_eq!(out, scene);
    assert_eq!(report.missing_pools.len(), 2);
    assert_eq!(report.missing_pools[0], MissingPool { object: 1, link: 0, family: "wood".into() });
}

#[test]
fn object_swap_reproducible_and_sink_kept() {
    let mut scene = empty_room(6.0, 6.0);
    scene.objects.push(instance(1, "table", [0.0, 0.0, 0.375], 0.3, [0.5, 0.35, 0.375], false, table_model()));
    scene.objects.push(instance(2, "sink", [2.0, 2.0, 0.45], 0.0, [0.3, 0.25, 0.45], true, sink_model()));
    let mut sp = spec(11, false, true, false);
    let tables: Vec<ArticulatedObject> = sp.asset_pool["table"].clone();
    assert_eq!(tables.len(), 3);
    sp.asset_pool.remove("sink");
    let (a, report) = randomize_objects(&scene, &sp).unwrap();
    let (b, _) = randomize_objects(&scene, &sp).unwrap();
    assert_eq!(a, b);
    assert!(tables.contains(&a.objects[0].model));
    assert_eq!(a.objects[1], scene.objects[1]);
    assert_eq!(report.missing_classes, vec![(2, "sink".to_string())]);
    for (x, y) in a.objects.iter().zip(&scene.objects) {
        assert_eq!((x.id, &x.class_label, x.bbox, x.is_static), (y.id, &y.class_label, y.bbox, y.is_static));
    }
    a.validate().unwrap();
}

#[test]
fn oak_friction_within_jitter_band() {
    let scene = wooden_scene(40);
    let out = randomize_dynamics(&scene, &spec(5, false, false, true));
    for o in &out.objects {
        let mu = o.model.links[0].friction.unwrap();
        assert!((0.32..=0.5).contains(&mu), "{mu}");
        let rho = o.model.links[0].density.unwrap();
        assert!((560.0..=875.0).contains(&rho), "{rho}");
    }
    assert_eq!(out, randomize_dynamics(&scene, &spec(5, false, false, true)));
}

#[test]
fn mass_ratio_equals_density_ratio() {
    let scene = furnished_room(20, 4);
    let out = randomize_dynamics(&scene, &spec(9, false, false, true));
    for (before, after) in scene.objects.iter().zip(&out.objects) {
        for li in 0..before.model.links.len() {
            let vol = before.link_volume(li);
            assert_eq!(vol, after.link_volume(li));
            let rho_before = before.link_mass(li, &scene.materials) / vol;
            let rho_after = after.model.links[li].density.unwrap();
            let ratio = after.link_mass(li, &out.materials) / before.link_mass(li, &scene.materials);
            assert!((ratio - rho_after / rho_before).abs() < 1e-9);
        }
    }
}

#[test]
fn axes_use_independent_streams() {
    let scene = furnished_room(15, 2);
    let only = randomize(&scene, &spec(4, true, false, false)).unwrap().0;
    let both = randomize(&scene, &spec(4, true, false, true)).unwrap().0;
    assert_eq!(assignment(&only), assignment(&both));
}

#[test]
fn randomized_scene_still_simulates() {
    let scene = randomize(&furnished_room(15, 2), &spec(8, true, true, true)).unwrap().0;
    let world = World::new(Arc::new(scene), RobotSpec::default(), PhysicsConfig::default());
    assert!(!world.snapshot().prims.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn invariants_hold(seed: u64, m: bool, o: bool, d: bool, layout in 0u64..4) {
        let scene = furnished_room(12, layout);
        let sp = spec(seed, m, o, d);
        let (out, _) = randomize(&scene, &sp).unwrap();
        prop_assert_eq!(out.objects.len(), scene.objects.len());
        for (x, y) in out.objects.iter().zip(&scene.objects) {
            prop_assert_eq!(x.id, y.id);
            prop_assert_eq!(&x.class_label, &y.class_label);
            prop_assert_eq!(x.bbox, y.bbox);
            if !o {
                let topo = |a: &ArticulatedObject| (a.links.len(), a.joints.iter().map(|j| (j.kind, j.parent, j.child)).collect::<Vec<_>>());
                prop_assert_eq!(topo(&x.model), topo(&y.model));
            }
        }
        prop_assert!(out.validate().is_ok());
        let again = randomize(&scene, &sp).unwrap().0;
        prop_assert_eq!(scene_hash(&out), scene_hash(&again));
    }
}
