use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use homesim::bench::run_bench;
use homesim::env::{run_episodes, sample_camera_poses, sample_pushes, write_results, EnvConfig};
use homesim::hash::sub_seed;
use homesim::physics::{PhysicsConfig, RobotSpec, World};
use homesim::randomize::{randomize, RandomizationSpec};
use homesim::render::PresetName;
use homesim::scene::procedural::{default_asset_pool, furnished_room};
use homesim::scene::{import_floorplan, load_scene, resolve_overlaps, save_scene, scene_hash, scene_stats, Floorplan};
use homesim::teleop::{replay as replay_demo, serve as serve_session, DemoLog, Session};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::failure::Failure;
use crate::{Axis, BenchArgs, PushArgs, ReplayArgs, RunArgs, SceneCommand, ServeArgs};

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::io(path, e))
}

pub fn run(a: &RunArgs) -> Result<(), Failure> {
    let config = EnvConfig::load(&a.config)?;
    let records = run_episodes(&config, a.n, a.seed, a.parallel.max(1))?;
    match write_results(&a.out, &config, a.seed, &records)? {
        Some(s) => println!("episodes {} success_rate {:.4} spl {:.4}", s.episodes, s.success_rate, s.spl),
        None => println!("episodes 0"),
    }
    Ok(())
}

pub fn bench(a: &BenchArgs) -> Result<(), Failure> {
    let scene = match &a.scene {
        Some(p) => load_scene(p)?,
        None => furnished_room(50, 0),
    };
    let presets: Vec<PresetName> = if a.preset.is_empty() {
        vec![PresetName::VisualRL, PresetName::HighFidelity]
    } else {
        a.preset.iter().map(|p| (*p).into()).collect()
    };
    let report = run_bench(&scene, &presets, a.steps)?;
    print!("{}", report.table());
    if let Some(out) = &a.out {
        write(out, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    }
    Ok(())
}

pub fn scene(c: &SceneCommand) -> Result<(), Failure> {
    match c {
        SceneCommand::Validate { scene } => {
            load_scene(scene)?;
            println!("OK");
        }
        SceneCommand::Import { floorplan, out, no_resolve } => {
            let plan: Floorplan = serde_json::from_str(&read(floorplan)?).map_err(|e| Failure::Validation(format!("{}: {e}", floorplan.display())))?;
            let (mut scene, report) = import_floorplan(&plan, &default_asset_pool())?;
            for (id, class) in &report.skipped {
                println!("skipped {id} {class}: no model");
            }
            if !no_resolve {
                let (resolved, overlaps) = resolve_overlaps(&scene);
                scene = resolved;
                for (removed, kept, f) in &overlaps.removed {
                    println!("removed {removed}: overlaps {kept} by {:.0}%", f * 100.0);
                }
                for (id, s) in &overlaps.shrunk {
                    println!("shrunk {id} by {:.0}%", s * 100.0);
                }
                for (x, y, f) in &overlaps.flagged {
                    println!("flagged {x} {y}: {:.0}% overlap remains", f * 100.0);
                }
            }
            scene.validate().map_err(|e| Failure::Validation(e.to_string()))?;
            save_scene(&scene, out)?;
            println!("objects {}", scene.objects.len());
        }
        SceneCommand::Randomize { scene, seed, axes, out } => {
            let input = load_scene(scene)?;
            let spec = RandomizationSpec {
                seed: *seed,
                randomize_materials: axes.contains(&Axis::Materials),
                randomize_objects: axes.contains(&Axis::Objects),
                randomize_dynamics: axes.contains(&Axis::Dynamics),
                ..Default::default()
            };
            let (randomized, report) = randomize(&input, &spec)?;
            for m in &report.missing_pools {
                log::warn!("no material pool: {m:?}");
            }
            for (id, class) in &report.missing_classes {
                log::warn!("object {id}: no models for class {class}");
            }
            save_scene(&randomized, out)?;
            println!("scene_hash {:016x}", scene_hash(&randomized));
        }
        SceneCommand::Stats { scene, json } => {
            let stats = scene_stats(&load_scene(scene)?);
            if *json {
                println!("{}", serde_json::to_string(&stats).expect("stats serialize"));
            } else {
                println!("object_count {}", stats.object_count);
                println!("room_count {}", stats.room_count);
                println!("objects_per_room {:?}", stats.objects_per_room);
                for (class, n) in &stats.class_histogram {
                    println!("class {class} {n}");
                }
            }
        }
    }
    Ok(())
}

pub fn pushes(a: &PushArgs) -> Result<(), Failure> {
    let scene = load_scene(&a.scene)?;
    let hash = scene_hash(&scene);
    let world = World::new(Arc::new(scene), RobotSpec::default(), PhysicsConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(a.seed, "pushes"));
    let cameras = sample_camera_poses(&world, a.locations, &mut rng);
    let records = sample_pushes(&world, &cameras, a.per_location, &mut rng);
    let successes = records.iter().filter(|r| r.success).count();

    let io = |e: std::io::Error| Failure::io(&a.out, e);
    let mut f = std::io::BufWriter::new(std::fs::File::create(&a.out).map_err(io)?);
    let header = json!({"header": {"scene_hash": format!("{hash:016x}"), "seed": a.seed, "locations": cameras.len(), "per_location": a.per_location}});
    writeln!(f, "{header}").map_err(io)?;
    for r in &records {
        writeln!(f, "{}", serde_json::to_string(r).expect("record serializes")).map_err(io)?;
    }
    let rate = if records.is_empty() { 0.0 } else { successes as f64 / records.len() as f64 };
    writeln!(f, "{}", json!({"summary": {"pushes": records.len(), "successes": successes, "success_rate": rate}})).map_err(io)?;
    f.flush().map_err(io)?;
    println!("locations {} pushes {} success_rate {rate:.4}", cameras.len(), records.len());
    Ok(())
}

pub fn replay(a: &ReplayArgs) -> Result<(), Failure> {
    let config = EnvConfig::load(&a.config)?;
    let log = DemoLog::load(&a.demo)?;
    let report = replay_demo(&log, &config)?;
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    if report.hash_mismatches > 0 || !report.final_hash_match || report.max_divergence != 0.0 {
        return Err(Failure::Validation(format!("replay diverged at tick {}", report.first_mismatch_tick.unwrap_or(0))));
    }
    Ok(())
}

pub fn serve(a: &ServeArgs) -> Result<(), Failure> {
    let config = EnvConfig::load(&a.config)?;
    if let Some(dir) = &a.demo_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    let session = Session::new(config, a.seed, a.demo_dir.clone())?;
    let handle = serve_session(session, &a.endpoint)?;
    println!("listening on ws://{}", handle.local_addr());
    handle.wait();
    Ok(())
}
