use std::f64::consts::FRAC_PI_2;
use std::net::TcpStream;
use std::time::{Duration, Instant};

use homesim::env::{EnvConfig, TaskKind};
use homesim::geometry::SurfaceKind;
use homesim::math::Vec3;
use homesim::physics::{apply_push, BasePose, RobotState};
use homesim::scene::procedural::{door_scene, empty_room};
use homesim::teleop::*;
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

fn config(scene: homesim::scene::Scene) -> EnvConfig {
    let mut cfg = EnvConfig::new(scene, TaskKind::PointGoal);
    cfg.task.params.min_distance = 0.5;
    cfg
}

fn session() -> Session {
    Session::new(config(empty_room(8.0, 8.0)), 3, None).unwrap()
}

fn is_ack(m: &ServerMessage) -> bool {
    matches!(m, ServerMessage::Ack { .. })
}

fn error_code(m: &ServerMessage) -> Option<&str> {
    match m {
        ServerMessage::Error { code, .. } => Some(code),
        _ => None,
    }
}

#[test]
fn wire_examples_parse() {
    let examples = [
        r#"{"type":"cmd_drive","forward":0.5,"turn":-1}"#,
        r#"{"type":"cmd_click","u":10,"v":20,"mode":"push"}"#,
        r#"{"type":"cmd_click","u":10,"v":20,"mode":"place"}"#,
        r#"{"type":"cmd_gripper","open":true}"#,
        r#"{"type":"record_start"}"#,
        r#"{"type":"record_stop"}"#,
        r#"{"type":"reset","seed":4}"#,
        r#"{"type":"randomize","axes":["materials","objects","dynamics"]}"#,
        r#"{"type":"hello"}"#,
        r#"{"type":"cmd_mode","mode":"rgbd"}"#,
    ];
    for e in examples {
        let m: ClientMessage = serde_json::from_str(e).unwrap_or_else(|err| panic!("{e}: {err}"));
        let back: ClientMessage = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(m, back);
    }
    let ack = ServerMessage::Ack { tick: 3, command: "cmd_drive".into(), detail: AckDetail::default() };
    assert_eq!(ack.to_text(), r#"{"type":"ack","tick":3,"command":"cmd_drive"}"#);
    let err: serde_json::Value = serde_json::from_str(&ServerMessage::error("out_of_view", "x").to_text()).unwrap();
    assert_eq!(err["type"], "error");
    assert_eq!(err["code"], "out_of_view");
}

#[test]
fn every_message_gets_one_reply() {
    let mut s = session();
    let cases = [
        ("not json", false),
        (r#"{"type":"warp"}"#, false),
        (r#"{"type":"cmd_drive","forward":1}"#, false),
        (r#"{"type":"cmd_drive","forward":1,"turn":0}"#, true),
        (r#"{"type":"record_stop"}"#, false),
        (r#"{"type":"record_start"}"#, true),
        (r#"{"type":"record_start"}"#, false),
        (r#"{"type":"record_stop"}"#, true),
        (r#"{"type":"cmd_click","u":-1,"v":0,"mode":"push"}"#, false),
        (r#"{"type":"cmd_mode","mode":"rgbd"}"#, true),
    ];
    for (text, ok) in cases {
        let reply = s.handle_text(text);
        assert_eq!(is_ack(&reply), ok, "{text}: {reply:?}");
        assert_eq!(error_code(&reply).is_some(), !ok);
    }
    assert_eq!(error_code(&s.handle_text("{")), Some("malformed"));
    // Still alive.
    assert!(matches!(s.tick().unwrap(), ServerMessage::Frame { depth: Some(_), .. }));
}

#[test]
fn drive_maps_to_max_velocity() {
    let mut s = session();
    assert!(is_ack(&s.handle_text(r#"{"type":"cmd_drive","forward":1,"turn":0}"#)));
    s.tick().unwrap();
    assert_eq!(s.env().robot().velocity, (1.0, 0.0));
    s.handle_text(r#"{"type":"cmd_drive","forward":-3,"turn":0.5}"#);
    s.tick().unwrap();
    assert_eq!(s.env().robot().velocity, (-1.0, 0.5 * std::f64::consts::PI));
}

#[test]
fn later_drive_commands_win() {
    let mut s = session();
    s.handle_text(r#"{"type":"cmd_drive","forward":1,"turn":0}"#);
    s.handle_text(r#"{"type":"cmd_drive","forward":0.25,"turn":0}"#);
    s.tick().unwrap();
    assert_eq!(s.env().robot().velocity.0, 0.25);
}

#[test]
fn idle_second_is_twenty_stationary_ticks() {
    let mut s = session();
    let start = s.env().robot().base;
    for i in 1..=20 {
        let ServerMessage::Frame { tick, .. } = s.tick().unwrap() else { panic!() };
        assert_eq!(tick, i);
    }
    assert_eq!(s.env().robot().base, start);
    assert!((s.env().sim_time() - 1.0).abs() < 1e-12);
}

#[test]
fn drive_decays_without_renewal() {
    let mut s = session();
    s.handle_text(r#"{"type":"cmd_drive","forward":0.5,"turn":0}"#);
    for _ in 0..DRIVE_HOLD_TICKS {
        s.tick().unwrap();
        assert_eq!(s.env().robot().velocity.0, 0.5);
    }
    s.tick().unwrap();
    assert_eq!(s.env().robot().velocity.0, 0.0);
}

#[test]
fn click_on_background_is_out_of_view() {
    let mut scene = empty_room(6.0, 6.0);
    scene.walls.clear();
    scene.rooms[0].ceiling_z = None;
    let mut s = Session::new(config(scene), 0, None).unwrap();
    let f = s.current_frame();
    assert_eq!(f.depth[f.index(64, 0)], 0.0);
    assert_eq!(error_code(&s.handle_text(r#"{"type":"cmd_click","u":64,"v":0,"mode":"push"}"#)), Some("out_of_view"));
    assert_eq!(error_code(&s.handle_text(r#"{"type":"cmd_click","u":500,"v":3,"mode":"pick"}"#)), Some("out_of_view"));
}

/// Session whose robot stands 1.5 m in front of the door leaf, looking at it.
fn door_session() -> Session {
    let mut s = Session::new(config(door_scene()), 1, None).unwrap();
    let mut state = s.env().state().clone();
    state.robot = Some(RobotState::at(BasePose::new(0.2, -1.5, FRAC_PI_2), &s.env().config().robot.arm));
    s.set_state(state).unwrap();
    s
}

#[test]
fn push_click_matches_direct_push() {
    let mut s = door_session();
    let frame = s.current_frame().clone();
    let cam = s.env().camera();
    // A leaf pixel within 10 cm of the free edge.
    let (u, v) = (0..frame.height)
        .flat_map(|v| (0..frame.width).map(move |u| (u, v)))
        .find(|&(u, v)| {
            let i = frame.index(u, v);
            frame.surface[i] == Some(SurfaceKind::Link { object: 1, link: 1 })
                && cam.unproject(u as f64 + 0.5, v as f64 + 0.5, f64::from(frame.depth[i])).x >= 0.37
        })
        .expect("edge pixel visible");
    let i = frame.index(u, v);
    let point = cam.unproject(u as f64 + 0.5, v as f64 + 0.5, f64::from(frame.depth[i]));
    let normal = Vec3::from(frame.normals[i].map(f64::from));
    let (_, direct) = apply_push(s.env().world(), s.env().state(), point, -normal, 60.0, 0.30).unwrap();
    let reply = s.handle_text(&format!(r#"{{"type":"cmd_click","u":{u},"v":{v},"mode":"push"}}"#));
    let ServerMessage::Ack { detail, .. } = reply else { panic!("{reply:?}") };
    let pushed = detail.push.unwrap();
    assert!(direct.moved && pushed.moved);
    assert_eq!(pushed.target, direct.target);
    assert!((pushed.displacement - direct.displacement).abs() < 1e-3, "{} vs {}", pushed.displacement, direct.displacement);
    // Torque balance: lever ≥ 0.82 m gives Δq = 0.3/lever and chord 2·lever·sin(Δq/2).
    let lever = point.x + 0.45;
    let chord = 2.0 * lever * (0.15 / lever).sin();
    assert!((pushed.displacement - chord).abs() < 0.01, "{} vs {chord}", pushed.displacement);
    let q = s.env().state().joint_positions[&(1, 0)];
    assert!(q.abs() > 0.2);
}

fn record_session(ticks: usize) -> (Session, DemoLog) {
    let mut s = Session::new(config(door_scene()), 1, None).unwrap();
    assert!(is_ack(&s.handle_text(r#"{"type":"record_start"}"#)));
    let frame = s.current_frame().clone();
    let (u, v) = (frame.width / 2, frame.height / 2);
    for t in 0..ticks {
        match t % 17 {
            0 => {
                s.handle_text(r#"{"type":"cmd_drive","forward":0.4,"turn":0.3}"#);
            }
            5 => {
                s.handle_text(r#"{"type":"cmd_drive","forward":-0.2,"turn":-1}"#);
            }
            9 if t < 17 => {
                assert!(is_ack(&s.handle_text(&format!(r#"{{"type":"cmd_click","u":{u},"v":{v},"mode":"push"}}"#))));
            }
            12 => {
                s.handle_text(r#"{"type":"cmd_gripper","open":false}"#);
            }
            _ => {}
        }
        s.tick().unwrap();
    }
    let reply = s.handle_text(r#"{"type":"record_stop"}"#);
    let ServerMessage::Ack { detail, .. } = reply else { panic!("{reply:?}") };
    assert_eq!(detail.demo_ticks, Some(ticks));
    let log = s.demos().last().unwrap().clone();
    (s, log)
}

#[test]
fn recorded_demo_replays_exactly() {
    let (s, log) = record_session(100);
    assert_eq!(log.header.tick_rate_hz, 20);
    assert!(log.records.windows(2).all(|w| w[1].tick == w[0].tick + 1));
    assert!(log.records.iter().any(|r| !r.action.events.is_empty()));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("demo.jsonl");
    log.save(&path).unwrap();
    let loaded = DemoLog::load(&path).unwrap();
    assert_eq!(loaded, log);
    let report = replay(&loaded, s.config()).unwrap();
    assert_eq!(report.ticks, log.records.len());
    assert_eq!(report.max_divergence, 0.0);
    assert_eq!(report.hash_mismatches, 0);
    assert!(report.final_hash_match);
    assert_eq!(log.records.last().unwrap().state_hash, format!("{:016x}", s.env().state().state_hash()));
}

#[test]
fn replay_guards() {
    let (s, log) = record_session(20);
    let other = config(empty_room(8.0, 8.0));
    assert!(matches!(replay(&log, &other), Err(TeleopError::ConfigMismatch { .. })));

    let mut text = Vec::new();
    log.write(&mut text).unwrap();
    let text = String::from_utf8(text).unwrap();
    let wrong_rate = text.replacen("\"tick_rate_hz\":20", "\"tick_rate_hz\":30", 1);
    assert!(matches!(DemoLog::read(wrong_rate.as_bytes()), Err(TeleopError::CorruptLog(_))));
    let mut lines: Vec<&str> = text.lines().collect();
    lines.swap(3, 4);
    assert!(matches!(DemoLog::read(lines.join("\n").as_bytes()), Err(TeleopError::CorruptLog(_))));
    assert!(matches!(DemoLog::read("garbage\n".as_bytes()), Err(TeleopError::CorruptLog(_))));
    assert!(matches!(DemoLog::read("".as_bytes()), Err(TeleopError::CorruptLog(_))));
    // A tampered action shows up as divergence.
    let mut tampered = log.clone();
    tampered.records[2].action.action = homesim::env::Action::Base { linear: 0.9, angular: 0.0 };
    let report = replay(&tampered, s.config()).unwrap();
    assert!(report.hash_mismatches > 0 && report.max_divergence > 0.0);
}

#[test]
fn randomize_and_reset_restart_episode() {
    let mut s = session();
    for _ in 0..3 {
        s.tick().unwrap();
    }
    let ServerMessage::Ack { detail, .. } = s.handle_text(r#"{"type":"randomize","axes":["materials"]}"#) else { panic!() };
    let seed = detail.seed.unwrap();
    assert_eq!(s.seed(), seed);
    assert_eq!(s.tick_count(), 0);
    assert!(s.config().randomization.randomize_materials && !s.config().randomization.randomize_objects);
    assert!(is_ack(&s.handle_text(r#"{"type":"reset","seed":9}"#)));
    assert_eq!((s.seed(), s.tick_count()), (9, 0));
}

type Client = WebSocket<MaybeTlsStream<TcpStream>>;

fn connect(addr: std::net::SocketAddr) -> Client {
    let (ws, _) = tungstenite::connect(format!("ws://{addr}")).unwrap();
    ws
}

fn next_json(ws: &mut Client) -> serde_json::Value {
    loop {
        if let Message::Text(t) = ws.read().unwrap() {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

#[test]
fn socket_session() {
    let mut server = serve(session(), "127.0.0.1:0").unwrap();
    let addr = server.local_addr();
    let mut a = connect(addr);
    let hello = next_json(&mut a);
    assert_eq!((hello["type"].as_str(), hello["tick_rate_hz"].as_u64()), (Some("hello"), Some(20)));

    // Idle for 20 frames: consecutive ticks, about a second, no motion.
    let start = server.session().lock().unwrap().env().robot().base;
    let t0 = Instant::now();
    let mut ticks = vec![];
    while ticks.len() < 20 {
        let m = next_json(&mut a);
        assert_eq!(m["type"], "frame");
        assert!(!m["rgb"].as_str().unwrap().is_empty());
        ticks.push(m["tick"].as_u64().unwrap());
    }
    let secs = t0.elapsed().as_secs_f64();
    println!("20 frames in {secs:.3} s");
    assert!(ticks.windows(2).all(|w| w[1] == w[0] + 1), "{ticks:?}");
    assert!((0.8..2.0).contains(&secs), "{secs}");
    assert_eq!(server.session().lock().unwrap().env().robot().base, start);

    // A second client is turned away; the first keeps streaming.
    let mut b = connect(addr);
    let busy = next_json(&mut b);
    assert_eq!((busy["type"].as_str(), busy["code"].as_str()), (Some("error"), Some("session_busy")));

    // Malformed input gets an error and the session continues.
    a.send(Message::text("{oops")).unwrap();
    a.send(Message::text(r#"{"type":"record_start"}"#)).unwrap();
    let mut replies = vec![];
    let mut frames_after = 0;
    while replies.len() < 2 || frames_after < 3 {
        let m = next_json(&mut a);
        match m["type"].as_str().unwrap() {
            "frame" if replies.len() == 2 => frames_after += 1,
            "frame" => {}
            _ => replies.push(m),
        }
    }
    assert_eq!(replies[0]["code"], "malformed");
    assert_eq!((replies[1]["type"].as_str(), replies[1]["command"].as_str()), (Some("ack"), Some("record_start")));

    // Disconnecting while recording finalizes the demo.
    a.close(None).unwrap();
    while a.read().is_ok() {}
    let deadline = Instant::now() + Duration::from_secs(3);
    while server.session().lock().unwrap().demos().is_empty() && Instant::now() < deadline {
        std::thread::sleep(Duration::from_millis(20));
    }
    assert_eq!(server.session().lock().unwrap().demos().len(), 1);
    assert!(!server.session().lock().unwrap().is_recording());

    // The slot is free again.
    let mut c = connect(addr);
    assert_eq!(next_json(&mut c)["type"], "hello");
    server.stop();
}

#[test]
fn bind_error_reported() {
    let first = serve(session(), "127.0.0.1:0").unwrap();
    let taken = first.local_addr().to_string();
    assert!(matches!(serve(session(), &taken), Err(TeleopError::Bind(_))));
}
