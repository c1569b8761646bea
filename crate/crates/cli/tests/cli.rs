use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use quadkin::angle::format_degrees;
use quadkin::link::decode_frame;
use quadkin::trajectory::read_joint_csv;
use quadkin::{ik_leg, solve_body, BodyPose, FootTarget, LegGeometry, LegId, LegSide, RobotConfig};
use quadkin_service::{export_snapshot, spawn_service, PoseDocument, ServiceOptions, SnapshotFormat};

fn quadkin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadkin")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn solve_prints_the_worked_example() {
    let o = quadkin(&["solve", "--la", "1", "--lb", "1", "--lc", "1", "--x", "0.5", "--y", "1", "--z", "-1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "case=C4 t1=270.000 t2=240.553 t3=112.024\n");
}

#[test]
fn solve_output_matches_the_library_formatting() {
    let g = LegGeometry::default();
    for (x, y, z, side) in [
        (0.03, 0.02, -0.14, "right"),
        (-0.05, -0.06, -0.11, "left"),
        (0.0, 0.1, 0.09, "right"),
        (0.07, -0.12, 0.05, "left"),
    ] {
        let o = quadkin(&["solve", "--side", side, "--x", &x.to_string(), "--y", &y.to_string(), "--z", &z.to_string()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let a = ik_leg(&FootTarget::new(x, y, z), &g, side.parse::<LegSide>().unwrap()).unwrap();
        let want = format!(
            " t1={} t2={} t3={}\n",
            format_degrees(a.theta1),
            format_degrees(a.theta2),
            format_degrees(a.theta3)
        );
        assert!(stdout(&o).ends_with(&want), "{} vs {want}", stdout(&o));
    }
}

#[test]
fn solve_handles_full_extension_and_radians() {
    let o = quadkin(&["solve", "--la", "0", "--x", "0", "--y", "0", "--z", "-0.2"]);
    assert!(stdout(&o).contains(" t3=0.000"), "{}", stdout(&o));
    let o = quadkin(&["solve", "--la", "1", "--lb", "1", "--lc", "1", "--x", "0.5", "--y", "1", "--z", "-1", "--radians"]);
    assert_eq!(stdout(&o), "case=C4 t1=4.712389 t2=4.198440 t3=1.955193\n");
}

#[test]
fn exit_codes_separate_domain_and_usage_failures() {
    let o = quadkin(&["solve", "--x", "0.1", "--y", "0", "--z", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("degenerate"), "{}", stderr(&o));

    let o = quadkin(&["solve", "--x", "0.5", "--y", "0", "--z", "-0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("planar"), "{}", stderr(&o));

    for args in [
        &["solve", "--x", "abc", "--y", "0", "--z", "0"][..],
        &["solve", "--x", "0"],
        &["solve", "--side", "left", "--leg", "FL", "--x", "0", "--y", "0", "--z", "-0.1"],
        &["pose", "--config", "robot.toml", "--la", "0.1"],
        &["pose", "--order", "abc"],
        &["sweep", "--axis", "roll", "--from", "10", "--to", "-10"],
        &["sweep", "--axis", "roll", "--from", "-200", "--to", "0"],
        &["traj", "--points-per-edge", "0"],
        &["solve", "--lb", "-1", "--x", "0", "--y", "0", "--z", "-0.1"],
        &["frobnicate"],
    ] {
        let o = quadkin(args);
        assert_eq!(o.status.code(), Some(64), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(quadkin(&["--help"]).status.code(), Some(0));
}

#[test]
fn pose_matches_solve_body() {
    let o = quadkin(&["pose", "--roll", "10", "--pitch", "-5", "--yaw", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let config = RobotConfig::default();
    let sol = solve_body(&BodyPose::from_degrees(10.0, -5.0, 3.0), &config).unwrap();
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("leg,x,y,z,t1,t2,t3"));
    for (line, leg) in lines.zip(LegId::ALL) {
        let s = &sol.per_leg[leg.index()];
        let a = s.angles;
        let want = format!(
            "{leg},{},{},{},{},{},{}",
            s.target.x,
            s.target.y,
            s.target.z,
            format_degrees(a.theta1),
            format_degrees(a.theta2),
            format_degrees(a.theta3)
        );
        assert_eq!(line, want);
    }
}

#[test]
fn sweep_reports_rows_and_failures() {
    let o = quadkin(&["sweep", "--axis", "roll", "--from", "-28", "--to", "28", "--step", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 58);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(3) == Some("true")));
    assert!(stderr(&o).contains("57 poses, 0 failures"), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wide.csv");
    let o = quadkin(&["sweep", "--axis", "roll", "--from", "-90", "--to", "90", "--step", "5", "-o", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 37);
    let failed = rows.iter().filter(|r| &r[3] == "false").count();
    assert!(failed > 0);
    assert!(rows.iter().filter(|r| &r[3] == "false").all(|r| r[16].contains("unreachable")));
    assert!(stderr(&o).contains(&format!("37 poses, {failed} failures")), "{}", stderr(&o));

    let o = quadkin(&["sweep", "--axis", "pitch", "--from", "-3", "--to", "2", "--step", "10"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("0,-3,0,true,"));
}

#[test]
fn traj_writes_the_corner_rectangle() {
    let o = quadkin(&["traj", "--points-per-edge", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("t,x,y,z"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn traj_then_send_delivers_every_frame() {
    let dir = tempfile::tempdir().unwrap();
    let waypoints = dir.path().join("wp.csv");
    let joints = dir.path().join("joints.csv");
    let wire = dir.path().join("wire.txt");
    let o = quadkin(&[
        "traj", "--leg", "RL", "--points-per-edge", "4",
        "--waypoints", waypoints.to_str().unwrap(),
        "--joints", joints.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("16 waypoints"), "{}", stderr(&o));

    let o = quadkin(&[
        "send", "--joints", joints.to_str().unwrap(), "--leg", "RL", "--rate-hz", "1000",
        "--output", wire.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stderr(&o).trim(), "sent 16 frames");

    let recorded = read_joint_csv(std::fs::File::open(&joints).unwrap()).unwrap();
    let text = std::fs::read_to_string(&wire).unwrap();
    assert_eq!(text.lines().count(), recorded.len());
    for (line, (_, angles)) in text.split_inclusive('\n').zip(&recorded) {
        let f = decode_frame(line).unwrap();
        assert_eq!(f.leg, LegId::RL);
        let want = [angles.theta1, angles.theta2, angles.theta3].map(format_degrees);
        let got = f.degrees().map(|d| format!("{d:.3}"));
        assert_eq!(got, want, "{line}");
    }
}

#[test]
fn send_and_traj_report_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let o = quadkin(&["send", "--joints", missing.to_str().unwrap(), "--leg", "FL", "--output", "-"]);
    assert_eq!(o.status.code(), Some(74));

    let garbage = dir.path().join("garbage.csv");
    std::fs::write(&garbage, "t,theta1,theta2,theta3\n0,x,1,2\n").unwrap();
    let o = quadkin(&["send", "--joints", garbage.to_str().unwrap(), "--leg", "FL", "--output", "-"]);
    assert_eq!(o.status.code(), Some(65));

    let o = quadkin(&["send", "--joints", garbage.to_str().unwrap(), "--leg", "FL"]);
    assert_eq!(o.status.code(), Some(64), "a sink is required");

    let unwritable = dir.path().join("no/such/dir/wp.csv");
    let o = quadkin(&["traj", "--waypoints", unwritable.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(74));

    let o = quadkin(&["traj", "--width", "0.5", "--height", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

fn saved_snapshot(dir: &Path) -> (std::path::PathBuf, [quadkin::link::AngleFrame; 4]) {
    let runtime = tokio::runtime::Runtime::new().unwrap();
    let payload = runtime.block_on(async {
        let h = spawn_service(RobotConfig::default(), ServiceOptions::default(), None).unwrap();
        let doc = PoseDocument { roll: 8.0, yaw: -4.0, ..PoseDocument::neutral(h.robot()) };
        h.pose(doc).await.unwrap()
    });
    let path = dir.join("snap.csv");
    export_snapshot(&payload, SnapshotFormat::Csv, std::fs::File::create(&path).unwrap()).unwrap();
    (path, payload.frames())
}

#[test]
fn replay_emits_the_snapshot_frames() {
    let dir = tempfile::tempdir().unwrap();
    let (path, frames) = saved_snapshot(dir.path());
    let o = quadkin(&["replay", "--snapshot", path.to_str().unwrap(), "--rate-hz", "1000", "--output", "-"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    assert_eq!(lines.len(), 4);
    for (line, want) in lines.iter().zip(&frames) {
        let got = decode_frame(line).unwrap();
        assert_eq!(got.leg, want.leg);
        assert_eq!(got.degrees().map(|d| format!("{d:.3}")), want.degrees().map(|d| format!("{d:.3}")));
    }
}

/// Kills the child when the test ends, pass or fail.
struct Server(std::process::Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn serve_answers_state_with_the_neutral_pose() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_quadkin"))
        .args(["serve", "--listen", "127.0.0.1:0"])
        .env_remove("QUADKIN_SERIAL_PATH")
        .env_remove("QUADKIN_LISTEN")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let out = child.stdout.take().unwrap();
    let server = Server(child);
    let mut first = String::new();
    BufReader::new(out).read_line(&mut first).unwrap();
    let addr = first.trim().strip_prefix("listening on ").expect(&first).to_owned();

    let mut stream = TcpStream::connect(&addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    write!(stream, "GET /state HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    let body = &response[response.find("\r\n\r\n").unwrap() + 4..];
    let state: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(state["epoch"], 0);
    assert_eq!(
        state["pose"],
        serde_json::json!({"roll": 0.0, "pitch": 0.0, "yaw": 0.0, "x": 0.0, "y": 0.0, "z": -0.15})
    );
    drop(server);
}
