use std::num::NonZeroUsize;
use std::time::Duration;

use quadkin::angle::to_wrapped_degrees;
use quadkin::link::{decode_frame, MockDevice, WriterConfig};
use quadkin::trajectory::{joint_stream, rect_path, RectTrajectorySpec};
use quadkin::{ik_leg, solve_body, BodyPose, FootTarget, IkStage, JointAngles, LegId, RobotConfig};
use quadkin_service::{
    export_snapshot, import_snapshot, spawn_service, ChangeSource, FootDocument, Mode, PoseDocument,
    ServiceError, ServiceHandle, ServiceOptions, SharedPayload, SnapshotFormat, StreamPayload,
    TrajectoryRequest,
};
use tokio::sync::broadcast;
use tokio::time::timeout;

fn start() -> ServiceHandle {
    spawn_service(RobotConfig::default(), ServiceOptions::default(), None).unwrap()
}

fn pose(roll: f64, pitch: f64, yaw: f64) -> PoseDocument {
    PoseDocument {
        roll,
        pitch,
        yaw,
        x: 0.0,
        y: 0.0,
        z: -0.15,
        order: None,
    }
}

fn degrees(a: &JointAngles) -> [f64; 3] {
    [to_wrapped_degrees(a.theta1), to_wrapped_degrees(a.theta2), to_wrapped_degrees(a.theta3)]
}

fn payload_degrees(p: &StreamPayload, leg: LegId) -> [f64; 3] {
    let l = &p.legs[leg.index()];
    [l.t1, l.t2, l.t3]
}

async fn next(rx: &mut broadcast::Receiver<SharedPayload>) -> SharedPayload {
    timeout(Duration::from_secs(5), rx.recv()).await.expect("payload within 5 s").unwrap()
}

#[tokio::test]
async fn starts_in_the_neutral_state() {
    let h = start();
    let s = h.state().await.unwrap();
    assert_eq!(s.epoch, 0);
    assert_eq!(s.status.source, ChangeSource::Startup);
    assert_eq!(s.pose, pose(0.0, 0.0, 0.0));
    let sol = solve_body(&BodyPose::default(), &RobotConfig::default()).unwrap();
    for leg in LegId::ALL {
        assert_eq!(payload_degrees(&s, leg), degrees(&sol.per_leg[leg.index()].angles));
        assert!(!s.legs[leg.index()].overridden);
    }
}

#[tokio::test]
async fn pose_commands_solve_and_broadcast_the_whole_body() {
    let h = start();
    let (_, mut rx) = h.subscribe().await.unwrap();
    let accepted = h.pose(pose(28.0, 0.0, 0.0)).await.unwrap();
    assert_eq!(accepted.epoch, 1);
    let seen = next(&mut rx).await;
    assert_eq!(seen, accepted);
    let body = pose(28.0, 0.0, 0.0).to_body_pose(h.robot()).unwrap();
    let sol = solve_body(&body, h.robot()).unwrap();
    for leg in LegId::ALL {
        assert_eq!(payload_degrees(&seen, leg), degrees(&sol.per_leg[leg.index()].angles));
    }
}

#[tokio::test]
async fn rejected_pose_leaves_state_untouched() {
    let h = start();
    h.pose(pose(10.0, 5.0, -3.0)).await.unwrap();
    let before = serde_json::to_string(&*h.state().await.unwrap()).unwrap();
    let (_, mut rx) = h.subscribe().await.unwrap();

    let err = h.pose(pose(90.0, 0.0, 0.0)).await.unwrap_err();
    match &err {
        ServiceError::Unreachable { stage, .. } => assert_eq!(*stage, Some(IkStage::Planar)),
        other => panic!("unexpected {other:?}"),
    }
    let bad_order = PoseDocument { order: Some("xzy".into()), ..pose(0.0, 0.0, 0.0) };
    assert!(matches!(h.pose(bad_order).await, Err(ServiceError::Validation(_))));
    let nan = PoseDocument { roll: f64::NAN, ..pose(0.0, 0.0, 0.0) };
    assert!(matches!(h.pose(nan).await, Err(ServiceError::Validation(_))));

    let after = serde_json::to_string(&*h.state().await.unwrap()).unwrap();
    assert_eq!(before, after);
    assert!(matches!(rx.try_recv(), Err(broadcast::error::TryRecvError::Empty)));
}

#[tokio::test]
async fn foot_command_matches_the_library_bit_for_bit() {
    let h = start();
    let target = FootTarget::new(0.05, 0.1, -0.1);
    let s = h.foot(LegId::FR, FootDocument { x: 0.05, y: 0.1, z: -0.1 }).await.unwrap();
    let direct = ik_leg(&target, &h.robot().geometry, LegId::FR.side()).unwrap();
    assert_eq!(payload_degrees(&s, LegId::FR), degrees(&direct));
    assert!(s.legs[LegId::FR.index()].overridden);
    assert_eq!(s.legs[LegId::FR.index()].target, [0.05, 0.1, -0.1]);
    // the other legs keep the pose solution
    let neutral = h.robot().neutral_stance[0];
    assert_eq!(s.legs[LegId::FL.index()].target, [neutral.x, neutral.y, neutral.z]);

    let err = h.foot(LegId::RL, FootDocument { x: 0.0, y: 0.01, z: -0.01 }).await.unwrap_err();
    assert!(
        matches!(err, ServiceError::Unreachable { leg: LegId::RL, stage: Some(IkStage::Frontal), .. }),
        "{err:?}"
    );
    // a pose command clears foot overrides
    let s = h.pose(pose(0.0, 0.0, 0.0)).await.unwrap();
    assert!(s.legs.iter().all(|l| !l.overridden));
}

fn rectangle(points_per_edge: usize) -> RectTrajectorySpec {
    RectTrajectorySpec {
        center: FootTarget::new(0.0, 0.0, -0.15),
        width: 0.04,
        height: 0.02,
        points_per_edge,
        leg: LegId::FR,
        cycles: 1,
    }
}

#[tokio::test]
async fn trajectory_replays_the_joint_stream() {
    let h = start();
    let (_, mut rx) = h.subscribe().await.unwrap();
    let spec = rectangle(2);
    let run = h.run_trajectory(TrajectoryRequest { spec, rate_hz: 10.0 }).await.unwrap();
    assert_eq!(run.frames, 8);
    let expected = joint_stream(&rect_path(&spec).unwrap(), &h.robot().geometry, spec.leg.side()).unwrap();
    let mut last_epoch = 0;
    for (i, (_, angles)) in expected.frames.iter().enumerate() {
        let p = next(&mut rx).await;
        assert!(p.epoch > last_epoch);
        last_epoch = p.epoch;
        let progress = p.status.trajectory.unwrap();
        assert_eq!((progress.run_id, progress.step, progress.total), (run.run_id, i, 8));
        assert_eq!(payload_degrees(&p, spec.leg), degrees(angles));
    }
    let last = rect_path(&spec).unwrap().last().unwrap().target;
    let s = h.state().await.unwrap();
    assert_eq!(s.legs[spec.leg.index()].target, [last.x, last.y, last.z]);
    assert_eq!(h.cancel_trajectory().await.unwrap(), None);
}

#[tokio::test]
async fn cancelled_trajectory_stops_at_the_last_broadcast() {
    let h = start();
    let (_, mut rx) = h.subscribe().await.unwrap();
    let run = h.run_trajectory(TrajectoryRequest { spec: rectangle(16), rate_hz: 50.0 }).await.unwrap();
    let mut last = None;
    for _ in 0..5 {
        last = Some(next(&mut rx).await);
    }
    assert_eq!(h.cancel_trajectory().await.unwrap(), Some(run.run_id));
    // steps already queued before the cancel may still land; nothing after it does
    let mut latest = last.unwrap();
    while let Ok(p) = rx.try_recv() {
        latest = p;
    }
    tokio::time::sleep(Duration::from_millis(200)).await;
    assert!(matches!(rx.try_recv(), Err(broadcast::error::TryRecvError::Empty)));
    assert_eq!(h.state().await.unwrap(), latest);
    assert!(latest.status.trajectory.unwrap().step < 63);
}

#[tokio::test]
async fn unreachable_trajectory_is_rejected_before_starting() {
    let h = start();
    let (_, mut rx) = h.subscribe().await.unwrap();
    let spec = RectTrajectorySpec { width: 0.2, height: 0.2, ..rectangle(4) };
    let err = h.run_trajectory(TrajectoryRequest { spec, rate_hz: 10.0 }).await.unwrap_err();
    assert!(matches!(err, ServiceError::UnreachableWaypoint { index: 0, .. }), "{err:?}");
    let bad_rate = h.run_trajectory(TrajectoryRequest { spec: rectangle(1), rate_hz: 0.0 }).await;
    assert!(matches!(bad_rate, Err(ServiceError::Validation(_))));
    tokio::time::sleep(Duration::from_millis(50)).await;
    assert!(rx.try_recv().is_err());
}

#[tokio::test]
async fn late_subscribers_get_the_current_state_first() {
    let h = start();
    h.pose(pose(5.0, 0.0, 0.0)).await.unwrap();
    let (first, mut rx) = h.subscribe().await.unwrap();
    assert_eq!(first.epoch, 1);
    h.pose(pose(6.0, 0.0, 0.0)).await.unwrap();
    h.foot(LegId::FL, FootDocument { x: 0.01, y: 0.0, z: -0.14 }).await.unwrap();
    assert_eq!(next(&mut rx).await.epoch, 2);
    assert_eq!(next(&mut rx).await.epoch, 3);
}

#[tokio::test]
async fn serial_mode_writes_frames_matching_the_broadcasts() {
    let (device, capture) = MockDevice::new();
    let options = ServiceOptions {
        initial_mode: Mode::SimAndSerial,
        channel_capacity: NonZeroUsize::new(64).unwrap(),
        writer: WriterConfig::default().with_rate(2000.0),
        ..ServiceOptions::default()
    };
    let h = spawn_service(RobotConfig::default(), options, Some(Box::new(device))).unwrap();
    let mut expected = Vec::new();
    for roll in [-10.0, 0.0, 12.5] {
        let p = h.pose(pose(roll, 3.0, -2.0)).await.unwrap();
        expected.extend(p.frames());
    }
    let p = h.foot(LegId::RR, FootDocument { x: 0.02, y: -0.01, z: -0.16 }).await.unwrap();
    expected.push(p.legs[LegId::RR.index()].frame());
    // leaving serial mode stops further frames
    h.set_mode(Mode::SimOnly).await.unwrap();
    h.pose(pose(1.0, 1.0, 1.0)).await.unwrap();

    let report = h.shutdown().await.unwrap().unwrap();
    let stats = report.result.unwrap();
    let lines = capture.lines();
    assert_eq!(stats.frames_enqueued as usize, expected.len());
    assert_eq!(stats.frames_sent as usize + stats.in_flight as usize, expected.len());
    assert!(stats.is_conserved());
    for (line, want) in lines.iter().zip(&expected) {
        let got = decode_frame(&line.line).unwrap();
        assert_eq!(got.leg, want.leg);
        for (a, b) in got.degrees().iter().zip(want.degrees()) {
            assert!((a - b).abs() <= 5e-4 + 1e-12, "{} vs {want:?}", line.line);
        }
    }
    assert_eq!(lines.len(), stats.frames_sent as usize);
}

#[tokio::test]
async fn serial_mode_needs_a_device() {
    let h = start();
    let err = h.set_mode(Mode::SimAndSerial).await.unwrap_err();
    assert!(matches!(err, ServiceError::Conflict(_)));
    assert_eq!(h.state().await.unwrap().epoch, 0);
    let options = ServiceOptions { initial_mode: Mode::SimAndSerial, ..ServiceOptions::default() };
    assert!(spawn_service(RobotConfig::default(), options, None).is_err());
}

#[tokio::test]
async fn snapshots_round_trip_in_both_formats() {
    let h = start();
    let neutral = h.state().await.unwrap();
    let mut csv = Vec::new();
    export_snapshot(&neutral, SnapshotFormat::Csv, &mut csv).unwrap();
    let text = String::from_utf8(csv.clone()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.contains(",t1,t2,t3,"), "{header}");
    assert_eq!(lines.count(), 16);
    assert!(text.lines().nth(1).unwrap().contains(",-0.15,"));

    let back = import_snapshot(csv.as_slice(), SnapshotFormat::Csv).unwrap();
    let mut again = Vec::new();
    export_snapshot(&back, SnapshotFormat::Csv, &mut again).unwrap();
    assert_eq!(csv, again);
    assert_eq!((back.pose.clone(), back.legs), (neutral.pose.clone(), neutral.legs));

    h.pose(pose(7.0, -4.0, 2.0)).await.unwrap();
    let changed = h.foot(LegId::RR, FootDocument { x: -0.01, y: -0.02, z: -0.12 }).await.unwrap();
    let mut json = Vec::new();
    export_snapshot(&changed, SnapshotFormat::Json, &mut json).unwrap();
    let parsed = import_snapshot(json.as_slice(), SnapshotFormat::Json).unwrap();
    assert_eq!(parsed, *changed);

    h.pose(pose(0.0, 0.0, 0.0)).await.unwrap();
    let restored = h.import(parsed).await.unwrap();
    assert_eq!(restored.pose, changed.pose);
    assert_eq!(restored.legs, changed.legs);
    assert_eq!(restored.status.source, ChangeSource::Import);
    assert!(restored.epoch > changed.epoch);
}

#[tokio::test]
async fn a_dead_link_is_reported_in_later_payloads() {
    let (device, _capture) = MockDevice::new();
    let options = ServiceOptions {
        initial_mode: Mode::SimAndSerial,
        writer: WriterConfig {
            max_retries: 2,
            initial_backoff: Duration::from_millis(1),
            ..WriterConfig::default().with_rate(1000.0)
        },
        ..ServiceOptions::default()
    };
    let h = spawn_service(RobotConfig::default(), options, Some(Box::new(device.fail_forever()))).unwrap();
    let first = h.pose(pose(2.0, 0.0, 0.0)).await.unwrap();
    assert_eq!(first.status.link_error, None);

    let mut reported = None;
    for roll in 0..200 {
        tokio::time::sleep(Duration::from_millis(10)).await;
        let p = h.pose(pose(f64::from(roll % 20), 0.0, 0.0)).await.unwrap();
        if p.status.link_error.is_some() {
            reported = Some(p);
            break;
        }
    }
    let p = reported.expect("link failure reported within 2 s");
    assert!(p.link.is_some_and(|l| l.frames_sent == 0 && l.frames_dropped > 0));
    let report = h.shutdown().await.unwrap().unwrap();
    let down = report.result.unwrap_err();
    assert_eq!(down.attempts, 3);
}
