use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::Path;

use quadkin::angle::{format_degrees, wrap_angle};
use quadkin::link::{
    pose_channel, writer_loop, AngleDevice, AngleFrame, SerialDevice, StopSignal, StreamDevice,
    WriterConfig,
};
use quadkin::trajectory::{
    densify, joint_stream, read_joint_csv, rect_path, write_joint_csv, write_waypoints_csv,
    RectTrajectorySpec,
};
use quadkin::{
    ik_leg_detailed, solve_body, AngleUnits, FootTarget, LegGeometry, LegId, RobotConfig,
};
use quadkin_service::http::serve as serve_http;
use quadkin_service::{import_snapshot, spawn_service, PoseDocument, ServiceConfig, SnapshotFormat};

use crate::args::{
    Axis, GeometryArgs, PoseArgs, ReplayArgs, RobotArgs, SendArgs, ServeArgs, SinkArgs, SolveArgs,
    StanceArgs, SweepArgs, TrajArgs,
};
use crate::error::CliError;

fn format_angle(radians: f64, as_radians: bool) -> String {
    if as_radians {
        format!("{:.6}", wrap_angle(radians))
    } else {
        format_degrees(radians)
    }
}

fn geometry(args: &GeometryArgs) -> Result<LegGeometry, CliError> {
    let d = LegGeometry::default();
    Ok(LegGeometry::new(
        args.la.unwrap_or(d.la()),
        args.lb.unwrap_or(d.lb()),
        args.lc.unwrap_or(d.lc()),
    )?)
}

fn robot(args: &RobotArgs) -> Result<RobotConfig, CliError> {
    let config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
            ServiceConfig::from_toml_str(&text)?
        }
        None => {
            let mut config = ServiceConfig::default();
            let g = geometry(&args.geometry)?;
            config.geometry.la = g.la();
            config.geometry.lb = g.lb();
            config.geometry.lc = g.lc();
            config
        }
    };
    Ok(config.robot()?)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path.display(), e))
}

fn stdout_error(e: io::Error) -> CliError {
    CliError::io("stdout", e)
}

fn stdout_csv(e: csv::Error) -> CliError {
    CliError::io("stdout", e)
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

pub fn solve(args: SolveArgs) -> Result<(), CliError> {
    let g = geometry(&args.geometry)?;
    let side = args.leg.map_or(args.side, LegId::side);
    let target = FootTarget::new(args.x, args.y, args.z);
    let sol = ik_leg_detailed(&target, &g, side)?;
    let a = sol.angles;
    println!(
        "case={} t1={} t2={} t3={}",
        sol.case.case_id,
        format_angle(a.theta1, args.radians),
        format_angle(a.theta2, args.radians),
        format_angle(a.theta3, args.radians),
    );
    Ok(())
}

fn pose_document(
    robot: &RobotConfig,
    rotation: [f64; 3],
    stance: &StanceArgs,
    order: Option<String>,
) -> PoseDocument {
    let neutral = PoseDocument::neutral(robot);
    PoseDocument {
        roll: rotation[0],
        pitch: rotation[1],
        yaw: rotation[2],
        x: stance.x.unwrap_or(neutral.x),
        y: stance.y.unwrap_or(neutral.y),
        z: stance.z.unwrap_or(neutral.z),
        order,
    }
}

fn body_pose(doc: &PoseDocument, robot: &RobotConfig, radians: bool) -> Result<quadkin::BodyPose, CliError> {
    let mut pose = doc.to_body_pose(robot)?;
    if radians {
        pose.units = AngleUnits::Radians;
    }
    Ok(pose)
}

pub fn pose(args: PoseArgs) -> Result<(), CliError> {
    let robot = robot(&args.robot)?;
    let doc = pose_document(&robot, [args.roll, args.pitch, args.yaw], &args.stance, args.order);
    let sol = solve_body(&body_pose(&doc, &robot, args.radians)?, &robot)?;
    let mut out = csv_writer(io::stdout().lock());
    out.write_record(["leg", "x", "y", "z", "t1", "t2", "t3"]).map_err(stdout_csv)?;
    for leg in LegId::ALL {
        let s = &sol.per_leg[leg.index()];
        let a = s.angles;
        out.write_record([
            leg.to_string(),
            s.target.x.to_string(),
            s.target.y.to_string(),
            s.target.z.to_string(),
            format_angle(a.theta1, args.radians),
            format_angle(a.theta2, args.radians),
            format_angle(a.theta3, args.radians),
        ])
        .map_err(stdout_csv)?;
    }
    out.flush().map_err(stdout_error)
}

/// Sweep values from `from` towards `to` in steps of `step`; a step longer than the span gives
/// the start value alone.
fn sweep_values(from: f64, to: f64, step: f64, limit: f64) -> Result<Vec<f64>, CliError> {
    if ![from, to, step].iter().all(|v| v.is_finite()) || step <= 0.0 {
        return Err(CliError::Usage("sweep needs finite bounds and a positive step".into()));
    }
    if from > to {
        return Err(CliError::Usage(format!("sweep start {from} is after its end {to}")));
    }
    if from < -limit || to > limit {
        return Err(CliError::Usage(format!("sweep range must lie within ±{limit}")));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let robot = robot(&args.robot)?;
    let limit = if args.radians { std::f64::consts::PI } else { 180.0 };
    let values = sweep_values(args.from, args.to, args.step, limit)?;
    let out: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = csv_writer(out);
    let destination = args.output.as_ref().map_or("stdout".into(), |p| p.display().to_string());
    let sink = |e: csv::Error| CliError::io(&destination, e);

    let mut header = vec!["roll".to_owned(), "pitch".into(), "yaw".into(), "solved".into()];
    for leg in LegId::ALL {
        header.extend(["t1", "t2", "t3"].map(|j| format!("{leg}_{j}")));
    }
    header.push("error".into());
    out.write_record(&header).map_err(sink)?;

    let mut failures = 0;
    for v in &values {
        let rotation = match args.axis {
            Axis::Roll => [*v, 0.0, 0.0],
            Axis::Pitch => [0.0, *v, 0.0],
            Axis::Yaw => [0.0, 0.0, *v],
        };
        let doc = pose_document(&robot, rotation, &args.stance, args.order.clone());
        let mut row: Vec<String> = rotation.iter().map(f64::to_string).collect();
        match solve_body(&body_pose(&doc, &robot, args.radians)?, &robot) {
            Ok(sol) => {
                row.push("true".into());
                for s in &sol.per_leg {
                    let a = s.angles;
                    row.extend([a.theta1, a.theta2, a.theta3].map(|t| format_angle(t, args.radians)));
                }
                row.push(String::new());
            }
            Err(e) => {
                failures += 1;
                row.push("false".into());
                row.extend(std::iter::repeat_n(String::new(), 12));
                row.push(e.to_string());
            }
        }
        out.write_record(&row).map_err(sink)?;
    }
    out.flush().map_err(|e| CliError::io(&destination, e))?;
    let axis = format!("{:?}", args.axis).to_lowercase();
    eprintln!("{axis} sweep: {} poses, {failures} failures", values.len());
    Ok(())
}

pub fn traj(args: TrajArgs) -> Result<(), CliError> {
    let robot = robot(&args.robot)?;
    let spec = RectTrajectorySpec {
        center: FootTarget::new(args.center_x, args.center_y, args.center_z),
        width: args.width,
        height: args.height,
        points_per_edge: args.points_per_edge,
        leg: args.leg,
        cycles: args.cycles,
    };
    let mut path = rect_path(&spec)?;
    if let Some(resolution) = args.densify {
        path = densify(&path, resolution)?;
    }
    let stream = joint_stream(&path, &robot.geometry, robot.side(args.leg))?;

    if args.waypoints.is_none() && args.joints.is_none() {
        write_waypoints_csv(io::stdout().lock(), &path)?;
    }
    if let Some(p) = &args.waypoints {
        write_waypoints_csv(create(p)?, &path).map_err(|e| CliError::io(p.display(), e))?;
    }
    if let Some(p) = &args.joints {
        write_joint_csv(create(p)?, &stream).map_err(|e| CliError::io(p.display(), e))?;
    }
    let (step, closure, unit) = if args.radians {
        (stream.max_delta, stream.closure_delta(), "rad")
    } else {
        (stream.max_delta.to_degrees(), stream.closure_delta().to_degrees(), "deg")
    };
    eprintln!(
        "{} waypoints, max joint step {step:.3} {unit}, closure step {closure:.3} {unit}",
        path.len()
    );
    Ok(())
}

fn open_sink(sink: &SinkArgs, baud: u32) -> Result<Box<dyn AngleDevice>, CliError> {
    if let Some(port) = &sink.port {
        let device = SerialDevice::open(port, baud).map_err(|e| CliError::io(port, e))?;
        return Ok(Box::new(device));
    }
    match sink.output.as_deref() {
        Some(p) if p == Path::new("-") => Ok(Box::new(StreamDevice::new(io::stdout()))),
        Some(p) => {
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| CliError::io(p.display(), e))?;
            Ok(Box::new(StreamDevice::new(file)))
        }
        None => Err(CliError::Usage("one of --port or --output is required".into())),
    }
}

/// Writes every frame in order at `rate_hz`. The channel holds all of them, so nothing is
/// dropped; the writer still applies its pacing and reconnect policy.
fn transmit(frames: Vec<AngleFrame>, rate_hz: f64, device: &mut dyn AngleDevice) -> Result<u64, CliError> {
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(CliError::Usage(format!("rate must be positive, got {rate_hz}")));
    }
    let config = WriterConfig::default().with_rate(rate_hz);
    let capacity = NonZeroUsize::new(frames.len()).ok_or_else(|| CliError::Data("no frames to send".into()))?;
    let (mut producer, consumer) = pose_channel(capacity);
    for f in frames {
        producer.push(f);
    }
    drop(producer);
    let stats = writer_loop(consumer, device, &config, &StopSignal::new())
        .map_err(|e| CliError::io("link down", e))?;
    Ok(stats.frames_sent)
}

pub fn send(args: SendArgs) -> Result<(), CliError> {
    let file = File::open(&args.joints).map_err(|e| CliError::io(args.joints.display(), e))?;
    let rows = read_joint_csv(file).map_err(|e| CliError::Data(format!("{}: {e}", args.joints.display())))?;
    let frames = rows
        .iter()
        .map(|(_, a)| AngleFrame::from_joint_angles(args.leg, a))
        .collect();
    let mut device = open_sink(&args.sink, args.baud)?;
    let sent = transmit(frames, args.rate_hz, device.as_mut())?;
    eprintln!("sent {sent} frames");
    Ok(())
}

pub fn replay(args: ReplayArgs) -> Result<(), CliError> {
    let format = match &args.format {
        Some(f) => f.parse::<SnapshotFormat>()?,
        None if args.snapshot.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => {
            SnapshotFormat::Csv
        }
        None => SnapshotFormat::Json,
    };
    let file = File::open(&args.snapshot).map_err(|e| CliError::io(args.snapshot.display(), e))?;
    let payload = import_snapshot(io::BufReader::new(file), format)?;
    let mut device = open_sink(&args.sink, args.baud)?;
    let sent = transmit(payload.frames().to_vec(), args.rate_hz, device.as_mut())?;
    eprintln!("sent {sent} frames from epoch {}", payload.epoch);
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<(), CliError> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(io::stderr)
        .init();
    let mut config = ServiceConfig::load(args.config.as_deref())?;
    if let Some(listen) = args.listen {
        config.listen = listen;
    }
    let robot = config.robot()?;
    let device: Option<Box<dyn AngleDevice>> = match &config.serial {
        Some(s) => Some(Box::new(
            SerialDevice::open(&s.path, s.baud).map_err(|e| CliError::io(&s.path, e))?,
        )),
        None => None,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io("runtime", e))?;
    runtime.block_on(async move {
        let handle = spawn_service(robot, config.options(), device)?;
        let listener = tokio::net::TcpListener::bind(config.listen)
            .await
            .map_err(|e| CliError::io(config.listen, e))?;
        let addr = listener.local_addr().map_err(|e| CliError::io("listener", e))?;
        println!("listening on {addr}");
        io::stdout().flush().map_err(stdout_error)?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        serve_http(listener, handle.clone(), shutdown)
            .await
            .map_err(|e| CliError::io("server", e))?;
        if let Ok(Some(report)) = handle.shutdown().await {
            match report.result {
                Ok(stats) => eprintln!("serial link closed after {} frames", stats.frames_sent),
                Err(e) => eprintln!("serial link failed: {e}"),
            }
        }
        Ok(())
    })
}
