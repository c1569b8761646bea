use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use quadkin::{LegId, LegSide};

/// Quadruped leg kinematics: single solves, pose sweeps, trajectory export, the live service
/// and serial output.
///
/// Angles are printed in degrees unless `--radians` is given. Exit status is 0 on success, 2
/// when a target or pose cannot be reached, 64 or 65 for bad arguments or input files and 74
/// for I/O failures.
#[derive(Debug, Parser)]
#[command(name = "quadkin", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Joint angles for one foot target in the hip frame.
    Solve(SolveArgs),
    /// Joint angles of all four legs for one body pose.
    Pose(PoseArgs),
    /// Solves a one-axis sweep of body poses and writes one CSV row per pose.
    Sweep(SweepArgs),
    /// Writes the waypoint and joint CSVs of a rectangular foot trajectory.
    Traj(TrajArgs),
    /// Runs the HTTP and WebSocket service.
    Serve(ServeArgs),
    /// Streams a recorded joint CSV to a serial port or file.
    Send(SendArgs),
    /// Re-emits the four leg frames of a saved snapshot.
    Replay(ReplayArgs),
}

/// Leg lengths in meters. Without flags the default 40/100/100 mm leg is used.
#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    /// Coxa length.
    #[arg(long)]
    pub la: Option<f64>,
    /// Femur length.
    #[arg(long)]
    pub lb: Option<f64>,
    /// Tibia length.
    #[arg(long)]
    pub lc: Option<f64>,
}

/// Robot layout: a service config file, or the default robot with optional leg lengths.
#[derive(Debug, Clone, Args)]
pub struct RobotArgs {
    /// Service TOML file to take geometry and body layout from.
    #[arg(long, conflicts_with_all = ["la", "lb", "lc"])]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SolveArgs {
    /// Leg side; mirrors the solution for left legs.
    #[arg(long, default_value = "right", conflicts_with = "leg")]
    pub side: LegSide,
    /// Take the side from a leg name (FL, FR, RL, RR).
    #[arg(long)]
    pub leg: Option<LegId>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long)]
    pub x: f64,
    #[arg(long)]
    pub y: f64,
    #[arg(long)]
    pub z: f64,
    /// Print radians instead of degrees.
    #[arg(long)]
    pub radians: bool,
}

/// Body pose flags. `x`, `y`, `z` place the stance (mean foot position below the hips);
/// omitted values keep the neutral stance.
#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PoseArgs {
    #[arg(long, default_value_t = 0.0)]
    pub roll: f64,
    #[arg(long, default_value_t = 0.0)]
    pub pitch: f64,
    #[arg(long, default_value_t = 0.0)]
    pub yaw: f64,
    #[command(flatten)]
    pub stance: StanceArgs,
    /// Rotation order token (xyz, pqr, prq, qpr, qrp, rpq, rqp).
    #[arg(long)]
    pub order: Option<String>,
    /// Read and print angles in radians.
    #[arg(long)]
    pub radians: bool,
    #[command(flatten)]
    pub robot: RobotArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StanceArgs {
    /// Stance x in meters.
    #[arg(long = "stance-x")]
    pub x: Option<f64>,
    /// Stance y in meters.
    #[arg(long = "stance-y")]
    pub y: Option<f64>,
    /// Stance z in meters, e.g. -0.15.
    #[arg(long = "stance-z")]
    pub z: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    Roll,
    Pitch,
    Yaw,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// First angle of the sweep.
    #[arg(long)]
    pub from: f64,
    /// Last angle of the sweep (inclusive when the step lands on it).
    #[arg(long)]
    pub to: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    #[command(flatten)]
    pub stance: StanceArgs,
    #[arg(long)]
    pub order: Option<String>,
    /// Read and print angles in radians.
    #[arg(long)]
    pub radians: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub robot: RobotArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct TrajArgs {
    #[arg(long, default_value = "FR")]
    pub leg: LegId,
    /// Rectangle center in the hip frame, meters.
    #[arg(long, default_value_t = 0.0)]
    pub center_x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub center_y: f64,
    #[arg(long, default_value_t = -0.15)]
    pub center_z: f64,
    /// Extent along x, meters.
    #[arg(long, default_value_t = 0.04)]
    pub width: f64,
    /// Extent along z, meters.
    #[arg(long, default_value_t = 0.02)]
    pub height: f64,
    #[arg(long, default_value_t = 16)]
    pub points_per_edge: usize,
    #[arg(long, default_value_t = 1)]
    pub cycles: usize,
    /// Resample the path so consecutive waypoints are at most this far apart (meters).
    #[arg(long)]
    pub densify: Option<f64>,
    /// Waypoint CSV (`t,x,y,z`); stdout when neither output is given.
    #[arg(long)]
    pub waypoints: Option<PathBuf>,
    /// Joint CSV (`t,theta1,theta2,theta3` in radians).
    #[arg(long)]
    pub joints: Option<PathBuf>,
    /// Print the summary step in radians.
    #[arg(long)]
    pub radians: bool,
    #[command(flatten)]
    pub robot: RobotArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service TOML file; `QUADKIN_*` environment variables override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Address to listen on, e.g. 127.0.0.1:0 for any free port.
    #[arg(long)]
    pub listen: Option<SocketAddr>,
}

/// Where wire lines go.
#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct SinkArgs {
    /// Serial port path.
    #[arg(long)]
    pub port: Option<String>,
    /// File to append wire lines to, or `-` for stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SendArgs {
    /// Joint CSV as written by `traj --joints`.
    #[arg(long)]
    pub joints: PathBuf,
    #[arg(long)]
    pub leg: LegId,
    /// Frames per second.
    #[arg(long, default_value_t = 50.0)]
    pub rate_hz: f64,
    #[arg(long, default_value_t = quadkin::link::SerialDevice::DEFAULT_BAUD)]
    pub baud: u32,
    #[command(flatten)]
    pub sink: SinkArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Snapshot file saved from the service.
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Snapshot format; taken from the file extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long, default_value_t = 50.0)]
    pub rate_hz: f64,
    #[arg(long, default_value_t = quadkin::link::SerialDevice::DEFAULT_BAUD)]
    pub baud: u32,
    #[command(flatten)]
    pub sink: SinkArgs,
}
