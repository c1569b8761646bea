//! Rectangular foot paths and their joint-space streams.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::KinematicsError;
use crate::ik::ik_leg;
use crate::leg::{FootTarget, JointAngles, LegGeometry, LegId, LegSide};

/// Relative slack when comparing a segment against the densify resolution.
const RESOLUTION_SLACK: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum TrajectoryError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("waypoint {index} unreachable: {source}")]
    UnreachableWaypoint {
        index: usize,
        #[source]
        source: KinematicsError,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// A closed rectangle in the x–z plane of one leg's hip frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectTrajectorySpec {
    pub center: FootTarget,
    /// Extent along x, meters.
    pub width: f64,
    /// Extent along z, meters.
    pub height: f64,
    pub points_per_edge: usize,
    pub leg: LegId,
    pub cycles: usize,
}

impl RectTrajectorySpec {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let c = self.center;
        if ![c.x, c.y, c.z, self.width, self.height].iter().all(|v| v.is_finite()) {
            return Err(TrajectoryError::InvalidArgument("rectangle values must be finite".into()));
        }
        if self.width < 0.0 || self.height < 0.0 {
            return Err(TrajectoryError::InvalidArgument(
                "width and height must be non-negative".into(),
            ));
        }
        if self.points_per_edge == 0 {
            return Err(TrajectoryError::InvalidArgument("points_per_edge must be at least 1".into()));
        }
        if self.cycles == 0 {
            return Err(TrajectoryError::InvalidArgument("cycles must be at least 1".into()));
        }
        Ok(())
    }

    /// Corners counter-clockwise in the x–z plane from the lower-left (−x, −z) corner.
    pub fn corners(&self) -> [FootTarget; 4] {
        let (hw, hh) = (self.width / 2.0, self.height / 2.0);
        let c = self.center;
        [
            FootTarget::new(c.x - hw, c.y, c.z - hh),
            FootTarget::new(c.x + hw, c.y, c.z - hh),
            FootTarget::new(c.x + hw, c.y, c.z + hh),
            FootTarget::new(c.x - hw, c.y, c.z + hh),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: usize,
    pub target: FootTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointStream {
    pub frames: Vec<(usize, JointAngles)>,
    /// Largest wrapped per-joint change between consecutive frames.
    pub max_delta: f64,
}

impl JointStream {
    /// Wrapped per-joint change from the last frame back to the first.
    pub fn closure_delta(&self) -> f64 {
        match (self.frames.first(), self.frames.last()) {
            (Some((_, first)), Some((_, last))) => last.max_wrapped_delta(first),
            _ => 0.0,
        }
    }
}

fn lerp(a: &FootTarget, b: &FootTarget, f: f64) -> FootTarget {
    FootTarget::new(
        a.x + (b.x - a.x) * f,
        a.y + (b.y - a.y) * f,
        a.z + (b.z - a.z) * f,
    )
}

/// `4 · points_per_edge` waypoints per cycle around the rectangle; each edge is sampled from
/// its starting corner, so the last waypoint connects back to the first.
pub fn rect_path(spec: &RectTrajectorySpec) -> Result<Vec<Waypoint>, TrajectoryError> {
    spec.validate()?;
    let corners = spec.corners();
    let n = spec.points_per_edge;
    let one_cycle: Vec<FootTarget> = (0..4)
        .flat_map(|edge| {
            let (a, b) = (corners[edge], corners[(edge + 1) % 4]);
            (0..n).map(move |k| lerp(&a, &b, k as f64 / n as f64))
        })
        .collect();
    Ok(one_cycle
        .iter()
        .cycle()
        .take(one_cycle.len() * spec.cycles)
        .enumerate()
        .map(|(t, &target)| Waypoint { t, target })
        .collect())
}

/// Piecewise-linear resampling so no step is longer than `resolution` (within a relative
/// 1e-9 slack). Original vertices are kept and `t` is renumbered.
pub fn densify(waypoints: &[Waypoint], resolution: f64) -> Result<Vec<Waypoint>, TrajectoryError> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(TrajectoryError::InvalidArgument(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    if waypoints.len() < 2 {
        return Err(TrajectoryError::InvalidArgument("densify needs at least 2 waypoints".into()));
    }
    let mut out = Vec::with_capacity(waypoints.len());
    out.push(waypoints[0].target);
    for pair in waypoints.windows(2) {
        let (a, b) = (pair[0].target, pair[1].target);
        let steps = ((a.distance(&b) / resolution) - RESOLUTION_SLACK).ceil().max(1.0) as usize;
        out.extend((1..steps).map(|k| lerp(&a, &b, k as f64 / steps as f64)));
        out.push(b);
    }
    Ok(out
        .into_iter()
        .enumerate()
        .map(|(t, target)| Waypoint { t, target })
        .collect())
}

/// Solves every waypoint in order. The first unreachable waypoint aborts the stream.
pub fn joint_stream(
    path: &[Waypoint],
    geom: &LegGeometry,
    side: LegSide,
) -> Result<JointStream, TrajectoryError> {
    let frames = path
        .iter()
        .enumerate()
        .map(|(index, w)| {
            ik_leg(&w.target, geom, side)
                .map(|a| (w.t, a))
                .map_err(|source| TrajectoryError::UnreachableWaypoint { index, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let max_delta = frames
        .windows(2)
        .map(|w| w[0].1.max_wrapped_delta(&w[1].1))
        .fold(0.0, f64::max);
    Ok(JointStream { frames, max_delta })
}

/// `t,x,y,z` with a header row.
pub fn write_waypoints_csv<W: Write>(out: W, waypoints: &[Waypoint]) -> Result<(), TrajectoryError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["t", "x", "y", "z"])?;
    for p in waypoints {
        let t = p.target;
        w.write_record([p.t.to_string(), t.x.to_string(), t.y.to_string(), t.z.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `t,theta1,theta2,theta3` (radians) with a header row.
pub fn write_joint_csv<W: Write>(out: W, stream: &JointStream) -> Result<(), TrajectoryError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["t", "theta1", "theta2", "theta3"])?;
    for (t, a) in &stream.frames {
        w.write_record([
            t.to_string(),
            a.theta1.to_string(),
            a.theta2.to_string(),
            a.theta3.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Deserialize)]
struct JointRow {
    t: usize,
    theta1: f64,
    theta2: f64,
    theta3: f64,
}

/// Reads what [`write_joint_csv`] writes.
pub fn read_joint_csv<R: Read>(input: R) -> Result<Vec<(usize, JointAngles)>, TrajectoryError> {
    csv::Reader::from_reader(input)
        .deserialize::<JointRow>()
        .map(|row| {
            let row = row?;
            Ok((row.t, JointAngles::new(row.theta1, row.theta2, row.theta3)))
        })
        .collect()
}
