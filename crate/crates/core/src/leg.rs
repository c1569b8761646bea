//! Per-leg domain types.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::angle::wrap_angle;
use crate::error::{ensure_finite, KinematicsError};

/// Link lengths of one leg, in meters.
///
/// `la` is the coxa (hip to femur joint), `lb` the femur (femur to tibia joint) and `lc` the
/// tibia (tibia joint to foot).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub struct LegGeometry {
    la: f64,
    lb: f64,
    lc: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGeometry {
    la: f64,
    lb: f64,
    lc: f64,
}

impl TryFrom<RawGeometry> for LegGeometry {
    type Error = KinematicsError;

    fn try_from(raw: RawGeometry) -> Result<Self, Self::Error> {
        LegGeometry::new(raw.la, raw.lb, raw.lc)
    }
}

impl From<LegGeometry> for RawGeometry {
    fn from(g: LegGeometry) -> Self {
        RawGeometry {
            la: g.la,
            lb: g.lb,
            lc: g.lc,
        }
    }
}

impl LegGeometry {
    /// Validates `la >= 0`, `lb > 0`, `lc > 0` (all finite).
    pub fn new(la: f64, lb: f64, lc: f64) -> Result<Self, KinematicsError> {
        let la = ensure_finite("la", la)?;
        let lb = ensure_finite("lb", lb)?;
        let lc = ensure_finite("lc", lc)?;
        if la < 0.0 || lb <= 0.0 || lc <= 0.0 {
            return Err(KinematicsError::InvalidArgument(format!(
                "leg lengths need la >= 0, lb > 0, lc > 0 (got {la}, {lb}, {lc})"
            )));
        }
        Ok(LegGeometry { la, lb, lc })
    }

    pub fn la(&self) -> f64 {
        self.la
    }

    pub fn lb(&self) -> f64 {
        self.lb
    }

    pub fn lc(&self) -> f64 {
        self.lc
    }

    /// Inner and outer radius of the two-link reach annulus.
    pub fn planar_reach(&self) -> (f64, f64) {
        ((self.lb - self.lc).abs(), self.lb + self.lc)
    }
}

impl Default for LegGeometry {
    /// 40 mm coxa, 100 mm femur and tibia.
    fn default() -> Self {
        LegGeometry {
            la: 0.04,
            lb: 0.10,
            lc: 0.10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LegSide {
    Left,
    Right,
}

impl LegSide {
    pub fn mirrored(self) -> LegSide {
        match self {
            LegSide::Left => LegSide::Right,
            LegSide::Right => LegSide::Left,
        }
    }
}

impl FromStr for LegSide {
    type Err = KinematicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(LegSide::Left),
            "right" | "r" => Ok(LegSide::Right),
            other => Err(KinematicsError::InvalidArgument(format!(
                "unknown leg side {other:?}"
            ))),
        }
    }
}

impl fmt::Display for LegSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LegSide::Left => f.write_str("left"),
            LegSide::Right => f.write_str("right"),
        }
    }
}

/// Leg position on the body. The discriminant is the wire id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LegId {
    FL = 0,
    FR = 1,
    RL = 2,
    RR = 3,
}

impl LegId {
    pub const ALL: [LegId; 4] = [LegId::FL, LegId::FR, LegId::RL, LegId::RR];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<LegId> {
        LegId::ALL.get(index).copied()
    }

    pub fn side(self) -> LegSide {
        match self {
            LegId::FL | LegId::RL => LegSide::Left,
            LegId::FR | LegId::RR => LegSide::Right,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LegId::FL => "FL",
            LegId::FR => "FR",
            LegId::RL => "RL",
            LegId::RR => "RR",
        }
    }
}

impl fmt::Display for LegId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LegId {
    type Err = KinematicsError;

    /// Accepts `FL`/`FR`/`RL`/`RR` (any case) or the wire ids `0`..`3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        let by_name = LegId::ALL.into_iter().find(|l| l.name() == upper);
        by_name
            .or_else(|| s.parse::<usize>().ok().and_then(LegId::from_index))
            .ok_or_else(|| KinematicsError::InvalidArgument(format!("unknown leg {s:?}")))
    }
}

/// Joint angles of one leg in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl JointAngles {
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        JointAngles {
            theta1,
            theta2,
            theta3,
        }
    }

    /// Every angle wrapped into `[0, 2π)`.
    pub fn wrapped(self) -> Self {
        JointAngles {
            theta1: wrap_angle(self.theta1),
            theta2: wrap_angle(self.theta2),
            theta3: wrap_angle(self.theta3),
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.theta1, self.theta2, self.theta3]
    }

    pub fn from_degrees(t1: f64, t2: f64, t3: f64) -> Self {
        JointAngles::new(t1.to_radians(), t2.to_radians(), t3.to_radians())
    }

    /// Largest per-joint distance on the circle.
    pub fn max_wrapped_delta(&self, other: &JointAngles) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| crate::angle::angular_distance(*a, b))
            .fold(0.0, f64::max)
    }
}

/// Foot (end effector) position in the leg's hip frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FootTarget {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FootTarget {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        FootTarget { x, y, z }
    }

    /// Length of the Y-Z (front view) projection.
    pub fn frontal_projection(&self) -> f64 {
        self.y.hypot(self.z)
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        FootTarget::new(v.x, v.y, v.z)
    }

    pub fn distance(&self, other: &FootTarget) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }
}
