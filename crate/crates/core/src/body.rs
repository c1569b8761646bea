//! Whole-body pose: roll/pitch/yaw rotation, per-leg foot targets and joint angles.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::angle::sin_cos_degrees;
use crate::error::KinematicsError;
use crate::ik::ik_leg;
use crate::leg::{FootTarget, JointAngles, LegGeometry, LegId, LegSide};

/// Composition order of the three elemental rotations.
///
/// `r`, `p` and `q` tokens follow the branch table of the original rotation routine:
///
/// | token | product                 |
/// |-------|-------------------------|
/// | `xyz` | `rotY · rotP · rotR`    |
/// | `pqr` | `rotY · rotP · rotR`    |
/// | `prq` | `rotP · rotY · rotR`    |
/// | `qpr` | `rotY · rotR · rotP`    |
/// | `qrp` | `rotR · rotY · rotP`    |
/// | `rpq` | `rotP · rotR · rotY`    |
/// | `rqp` | `rotR · rotP · rotY`    |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RotationOrder {
    #[default]
    Xyz,
    Pqr,
    Prq,
    Qpr,
    Qrp,
    Rpq,
    Rqp,
}

impl RotationOrder {
    pub const ALL: [RotationOrder; 7] = [
        RotationOrder::Xyz,
        RotationOrder::Pqr,
        RotationOrder::Prq,
        RotationOrder::Qpr,
        RotationOrder::Qrp,
        RotationOrder::Rpq,
        RotationOrder::Rqp,
    ];

    pub fn token(self) -> &'static str {
        match self {
            RotationOrder::Xyz => "xyz",
            RotationOrder::Pqr => "pqr",
            RotationOrder::Prq => "prq",
            RotationOrder::Qpr => "qpr",
            RotationOrder::Qrp => "qrp",
            RotationOrder::Rpq => "rpq",
            RotationOrder::Rqp => "rqp",
        }
    }

    /// The token whose product is the reverse of this one, so that
    /// `R(−r, −p, −y; order.reversed()) = R(r, p, y; order)ᵀ`.
    pub fn reversed(self) -> RotationOrder {
        match self {
            RotationOrder::Xyz | RotationOrder::Pqr => RotationOrder::Rqp,
            RotationOrder::Rqp => RotationOrder::Pqr,
            RotationOrder::Prq => RotationOrder::Qrp,
            RotationOrder::Qrp => RotationOrder::Prq,
            RotationOrder::Qpr => RotationOrder::Rpq,
            RotationOrder::Rpq => RotationOrder::Qpr,
        }
    }
}

impl FromStr for RotationOrder {
    type Err = KinematicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RotationOrder::ALL
            .into_iter()
            .find(|o| o.token() == s)
            .ok_or_else(|| KinematicsError::InvalidArgument(format!("unknown rotation order {s:?}")))
    }
}

impl TryFrom<String> for RotationOrder {
    type Error = KinematicsError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<RotationOrder> for String {
    fn from(o: RotationOrder) -> String {
        o.token().to_owned()
    }
}

impl fmt::Display for RotationOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnits {
    #[default]
    Radians,
    Degrees,
}

fn sin_cos(angle: f64, units: AngleUnits) -> (f64, f64) {
    match units {
        AngleUnits::Radians => angle.sin_cos(),
        AngleUnits::Degrees => sin_cos_degrees(angle),
    }
}

/// Body rotation for `[roll, pitch, yaw]` (about x, y, z) composed in `order`.
///
/// Degree input is reduced in degrees, so quarter turns produce exact 0/±1 entries.
pub fn rotation_matrix(
    rotation: [f64; 3],
    order: RotationOrder,
    units: AngleUnits,
) -> Result<Matrix3<f64>, KinematicsError> {
    if let Some(bad) = rotation.iter().find(|a| !a.is_finite()) {
        return Err(KinematicsError::InvalidArgument(format!(
            "rotation angles must be finite, got {bad}"
        )));
    }
    let (sr, cr) = sin_cos(rotation[0], units);
    let (sp, cp) = sin_cos(rotation[1], units);
    let (sy, cy) = sin_cos(rotation[2], units);
    #[rustfmt::skip]
    let rot_r = Matrix3::new(
        1.0, 0.0, 0.0,
        0.0, cr, -sr,
        0.0, sr, cr,
    );
    #[rustfmt::skip]
    let rot_p = Matrix3::new(
        cp, 0.0, sp,
        0.0, 1.0, 0.0,
        -sp, 0.0, cp,
    );
    #[rustfmt::skip]
    let rot_y = Matrix3::new(
        cy, -sy, 0.0,
        sy, cy, 0.0,
        0.0, 0.0, 1.0,
    );
    Ok(match order {
        RotationOrder::Xyz | RotationOrder::Pqr => rot_y * rot_p * rot_r,
        RotationOrder::Prq => rot_p * rot_y * rot_r,
        RotationOrder::Qpr => rot_y * rot_r * rot_p,
        RotationOrder::Qrp => rot_r * rot_y * rot_p,
        RotationOrder::Rpq => rot_p * rot_r * rot_y,
        RotationOrder::Rqp => rot_r * rot_p * rot_y,
    })
}

/// Body orientation and translation relative to the stance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyPose {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub translation: Vector3<f64>,
    #[serde(default)]
    pub order: RotationOrder,
    #[serde(default)]
    pub units: AngleUnits,
}

impl BodyPose {
    pub fn from_degrees(roll: f64, pitch: f64, yaw: f64) -> Self {
        BodyPose {
            roll,
            pitch,
            yaw,
            units: AngleUnits::Degrees,
            ..BodyPose::default()
        }
    }

    pub fn with_translation(mut self, translation: Vector3<f64>) -> Self {
        self.translation = translation;
        self
    }

    pub fn with_order(mut self, order: RotationOrder) -> Self {
        self.order = order;
        self
    }

    pub fn rotation(&self) -> Result<Matrix3<f64>, KinematicsError> {
        rotation_matrix([self.roll, self.pitch, self.yaw], self.order, self.units)
    }
}

/// Body layout shared by the four legs: x forward, y left, z up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotConfig {
    pub geometry: LegGeometry,
    /// Hip positions in the body frame, ordered FL, FR, RL, RR.
    pub mounts: [Vector3<f64>; 4],
    pub sides: [LegSide; 4],
    /// Foot positions in each hip frame when the body is level and untranslated.
    pub neutral_stance: [FootTarget; 4],
}

impl RobotConfig {
    /// Hips at `(±half_length, ±half_width, 0)` with every foot at `(0, 0, stance_z)` below its hip.
    pub fn symmetric(
        geometry: LegGeometry,
        half_length: f64,
        half_width: f64,
        stance_z: f64,
    ) -> Result<Self, KinematicsError> {
        if !(half_length.is_finite() && half_width.is_finite() && stance_z.is_finite()) {
            return Err(KinematicsError::InvalidArgument(
                "body dimensions must be finite".into(),
            ));
        }
        let config = RobotConfig {
            geometry,
            mounts: [
                Vector3::new(half_length, half_width, 0.0),
                Vector3::new(half_length, -half_width, 0.0),
                Vector3::new(-half_length, half_width, 0.0),
                Vector3::new(-half_length, -half_width, 0.0),
            ],
            sides: LegId::ALL.map(LegId::side),
            neutral_stance: [FootTarget::new(0.0, 0.0, stance_z); 4],
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks the side assignment and the left/right mount symmetry.
    pub fn validate(&self) -> Result<(), KinematicsError> {
        for leg in LegId::ALL {
            if self.sides[leg.index()] != leg.side() {
                return Err(KinematicsError::InvalidArgument(format!(
                    "{leg} must be a {} leg",
                    leg.side()
                )));
            }
        }
        let mirror = |v: &Vector3<f64>| Vector3::new(v.x, -v.y, v.z);
        for (left, right) in [(LegId::FL, LegId::FR), (LegId::RL, LegId::RR)] {
            if (mirror(&self.mounts[left.index()]) - self.mounts[right.index()]).norm() > 1e-12 {
                return Err(KinematicsError::InvalidArgument(format!(
                    "{left} and {right} mounts must mirror about the body x-axis"
                )));
            }
        }
        Ok(())
    }

    pub fn side(&self, leg: LegId) -> LegSide {
        self.sides[leg.index()]
    }

    /// Mean neutral foot position, the reference a commanded stance offset is measured against.
    pub fn stance_reference(&self) -> Vector3<f64> {
        self.neutral_stance
            .iter()
            .map(|s| s.to_vector())
            .sum::<Vector3<f64>>()
            / 4.0
    }
}

impl Default for RobotConfig {
    /// Default leg geometry, 0.20 m × 0.12 m hip rectangle, feet 0.15 m below the hips.
    fn default() -> Self {
        RobotConfig::symmetric(LegGeometry::default(), 0.10, 0.06, -0.15)
            .expect("default body layout is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegState {
    pub target: FootTarget,
    pub angles: JointAngles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodySolution {
    /// Ordered FL, FR, RL, RR.
    pub per_leg: [LegState; 4],
    pub pose: BodyPose,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BodyError {
    #[error(transparent)]
    InvalidPose(KinematicsError),

    #[error("leg {leg} unreachable: {source}")]
    LegUnreachable {
        leg: LegId,
        #[source]
        source: KinematicsError,
    },
}

/// Re-expresses each ground-fixed neutral foot point in its moved hip frame.
///
/// With body rotation `R`, translation `t`, mount `m` and neutral offset `s`, the world foot is
/// `m + s` and the target is `Rᵀ·(s − t − (R − I)·m)`, which equals `Rᵀ·(f − t − R·m)`.
pub fn leg_targets_from_pose(
    pose: &BodyPose,
    config: &RobotConfig,
) -> Result<[FootTarget; 4], BodyError> {
    let r = pose.rotation().map_err(BodyError::InvalidPose)?;
    if !pose.translation.iter().all(|v| v.is_finite()) {
        return Err(BodyError::InvalidPose(KinematicsError::InvalidArgument(
            "translation must be finite".into(),
        )));
    }
    let r_minus_i = r - Matrix3::identity();
    let rt = r.transpose();
    Ok(LegId::ALL.map(|leg| {
        let i = leg.index();
        let offset = config.neutral_stance[i].to_vector() - pose.translation
            - r_minus_i * config.mounts[i];
        FootTarget::from_vector(&(rt * offset))
    }))
}

/// Solves all four legs for a body pose. Fails as a whole if any leg is unreachable.
pub fn solve_body(pose: &BodyPose, config: &RobotConfig) -> Result<BodySolution, BodyError> {
    let targets = leg_targets_from_pose(pose, config)?;
    let mut per_leg = [LegState {
        target: FootTarget::default(),
        angles: JointAngles::default(),
    }; 4];
    for leg in LegId::ALL {
        let target = targets[leg.index()];
        let angles = ik_leg(&target, &config.geometry, config.side(leg))
            .map_err(|source| BodyError::LegUnreachable { leg, source })?;
        per_leg[leg.index()] = LegState { target, angles };
    }
    Ok(BodySolution {
        per_leg,
        pose: *pose,
    })
}
