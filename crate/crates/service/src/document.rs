//! JSON documents exchanged with clients. Angles are degrees, lengths meters.

use nalgebra::{Matrix3, Vector3};
use quadkin::angle::to_wrapped_degrees;
use quadkin::link::{AngleFrame, LinkStats};
use quadkin::{
    joint_chain_points, AngleUnits, BodyPose, FootTarget, LegId, LegState, RobotConfig, RotationOrder,
};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

/// Whether accepted states are also written to the serial link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SimOnly,
    SimAndSerial,
}

/// Body pose command. `x`, `y`, `z` place the stance: the mean foot position relative to the
/// hips, so `z = −0.15` is the neutral standing height of the default robot and raising the
/// body means a more negative `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseDocument {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<String>,
}

impl PoseDocument {
    pub fn neutral(robot: &RobotConfig) -> Self {
        let s = robot.stance_reference();
        PoseDocument {
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
            x: s.x,
            y: s.y,
            z: s.z,
            order: None,
        }
    }

    pub fn to_body_pose(&self, robot: &RobotConfig) -> Result<BodyPose, ServiceError> {
        let values = [self.roll, self.pitch, self.yaw, self.x, self.y, self.z];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ServiceError::Validation("pose values must be finite numbers".into()));
        }
        let order = match &self.order {
            Some(token) => token
                .parse::<RotationOrder>()
                .map_err(|e| ServiceError::Validation(e.to_string()))?,
            None => RotationOrder::default(),
        };
        Ok(BodyPose {
            roll: self.roll,
            pitch: self.pitch,
            yaw: self.yaw,
            translation: robot.stance_reference() - Vector3::new(self.x, self.y, self.z),
            order,
            units: AngleUnits::Degrees,
        })
    }
}

/// Foot target in one leg's hip frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FootDocument {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FootDocument {
    pub fn to_target(self) -> Result<FootTarget, ServiceError> {
        if [self.x, self.y, self.z].iter().any(|v| !v.is_finite()) {
            return Err(ServiceError::Validation("foot values must be finite numbers".into()));
        }
        Ok(FootTarget::new(self.x, self.y, self.z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegPayload {
    pub leg: LegId,
    /// Foot target in the hip frame.
    pub target: [f64; 3],
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    /// Hip, coxa end, knee and foot in the world frame.
    pub chain: [[f64; 3]; 4],
    /// True when the angles come from a foot or trajectory command rather than the pose.
    #[serde(rename = "override")]
    pub overridden: bool,
}

impl LegPayload {
    pub fn frame(&self) -> AngleFrame {
        AngleFrame::new(self.leg, self.t1, self.t2, self.t3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeSource {
    Startup,
    Pose,
    Foot,
    Trajectory,
    Import,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryProgress {
    pub run_id: u64,
    pub step: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadStatus {
    pub source: ChangeSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectoryProgress>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_error: Option<String>,
}

/// One solved state as broadcast on the stream and returned by `GET /state`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamPayload {
    pub epoch: u64,
    pub mode: Mode,
    pub pose: PoseDocument,
    pub legs: [LegPayload; 4],
    pub status: PayloadStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkStats>,
}

impl StreamPayload {
    pub fn frames(&self) -> [AngleFrame; 4] {
        self.legs.map(|l| l.frame())
    }
}

fn to_array(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Per-leg payload for a solved leg under body rotation `rotation` and translation
/// `translation`. Chain points go from the hip frame to the world as `t + R·(m + p)`.
pub fn leg_payload(
    leg: LegId,
    state: &LegState,
    overridden: bool,
    robot: &RobotConfig,
    rotation: &Matrix3<f64>,
    translation: &Vector3<f64>,
) -> Result<LegPayload, ServiceError> {
    let chain = joint_chain_points(&state.angles, &robot.geometry, robot.side(leg))
        .map_err(|source| ServiceError::from_leg(leg, source))?;
    let mount = robot.mounts[leg.index()];
    let world = chain.points().map(|p| to_array(&(translation + rotation * (mount + p))));
    let a = state.angles;
    Ok(LegPayload {
        leg,
        target: to_array(&state.target.to_vector()),
        t1: to_wrapped_degrees(a.theta1),
        t2: to_wrapped_degrees(a.theta2),
        t3: to_wrapped_degrees(a.theta3),
        chain: world,
        overridden,
    })
}
