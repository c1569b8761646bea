//! Quadruped leg kinematics.
//!
//! The crate is organised bottom-up:
//!
//! * [`leg`] holds the per-leg domain types (geometry, side, joint angles, foot targets).
//! * [`transform`] builds homogeneous transforms and the Denavit-Hartenberg leg chain.
//! * [`ik`] is the case-based closed-form inverse kinematics; [`fk`] is its constructive inverse.
//! * [`body`] turns a roll/pitch/yaw body pose into per-leg foot targets and joint angles.
//! * [`trajectory`] generates rectangular foot paths and joint-space streams.
//! * [`link`] is the servo angle wire format, the latest-wins channel and the paced writer.
//!
//! Angles are radians everywhere except at the wire and user-facing boundaries, which use degrees.

pub mod angle;
pub mod body;
mod error;
pub mod fk;
pub mod ik;
pub mod leg;
pub mod link;
pub mod trajectory;
pub mod transform;

pub use body::{
    leg_targets_from_pose, rotation_matrix, solve_body, AngleUnits, BodyError, BodyPose,
    BodySolution, LegState, RobotConfig, RotationOrder,
};
pub use error::{IkStage, KinematicsError};
pub use fk::{fk_foot, joint_chain_points, LegChain};
pub use ik::{
    classify_quadrant, ik_leg, ik_leg_detailed, solve_planar, solve_theta1, FrontalSolution,
    IntermediateAngles, LegSolution, PlanarSolution, Quadrant, QuadrantCase,
};
pub use leg::{FootTarget, JointAngles, LegGeometry, LegId, LegSide};
pub use transform::{elemental_transform, fk_dh_chain, Elemental, HomogeneousTransform};
