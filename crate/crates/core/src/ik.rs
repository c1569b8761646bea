//! Case-based closed-form leg inverse kinematics.
//!
//! The solve runs in two stages. The frontal (Y-Z) stage picks one of four quadrant cases for
//! the foot direction `α1`, removes the coxa offset through the right triangle with legs `La`
//! and the in-plane drop `d`, and yields θ1. The planar stage solves the femur/tibia pair with
//! the law of cosines in the tilted X-Z leg plane and yields θ2 and θ3.
//!
//! Boundary rules (the four printed cases leave the axes unassigned):
//!
//! | region                    | case |
//! |---------------------------|------|
//! | `z > 0, y >= 0`           | C1   |
//! | `z > 0, y < 0`            | C2   |
//! | `z <= 0, y <= 0`, not 0   | C3   |
//! | `z <= 0, y > 0`           | C4   |

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::angle::wrap_angle;
use crate::error::{ensure_finite, IkStage, KinematicsError};
use crate::leg::{FootTarget, JointAngles, LegGeometry, LegSide};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    C1,
    C2,
    C3,
    C4,
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Quadrant::C1 => "C1",
            Quadrant::C2 => "C2",
            Quadrant::C3 => "C3",
            Quadrant::C4 => "C4",
        };
        f.write_str(s)
    }
}

/// The selected case and its `α1`.
///
/// Ranges: C1 `[0, π/2)`, C2 `(π/2, π)`, C3 `[π, 3π/2]`, C4 `[3π/2, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantCase {
    pub case_id: Quadrant,
    pub alpha1: f64,
}

/// Helper quantities of the derivation, kept for inspection and debugging.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntermediateAngles {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    /// Hip-to-foot distance in the leg plane.
    pub r: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    /// Y-Z projection length `A`.
    pub a_proj: f64,
    /// Signed in-leg-plane foot coordinate, negative downward.
    pub d_plane: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontalSolution {
    pub theta1: f64,
    pub case: QuadrantCase,
    pub helpers: IntermediateAngles,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarSolution {
    pub theta2: f64,
    pub theta3: f64,
    pub helpers: IntermediateAngles,
}

/// Full leg solve with the selected case and every helper quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegSolution {
    pub angles: JointAngles,
    pub case: QuadrantCase,
    pub helpers: IntermediateAngles,
}

/// Selects the quadrant case of `(y, z)` and computes `α1`.
pub fn classify_quadrant(y: f64, z: f64) -> Result<QuadrantCase, KinematicsError> {
    ensure_finite("y", y)?;
    ensure_finite("z", z)?;
    if y == 0.0 && z == 0.0 {
        return Err(KinematicsError::DegenerateTarget {
            stage: IkStage::Frontal,
        });
    }
    // |atan(y/z)| without dividing by z
    let t = y.abs().atan2(z.abs());
    let (case_id, alpha1) = if z > 0.0 {
        if y >= 0.0 {
            (Quadrant::C1, t)
        } else {
            (Quadrant::C2, PI - t)
        }
    } else if y > 0.0 {
        (Quadrant::C4, TAU - t)
    } else {
        (Quadrant::C3, PI + t)
    };
    Ok(QuadrantCase { case_id, alpha1 })
}

/// Frontal stage: θ1 from the Y-Z components of the target.
///
/// `α2 = asin(La / A)`, `α3 = π/2 − α2`, then θ1 is `α1 − α3` for right legs and `α1 + α3` for
/// left legs, wrapped into `[0, 2π)`.
pub fn solve_theta1(
    target: &FootTarget,
    geom: &LegGeometry,
    side: LegSide,
) -> Result<FrontalSolution, KinematicsError> {
    ensure_finite("x", target.x)?;
    let case = classify_quadrant(target.y, target.z)?;
    let la = geom.la();
    let a_proj = target.frontal_projection();
    if a_proj < la {
        return Err(KinematicsError::UnreachableFrontal {
            projection: a_proj,
            la,
        });
    }
    let alpha2 = (la / a_proj).min(1.0).asin();
    let alpha3 = FRAC_PI_2 - alpha2;
    let theta1 = match side {
        LegSide::Right => case.alpha1 - alpha3,
        LegSide::Left => case.alpha1 + alpha3,
    };
    let d_plane = -((a_proj - la) * (a_proj + la)).max(0.0).sqrt();
    Ok(FrontalSolution {
        theta1: wrap_angle(theta1),
        case,
        helpers: IntermediateAngles {
            alpha1: case.alpha1,
            alpha2,
            alpha3,
            a_proj,
            d_plane,
            ..IntermediateAngles::default()
        },
    })
}

/// Planar stage: θ2 and θ3 for the foot at `(x, d_plane)` in the leg plane.
///
/// `R1` is the direction of the foot in the plane (shifted by π for left legs), `R2` the hip
/// angle and `R3` the knee angle of the femur/tibia triangle; `θ2 = R1 − R2`, `θ3 = π − R3`.
pub fn solve_planar(
    x: f64,
    d_plane: f64,
    geom: &LegGeometry,
    side: LegSide,
) -> Result<PlanarSolution, KinematicsError> {
    ensure_finite("x", x)?;
    ensure_finite("d_plane", d_plane)?;
    if x == 0.0 && d_plane == 0.0 {
        return Err(KinematicsError::DegenerateTarget {
            stage: IkStage::Planar,
        });
    }
    let (lb, lc) = (geom.lb(), geom.lc());
    let (min, max) = geom.planar_reach();
    let r = x.hypot(d_plane);
    if r > max || r < min {
        return Err(KinematicsError::UnreachablePlanar { reach: r, min, max });
    }
    let direction = d_plane.atan2(x);
    let r1 = match side {
        LegSide::Right => wrap_angle(direction),
        LegSide::Left => wrap_angle(direction + PI),
    };
    let r2 = ((lb * lb + r * r - lc * lc) / (2.0 * lb * r))
        .clamp(-1.0, 1.0)
        .acos();
    let r3 = ((lb * lb + lc * lc - r * r) / (2.0 * lb * lc))
        .clamp(-1.0, 1.0)
        .acos();
    Ok(PlanarSolution {
        theta2: wrap_angle(r1 - r2),
        theta3: PI - r3,
        helpers: IntermediateAngles {
            r,
            r1,
            r2,
            r3,
            d_plane,
            ..IntermediateAngles::default()
        },
    })
}

/// Solves one leg, returning the angles together with the case and helper values.
pub fn ik_leg_detailed(
    target: &FootTarget,
    geom: &LegGeometry,
    side: LegSide,
) -> Result<LegSolution, KinematicsError> {
    let frontal = solve_theta1(target, geom, side)?;
    let planar = solve_planar(target.x, frontal.helpers.d_plane, geom, side)?;
    Ok(LegSolution {
        angles: JointAngles::new(frontal.theta1, planar.theta2, planar.theta3),
        case: frontal.case,
        helpers: IntermediateAngles {
            r: planar.helpers.r,
            r1: planar.helpers.r1,
            r2: planar.helpers.r2,
            r3: planar.helpers.r3,
            ..frontal.helpers
        },
    })
}

/// Joint angles that place the foot at `target` (hip frame), all in `[0, 2π)`.
pub fn ik_leg(
    target: &FootTarget,
    geom: &LegGeometry,
    side: LegSide,
) -> Result<JointAngles, KinematicsError> {
    ik_leg_detailed(target, geom, side).map(|s| s.angles)
}
