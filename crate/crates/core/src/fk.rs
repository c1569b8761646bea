//! Forward map that inverts [`crate::ik::ik_leg`], plus the joint chain used for rendering.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Rotation2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, KinematicsError};
use crate::ik::Quadrant;
use crate::leg::{FootTarget, JointAngles, LegGeometry, LegSide};

const THREE_HALF_PI: f64 = 3.0 * FRAC_PI_2;

/// `α1` values this close below π (or above 0 after wrapping) are read as the straight-down
/// foot of C3 (or C4). Recomputing `θ1 ± α3` costs a few ulp, and a foot exactly below the hip
/// sits on the C2/C3 (and C4/C1) seam.
const VERTICAL_EPS: f64 = 1e-12;

struct PlanarFoot {
    x: f64,
    d: f64,
    femur_angle: f64,
}

fn planar_foot(angles: &JointAngles, geom: &LegGeometry, side: LegSide) -> PlanarFoot {
    let femur_angle = match side {
        LegSide::Right => angles.theta2,
        LegSide::Left => angles.theta2 + PI,
    };
    let tibia_angle = femur_angle + angles.theta3;
    PlanarFoot {
        x: geom.lb() * femur_angle.cos() + geom.lc() * tibia_angle.cos(),
        d: geom.lb() * femur_angle.sin() + geom.lc() * tibia_angle.sin(),
        femur_angle,
    }
}

fn case_for_alpha1(alpha1: f64, side: LegSide) -> Result<Quadrant, KinematicsError> {
    let case = if alpha1 < VERTICAL_EPS {
        Quadrant::C4
    } else if alpha1 < FRAC_PI_2 {
        Quadrant::C1
    } else if alpha1 == FRAC_PI_2 {
        return Err(KinematicsError::ConventionViolation { alpha1 });
    } else if alpha1 < PI - VERTICAL_EPS {
        Quadrant::C2
    } else if alpha1 < THREE_HALF_PI {
        Quadrant::C3
    } else if alpha1 == THREE_HALF_PI {
        match side {
            LegSide::Right => Quadrant::C4,
            LegSide::Left => Quadrant::C3,
        }
    } else {
        Quadrant::C4
    };
    Ok(case)
}

/// Foot position (hip frame) for the given joint angles under the inverse-kinematics
/// convention.
///
/// The planar foot comes from the femur/tibia pair, the coxa offset is restored through
/// `A = √(La² + d²)`, `α1 = θ1 ± α3`, and `(y, z)` is recovered with the inverse of the quadrant
/// case that `α1` falls in. A foot with a positive in-plane coordinate is reported at its
/// mirror `d → −d`, which is the only half-plane the solver produces.
pub fn fk_foot(
    angles: &JointAngles,
    geom: &LegGeometry,
    side: LegSide,
) -> Result<FootTarget, KinematicsError> {
    for (name, v) in [("theta1", angles.theta1), ("theta2", angles.theta2), ("theta3", angles.theta3)] {
        ensure_finite(name, v)?;
    }
    let planar = planar_foot(angles, geom, side);
    let la = geom.la();
    let a_proj = la.hypot(planar.d);
    if a_proj == 0.0 {
        return Ok(FootTarget::new(planar.x, 0.0, 0.0));
    }
    let alpha3 = FRAC_PI_2 - (la / a_proj).min(1.0).asin();
    let alpha1 = crate::angle::wrap_angle(match side {
        LegSide::Right => angles.theta1 + alpha3,
        LegSide::Left => angles.theta1 - alpha3,
    });
    let (s, c) = alpha1.sin_cos();
    let (y, z) = match case_for_alpha1(alpha1, side)? {
        Quadrant::C1 | Quadrant::C3 => (a_proj * s, a_proj * c),
        Quadrant::C2 | Quadrant::C4 => (-a_proj * s, -a_proj * c),
    };
    Ok(FootTarget::new(planar.x, y, z))
}

/// Joint positions of one leg in its hip frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegChain {
    pub hip: Vector3<f64>,
    pub coxa_end: Vector3<f64>,
    pub knee: Vector3<f64>,
    pub foot: Vector3<f64>,
}

impl LegChain {
    pub fn points(&self) -> [Vector3<f64>; 4] {
        [self.hip, self.coxa_end, self.knee, self.foot]
    }
}

/// Hip, coxa end, knee and foot for the given angles.
///
/// The foot is exactly [`fk_foot`]; the coxa end sits on the outward side of the foot
/// (negative y rotation for right legs, positive for left legs) so that left and right chains
/// mirror each other.
pub fn joint_chain_points(
    angles: &JointAngles,
    geom: &LegGeometry,
    side: LegSide,
) -> Result<LegChain, KinematicsError> {
    let foot = fk_foot(angles, geom, side)?;
    let planar = planar_foot(angles, geom, side);
    let la = geom.la();
    let frontal = Vector2::new(foot.y, foot.z);
    let a_proj = frontal.norm();

    let (coxa, down) = if a_proj == 0.0 {
        (Vector2::zeros(), Vector2::new(0.0, -1.0))
    } else {
        let outward = match side {
            LegSide::Right => -1.0,
            LegSide::Left => 1.0,
        };
        let alpha3 = FRAC_PI_2 - (la / a_proj).min(1.0).asin();
        let coxa_dir = Rotation2::new(outward * alpha3) * (frontal / a_proj);
        let normal = Rotation2::new(-outward * FRAC_PI_2) * coxa_dir;
        let down = if planar.d > 0.0 { normal } else { -normal };
        (coxa_dir * la, down)
    };
    let lift = |v: Vector2<f64>| Vector3::new(0.0, v.x, v.y);
    let coxa_end = lift(coxa);
    let (s, c) = planar.femur_angle.sin_cos();
    let knee = coxa_end + Vector3::x() * (geom.lb() * c) + lift(down) * (geom.lb() * s);
    Ok(LegChain {
        hip: Vector3::zeros(),
        coxa_end,
        knee,
        foot: foot.to_vector(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ik::ik_leg;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    fn geom(la: f64, lb: f64, lc: f64) -> LegGeometry {
        LegGeometry::new(la, lb, lc).unwrap()
    }

    #[test]
    fn worked_example_round_trips() {
        let g = geom(1.0, 1.0, 1.0);
        let t = FootTarget::new(0.5, 1.0, -1.0);
        let back = fk_foot(&ik_leg(&t, &g, LegSide::Right).unwrap(), &g, LegSide::Right).unwrap();
        assert!(back.distance(&t) < 1e-9, "{back:?}");
    }

    #[test]
    fn collinear_links_reach_full_length() {
        let g = geom(0.04, 0.1, 0.08);
        for side in [LegSide::Left, LegSide::Right] {
            for (t1, t2) in [(0.3, 1.0), (4.0, 5.5), (2.0, 0.0)] {
                let a = JointAngles::new(t1, t2, 0.0);
                let chain = joint_chain_points(&a, &g, side).unwrap();
                let planar = (chain.foot - chain.coxa_end).norm();
                assert_abs_diff_eq!(planar, 0.18, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn straight_down_targets_survive_the_case_seam() {
        let g = LegGeometry::default();
        for side in [LegSide::Left, LegSide::Right] {
            for x in [-0.03, 0.0, 0.02] {
                let t = FootTarget::new(x, 0.0, -0.15);
                let back = fk_foot(&ik_leg(&t, &g, side).unwrap(), &g, side).unwrap();
                assert!(back.distance(&t) < 1e-12, "{side} {back:?}");
            }
        }
    }

    #[test]
    fn alpha1_on_the_seam_is_a_convention_violation() {
        // La = 0 makes α3 exactly π/2, so θ1 = 0 puts α1 on π/2, which no case covers.
        let err = fk_foot(&JointAngles::new(0.0, 1.0, 1.0), &geom(0.0, 1.0, 1.0), LegSide::Right)
            .unwrap_err();
        assert!(matches!(err, KinematicsError::ConventionViolation { .. }));
    }

    #[test]
    fn chain_links_are_rigid() {
        let g = geom(0.04, 0.11, 0.09);
        for side in [LegSide::Left, LegSide::Right] {
            for i in 0..200 {
                let f = i as f64;
                let a = JointAngles::new((f * 0.37) % TAU, (f * 1.13) % TAU, (f * 0.71) % PI);
                let Ok(chain) = joint_chain_points(&a, &g, side) else { continue };
                assert_abs_diff_eq!((chain.coxa_end - chain.hip).norm(), g.la(), epsilon = 1e-12);
                assert_abs_diff_eq!((chain.knee - chain.coxa_end).norm(), g.lb(), epsilon = 1e-12);
                assert_abs_diff_eq!((chain.foot - chain.knee).norm(), g.lc(), epsilon = 1e-12);
                assert_eq!(chain.foot, fk_foot(&a, &g, side).unwrap().to_vector());
            }
        }
    }

    // Brute force over a 20³ grid: the right solution of (x, y, z) and the left solution of
    // (x, −y, z) land on mirrored feet, and so do their whole chains.
    #[test]
    fn left_and_right_mirror() {
        let g = LegGeometry::default();
        let axis = |i: usize, lo: f64, hi: f64| lo + (hi - lo) * (i as f64 + 0.5) / 20.0;
        let mut checked = 0;
        for i in 0..20 {
            for j in 0..20 {
                for k in 0..20 {
                    let t = FootTarget::new(axis(i, -0.12, 0.12), axis(j, -0.2, 0.2), axis(k, -0.2, 0.2));
                    let m = FootTarget::new(t.x, -t.y, t.z);
                    let (Ok(ar), Ok(al)) = (ik_leg(&t, &g, LegSide::Right), ik_leg(&m, &g, LegSide::Left))
                    else {
                        continue;
                    };
                    let fr = fk_foot(&ar, &g, LegSide::Right).unwrap();
                    let fl = fk_foot(&al, &g, LegSide::Left).unwrap();
                    assert_abs_diff_eq!(fr.x, fl.x, epsilon = 1e-12);
                    assert_abs_diff_eq!(fr.y, -fl.y, epsilon = 1e-12);
                    assert_abs_diff_eq!(fr.z, fl.z, epsilon = 1e-12);
                    let cr = joint_chain_points(&ar, &g, LegSide::Right).unwrap();
                    let cl = joint_chain_points(&al, &g, LegSide::Left).unwrap();
                    for (p, q) in cr.points().iter().zip(cl.points()) {
                        assert_abs_diff_eq!(*p, Vector3::new(q.x, -q.y, q.z), epsilon = 1e-12);
                    }
                    checked += 1;
                }
            }
        }
        assert!(checked > 1000, "only {checked} reachable grid points");
    }
}
