//! Homogeneous transforms and the Denavit-Hartenberg leg chain.

use std::f64::consts::FRAC_PI_2;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::{ensure_finite, KinematicsError};
use crate::leg::{JointAngles, LegGeometry};

/// A rigid transform stored as a 4×4 matrix with bottom row `(0, 0, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousTransform(Matrix4<f64>);

impl HomogeneousTransform {
    pub fn identity() -> Self {
        HomogeneousTransform(Matrix4::identity())
    }

    pub fn from_parts(rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(translation);
        HomogeneousTransform(m)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Largest deviation of the rotation block from orthonormality and of its determinant from +1.
    pub fn rigidity_error(&self) -> f64 {
        let r = self.rotation();
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        ortho.max((r.determinant() - 1.0).abs())
    }
}

impl Mul for HomogeneousTransform {
    type Output = HomogeneousTransform;

    fn mul(self, rhs: HomogeneousTransform) -> HomogeneousTransform {
        HomogeneousTransform(self.0 * rhs.0)
    }
}

/// One of the six elemental motions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elemental {
    RotX(f64),
    RotY(f64),
    RotZ(f64),
    TransX(f64),
    TransY(f64),
    TransZ(f64),
}

/// The standard 4×4 matrix of a single rotation (radians) or translation (meters).
pub fn elemental_transform(kind: Elemental) -> Result<HomogeneousTransform, KinematicsError> {
    let rot = |axis: usize, angle: f64| -> Result<HomogeneousTransform, KinematicsError> {
        let (s, c) = ensure_finite("rotation angle", angle)?.sin_cos();
        let r = match axis {
            0 => Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
            1 => Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
            _ => Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        };
        Ok(HomogeneousTransform::from_parts(&r, &Vector3::zeros()))
    };
    let trans = |axis: usize, length: f64| -> Result<HomogeneousTransform, KinematicsError> {
        let mut t = Vector3::zeros();
        t[axis] = ensure_finite("translation", length)?;
        Ok(HomogeneousTransform::from_parts(&Matrix3::identity(), &t))
    };
    match kind {
        Elemental::RotX(a) => rot(0, a),
        Elemental::RotY(a) => rot(1, a),
        Elemental::RotZ(a) => rot(2, a),
        Elemental::TransX(l) => trans(0, l),
        Elemental::TransY(l) => trans(1, l),
        Elemental::TransZ(l) => trans(2, l),
    }
}

fn chain(parts: &[Elemental]) -> Result<HomogeneousTransform, KinematicsError> {
    parts
        .iter()
        .try_fold(HomogeneousTransform::identity(), |acc, &p| {
            Ok(acc * elemental_transform(p)?)
        })
}

/// Hip-to-foot transform `T01 · T12 · T23 · T34` of the DH table
/// (θ1: d=0, α=90°, a=La; θ2: a=Lb; θ3: a=Lc) preceded by a 90° turn about y.
///
/// `T12` is built as `RotZ(θ1)·TransX(La)·RotX(90°)`, which keeps it rigid. The translation
/// column equals
///
/// ```text
/// x = Lc·sin(θ2+θ3) + Lb·sin θ2
/// y = (La + Lc·cos(θ2+θ3) + Lb·cos θ2)·sin θ1
/// z = −cos θ1·(La + Lc·cos(θ2+θ3) + Lb·cos θ2)
/// ```
///
/// This zero pose differs from the inverse-kinematics angle datum; see [`crate::fk::fk_foot`]
/// for the forward map that inverts [`crate::ik::ik_leg`].
pub fn fk_dh_chain(
    angles: &JointAngles,
    geom: &LegGeometry,
) -> Result<HomogeneousTransform, KinematicsError> {
    use Elemental::*;
    let t01 = chain(&[RotY(FRAC_PI_2)])?;
    let t12 = chain(&[RotZ(angles.theta1), TransX(geom.la()), RotX(FRAC_PI_2)])?;
    let t23 = chain(&[RotZ(angles.theta2), TransX(geom.lb())])?;
    let t34 = chain(&[RotZ(angles.theta3), TransX(geom.lc())])?;
    Ok(t01 * t12 * t23 * t34)
}
