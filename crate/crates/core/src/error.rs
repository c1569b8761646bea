use std::fmt;

/// Which stage of the leg solve rejected a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IkStage {
    /// The Y-Z (front view) stage that yields θ1.
    Frontal,
    /// The in-leg-plane two-link stage that yields θ2 and θ3.
    Planar,
}

impl fmt::Display for IkStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IkStage::Frontal => f.write_str("frontal"),
            IkStage::Planar => f.write_str("planar"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KinematicsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate target: the {stage} stage has no direction at the origin")]
    DegenerateTarget { stage: IkStage },

    #[error("unreachable in frontal stage: projection {projection} m is shorter than the coxa length {la} m")]
    UnreachableFrontal { projection: f64, la: f64 },

    #[error("unreachable in planar stage: reach {reach} m outside [{min}, {max}] m")]
    UnreachablePlanar { reach: f64, min: f64, max: f64 },

    #[error("convention violation: alpha1 = {alpha1} rad lies in no quadrant case")]
    ConventionViolation { alpha1: f64 },
}

impl KinematicsError {
    /// The solver stage that produced the error, if any.
    pub fn stage(&self) -> Option<IkStage> {
        match self {
            KinematicsError::DegenerateTarget { stage } => Some(*stage),
            KinematicsError::UnreachableFrontal { .. } => Some(IkStage::Frontal),
            KinematicsError::UnreachablePlanar { .. } => Some(IkStage::Planar),
            KinematicsError::InvalidArgument(_) | KinematicsError::ConventionViolation { .. } => {
                None
            }
        }
    }

    /// True for reachability/degeneracy failures (domain failures), false for bad input.
    pub fn is_domain_failure(&self) -> bool {
        self.stage().is_some()
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<f64, KinematicsError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(KinematicsError::InvalidArgument(format!(
            "{name} must be finite, got {value}"
        )))
    }
}
