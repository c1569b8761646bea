use quadkin::trajectory::TrajectoryError;
use quadkin::{BodyError, IkStage, KinematicsError, LegId};
use serde::Serialize;

/// Why a command was not applied. A rejected command never changes service state.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ServiceError {
    #[error("invalid document: {0}")]
    Validation(String),

    #[error("leg {leg} rejected: {message}")]
    Unreachable {
        leg: LegId,
        stage: Option<IkStage>,
        message: String,
    },

    #[error("trajectory rejected at waypoint {index}: {message}")]
    UnreachableWaypoint {
        index: usize,
        stage: Option<IkStage>,
        message: String,
    },

    #[error("{0}")]
    Conflict(String),

    #[error("service is shut down")]
    Stopped,
}

/// JSON body of an error response.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leg: Option<LegId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<IkStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

impl ServiceError {
    pub(crate) fn from_leg(leg: LegId, source: KinematicsError) -> Self {
        match source {
            KinematicsError::InvalidArgument(m) => ServiceError::Validation(m),
            other => ServiceError::Unreachable {
                leg,
                stage: other.stage(),
                message: other.to_string(),
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::Validation(_) => "validation",
            ServiceError::Unreachable { .. } | ServiceError::UnreachableWaypoint { .. } => "unreachable",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::Stopped => "stopped",
        }
    }

    pub fn body(&self) -> ErrorBody {
        let (leg, stage, index) = match self {
            ServiceError::Unreachable { leg, stage, .. } => (Some(*leg), *stage, None),
            ServiceError::UnreachableWaypoint { index, stage, .. } => (None, *stage, Some(*index)),
            _ => (None, None, None),
        };
        ErrorBody {
            error: self.kind(),
            message: self.to_string(),
            leg,
            stage,
            index,
        }
    }
}

impl From<BodyError> for ServiceError {
    fn from(e: BodyError) -> Self {
        match e {
            BodyError::InvalidPose(k) => ServiceError::Validation(k.to_string()),
            BodyError::LegUnreachable { leg, source } => ServiceError::from_leg(leg, source),
        }
    }
}

impl From<TrajectoryError> for ServiceError {
    fn from(e: TrajectoryError) -> Self {
        match e {
            TrajectoryError::UnreachableWaypoint { index, source } => ServiceError::UnreachableWaypoint {
                index,
                stage: source.stage(),
                message: source.to_string(),
            },
            other => ServiceError::Validation(other.to_string()),
        }
    }
}
