use quadkin::trajectory::TrajectoryError;
use quadkin::{BodyError, KinematicsError};
use quadkin_service::{ConfigError, ServiceError, SnapshotError};

/// A failed invocation, classified by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or flag values.
    #[error("{0}")]
    Usage(String),

    /// An input file that does not parse.
    #[error("{0}")]
    Data(String),

    /// The request is well formed but has no solution.
    #[error("{0}")]
    Domain(String),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 2,
            CliError::Usage(_) => 64,
            CliError::Data(_) => 65,
            CliError::Io(_) => 74,
        }
    }

    pub fn io(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{context}: {e}"))
    }
}

impl From<KinematicsError> for CliError {
    fn from(e: KinematicsError) -> Self {
        match e {
            KinematicsError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<BodyError> for CliError {
    fn from(e: BodyError) -> Self {
        match e {
            BodyError::InvalidPose(k) => CliError::Usage(k.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<TrajectoryError> for CliError {
    fn from(e: TrajectoryError) -> Self {
        match e {
            TrajectoryError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            TrajectoryError::UnreachableWaypoint { .. } => CliError::Domain(e.to_string()),
            TrajectoryError::Csv(_) => CliError::Io(e.to_string()),
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Validation(_) | ServiceError::Conflict(_) => CliError::Usage(e.to_string()),
            ServiceError::Unreachable { .. } | ServiceError::UnreachableWaypoint { .. } => {
                CliError::Domain(e.to_string())
            }
            ServiceError::Stopped => CliError::Io(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<SnapshotError> for CliError {
    fn from(e: SnapshotError) -> Self {
        match e {
            SnapshotError::Io(_) => CliError::Io(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}
