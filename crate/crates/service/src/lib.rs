//! Live pose-steering service for the quadkin kinematics engine.
//!
//! One command processor owns the robot state ([`service`]); clients reach it over HTTP and a
//! WebSocket stream ([`http`]). Accepted states can be exported as JSON or CSV ([`snapshot`])
//! and, in serial mode, are written to the servo controller through the latest-wins link.

pub mod config;
pub mod document;
mod error;
pub mod http;
pub mod service;
pub mod snapshot;

pub use config::{ConfigError, SerialConfig, ServiceConfig};
pub use document::{
    ChangeSource, FootDocument, LegPayload, Mode, PayloadStatus, PoseDocument, StreamPayload,
    TrajectoryProgress,
};
pub use error::{ErrorBody, ServiceError};
pub use service::{
    spawn_service, LinkReport, ServiceHandle, ServiceOptions, SharedPayload, TrajectoryRequest,
    TrajectoryRun,
};
pub use snapshot::{export_snapshot, import_snapshot, SnapshotError, SnapshotFormat};

impl ServiceConfig {
    /// Service options derived from this configuration.
    pub fn options(&self) -> ServiceOptions {
        ServiceOptions {
            initial_mode: self.initial_mode(),
            channel_capacity: self.channel_capacity(),
            subscriber_buffer: self.subscriber_buffer,
            writer: quadkin::link::WriterConfig::default().with_rate(self.rate_hz),
        }
    }
}
