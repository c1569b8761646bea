//! Service configuration: a TOML file plus `QUADKIN_*` environment overrides.
//!
//! ```toml
//! listen = "127.0.0.1:8710"
//! rate_hz = 50.0            # serial frames per second
//! channel_capacity = 8      # frames buffered ahead of the serial writer
//! subscriber_buffer = 256   # stream payloads buffered per subscriber
//! mode = "sim_only"         # or "sim_and_serial"; defaults to sim_and_serial when [serial] is set
//!
//! [serial]
//! path = "/dev/ttyACM0"
//! baud = 115200
//!
//! [geometry]
//! la = 0.04
//! lb = 0.10
//! lc = 0.10
//!
//! [body]
//! half_length = 0.10
//! half_width = 0.06
//! stance_z = -0.15
//! # mounts = [[0.1, 0.06, 0.0], [0.1, -0.06, 0.0], [-0.1, 0.06, 0.0], [-0.1, -0.06, 0.0]]
//! ```
//!
//! Environment variables `QUADKIN_LISTEN`, `QUADKIN_SERIAL_PATH`, `QUADKIN_SERIAL_BAUD` and
//! `QUADKIN_RATE_HZ` override the file.

use std::net::SocketAddr;
use std::num::NonZeroUsize;
use std::path::Path;

use nalgebra::Vector3;
use quadkin::{FootTarget, LegGeometry, RobotConfig};
use serde::{Deserialize, Serialize};

use crate::document::Mode;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("invalid config value: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SerialConfig {
    pub path: String,
    #[serde(default = "default_baud")]
    pub baud: u32,
}

fn default_baud() -> u32 {
    quadkin::link::SerialDevice::DEFAULT_BAUD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub la: f64,
    pub lb: f64,
    pub lc: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let g = LegGeometry::default();
        GeometryConfig {
            la: g.la(),
            lb: g.lb(),
            lc: g.lc(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodyConfig {
    pub half_length: f64,
    pub half_width: f64,
    pub stance_z: f64,
    /// Explicit hip positions (FL, FR, RL, RR), replacing the rectangle.
    pub mounts: Option<[[f64; 3]; 4]>,
}

impl Default for BodyConfig {
    fn default() -> Self {
        BodyConfig {
            half_length: 0.10,
            half_width: 0.06,
            stance_z: -0.15,
            mounts: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub rate_hz: f64,
    pub channel_capacity: usize,
    pub subscriber_buffer: usize,
    pub mode: Option<Mode>,
    pub serial: Option<SerialConfig>,
    pub geometry: GeometryConfig,
    pub body: BodyConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8710)),
            rate_hz: 50.0,
            channel_capacity: 8,
            subscriber_buffer: 256,
            mode: None,
            serial: None,
            geometry: GeometryConfig::default(),
            body: BodyConfig::default(),
        }
    }
}

fn parse_env<T: std::str::FromStr>(name: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| ConfigError::Invalid(format!("{name}={value:?}: {e}")))
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: ServiceConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path` if given (defaults otherwise) and applies the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.display().to_string(),
                    source,
                })?;
                ServiceConfig::from_toml_str(&text)?
            }
            None => ServiceConfig::default(),
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = var("QUADKIN_LISTEN") {
            self.listen = parse_env("QUADKIN_LISTEN", &v)?;
        }
        if let Some(v) = var("QUADKIN_RATE_HZ") {
            self.rate_hz = parse_env("QUADKIN_RATE_HZ", &v)?;
        }
        if let Some(path) = var("QUADKIN_SERIAL_PATH") {
            let baud = self.serial.as_ref().map_or_else(default_baud, |s| s.baud);
            self.serial = Some(SerialConfig { path, baud });
        }
        if let Some(v) = var("QUADKIN_SERIAL_BAUD") {
            let baud = parse_env("QUADKIN_SERIAL_BAUD", &v)?;
            match self.serial.as_mut() {
                Some(s) => s.baud = baud,
                None => {
                    return Err(ConfigError::Invalid(
                        "QUADKIN_SERIAL_BAUD is set but no serial path is configured".into(),
                    ))
                }
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(ConfigError::Invalid(format!("rate_hz must be positive, got {}", self.rate_hz)));
        }
        if self.channel_capacity == 0 || self.subscriber_buffer == 0 {
            return Err(ConfigError::Invalid(
                "channel_capacity and subscriber_buffer must be at least 1".into(),
            ));
        }
        if self.mode == Some(Mode::SimAndSerial) && self.serial.is_none() {
            return Err(ConfigError::Invalid("mode sim_and_serial needs a [serial] section".into()));
        }
        self.robot().map(|_| ())
    }

    pub fn robot(&self) -> Result<RobotConfig, ConfigError> {
        let invalid = |e: quadkin::KinematicsError| ConfigError::Invalid(e.to_string());
        let g = &self.geometry;
        let geometry = LegGeometry::new(g.la, g.lb, g.lc).map_err(invalid)?;
        let b = &self.body;
        let mut robot =
            RobotConfig::symmetric(geometry, b.half_length, b.half_width, b.stance_z).map_err(invalid)?;
        if let Some(mounts) = b.mounts {
            robot.mounts = mounts.map(|m| Vector3::new(m[0], m[1], m[2]));
            robot.neutral_stance = [FootTarget::new(0.0, 0.0, b.stance_z); 4];
            robot.validate().map_err(invalid)?;
            if robot.mounts.iter().flatten().any(|v| !v.is_finite()) {
                return Err(ConfigError::Invalid("mounts must be finite".into()));
            }
        }
        Ok(robot)
    }

    pub fn initial_mode(&self) -> Mode {
        self.mode.unwrap_or(if self.serial.is_some() {
            Mode::SimAndSerial
        } else {
            Mode::SimOnly
        })
    }

    pub fn channel_capacity(&self) -> NonZeroUsize {
        NonZeroUsize::new(self.channel_capacity).unwrap_or(NonZeroUsize::MIN)
    }
}
