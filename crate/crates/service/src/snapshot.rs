//! Static exports of one solved state.
//!
//! JSON is the [`StreamPayload`] itself. CSV has one row per leg and chain point (16 rows) plus
//! a header; every row repeats the leg's angles and target and the pose echo so that any single
//! row can be plotted on its own. Numbers use the shortest representation that reads back to
//! the same value, so both formats re-import exactly.

use std::io::{Read, Write};
use std::str::FromStr;

use quadkin::LegId;
use serde::{Deserialize, Serialize};

use crate::document::{
    ChangeSource, LegPayload, Mode, PayloadStatus, PoseDocument, StreamPayload,
};

pub const POINT_NAMES: [&str; 4] = ["hip", "coxa_end", "knee", "foot"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    Json,
    Csv,
}

impl FromStr for SnapshotFormat {
    type Err = SnapshotError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(SnapshotFormat::Json),
            "csv" => Ok(SnapshotFormat::Csv),
            other => Err(SnapshotError::Schema(format!("unknown snapshot format {other:?}"))),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("snapshot I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error("snapshot JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("snapshot CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("snapshot schema: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CsvRow {
    epoch: u64,
    leg: LegId,
    point: String,
    x: f64,
    y: f64,
    z: f64,
    t1: f64,
    t2: f64,
    t3: f64,
    target_x: f64,
    target_y: f64,
    target_z: f64,
    #[serde(rename = "override")]
    overridden: bool,
    roll: f64,
    pitch: f64,
    yaw: f64,
    pose_x: f64,
    pose_y: f64,
    pose_z: f64,
    order: String,
    mode: Mode,
}

pub fn export_snapshot<W: Write>(
    payload: &StreamPayload,
    format: SnapshotFormat,
    mut out: W,
) -> Result<(), SnapshotError> {
    match format {
        SnapshotFormat::Json => {
            serde_json::to_writer_pretty(&mut out, payload)?;
            out.write_all(b"\n")?;
        }
        SnapshotFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(out);
            let p = &payload.pose;
            for leg in &payload.legs {
                for (name, point) in POINT_NAMES.iter().zip(&leg.chain) {
                    w.serialize(CsvRow {
                        epoch: payload.epoch,
                        leg: leg.leg,
                        point: (*name).to_owned(),
                        x: point[0],
                        y: point[1],
                        z: point[2],
                        t1: leg.t1,
                        t2: leg.t2,
                        t3: leg.t3,
                        target_x: leg.target[0],
                        target_y: leg.target[1],
                        target_z: leg.target[2],
                        overridden: leg.overridden,
                        roll: p.roll,
                        pitch: p.pitch,
                        yaw: p.yaw,
                        pose_x: p.x,
                        pose_y: p.y,
                        pose_z: p.z,
                        order: p.order.clone().unwrap_or_default(),
                        mode: payload.mode,
                    })?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Reads either format back. A CSV snapshot carries no status or link counters; those come
/// back as an import with no link.
pub fn import_snapshot<R: Read>(input: R, format: SnapshotFormat) -> Result<StreamPayload, SnapshotError> {
    match format {
        SnapshotFormat::Json => Ok(serde_json::from_reader(input)?),
        SnapshotFormat::Csv => {
            let rows = csv::Reader::from_reader(input)
                .deserialize::<CsvRow>()
                .collect::<Result<Vec<_>, _>>()?;
            if rows.len() != 16 {
                return Err(SnapshotError::Schema(format!("expected 16 rows, found {}", rows.len())));
            }
            let first = &rows[0];
            let pose = PoseDocument {
                roll: first.roll,
                pitch: first.pitch,
                yaw: first.yaw,
                x: first.pose_x,
                y: first.pose_y,
                z: first.pose_z,
                order: (!first.order.is_empty()).then(|| first.order.clone()),
            };
            let mut legs = Vec::with_capacity(4);
            for (leg, group) in LegId::ALL.into_iter().zip(rows.chunks(4)) {
                let head = &group[0];
                let mut chain = [[0.0; 3]; 4];
                for ((slot, row), name) in chain.iter_mut().zip(group).zip(POINT_NAMES) {
                    if row.leg != leg || row.point != name {
                        return Err(SnapshotError::Schema(format!(
                            "expected {leg} {name}, found {} {}",
                            row.leg, row.point
                        )));
                    }
                    *slot = [row.x, row.y, row.z];
                }
                legs.push(LegPayload {
                    leg,
                    target: [head.target_x, head.target_y, head.target_z],
                    t1: head.t1,
                    t2: head.t2,
                    t3: head.t3,
                    chain,
                    overridden: head.overridden,
                });
            }
            Ok(StreamPayload {
                epoch: first.epoch,
                mode: first.mode,
                pose,
                legs: legs.try_into().expect("four legs"),
                status: PayloadStatus {
                    source: ChangeSource::Import,
                    trajectory: None,
                    link_error: None,
                },
                link: None,
            })
        }
    }
}
