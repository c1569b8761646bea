use std::fmt;

use serde::{Deserialize, Serialize};

use crate::angle::to_wrapped_degrees;
use crate::leg::{JointAngles, LegId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WireError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed frame at byte {offset}: expected {expected}")]
    Parse { offset: usize, expected: &'static str },

    #[error("leg id {value} out of range 0..=3")]
    LegRange { value: u64 },

    #[error("angle {value} out of range [0, 360]")]
    AngleRange { value: f64 },
}

/// One leg's solved angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleFrame {
    pub leg: LegId,
    pub t1_deg: f64,
    pub t2_deg: f64,
    pub t3_deg: f64,
    /// Stamped by the channel producer, or by the receiver when decoding.
    pub seq: u64,
}

impl AngleFrame {
    pub fn new(leg: LegId, t1_deg: f64, t2_deg: f64, t3_deg: f64) -> Self {
        AngleFrame {
            leg,
            t1_deg,
            t2_deg,
            t3_deg,
            seq: 0,
        }
    }

    /// Degrees in `[0, 360)` from wrapped radians.
    pub fn from_joint_angles(leg: LegId, angles: &JointAngles) -> Self {
        AngleFrame::new(
            leg,
            to_wrapped_degrees(angles.theta1),
            to_wrapped_degrees(angles.theta2),
            to_wrapped_degrees(angles.theta3),
        )
    }

    pub fn degrees(&self) -> [f64; 3] {
        [self.t1_deg, self.t2_deg, self.t3_deg]
    }
}

/// One encoded line, newline included.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WireLine(String);

impl WireLine {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for WireLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `L<leg>:<t1>,<t2>,<t3>\n` with three decimals, ties rounded to even.
pub fn encode_frame(frame: &AngleFrame) -> Result<WireLine, WireError> {
    for (name, v) in ["t1", "t2", "t3"].iter().zip(frame.degrees()) {
        if !v.is_finite() {
            return Err(WireError::InvalidArgument(format!("{name} must be finite, got {v}")));
        }
        if !(0.0..360.0).contains(&v) {
            return Err(WireError::InvalidArgument(format!("{name} = {v} outside [0, 360)")));
        }
    }
    // std's fixed-precision formatting is exact on the binary value and locale independent
    Ok(WireLine(format!(
        "L{}:{:.3},{:.3},{:.3}\n",
        frame.leg as u8, frame.t1_deg, frame.t2_deg, frame.t3_deg
    )))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn fail(&self, expected: &'static str) -> WireError {
        WireError::Parse {
            offset: self.pos,
            expected,
        }
    }

    fn expect(&mut self, byte: u8, expected: &'static str) -> Result<(), WireError> {
        if self.bytes.get(self.pos) == Some(&byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.fail(expected))
        }
    }

    fn digits(&mut self, expected: &'static str) -> Result<&str, WireError> {
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.fail(expected));
        }
        Ok(std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits"))
    }

    fn number(&mut self) -> Result<f64, WireError> {
        let start = self.pos;
        self.digits("a decimal number")?;
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            self.digits("digits after the decimal point")?;
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii number");
        text.parse().map_err(|_| WireError::Parse {
            offset: start,
            expected: "a decimal number",
        })
    }
}

/// Parses one complete line. The returned frame has `seq = 0`; receivers assign sequence
/// numbers (see [`LineDecoder`]).
pub fn decode_frame(line: &str) -> Result<AngleFrame, WireError> {
    let mut c = Cursor {
        bytes: line.as_bytes(),
        pos: 0,
    };
    c.expect(b'L', "'L'")?;
    let leg_start = c.pos;
    let leg_text = c.digits("a leg id")?;
    let leg_value: u64 = leg_text.parse().map_err(|_| WireError::Parse {
        offset: leg_start,
        expected: "a leg id",
    })?;
    c.expect(b':', "':'")?;
    let t1 = c.number()?;
    c.expect(b',', "','")?;
    let t2 = c.number()?;
    c.expect(b',', "','")?;
    let t3 = c.number()?;
    c.expect(b'\n', "end of line")?;
    if c.pos != c.bytes.len() {
        return Err(c.fail("nothing after the newline"));
    }
    let leg = usize::try_from(leg_value)
        .ok()
        .and_then(LegId::from_index)
        .ok_or(WireError::LegRange { value: leg_value })?;
    for v in [t1, t2, t3] {
        // 359.9995 and above print as 360.000
        if v > 360.0 {
            return Err(WireError::AngleRange { value: v });
        }
    }
    Ok(AngleFrame::new(leg, t1, t2, t3))
}

/// Splits a byte stream into lines and decodes them, numbering frames in arrival order.
#[derive(Debug, Default)]
pub struct LineDecoder {
    pending: Vec<u8>,
    next_seq: u64,
}

impl LineDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn feed(&mut self, bytes: &[u8]) -> Vec<Result<AngleFrame, WireError>> {
        self.pending.extend_from_slice(bytes);
        let mut out = Vec::new();
        while let Some(end) = self.pending.iter().position(|&b| b == b'\n') {
            let line: Vec<u8> = self.pending.drain(..=end).collect();
            let decoded = match std::str::from_utf8(&line) {
                Ok(text) => decode_frame(text),
                Err(e) => Err(WireError::Parse {
                    offset: e.valid_up_to(),
                    expected: "ASCII text",
                }),
            };
            out.push(decoded.map(|mut f| {
                f.seq = self.next_seq;
                self.next_seq += 1;
                f
            }));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn terminal_values_encode() {
        let f = AngleFrame::new(LegId::FL, 4.530778466881149, 41.64353363025277, 71.1759215150343);
        assert_eq!(encode_frame(&f).unwrap().as_str(), "L0:4.531,41.644,71.176\n");
    }

    #[test]
    fn zeros_encode() {
        let f = AngleFrame::new(LegId::FR, 0.0, 0.0, 0.0);
        assert_eq!(encode_frame(&f).unwrap().as_str(), "L1:0.000,0.000,0.000\n");
    }

    #[test]
    fn exact_ties_round_to_even() {
        let f = AngleFrame::new(LegId::RR, 0.0625, 0.1875, 2.5);
        assert_eq!(encode_frame(&f).unwrap().as_str(), "L3:0.062,0.188,2.500\n");
    }

    #[test]
    fn non_finite_and_out_of_range_angles_are_rejected() {
        assert!(encode_frame(&AngleFrame::new(LegId::FL, f64::NAN, 0.0, 0.0)).is_err());
        assert!(encode_frame(&AngleFrame::new(LegId::FL, 0.0, f64::INFINITY, 0.0)).is_err());
        assert!(encode_frame(&AngleFrame::new(LegId::FL, 0.0, 0.0, 360.0)).is_err());
        assert!(encode_frame(&AngleFrame::new(LegId::FL, -1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn decode_examples() {
        let f = decode_frame("L2:90.000,45.000,10.500\n").unwrap();
        assert_eq!(f, AngleFrame::new(LegId::RL, 90.0, 45.0, 10.5));
        assert_eq!(decode_frame("L9:1,2,3\n"), Err(WireError::LegRange { value: 9 }));
        assert_eq!(
            decode_frame("L0:1.0,2.0\n"),
            Err(WireError::Parse { offset: 10, expected: "','" })
        );
    }

    #[test]
    fn decode_reports_offsets() {
        assert_eq!(decode_frame("X0:1,2,3\n"), Err(WireError::Parse { offset: 0, expected: "'L'" }));
        assert_eq!(
            decode_frame("L0:1,-2,3\n"),
            Err(WireError::Parse { offset: 5, expected: "a decimal number" })
        );
        assert_eq!(
            decode_frame("L0:1.,2,3\n"),
            Err(WireError::Parse { offset: 5, expected: "digits after the decimal point" })
        );
        assert_eq!(
            decode_frame("L0:1,2,3"),
            Err(WireError::Parse { offset: 8, expected: "end of line" })
        );
        assert!(decode_frame("L0:1,2,3\nL1").is_err());
        assert_eq!(decode_frame("L0:1,2,361\n"), Err(WireError::AngleRange { value: 361.0 }));
    }

    #[test]
    fn line_decoder_handles_split_input_and_numbers_frames() {
        let mut d = LineDecoder::new();
        assert!(d.feed(b"L0:1.000,2.000,3.0").is_empty());
        let out = d.feed(b"00\nL3:4.000,5.000,6.000\nbad\n");
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].as_ref().unwrap().seq, 0);
        assert_eq!(out[1].as_ref().unwrap().leg, LegId::RR);
        assert_eq!(out[1].as_ref().unwrap().seq, 1);
        assert!(out[2].is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_lossless_at_three_decimals(
            leg in 0usize..4, t1 in 0.0f64..360.0, t2 in 0.0f64..360.0, t3 in 0.0f64..360.0,
        ) {
            let f = AngleFrame::new(LegId::from_index(leg).unwrap(), t1, t2, t3);
            let back = decode_frame(encode_frame(&f).unwrap().as_str()).unwrap();
            prop_assert_eq!(back.leg, f.leg);
            for (a, b) in f.degrees().iter().zip(back.degrees()) {
                prop_assert!((a - b).abs() <= 0.0005 + 1e-12);
            }
        }
    }
}
