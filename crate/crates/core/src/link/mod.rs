//! Servo angle link: the line-oriented wire format, a latest-wins channel between the solver
//! and the writer, the rate-paced writer loop and the devices it writes to.
//!
//! Wire grammar, one frame per line:
//!
//! ```text
//! L<leg>:<t1>,<t2>,<t3>\n      leg ∈ 0..=3, angles in degrees with exactly 3 decimals
//! ```

mod channel;
mod device;
mod wire;
mod writer;

pub use channel::{pose_channel, LinkStats, PoseConsumer, PoseProducer, PushOutcome};
pub use device::{AngleDevice, CapturedLine, MockCapture, MockDevice, SerialDevice, StreamDevice};
pub use wire::{decode_frame, encode_frame, AngleFrame, LineDecoder, WireError, WireLine};
pub use writer::{writer_loop, LinkDown, StopSignal, WriterConfig};
