use std::io;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::channel::{LinkStats, PoseConsumer};
use super::device::AngleDevice;
use super::wire::encode_frame;

#[derive(Debug, Clone, PartialEq)]
pub struct WriterConfig {
    /// Upper bound on frames written per second.
    pub rate_hz: f64,
    /// Reconnect-and-retry attempts after a failed write before the link is declared down.
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each further attempt.
    pub initial_backoff: Duration,
    /// Granularity at which the loop notices a stop request while idle.
    pub poll_interval: Duration,
}

impl Default for WriterConfig {
    fn default() -> Self {
        WriterConfig {
            rate_hz: 50.0,
            max_retries: 5,
            initial_backoff: Duration::from_millis(100),
            poll_interval: Duration::from_millis(10),
        }
    }
}

impl WriterConfig {
    pub fn with_rate(mut self, rate_hz: f64) -> Self {
        self.rate_hz = rate_hz;
        self
    }

    pub fn send_interval(&self) -> Duration {
        Duration::from_secs_f64(1.0 / self.rate_hz)
    }

    fn validate(&self) -> io::Result<()> {
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("rate_hz must be positive and finite, got {}", self.rate_hz),
            ));
        }
        if self.poll_interval.is_zero() {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "poll_interval must be nonzero"));
        }
        Ok(())
    }
}

/// Shared flag that asks a running [`writer_loop`] to return.
#[derive(Debug, Clone, Default)]
pub struct StopSignal(Arc<AtomicBool>);

impl StopSignal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stop(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_stopped(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("serial link down after {attempts} attempts: {source}")]
pub struct LinkDown {
    pub attempts: u32,
    pub stats: LinkStats,
    #[source]
    pub source: io::Error,
}

fn sleep_until(deadline: Instant, stop: &StopSignal, poll: Duration) -> bool {
    loop {
        if stop.is_stopped() {
            return false;
        }
        let now = Instant::now();
        if now >= deadline {
            return true;
        }
        std::thread::sleep((deadline - now).min(poll));
    }
}

/// Drains `consumer` into `device`, never faster than `config.rate_hz`.
///
/// The loop waits out the pacing interval before taking the next frame, so under overload the
/// frame it sends is the freshest one the channel kept. It returns when `stop` is raised, or
/// when the producer is gone and the queue is empty. A failed write is retried after a
/// reconnect with doubling backoff; when all retries fail the frame is counted as dropped and
/// the loop returns [`LinkDown`].
pub fn writer_loop(
    mut consumer: PoseConsumer,
    device: &mut dyn AngleDevice,
    config: &WriterConfig,
    stop: &StopSignal,
) -> Result<LinkStats, LinkDown> {
    if let Err(source) = config.validate() {
        return Err(LinkDown {
            attempts: 0,
            stats: consumer.stats(),
            source,
        });
    }
    let interval = config.send_interval();
    let mut next_send = Instant::now();

    while sleep_until(next_send, stop, config.poll_interval) {
        let Some(frame) = consumer.recv_timeout(config.poll_interval) else {
            if consumer.is_drained() {
                break;
            }
            continue;
        };
        let line = match encode_frame(&frame) {
            Ok(line) => line,
            Err(_) => {
                consumer.complete_failed(&frame);
                continue;
            }
        };

        let mut attempts = 1;
        let mut backoff = config.initial_backoff;
        let mut result = device.write_line(&line);
        while let Err(err) = result {
            if attempts > config.max_retries {
                consumer.complete_failed(&frame);
                return Err(LinkDown {
                    attempts,
                    stats: consumer.stats(),
                    source: err,
                });
            }
            std::thread::sleep(backoff);
            backoff = backoff.saturating_mul(2);
            attempts += 1;
            result = device.reconnect().and_then(|_| device.write_line(&line));
        }
        consumer.complete_sent(&frame);
        next_send = Instant::now() + interval;
    }
    Ok(consumer.stats())
}
