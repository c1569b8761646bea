use std::cell::Cell;
use std::collections::VecDeque;
use std::marker::PhantomData;
use std::num::NonZeroUsize;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::wire::AngleFrame;

/// Counters for one channel. Every enqueued frame is eventually sent, dropped or still in
/// flight (queued or handed to the writer).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStats {
    pub frames_enqueued: u64,
    pub frames_sent: u64,
    pub frames_dropped: u64,
    pub last_seq_sent: Option<u64>,
    pub in_flight: u64,
}

impl LinkStats {
    pub fn is_conserved(&self) -> bool {
        self.frames_enqueued == self.frames_sent + self.frames_dropped + self.in_flight
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushOutcome {
    pub seq: u64,
    pub evicted: Option<AngleFrame>,
}

#[derive(Debug)]
struct State {
    queue: VecDeque<AngleFrame>,
    capacity: usize,
    next_seq: u64,
    stats: LinkStats,
    producer_closed: bool,
}

#[derive(Debug)]
struct Shared {
    state: Mutex<State>,
    ready: Condvar,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, State> {
        // No invariant spans an unwind: every critical section either completes or touches nothing.
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }
}

// Neither handle is Sync or Clone, so the channel has exactly one producer and one consumer.
type NotSync = PhantomData<Cell<()>>;

#[derive(Debug)]
pub struct PoseProducer {
    shared: Arc<Shared>,
    _single: NotSync,
}

#[derive(Debug)]
pub struct PoseConsumer {
    shared: Arc<Shared>,
    _single: NotSync,
}

/// Bounded single-producer single-consumer queue where a push onto a full buffer replaces the
/// oldest frame. The producer never blocks.
pub fn pose_channel(capacity: NonZeroUsize) -> (PoseProducer, PoseConsumer) {
    let shared = Arc::new(Shared {
        state: Mutex::new(State {
            queue: VecDeque::with_capacity(capacity.get()),
            capacity: capacity.get(),
            next_seq: 0,
            stats: LinkStats::default(),
            producer_closed: false,
        }),
        ready: Condvar::new(),
    });
    (
        PoseProducer {
            shared: Arc::clone(&shared),
            _single: PhantomData,
        },
        PoseConsumer {
            shared,
            _single: PhantomData,
        },
    )
}

impl PoseProducer {
    /// Stamps the next sequence number on `frame` and enqueues it.
    pub fn push(&mut self, mut frame: AngleFrame) -> PushOutcome {
        let mut st = self.shared.lock();
        frame.seq = st.next_seq;
        st.next_seq += 1;
        let evicted = if st.queue.len() == st.capacity {
            let old = st.queue.pop_front();
            st.stats.frames_dropped += 1;
            st.stats.in_flight -= 1;
            old
        } else {
            None
        };
        st.queue.push_back(frame);
        st.stats.frames_enqueued += 1;
        st.stats.in_flight += 1;
        drop(st);
        self.shared.ready.notify_one();
        PushOutcome {
            seq: frame.seq,
            evicted,
        }
    }

    pub fn stats(&self) -> LinkStats {
        self.shared.lock().stats
    }
}

impl Drop for PoseProducer {
    fn drop(&mut self) {
        self.shared.lock().producer_closed = true;
        self.shared.ready.notify_all();
    }
}

impl PoseConsumer {
    pub fn try_pop(&mut self) -> Option<AngleFrame> {
        self.shared.lock().queue.pop_front()
    }

    /// Waits up to `timeout` for a frame. Returns `None` on timeout or when the queue is empty
    /// and the producer is gone.
    pub fn recv_timeout(&mut self, timeout: Duration) -> Option<AngleFrame> {
        let deadline = Instant::now() + timeout;
        let mut st = self.shared.lock();
        loop {
            if let Some(f) = st.queue.pop_front() {
                return Some(f);
            }
            if st.producer_closed {
                return None;
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            st = self
                .shared
                .ready
                .wait_timeout(st, deadline - now)
                .unwrap_or_else(|p| p.into_inner())
                .0;
        }
    }

    /// Records that a popped frame reached the device.
    pub fn complete_sent(&mut self, frame: &AngleFrame) {
        let mut st = self.shared.lock();
        st.stats.frames_sent += 1;
        st.stats.in_flight -= 1;
        st.stats.last_seq_sent = Some(st.stats.last_seq_sent.map_or(frame.seq, |s| s.max(frame.seq)));
    }

    /// Records that a popped frame was abandoned.
    pub fn complete_failed(&mut self, _frame: &AngleFrame) {
        let mut st = self.shared.lock();
        st.stats.frames_dropped += 1;
        st.stats.in_flight -= 1;
    }

    /// Drops everything still queued, counting it as dropped.
    pub fn discard_pending(&mut self) -> usize {
        let mut st = self.shared.lock();
        let n = st.queue.len();
        st.queue.clear();
        st.stats.frames_dropped += n as u64;
        st.stats.in_flight -= n as u64;
        n
    }

    /// True once the producer is gone and nothing is left to pop.
    pub fn is_drained(&self) -> bool {
        let st = self.shared.lock();
        st.producer_closed && st.queue.is_empty()
    }

    pub fn producer_closed(&self) -> bool {
        self.shared.lock().producer_closed
    }

    pub fn stats(&self) -> LinkStats {
        self.shared.lock().stats
    }
}
