//! The state-owning command processor and its client handle.
//!
//! Every command goes through one ordered queue to a single task that owns the state. That
//! task solves, builds the complete payload, and only then commits, broadcasts and enqueues
//! serial frames. A payload is therefore always one whole solution, and a rejected command
//! touches nothing.

use std::num::NonZeroUsize;
use std::sync::Arc;
use std::thread::JoinHandle as ThreadHandle;
use std::time::Duration;

use nalgebra::{Matrix3, Vector3};
use quadkin::link::{
    pose_channel, writer_loop, AngleDevice, LinkDown, LinkStats, PoseProducer, StopSignal, WriterConfig,
};
use quadkin::trajectory::{joint_stream, rect_path, RectTrajectorySpec};
use quadkin::{ik_leg, solve_body, BodyPose, FootTarget, JointAngles, LegId, LegState, RobotConfig};
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;

use crate::document::{
    leg_payload, ChangeSource, FootDocument, Mode, PayloadStatus, PoseDocument, StreamPayload,
    TrajectoryProgress,
};
use crate::error::ServiceError;

pub type SharedPayload = Arc<StreamPayload>;
type Reply<T> = oneshot::Sender<Result<T, ServiceError>>;

#[derive(Debug, Clone)]
pub struct ServiceOptions {
    pub initial_mode: Mode,
    /// Frames buffered ahead of the serial writer.
    pub channel_capacity: NonZeroUsize,
    /// Payloads buffered per stream subscriber before the oldest are skipped.
    pub subscriber_buffer: usize,
    pub writer: WriterConfig,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        ServiceOptions {
            initial_mode: Mode::SimOnly,
            channel_capacity: NonZeroUsize::new(8).expect("nonzero"),
            subscriber_buffer: 256,
            writer: WriterConfig::default(),
        }
    }
}

/// Trajectory command: a rectangle for one leg, replayed at `rate_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRequest {
    #[serde(flatten)]
    pub spec: RectTrajectorySpec,
    #[serde(default = "default_trajectory_rate")]
    pub rate_hz: f64,
}

fn default_trajectory_rate() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRun {
    pub run_id: u64,
    pub frames: usize,
}

/// Final state of the serial writer after shutdown.
#[derive(Debug)]
pub struct LinkReport {
    pub result: Result<LinkStats, LinkDown>,
}

enum Command {
    Pose(PoseDocument, Reply<SharedPayload>),
    Foot(LegId, FootDocument, Reply<SharedPayload>),
    Mode(Mode, Reply<SharedPayload>),
    State(oneshot::Sender<SharedPayload>),
    Subscribe(oneshot::Sender<(SharedPayload, broadcast::Receiver<SharedPayload>)>),
    StartTrajectory(TrajectoryRequest, Reply<TrajectoryRun>),
    CancelTrajectory(oneshot::Sender<Option<u64>>),
    TrajectoryStep { run_id: u64, index: usize },
    Import(Box<StreamPayload>, Reply<SharedPayload>),
    Shutdown(oneshot::Sender<Option<LinkReport>>),
}

/// Cloneable client handle. All methods queue a command and await its outcome.
#[derive(Clone)]
pub struct ServiceHandle {
    tx: mpsc::Sender<Command>,
    robot: Arc<RobotConfig>,
}

impl std::fmt::Debug for ServiceHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServiceHandle").finish_non_exhaustive()
    }
}

struct SerialLink {
    producer: PoseProducer,
    stop: StopSignal,
    thread: ThreadHandle<Result<LinkStats, LinkDown>>,
}

struct ActiveRun {
    run_id: u64,
    leg: LegId,
    targets: Vec<FootTarget>,
    angles: Vec<JointAngles>,
    ticker: JoinHandle<()>,
}

/// Everything a payload is rendered from.
#[derive(Clone)]
struct State {
    pose_doc: PoseDocument,
    pose: BodyPose,
    legs: [LegState; 4],
    overrides: [bool; 4],
    mode: Mode,
}

struct Processor {
    robot: Arc<RobotConfig>,
    state: State,
    epoch: u64,
    current: SharedPayload,
    stream: broadcast::Sender<SharedPayload>,
    link: Option<SerialLink>,
    run: Option<ActiveRun>,
    next_run_id: u64,
    commands: mpsc::WeakSender<Command>,
}

fn status(source: ChangeSource) -> PayloadStatus {
    PayloadStatus {
        source,
        trajectory: None,
        link_error: None,
    }
}

fn render(
    robot: &RobotConfig,
    link: Option<&SerialLink>,
    state: &State,
    epoch: u64,
    mut status: PayloadStatus,
) -> Result<StreamPayload, ServiceError> {
    let rotation: Matrix3<f64> = state
        .pose
        .rotation()
        .map_err(|e| ServiceError::Validation(e.to_string()))?;
    let translation: Vector3<f64> = state.pose.translation;
    let mut legs = Vec::with_capacity(4);
    for leg in LegId::ALL {
        let i = leg.index();
        legs.push(leg_payload(leg, &state.legs[i], state.overrides[i], robot, &rotation, &translation)?);
    }
    status.link_error = link
        .filter(|l| l.thread.is_finished())
        .map(|_| "serial writer stopped; see service log".to_owned());
    Ok(StreamPayload {
        epoch,
        mode: state.mode,
        pose: state.pose_doc.clone(),
        legs: legs.try_into().expect("four legs"),
        status,
        link: link.map(|l| l.producer.stats()),
    })
}

/// Starts the processor on the current tokio runtime. With a `device`, a serial writer thread
/// drains accepted frames to it whenever the mode is [`Mode::SimAndSerial`].
pub fn spawn_service(
    robot: RobotConfig,
    options: ServiceOptions,
    device: Option<Box<dyn AngleDevice>>,
) -> Result<ServiceHandle, ServiceError> {
    robot
        .validate()
        .map_err(|e| ServiceError::Validation(e.to_string()))?;
    if options.initial_mode == Mode::SimAndSerial && device.is_none() {
        return Err(ServiceError::Conflict("sim_and_serial mode needs a serial device".into()));
    }
    let robot = Arc::new(robot);
    let pose_doc = PoseDocument::neutral(&robot);
    let pose = pose_doc.to_body_pose(&robot)?;
    let solution = solve_body(&pose, &robot)?;
    let state = State {
        pose_doc,
        pose,
        legs: solution.per_leg,
        overrides: [false; 4],
        mode: options.initial_mode,
    };

    let link = device.map(|mut device| {
        let (producer, consumer) = pose_channel(options.channel_capacity);
        let stop = StopSignal::new();
        let (writer_stop, writer_config) = (stop.clone(), options.writer.clone());
        let thread = std::thread::Builder::new()
            .name("quadkin-serial".into())
            .spawn(move || {
                let result = writer_loop(consumer, &mut *device, &writer_config, &writer_stop);
                if let Err(e) = &result {
                    tracing::error!("{e}");
                }
                result
            })
            .expect("spawn serial writer thread");
        SerialLink { producer, stop, thread }
    });
    let initial = render(&robot, link.as_ref(), &state, 0, status(ChangeSource::Startup))?;

    let (tx, rx) = mpsc::channel(1024);
    let (stream, _) = broadcast::channel(options.subscriber_buffer.max(1));
    let processor = Processor {
        robot: Arc::clone(&robot),
        state,
        epoch: 0,
        current: Arc::new(initial),
        stream,
        link,
        run: None,
        next_run_id: 1,
        commands: tx.downgrade(),
    };
    tokio::spawn(processor.run(rx));
    Ok(ServiceHandle { tx, robot })
}

impl Processor {
    async fn run(mut self, mut rx: mpsc::Receiver<Command>) {
        let mut shutdown_reply = None;
        while let Some(cmd) = rx.recv().await {
            match cmd {
                Command::Pose(doc, reply) => {
                    let _ = reply.send(self.apply_pose(doc));
                }
                Command::Foot(leg, doc, reply) => {
                    let _ = reply.send(self.apply_foot(leg, doc));
                }
                Command::Mode(mode, reply) => {
                    let _ = reply.send(self.apply_mode(mode));
                }
                Command::State(reply) => {
                    let _ = reply.send(Arc::clone(&self.current));
                }
                Command::Subscribe(reply) => {
                    let _ = reply.send((Arc::clone(&self.current), self.stream.subscribe()));
                }
                Command::StartTrajectory(req, reply) => {
                    let _ = reply.send(self.start_trajectory(req));
                }
                Command::CancelTrajectory(reply) => {
                    let _ = reply.send(self.cancel_trajectory());
                }
                Command::TrajectoryStep { run_id, index } => self.trajectory_step(run_id, index),
                Command::Import(payload, reply) => {
                    let _ = reply.send(self.apply_import(*payload));
                }
                Command::Shutdown(reply) => {
                    shutdown_reply = Some(reply);
                    break;
                }
            }
        }
        self.cancel_trajectory();
        let report = match self.link.take() {
            Some(link) => {
                link.stop.stop();
                drop(link.producer);
                let joined = tokio::task::spawn_blocking(move || link.thread.join()).await;
                match joined {
                    Ok(Ok(result)) => Some(LinkReport { result }),
                    _ => {
                        tracing::error!("serial writer thread panicked");
                        None
                    }
                }
            }
            None => None,
        };
        if let Some(reply) = shutdown_reply {
            let _ = reply.send(report);
        }
    }

    /// Renders `next` as the following epoch. Nothing is modified.
    fn render(&self, next: &State, status: PayloadStatus) -> Result<StreamPayload, ServiceError> {
        render(&self.robot, self.link.as_ref(), next, self.epoch + 1, status)
    }

    /// Installs a rendered state, broadcasts it and queues the frames of the `changed` legs.
    fn commit(&mut self, next: State, payload: StreamPayload, changed: &[LegId]) -> SharedPayload {
        self.state = next;
        self.epoch = payload.epoch;
        if self.state.mode == Mode::SimAndSerial {
            if let Some(link) = self.link.as_mut() {
                for leg in changed {
                    link.producer.push(payload.legs[leg.index()].frame());
                }
            }
        }
        let shared = Arc::new(payload);
        self.current = Arc::clone(&shared);
        // having no subscribers is fine
        let _ = self.stream.send(Arc::clone(&shared));
        shared
    }

    fn apply_pose(&mut self, doc: PoseDocument) -> Result<SharedPayload, ServiceError> {
        let pose = doc.to_body_pose(&self.robot)?;
        let solution = solve_body(&pose, &self.robot)?;
        let next = State {
            pose_doc: doc,
            pose,
            legs: solution.per_leg,
            overrides: [false; 4],
            mode: self.state.mode,
        };
        let payload = self.render(&next, status(ChangeSource::Pose))?;
        Ok(self.commit(next, payload, &LegId::ALL))
    }

    fn set_leg(
        &mut self,
        leg: LegId,
        target: FootTarget,
        angles: JointAngles,
        status: PayloadStatus,
    ) -> Result<SharedPayload, ServiceError> {
        let mut next = self.state.clone();
        next.legs[leg.index()] = LegState { target, angles };
        next.overrides[leg.index()] = true;
        let payload = self.render(&next, status)?;
        Ok(self.commit(next, payload, &[leg]))
    }

    fn apply_foot(&mut self, leg: LegId, doc: FootDocument) -> Result<SharedPayload, ServiceError> {
        let target = doc.to_target()?;
        let angles = ik_leg(&target, &self.robot.geometry, self.robot.side(leg))
            .map_err(|e| ServiceError::from_leg(leg, e))?;
        self.set_leg(leg, target, angles, status(ChangeSource::Foot))
    }

    fn apply_mode(&mut self, mode: Mode) -> Result<SharedPayload, ServiceError> {
        if mode == Mode::SimAndSerial && self.link.is_none() {
            return Err(ServiceError::Conflict("no serial device is configured".into()));
        }
        if mode == self.state.mode {
            return Ok(Arc::clone(&self.current));
        }
        let next = State { mode, ..self.state.clone() };
        let payload = self.render(&next, self.current.status.clone())?;
        // entering serial mode sends the current state so the robot matches the display
        let changed: &[LegId] = if mode == Mode::SimAndSerial { &LegId::ALL } else { &[] };
        Ok(self.commit(next, payload, changed))
    }

    fn apply_import(&mut self, snapshot: StreamPayload) -> Result<SharedPayload, ServiceError> {
        let pose = snapshot.pose.to_body_pose(&self.robot)?;
        let solution = solve_body(&pose, &self.robot)?;
        let mut next = State {
            pose_doc: snapshot.pose,
            pose,
            legs: solution.per_leg,
            overrides: [false; 4],
            mode: self.state.mode,
        };
        for (leg, lp) in LegId::ALL.into_iter().zip(&snapshot.legs) {
            if lp.leg != leg {
                return Err(ServiceError::Validation(format!(
                    "snapshot legs must be ordered FL, FR, RL, RR; found {} in slot {}",
                    lp.leg,
                    leg.index()
                )));
            }
            if lp.overridden {
                let [x, y, z] = lp.target;
                let target = FootDocument { x, y, z }.to_target()?;
                let angles = ik_leg(&target, &self.robot.geometry, self.robot.side(leg))
                    .map_err(|e| ServiceError::from_leg(leg, e))?;
                next.legs[leg.index()] = LegState { target, angles };
                next.overrides[leg.index()] = true;
            }
        }
        let payload = self.render(&next, status(ChangeSource::Import))?;
        Ok(self.commit(next, payload, &LegId::ALL))
    }

    fn start_trajectory(&mut self, req: TrajectoryRequest) -> Result<TrajectoryRun, ServiceError> {
        if !(req.rate_hz.is_finite() && req.rate_hz > 0.0) {
            return Err(ServiceError::Validation(format!(
                "rate_hz must be positive, got {}",
                req.rate_hz
            )));
        }
        let spec = req.spec;
        let path = rect_path(&spec)?;
        let stream = joint_stream(&path, &self.robot.geometry, self.robot.side(spec.leg))?;
        let commands = self.commands.upgrade().ok_or(ServiceError::Stopped)?;
        self.cancel_trajectory();

        let run_id = self.next_run_id;
        self.next_run_id += 1;
        let frames = path.len();
        let period = Duration::from_secs_f64(1.0 / req.rate_hz);
        let ticker = tokio::spawn(async move {
            let mut interval = tokio::time::interval(period);
            interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
            for index in 0..frames {
                interval.tick().await;
                if commands.send(Command::TrajectoryStep { run_id, index }).await.is_err() {
                    break;
                }
            }
        });
        self.run = Some(ActiveRun {
            run_id,
            leg: spec.leg,
            targets: path.iter().map(|w| w.target).collect(),
            angles: stream.frames.iter().map(|(_, a)| *a).collect(),
            ticker,
        });
        Ok(TrajectoryRun { run_id, frames })
    }

    fn cancel_trajectory(&mut self) -> Option<u64> {
        let run = self.run.take()?;
        run.ticker.abort();
        Some(run.run_id)
    }

    fn trajectory_step(&mut self, run_id: u64, index: usize) {
        let Some(run) = self.run.as_ref().filter(|r| r.run_id == run_id) else {
            return;
        };
        let total = run.targets.len();
        let (leg, target, angles) = (run.leg, run.targets[index], run.angles[index]);
        let status = PayloadStatus {
            trajectory: Some(TrajectoryProgress { run_id, step: index, total }),
            ..status(ChangeSource::Trajectory)
        };
        if let Err(e) = self.set_leg(leg, target, angles, status) {
            tracing::warn!("trajectory {run_id} stopped at step {index}: {e}");
            self.cancel_trajectory();
            return;
        }
        if index + 1 == total {
            self.run = None;
        }
    }
}

impl ServiceHandle {
    pub fn robot(&self) -> &RobotConfig {
        &self.robot
    }

    async fn request<T>(&self, make: impl FnOnce(Reply<T>) -> Command) -> Result<T, ServiceError> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(make(reply)).await.map_err(|_| ServiceError::Stopped)?;
        rx.await.map_err(|_| ServiceError::Stopped)?
    }

    pub async fn pose(&self, doc: PoseDocument) -> Result<SharedPayload, ServiceError> {
        self.request(|r| Command::Pose(doc, r)).await
    }

    pub async fn foot(&self, leg: LegId, doc: FootDocument) -> Result<SharedPayload, ServiceError> {
        self.request(|r| Command::Foot(leg, doc, r)).await
    }

    pub async fn set_mode(&self, mode: Mode) -> Result<SharedPayload, ServiceError> {
        self.request(|r| Command::Mode(mode, r)).await
    }

    pub async fn import(&self, snapshot: StreamPayload) -> Result<SharedPayload, ServiceError> {
        self.request(|r| Command::Import(Box::new(snapshot), r)).await
    }

    /// Validates and solves the whole path, then replays it in the background. A run already in
    /// progress is cancelled first.
    pub async fn run_trajectory(&self, req: TrajectoryRequest) -> Result<TrajectoryRun, ServiceError> {
        self.request(|r| Command::StartTrajectory(req, r)).await
    }

    /// Stops the running trajectory, returning its id. The state keeps the last applied step.
    pub async fn cancel_trajectory(&self) -> Result<Option<u64>, ServiceError> {
        let (reply, rx) = oneshot::channel();
        self.tx
            .send(Command::CancelTrajectory(reply))
            .await
            .map_err(|_| ServiceError::Stopped)?;
        rx.await.map_err(|_| ServiceError::Stopped)
    }

    pub async fn state(&self) -> Result<SharedPayload, ServiceError> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(Command::State(reply)).await.map_err(|_| ServiceError::Stopped)?;
        rx.await.map_err(|_| ServiceError::Stopped)
    }

    /// The current payload together with a receiver for every later one. Nothing is missed or
    /// repeated between the two.
    pub async fn subscribe(
        &self,
    ) -> Result<(SharedPayload, broadcast::Receiver<SharedPayload>), ServiceError> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(Command::Subscribe(reply)).await.map_err(|_| ServiceError::Stopped)?;
        rx.await.map_err(|_| ServiceError::Stopped)
    }

    /// Stops the processor and the serial writer. Commands queued before this one are still
    /// applied. Returns the writer's outcome when a device was attached.
    pub async fn shutdown(&self) -> Result<Option<LinkReport>, ServiceError> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(Command::Shutdown(reply)).await.map_err(|_| ServiceError::Stopped)?;
        rx.await.map_err(|_| ServiceError::Stopped)
    }
}
