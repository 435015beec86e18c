//! Deterministic discrete-event engine and message transport.
//!
//! Events execute in `(time, order, pid)` order where `order` is assigned
//! when the event is scheduled. Every channel `(sender, receiver)` draws its
//! delays from its own ChaCha stream derived from the master seed, so the
//! draws on one channel never depend on traffic elsewhere. Channels are not
//! FIFO: two messages on the same channel may cross.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::ConstraintSpec;
use crate::agent::{AgentError, AgentState, Endpoint, Message, MessageBody};
use crate::checker::{Checker, CheckerError, ComparisonCounters, GaOccurrence, Satisfaction};
use crate::vclock::{ProcessId, VectorClock};

/// Stream namespace for per-channel delay draws.
const CHANNEL_STREAMS: u64 = 1 << 62;

/// Independent random stream `stream` of the master `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DelayModel {
    Constant { mean: f64 },
    Exponential { mean: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("mean message delay must be positive and finite, got {0}")]
    InvalidDelay(f64),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Checker(#[from] CheckerError),
    #[error("transition for unknown process {0}")]
    UnknownProcess(ProcessId),
}

impl DelayModel {
    pub fn constant(mean: f64) -> Result<Self, SimError> {
        Self::validate(mean)?;
        Ok(DelayModel::Constant { mean })
    }

    pub fn exponential(mean: f64) -> Result<Self, SimError> {
        Self::validate(mean)?;
        Ok(DelayModel::Exponential { mean })
    }

    fn validate(mean: f64) -> Result<(), SimError> {
        if mean > 0.0 && mean.is_finite() {
            Ok(())
        } else {
            Err(SimError::InvalidDelay(mean))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DelayModel::Constant { mean } | DelayModel::Exponential { mean } => mean,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DelayModel::Constant { mean } => mean,
            DelayModel::Exponential { mean } => Exp::new(1.0 / mean).expect("rate is positive").sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

pub type MessageId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Transition { pid: ProcessId, direction: Direction },
    Delivery { id: MessageId, message: Message },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    /// Scheduling sequence number; breaks ties between equal times.
    pub order: u64,
    pub pid: usize,
    pub payload: Payload,
}

impl SimEvent {
    fn key(&self) -> (f64, u64, usize) {
        (self.time, self.order, self.pid)
    }
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        let (ta, oa, pa) = self.key();
        let (tb, ob, pb) = other.key();
        ta.total_cmp(&tb).then(oa.cmp(&ob)).then(pa.cmp(&pb))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Message transport with per-channel delay streams.
#[derive(Debug, Clone)]
pub struct Network {
    model: DelayModel,
    seed: u64,
    channels: BTreeMap<(usize, usize), ChaCha8Rng>,
}

impl Network {
    pub fn new(model: DelayModel, seed: u64) -> Self {
        Network {
            model,
            seed,
            channels: BTreeMap::new(),
        }
    }

    pub fn model(&self) -> DelayModel {
        self.model
    }

    fn channel(from: ProcessId, to: Endpoint) -> (usize, usize) {
        let to = match to {
            Endpoint::Checker => 0,
            Endpoint::Process(p) => p.0,
        };
        (from.0, to)
    }

    /// Next delay on the channel `from → to`; always positive.
    pub fn sample_delay(&mut self, from: ProcessId, to: Endpoint) -> f64 {
        let key = Self::channel(from, to);
        let seed = self.seed;
        let rng = self
            .channels
            .entry(key)
            .or_insert_with(|| substream(seed, CHANNEL_STREAMS | ((key.0 as u64) << 24) | key.1 as u64));
        self.model.sample(rng)
    }

    /// Delivery event for `message` sent at `now`.
    pub fn schedule_send(&mut self, id: MessageId, message: Message, now: f64, order: u64) -> SimEvent {
        let delay = self.sample_delay(message.from, message.to);
        let mut time = now + delay;
        if time <= now {
            time = now.next_up();
        }
        SimEvent {
            time,
            order,
            pid: message.from.0,
            payload: Payload::Delivery { id, message },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LoggedEvent {
    /// A local predicate transition. `recorded` is true when an up starts a
    /// reported interval, or when a down sends a checking message.
    Transition {
        pid: ProcessId,
        direction: Direction,
        vc: VectorClock,
        recorded: bool,
        sent: Vec<MessageId>,
    },
    ControlReceived {
        pid: ProcessId,
        message: MessageId,
        vc: VectorClock,
    },
    CheckingReceived {
        message: MessageId,
        detections: usize,
        satisfactions: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub time: f64,
    pub event: LoggedEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub id: MessageId,
    pub message: Message,
    pub deliver_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedDetection {
    pub time: f64,
    pub occurrence: GaOccurrence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedSatisfaction {
    pub time: f64,
    pub satisfaction: Satisfaction,
}

/// Append-only record of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionLog {
    pub entries: Vec<LogEntry>,
    /// Every message sent, indexed by its id.
    pub messages: Vec<MessageRecord>,
    pub detections: Vec<TimedDetection>,
    pub satisfactions: Vec<TimedSatisfaction>,
    /// Events scheduled past the horizon and never executed.
    pub dropped: u64,
}

impl ExecutionLog {
    pub fn transitions(&self) -> impl Iterator<Item = &LogEntry> {
        self.entries
            .iter()
            .filter(|e| matches!(e.event, LoggedEvent::Transition { .. }))
    }
}

pub struct Simulation {
    agents: Vec<AgentState>,
    checker: Checker,
    network: Network,
    queue: BinaryHeap<Reverse<SimEvent>>,
    next_order: u64,
    horizon: f64,
    log: ExecutionLog,
}

impl Simulation {
    pub fn new(spec: ConstraintSpec, delay: DelayModel, seed: u64, horizon: f64) -> Result<Self, SimError> {
        let agents = spec
            .processes()
            .map(|pid| AgentState::new(pid, &spec))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Simulation {
            agents,
            checker: Checker::new(spec),
            network: Network::new(delay, seed),
            queue: BinaryHeap::new(),
            next_order: 0,
            horizon,
            log: ExecutionLog::default(),
        })
    }

    fn push(&mut self, event: SimEvent) {
        if event.time > self.horizon {
            self.log.dropped += 1;
            return;
        }
        self.queue.push(Reverse(event));
    }

    fn take_order(&mut self) -> u64 {
        let order = self.next_order;
        self.next_order += 1;
        order
    }

    /// Schedule a local predicate transition. Transitions at equal times run
    /// in scheduling order.
    pub fn schedule_transition(&mut self, time: f64, pid: ProcessId, direction: Direction) -> Result<(), SimError> {
        if pid.0 == 0 || pid.0 > self.agents.len() {
            return Err(SimError::UnknownProcess(pid));
        }
        let order = self.take_order();
        self.push(SimEvent {
            time,
            order,
            pid: pid.0,
            payload: Payload::Transition { pid, direction },
        });
        Ok(())
    }

    /// Execute events until the queue drains. Events past the horizon are
    /// dropped with a warning.
    pub fn run_until_quiescent(&mut self) -> Result<(), SimError> {
        while let Some(Reverse(event)) = self.queue.pop() {
            self.execute(event)?;
        }
        if self.log.dropped > 0 {
            warn!(
                "{} event(s) fell beyond the horizon {} and were dropped",
                self.log.dropped, self.horizon
            );
        }
        Ok(())
    }

    fn execute(&mut self, event: SimEvent) -> Result<(), SimError> {
        let now = event.time;
        match event.payload {
            Payload::Transition { pid, direction } => {
                let agent = &mut self.agents[pid.index()];
                let (out, recorded) = match direction {
                    Direction::Up => {
                        let out = agent.on_up(now)?;
                        (out, agent.cur_lo().is_some())
                    }
                    Direction::Down => {
                        let out = agent.on_down(now)?;
                        let reported = out.iter().any(|m| !m.is_control());
                        (out, reported)
                    }
                };
                let vc = agent.vc().clone();
                let sent = self.send_all(out, now);
                self.log.entries.push(LogEntry {
                    time: now,
                    event: LoggedEvent::Transition {
                        pid,
                        direction,
                        vc,
                        recorded,
                        sent,
                    },
                });
            }
            Payload::Delivery { id, message } => match message.to {
                Endpoint::Process(pid) => {
                    let agent = &mut self.agents[pid.index()];
                    agent.on_control(&message)?;
                    self.log.entries.push(LogEntry {
                        time: now,
                        event: LoggedEvent::ControlReceived {
                            pid,
                            message: id,
                            vc: agent.vc().clone(),
                        },
                    });
                }
                Endpoint::Checker => {
                    let MessageBody::Checking(report) = message.body else {
                        unreachable!("agents address only checking messages to the checker");
                    };
                    let output = self.checker.receive(report)?;
                    self.log.entries.push(LogEntry {
                        time: now,
                        event: LoggedEvent::CheckingReceived {
                            message: id,
                            detections: output.detections.len(),
                            satisfactions: output.satisfactions.len(),
                        },
                    });
                    self.log.detections.extend(
                        output
                            .detections
                            .into_iter()
                            .map(|occurrence| TimedDetection { time: now, occurrence }),
                    );
                    self.log.satisfactions.extend(
                        output
                            .satisfactions
                            .into_iter()
                            .map(|satisfaction| TimedSatisfaction { time: now, satisfaction }),
                    );
                }
            },
        }
        Ok(())
    }

    fn send_all(&mut self, out: Vec<Message>, now: f64) -> Vec<MessageId> {
        let mut ids = Vec::with_capacity(out.len());
        for message in out {
            let id = self.log.messages.len();
            let order = self.take_order();
            let event = self.network.schedule_send(id, message.clone(), now, order);
            self.log.messages.push(MessageRecord {
                id,
                message,
                deliver_time: event.time,
            });
            self.push(event);
            ids.push(id);
        }
        ids
    }

    pub fn log(&self) -> &ExecutionLog {
        &self.log
    }

    pub fn checker(&self) -> &Checker {
        &self.checker
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn counters(&self) -> ComparisonCounters {
        self.checker.counters()
    }

    pub fn into_parts(self) -> (ExecutionLog, Checker) {
        (self.log, self.checker)
    }
}
