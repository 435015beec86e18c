//! Non-checker process protocol.
//!
//! On a local predicate going true the process ticks its clock and sends a
//! control message to the other members of its global activity. On the
//! predicate going false it ticks again, sends a control message to every
//! other process, and reports the interval to the checker when new causal
//! information arrived since the last report (`flag_msg_act`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::{ConstraintSpec, IntervalError, TimedInterval};
use crate::vclock::{ClockError, ProcessId, VectorClock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Endpoint {
    Process(ProcessId),
    Checker,
}

/// Interval report addressed to the checker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckingReport {
    pub ga_id: usize,
    pub interval: TimedInterval,
}

impl CheckingReport {
    pub fn from(&self) -> ProcessId {
        self.interval.owner
    }

    pub fn seq(&self) -> u64 {
        self.interval.seq
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MessageBody {
    Control { vc: VectorClock },
    Checking(CheckingReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub from: ProcessId,
    pub to: Endpoint,
    pub send_time: f64,
    pub body: MessageBody,
}

impl Message {
    pub fn is_control(&self) -> bool {
        matches!(self.body, MessageBody::Control { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("{0} is not a member of any global activity")]
    NotAMember(ProcessId),
    #[error("{0}: local activity started twice without ending")]
    DoubleUp(ProcessId),
    #[error("{0}: local activity ended without starting")]
    DownWithoutUp(ProcessId),
    #[error("{0}: checking message delivered to a non-checker process")]
    Misrouted(ProcessId),
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

#[derive(Debug, Clone)]
pub struct AgentState {
    pid: ProcessId,
    ga_id: usize,
    /// Other members of the same global activity.
    peers: Vec<ProcessId>,
    /// Every other non-checker process.
    others: Vec<ProcessId>,
    vc: VectorClock,
    inside: bool,
    cur_lo: Option<(VectorClock, f64)>,
    flag_msg_act: bool,
    next_seq: u64,
}

impl AgentState {
    pub fn new(pid: ProcessId, spec: &ConstraintSpec) -> Result<Self, AgentError> {
        let ga = spec.activity_of(pid).ok_or(AgentError::NotAMember(pid))?;
        Ok(AgentState {
            pid,
            ga_id: ga.ga_id,
            peers: ga.members.iter().copied().filter(|&p| p != pid).collect(),
            others: spec.processes().filter(|&p| p != pid).collect(),
            vc: VectorClock::new(spec.process_count())?,
            inside: false,
            cur_lo: None,
            flag_msg_act: true,
            next_seq: 0,
        })
    }

    pub fn pid(&self) -> ProcessId {
        self.pid
    }

    pub fn ga_id(&self) -> usize {
        self.ga_id
    }

    pub fn vc(&self) -> &VectorClock {
        &self.vc
    }

    pub fn flag_msg_act(&self) -> bool {
        self.flag_msg_act
    }

    pub fn is_inside(&self) -> bool {
        self.inside
    }

    /// Recorded beginning of the current local activity, if it is being reported.
    pub fn cur_lo(&self) -> Option<&VectorClock> {
        self.cur_lo.as_ref().map(|(vc, _)| vc)
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn on_up(&mut self, now: f64) -> Result<Vec<Message>, AgentError> {
        if self.inside {
            return Err(AgentError::DoubleUp(self.pid));
        }
        self.inside = true;
        self.vc = self.vc.increment(self.pid)?;
        let out = self.control_to(&self.peers, now);
        if self.flag_msg_act {
            self.cur_lo = Some((self.vc.clone(), now));
        }
        Ok(out)
    }

    pub fn on_down(&mut self, now: f64) -> Result<Vec<Message>, AgentError> {
        if !self.inside {
            return Err(AgentError::DownWithoutUp(self.pid));
        }
        self.inside = false;
        self.vc = self.vc.increment(self.pid)?;
        let mut out = self.control_to(&self.others, now);
        // An interval whose beginning went unrecorded stays suppressed even if
        // a control message arrived while it was open.
        if let Some((lo, phys_lo)) = self.cur_lo.take() {
            if self.flag_msg_act {
                let interval = TimedInterval::new(self.pid, self.next_seq, lo, self.vc.clone(), phys_lo, now)?;
                out.push(Message {
                    from: self.pid,
                    to: Endpoint::Checker,
                    send_time: now,
                    body: MessageBody::Checking(CheckingReport {
                        ga_id: self.ga_id,
                        interval,
                    }),
                });
                self.next_seq += 1;
                self.flag_msg_act = false;
            }
        }
        Ok(out)
    }

    pub fn on_control(&mut self, msg: &Message) -> Result<(), AgentError> {
        match &msg.body {
            MessageBody::Control { vc } => {
                self.vc = self.vc.merge(vc)?;
                self.flag_msg_act = true;
                Ok(())
            }
            MessageBody::Checking(_) => Err(AgentError::Misrouted(self.pid)),
        }
    }

    fn control_to(&self, targets: &[ProcessId], now: f64) -> Vec<Message> {
        targets
            .iter()
            .map(|&to| Message {
                from: self.pid,
                to: Endpoint::Process(to),
                send_time: now,
                body: MessageBody::Control { vc: self.vc.clone() },
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vc(entries: &[u64]) -> VectorClock {
        VectorClock::from_entries(entries.to_vec()).unwrap()
    }

    fn control(from: usize, to: usize, clock: &[u64]) -> Message {
        Message {
            from: ProcessId(from),
            to: Endpoint::Process(ProcessId(to)),
            send_time: 0.0,
            body: MessageBody::Control { vc: vc(clock) },
        }
    }

    fn recipients(msgs: &[Message]) -> Vec<Endpoint> {
        msgs.iter().map(|m| m.to).collect()
    }

    #[test]
    fn up_sends_control_to_activity_peers() {
        let spec = ConstraintSpec::smart_lock();
        let mut p1 = AgentState::new(ProcessId(1), &spec).unwrap();
        assert!(p1.flag_msg_act());
        let out = p1.on_up(0.0).unwrap();
        assert_eq!(p1.vc(), &vc(&[1, 0, 0, 0]));
        assert_eq!(recipients(&out), vec![Endpoint::Process(ProcessId(2))]);
        assert_eq!(out[0].body, MessageBody::Control { vc: vc(&[1, 0, 0, 0]) });
        assert_eq!(p1.cur_lo(), Some(&vc(&[1, 0, 0, 0])));
    }

    #[test]
    fn up_without_flag_still_sends_control() {
        let spec = ConstraintSpec::smart_lock();
        let mut p1 = AgentState::new(ProcessId(1), &spec).unwrap();
        p1.on_up(0.0).unwrap();
        p1.on_down(1.0).unwrap();
        assert!(!p1.flag_msg_act());
        let out = p1.on_up(2.0).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].is_control());
        assert_eq!(p1.cur_lo(), None);
    }

    #[test]
    fn singleton_activity_sends_no_up_control() {
        let spec = ConstraintSpec::parse("AND(1) < OR(2,3)").unwrap();
        let mut p1 = AgentState::new(ProcessId(1), &spec).unwrap();
        assert!(p1.on_up(0.0).unwrap().is_empty());
        assert_eq!(p1.cur_lo(), Some(&vc(&[1, 0, 0])));
    }

    #[test]
    fn down_reports_interval_and_clears_flag() {
        let spec = ConstraintSpec::smart_lock();
        let mut p1 = AgentState::new(ProcessId(1), &spec).unwrap();
        p1.on_up(0.0).unwrap();
        p1.on_control(&control(2, 1, &[0, 1, 0, 0])).unwrap();
        assert_eq!(p1.vc(), &vc(&[1, 1, 0, 0]));
        let out = p1.on_down(5.0).unwrap();
        assert_eq!(p1.vc(), &vc(&[2, 1, 0, 0]));
        assert_eq!(
            recipients(&out),
            vec![
                Endpoint::Process(ProcessId(2)),
                Endpoint::Process(ProcessId(3)),
                Endpoint::Process(ProcessId(4)),
                Endpoint::Checker
            ]
        );
        for m in &out[..3] {
            assert_eq!(m.body, MessageBody::Control { vc: vc(&[2, 1, 0, 0]) });
        }
        let MessageBody::Checking(report) = &out[3].body else {
            panic!("expected a checking message");
        };
        assert_eq!(report.ga_id, 1);
        assert_eq!(report.seq(), 0);
        assert_eq!(report.interval.lo, vc(&[1, 0, 0, 0]));
        assert_eq!(report.interval.hi, vc(&[2, 1, 0, 0]));
        assert_eq!((report.interval.phys_lo, report.interval.phys_hi), (0.0, 5.0));
        assert!(!p1.flag_msg_act());
        assert_eq!(p1.next_seq(), 1);
    }

    #[test]
    fn suppressed_interval_sends_control_only() {
        let spec = ConstraintSpec::smart_lock();
        let mut p1 = AgentState::new(ProcessId(1), &spec).unwrap();
        p1.on_up(0.0).unwrap();
        p1.on_down(1.0).unwrap();
        p1.on_up(2.0).unwrap();
        let out = p1.on_down(3.0).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(Message::is_control));
        assert_eq!(p1.next_seq(), 1);
    }

    #[test]
    fn control_inside_unrecorded_interval_does_not_resurrect_it() {
        let spec = ConstraintSpec::smart_lock();
        let mut p1 = AgentState::new(ProcessId(1), &spec).unwrap();
        p1.on_up(0.0).unwrap();
        p1.on_down(1.0).unwrap();
        p1.on_up(2.0).unwrap();
        p1.on_control(&control(2, 1, &[0, 4, 0, 0])).unwrap();
        let out = p1.on_down(3.0).unwrap();
        assert!(out.iter().all(Message::is_control));
        // The pending flag carries over to the next interval.
        assert!(p1.flag_msg_act());
        p1.on_up(4.0).unwrap();
        let out = p1.on_down(5.0).unwrap();
        assert!(out.iter().any(|m| !m.is_control()));
    }

    #[test]
    fn single_process_system() {
        let spec = ConstraintSpec::parse("OR(1)").unwrap();
        let mut p1 = AgentState::new(ProcessId(1), &spec).unwrap();
        assert!(p1.on_up(0.0).unwrap().is_empty());
        let out = p1.on_down(0.0).unwrap();
        assert_eq!(recipients(&out), vec![Endpoint::Checker]);
    }

    #[test]
    fn control_merges_and_sets_flag() {
        let spec = ConstraintSpec::smart_lock();
        let mut p1 = AgentState::new(ProcessId(1), &spec).unwrap();
        p1.on_up(0.0).unwrap();
        p1.on_up(0.0).unwrap_err();
        p1.on_down(0.0).unwrap();
        p1.on_up(0.0).unwrap();
        assert_eq!(p1.vc(), &vc(&[3, 0, 0, 0]));
        p1.on_control(&control(2, 1, &[0, 3, 0, 0])).unwrap();
        assert_eq!(p1.vc(), &vc(&[3, 3, 0, 0]));
        assert!(p1.flag_msg_act());
        p1.on_control(&control(2, 1, &[3, 3, 0, 0])).unwrap();
        assert_eq!(p1.vc(), &vc(&[3, 3, 0, 0]));
    }

    #[test]
    fn protocol_errors() {
        let spec = ConstraintSpec::smart_lock();
        let mut p1 = AgentState::new(ProcessId(1), &spec).unwrap();
        assert_eq!(p1.on_down(0.0), Err(AgentError::DownWithoutUp(ProcessId(1))));
        p1.on_up(0.0).unwrap();
        assert_eq!(p1.on_up(0.0), Err(AgentError::DoubleUp(ProcessId(1))));
        let checking = Message {
            from: ProcessId(2),
            to: Endpoint::Process(ProcessId(1)),
            send_time: 0.0,
            body: MessageBody::Checking(CheckingReport {
                ga_id: 1,
                interval: TimedInterval::logical(ProcessId(2), 0, vc(&[0, 1, 0, 0]), vc(&[0, 2, 0, 0])).unwrap(),
            }),
        };
        assert_eq!(p1.on_control(&checking), Err(AgentError::Misrouted(ProcessId(1))));
        assert!(matches!(
            AgentState::new(ProcessId(9), &spec),
            Err(AgentError::NotAMember(ProcessId(9)))
        ));
    }
}
