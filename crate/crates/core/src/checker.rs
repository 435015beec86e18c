//! The checker process.
//!
//! Checking messages are grouped per global activity and per member into
//! FIFO queues. Whenever a queue head changes, heads that can no longer
//! overlap with the other members' heads are eliminated; once every queue is
//! nonempty and stable the heads overlap pairwise and the activity is
//! detected. Its interval is kept as two antichains of clocks (`que_lo`,
//! `que_hi`) because the true latest beginning / earliest ending may not be
//! decidable from causality alone.
//!
//! Detected occurrences then feed the ordering cursor: an occurrence of
//! `GA_k` is accepted when every kept `hi` of the accepted `GA_{k-1}`
//! occurrence is `≤` every kept `lo` of it. When the cursor passes `GA_m` a
//! satisfaction is emitted and the cursor restarts at `GA_1`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::{ConstraintSpec, GaKind, TimedInterval};
use crate::agent::CheckingReport;
use crate::vclock::{ClockError, ProcessId, VectorClock};

/// A detected global activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaOccurrence {
    pub ga_id: usize,
    pub que_lo: Vec<VectorClock>,
    pub que_hi: Vec<VectorClock>,
    /// Contributing intervals, one per member, in member order.
    pub intervals: Vec<TimedInterval>,
}

impl GaOccurrence {
    /// `(owner, seq)` of each contributing interval.
    pub fn members(&self) -> Vec<(ProcessId, u64)> {
        self.intervals.iter().map(|iv| (iv.owner, iv.seq)).collect()
    }

    /// Intervals whose `lo` survived pruning.
    pub fn kept_lo_intervals(&self) -> impl Iterator<Item = &TimedInterval> {
        self.intervals.iter().filter(|iv| self.que_lo.contains(&iv.lo))
    }

    /// Intervals whose `hi` survived pruning.
    pub fn kept_hi_intervals(&self) -> impl Iterator<Item = &TimedInterval> {
        self.intervals.iter().filter(|iv| self.que_hi.contains(&iv.hi))
    }
}

/// One completed `GA_1 ≺ … ≺ GA_m` sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Satisfaction {
    /// 1-based count of satisfactions so far.
    pub index: u64,
    pub occurrences: Vec<GaOccurrence>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonCounters {
    /// Clock comparisons in the head-elimination loop.
    pub elimination: u64,
    /// Clock comparisons while pruning `que_lo` / `que_hi`.
    pub pruning: u64,
    /// Clock comparisons in the ordering sweep.
    pub ordering: u64,
}

impl ComparisonCounters {
    pub fn detection(&self) -> u64 {
        self.elimination + self.pruning
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckerError {
    #[error("unknown global activity {0}")]
    UnknownActivity(usize),
    #[error("{pid} is not a member of global activity {ga_id}")]
    NotAMember { pid: ProcessId, ga_id: usize },
    #[error("duplicate checking message {seq} from {pid}")]
    DuplicateSeq { pid: ProcessId, seq: u64 },
    #[error("cannot compute the interval of an empty set of heads")]
    EmptyHeads,
    #[error(transparent)]
    Clock(#[from] ClockError),
}

/// Everything produced by handling one checking message.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckerOutput {
    pub detections: Vec<GaOccurrence>,
    pub satisfactions: Vec<Satisfaction>,
}

#[derive(Debug, Clone, Default)]
struct Reorder {
    next: u64,
    buffered: BTreeMap<u64, CheckingReport>,
}

#[derive(Debug, Clone)]
pub struct Checker {
    spec: ConstraintSpec,
    /// `Que_(k,t)`: `queues[k-1][t]`.
    queues: Vec<Vec<VecDeque<TimedInterval>>>,
    fifo: Vec<Reorder>,
    /// Detected occurrences not yet consumed by the ordering cursor.
    pending: Vec<VecDeque<GaOccurrence>>,
    detected: Vec<u64>,
    cursor: usize,
    /// Occurrences accepted so far in the sequence under construction.
    chain: Vec<GaOccurrence>,
    satisfied: u64,
    discarded: u64,
    counters: ComparisonCounters,
}

impl Checker {
    pub fn new(spec: ConstraintSpec) -> Self {
        let queues = spec
            .activities()
            .iter()
            .map(|ga| vec![VecDeque::new(); ga.size()])
            .collect();
        let m = spec.len();
        Checker {
            fifo: vec![Reorder::default(); spec.process_count()],
            queues,
            pending: vec![VecDeque::new(); m],
            detected: vec![0; m],
            cursor: 0,
            chain: Vec::new(),
            satisfied: 0,
            discarded: 0,
            counters: ComparisonCounters::default(),
            spec,
        }
    }

    pub fn spec(&self) -> &ConstraintSpec {
        &self.spec
    }

    /// Handle one checking message: detection, then ordering.
    pub fn receive(&mut self, report: CheckingReport) -> Result<CheckerOutput, CheckerError> {
        let detections = self.ingest(report)?;
        let satisfactions = self.advance_ordering();
        Ok(CheckerOutput {
            detections,
            satisfactions,
        })
    }

    /// Queue a checking message (after restoring per-process FIFO order) and
    /// run detection for every interval that reaches the head of its queue.
    pub fn ingest(&mut self, report: CheckingReport) -> Result<Vec<GaOccurrence>, CheckerError> {
        let ga = self
            .spec
            .activity(report.ga_id)
            .ok_or(CheckerError::UnknownActivity(report.ga_id))?;
        let pid = report.from();
        if ga.member_index(pid).is_none() {
            return Err(CheckerError::NotAMember {
                pid,
                ga_id: report.ga_id,
            });
        }
        let n = self.spec.process_count();
        for clock in [&report.interval.lo, &report.interval.hi] {
            if clock.width() != n {
                return Err(ClockError::LengthMismatch {
                    left: clock.width(),
                    right: n,
                }
                .into());
            }
        }
        let slot = &mut self.fifo[pid.index()];
        let seq = report.seq();
        if seq < slot.next || slot.buffered.contains_key(&seq) {
            return Err(CheckerError::DuplicateSeq { pid, seq });
        }
        slot.buffered.insert(seq, report);

        let mut detections = Vec::new();
        while let Some(ready) = self.fifo[pid.index()].pop_next() {
            detections.extend(self.enqueue(ready));
        }
        Ok(detections)
    }

    /// Release reports stuck behind missing sequence numbers, in seq order.
    /// Returns the detections they trigger and a description of each gap.
    pub fn flush_gaps(&mut self) -> (Vec<GaOccurrence>, Vec<String>) {
        let mut detections = Vec::new();
        let mut gaps = Vec::new();
        for index in 0..self.fifo.len() {
            let pid = ProcessId::from_index(index);
            while let Some((&seq, _)) = self.fifo[index].buffered.first_key_value() {
                let slot = &mut self.fifo[index];
                if seq != slot.next {
                    gaps.push(format!("{pid}: sequence numbers {}..{} never arrived", slot.next, seq));
                    slot.next = seq;
                }
                while let Some(ready) = self.fifo[index].pop_next() {
                    detections.extend(self.enqueue(ready));
                }
            }
        }
        (detections, gaps)
    }

    fn enqueue(&mut self, report: CheckingReport) -> Vec<GaOccurrence> {
        let k = report.ga_id - 1;
        let t = self.spec.activities()[k]
            .member_index(report.from())
            .expect("membership checked on ingest");
        let queue = &mut self.queues[k][t];
        queue.push_back(report.interval);
        if queue.len() > 1 {
            return Vec::new();
        }
        self.detect(k, t)
    }

    fn detect(&mut self, k: usize, first: usize) -> Vec<GaOccurrence> {
        let kind = self.spec.activities()[k].kind;
        let ga_id = k + 1;
        let queues = &mut self.queues[k];
        let counters = &mut self.counters;
        let size = queues.len();
        let mut found = Vec::new();
        let mut changed = BTreeSet::from([first]);
        loop {
            while !changed.is_empty() {
                let mut eliminated = BTreeSet::new();
                for &i in &changed {
                    for j in (0..size).filter(|&j| j != i) {
                        let (Some(a), Some(b)) = (queues[i].front(), queues[j].front()) else {
                            continue;
                        };
                        counters.elimination += 2;
                        if !b.lo.precedes(&a.hi) {
                            eliminated.insert(i);
                        }
                        if !a.lo.precedes(&b.hi) {
                            eliminated.insert(j);
                        }
                    }
                }
                for &i in &eliminated {
                    queues[i].pop_front();
                }
                changed = eliminated;
            }
            if queues.iter().any(VecDeque::is_empty) {
                break;
            }
            let heads: Vec<TimedInterval> = queues.iter_mut().filter_map(VecDeque::pop_front).collect();
            let occurrence = interval_of(ga_id, heads, kind, &mut counters.pruning);
            found.push(occurrence);
            // The next heads may already overlap.
            changed = (0..size).filter(|&i| !queues[i].is_empty()).collect();
        }
        for occurrence in &found {
            self.detected[k] += 1;
            self.pending[k].push_back(occurrence.clone());
        }
        found
    }

    /// Move the ordering cursor over every occurrence detected so far.
    pub fn advance_ordering(&mut self) -> Vec<Satisfaction> {
        let m = self.spec.len();
        let mut out = Vec::new();
        while let Some(current) = self.pending[self.cursor].pop_front() {
            let counters = &mut self.counters;
            let accepted = match self.chain.last() {
                None => true,
                Some(previous) => previous.que_hi.iter().all(|pre| {
                    current.que_lo.iter().all(|cur| {
                        counters.ordering += 1;
                        pre.precedes_or_equals(cur)
                    })
                }),
            };
            if !accepted {
                self.discarded += 1;
                continue;
            }
            self.chain.push(current);
            self.cursor += 1;
            if self.cursor == m {
                self.satisfied += 1;
                out.push(Satisfaction {
                    index: self.satisfied,
                    occurrences: std::mem::take(&mut self.chain),
                });
                self.cursor = 0;
            }
        }
        out
    }

    pub fn satisfied_count(&self) -> u64 {
        self.satisfied
    }

    /// Occurrences rejected by the ordering sweep.
    pub fn discarded_count(&self) -> u64 {
        self.discarded
    }

    /// Number of detections of `GA_{ga_id}`.
    pub fn detected_count(&self, ga_id: usize) -> u64 {
        ga_id.checked_sub(1).and_then(|k| self.detected.get(k)).copied().unwrap_or(0)
    }

    /// 1-based index of the activity the cursor waits for.
    pub fn cursor(&self) -> usize {
        self.cursor + 1
    }

    /// `PreQueLo`: kept beginnings of the last accepted occurrence.
    pub fn pre_que_lo(&self) -> &[VectorClock] {
        self.chain.last().map_or(&[], |o| &o.que_lo)
    }

    /// `PreQueHi`: kept endings of the last accepted occurrence.
    pub fn pre_que_hi(&self) -> &[VectorClock] {
        self.chain.last().map_or(&[], |o| &o.que_hi)
    }

    pub fn counters(&self) -> ComparisonCounters {
        self.counters
    }

    /// Length of `Que_(k,t)` for member `pid` of `GA_{ga_id}`.
    pub fn queue_len(&self, ga_id: usize, pid: ProcessId) -> Option<usize> {
        let ga = self.spec.activity(ga_id)?;
        let t = ga.member_index(pid)?;
        Some(self.queues[ga_id - 1][t].len())
    }

    /// Reports held back waiting for an earlier sequence number.
    pub fn buffered(&self) -> usize {
        self.fifo.iter().map(|r| r.buffered.len()).sum()
    }
}

impl Reorder {
    fn pop_next(&mut self) -> Option<CheckingReport> {
        let report = self.buffered.remove(&self.next)?;
        self.next += 1;
        Some(report)
    }
}

/// Interval of a detected activity from pairwise-overlapping heads.
///
/// AND keeps the maximal `lo`s and minimal `hi`s (intersection); OR keeps the
/// minimal `lo`s and maximal `hi`s (union).
pub fn compute_interval(ga_id: usize, heads: Vec<TimedInterval>, kind: GaKind) -> Result<GaOccurrence, CheckerError> {
    let Some(first) = heads.first() else {
        return Err(CheckerError::EmptyHeads);
    };
    let width = first.lo.width();
    for iv in &heads {
        for clock in [&iv.lo, &iv.hi] {
            if clock.width() != width {
                return Err(ClockError::LengthMismatch {
                    left: width,
                    right: clock.width(),
                }
                .into());
            }
        }
    }
    let mut scratch = 0;
    Ok(interval_of(ga_id, heads, kind, &mut scratch))
}

fn interval_of(ga_id: usize, heads: Vec<TimedInterval>, kind: GaKind, comparisons: &mut u64) -> GaOccurrence {
    let los: Vec<&VectorClock> = heads.iter().map(|iv| &iv.lo).collect();
    let his: Vec<&VectorClock> = heads.iter().map(|iv| &iv.hi).collect();
    let (que_lo, que_hi) = match kind {
        GaKind::And => (extremes(&los, Extreme::Maximal, comparisons), extremes(&his, Extreme::Minimal, comparisons)),
        GaKind::Or => (extremes(&los, Extreme::Minimal, comparisons), extremes(&his, Extreme::Maximal, comparisons)),
    };
    GaOccurrence {
        ga_id,
        que_lo,
        que_hi,
        intervals: heads,
    }
}

#[derive(Clone, Copy)]
enum Extreme {
    Maximal,
    Minimal,
}

/// Elements not dominated by any other element, first copy of duplicates kept.
fn extremes(clocks: &[&VectorClock], which: Extreme, comparisons: &mut u64) -> Vec<VectorClock> {
    let mut kept: Vec<VectorClock> = Vec::new();
    for (i, &x) in clocks.iter().enumerate() {
        let dominated = clocks.iter().enumerate().any(|(j, &y)| {
            if i == j {
                return false;
            }
            *comparisons += 1;
            match which {
                Extreme::Maximal => x.precedes(y),
                Extreme::Minimal => y.precedes(x),
            }
        });
        if !dominated && !kept.contains(x) {
            kept.push(x.clone());
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activity::intervals_overlap;

    fn vc(entries: &[u64]) -> VectorClock {
        VectorClock::from_entries(entries.to_vec()).unwrap()
    }

    fn report(ga_id: usize, owner: usize, seq: u64, lo: &[u64], hi: &[u64]) -> CheckingReport {
        CheckingReport {
            ga_id,
            interval: TimedInterval::logical(ProcessId(owner), seq, vc(lo), vc(hi)).unwrap(),
        }
    }

    #[test]
    fn two_member_exchange_is_detected() {
        let mut checker = Checker::new(ConstraintSpec::smart_lock());
        let first = checker.ingest(report(1, 1, 0, &[1, 0, 0, 0], &[2, 1, 0, 0])).unwrap();
        assert!(first.is_empty());
        let found = checker.ingest(report(1, 2, 0, &[1, 1, 0, 0], &[2, 2, 0, 0])).unwrap();
        assert_eq!(found.len(), 1);
        let occ = &found[0];
        assert!(intervals_overlap(&occ.intervals[0], &occ.intervals[1]).unwrap());
        assert_eq!(occ.que_lo, vec![vc(&[1, 1, 0, 0])]);
        assert_eq!(occ.que_hi, vec![vc(&[2, 1, 0, 0])]);
        assert_eq!(checker.queue_len(1, ProcessId(1)), Some(0));
        assert_eq!(checker.queue_len(1, ProcessId(2)), Some(0));
        assert_eq!(checker.detected_count(1), 1);
    }

    #[test]
    fn lone_interval_waits() {
        let mut checker = Checker::new(ConstraintSpec::smart_lock());
        assert!(checker.ingest(report(1, 1, 0, &[1, 0, 0, 0], &[2, 1, 0, 0])).unwrap().is_empty());
        assert_eq!(checker.queue_len(1, ProcessId(1)), Some(1));
    }

    #[test]
    fn non_overlapping_head_is_eliminated() {
        let spec = ConstraintSpec::parse("AND(1,2)").unwrap();
        let mut checker = Checker::new(spec);
        checker.ingest(report(1, 1, 0, &[1, 0], &[2, 0])).unwrap();
        let found = checker.ingest(report(1, 2, 0, &[2, 1], &[2, 2])).unwrap();
        assert!(found.is_empty());
        assert_eq!(checker.queue_len(1, ProcessId(1)), Some(0));
        assert_eq!(checker.queue_len(1, ProcessId(2)), Some(1));
        // P1's next interval begins after P2's ended, so P2's head goes too.
        let found = checker.ingest(report(1, 1, 1, &[3, 2], &[4, 2])).unwrap();
        assert!(found.is_empty());
        assert_eq!(checker.queue_len(1, ProcessId(1)), Some(1));
        assert_eq!(checker.queue_len(1, ProcessId(2)), Some(0));
    }

    #[test]
    fn out_of_order_delivery_is_reordered() {
        let mut checker = Checker::new(ConstraintSpec::smart_lock());
        assert!(checker.ingest(report(1, 1, 1, &[3, 2, 0, 0], &[4, 3, 0, 0])).unwrap().is_empty());
        assert_eq!(checker.buffered(), 1);
        assert!(checker.ingest(report(1, 2, 0, &[1, 1, 0, 0], &[2, 2, 0, 0])).unwrap().is_empty());
        let found = checker.ingest(report(1, 1, 0, &[1, 0, 0, 0], &[2, 1, 0, 0])).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].members(), vec![(ProcessId(1), 0), (ProcessId(2), 0)]);
        assert_eq!(checker.buffered(), 0);
        assert_eq!(checker.queue_len(1, ProcessId(1)), Some(1));
    }

    #[test]
    fn ingest_errors() {
        let mut checker = Checker::new(ConstraintSpec::smart_lock());
        assert_eq!(
            checker.ingest(report(3, 1, 0, &[1, 0, 0, 0], &[2, 0, 0, 0])),
            Err(CheckerError::UnknownActivity(3))
        );
        assert_eq!(
            checker.ingest(report(2, 1, 0, &[1, 0, 0, 0], &[2, 0, 0, 0])),
            Err(CheckerError::NotAMember {
                pid: ProcessId(1),
                ga_id: 2
            })
        );
        assert!(matches!(
            checker.ingest(report(1, 1, 0, &[1, 0], &[2, 0])),
            Err(CheckerError::Clock(ClockError::LengthMismatch { .. }))
        ));
        checker.ingest(report(1, 1, 0, &[1, 0, 0, 0], &[2, 0, 0, 0])).unwrap();
        assert_eq!(
            checker.ingest(report(1, 1, 0, &[1, 0, 0, 0], &[2, 0, 0, 0])),
            Err(CheckerError::DuplicateSeq {
                pid: ProcessId(1),
                seq: 0
            })
        );
        checker.ingest(report(1, 1, 2, &[5, 0, 0, 0], &[6, 0, 0, 0])).unwrap();
        assert!(matches!(
            checker.ingest(report(1, 1, 2, &[5, 0, 0, 0], &[6, 0, 0, 0])),
            Err(CheckerError::DuplicateSeq { seq: 2, .. })
        ));
    }

    #[test]
    fn gaps_are_flushed_in_order() {
        let spec = ConstraintSpec::parse("OR(1)").unwrap();
        let mut checker = Checker::new(spec);
        assert!(checker.ingest(report(1, 1, 2, &[5], &[6])).unwrap().is_empty());
        let (found, gaps) = checker.flush_gaps();
        assert_eq!(found.len(), 1);
        assert_eq!(gaps.len(), 1);
        assert_eq!(checker.buffered(), 0);
    }

    // Three members: lo1→lo2, lo1→lo3, lo2∥lo3; hi3→hi2, hi1→hi2, hi1∥hi3.
    fn three_heads() -> Vec<TimedInterval> {
        let i1 = TimedInterval::logical(ProcessId(1), 0, vc(&[1, 0, 0]), vc(&[2, 1, 1])).unwrap();
        let i2 = TimedInterval::logical(ProcessId(2), 0, vc(&[1, 1, 0]), vc(&[2, 2, 2])).unwrap();
        let i3 = TimedInterval::logical(ProcessId(3), 0, vc(&[1, 0, 1]), vc(&[1, 1, 2])).unwrap();
        vec![i1, i2, i3]
    }

    #[test]
    fn pruning_keeps_concurrent_extremes() {
        let heads = three_heads();
        let (lo1, lo2, lo3) = (&heads[0].lo, &heads[1].lo, &heads[2].lo);
        let (hi1, hi2, hi3) = (&heads[0].hi, &heads[1].hi, &heads[2].hi);
        assert!(lo1 < lo2 && lo1 < lo3 && lo2.concurrent(lo3).unwrap());
        assert!(hi3 < hi2 && hi1 < hi2 && hi1.concurrent(hi3).unwrap());

        let and = compute_interval(1, heads.clone(), GaKind::And).unwrap();
        assert_eq!(and.que_lo, vec![lo2.clone(), lo3.clone()]);
        assert_eq!(and.que_hi, vec![hi1.clone(), hi3.clone()]);

        let or = compute_interval(1, heads.clone(), GaKind::Or).unwrap();
        assert_eq!(or.que_lo, vec![lo1.clone()]);
        assert_eq!(or.que_hi, vec![hi2.clone()]);
    }

    #[test]
    fn pruning_two_interval_figure() {
        let i1 = TimedInterval::logical(ProcessId(1), 0, vc(&[1, 0, 0, 0]), vc(&[2, 1, 0, 0])).unwrap();
        let i2 = TimedInterval::logical(ProcessId(2), 0, vc(&[1, 1, 0, 0]), vc(&[2, 2, 0, 0])).unwrap();
        let and = compute_interval(1, vec![i1.clone(), i2.clone()], GaKind::And).unwrap();
        assert_eq!((and.que_lo, and.que_hi), (vec![i2.lo.clone()], vec![i1.hi.clone()]));
        let or = compute_interval(1, vec![i1.clone(), i2.clone()], GaKind::Or).unwrap();
        assert_eq!((or.que_lo, or.que_hi), (vec![i1.lo.clone()], vec![i2.hi.clone()]));
    }

    #[test]
    fn compute_interval_rejects_empty() {
        assert_eq!(compute_interval(1, Vec::new(), GaKind::And), Err(CheckerError::EmptyHeads));
    }

    fn occurrence(ga_id: usize, lo: &[u64], hi: &[u64]) -> GaOccurrence {
        GaOccurrence {
            ga_id,
            que_lo: vec![vc(lo)],
            que_hi: vec![vc(hi)],
            intervals: Vec::new(),
        }
    }

    #[test]
    fn ordering_completes_sequence() {
        let mut checker = Checker::new(ConstraintSpec::smart_lock());
        checker.pending[0].push_back(occurrence(1, &[1, 1, 0, 0], &[2, 1, 0, 0]));
        assert!(checker.advance_ordering().is_empty());
        assert_eq!(checker.cursor(), 2);
        assert_eq!(checker.pre_que_hi(), &[vc(&[2, 1, 0, 0])]);
        checker.pending[1].push_back(occurrence(2, &[2, 1, 1, 1], &[2, 1, 2, 2]));
        let done = checker.advance_ordering();
        assert_eq!(done.len(), 1);
        assert_eq!(checker.satisfied_count(), 1);
        assert_eq!(checker.cursor(), 1);
        assert!(checker.pre_que_hi().is_empty());
    }

    #[test]
    fn ordering_discards_concurrent_occurrence() {
        let mut checker = Checker::new(ConstraintSpec::smart_lock());
        checker.pending[0].push_back(occurrence(1, &[1, 1, 0, 0], &[2, 1, 0, 0]));
        checker.pending[1].push_back(occurrence(2, &[0, 2, 0, 0], &[0, 3, 0, 0]));
        assert!(checker.advance_ordering().is_empty());
        assert_eq!(checker.cursor(), 2);
        assert_eq!(checker.discarded_count(), 1);
        assert_eq!(checker.pre_que_hi(), &[vc(&[2, 1, 0, 0])]);
    }
}
