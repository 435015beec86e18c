//! Brute-force reference for detection and ordering.
//!
//! Happen-before is taken from reachability in the event graph of a run
//! (program order plus send→receive edges), never from vector clocks.
//! Detection enumerates every combination of reported intervals; ordering
//! replays the cursor over those occurrences. [`compare_run`] diffs the
//! result against what the real checker emitted during the run.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::activity::{ConstraintSpec, GaKind};
use crate::checker::GaOccurrence;
use crate::simnet::{substream, DelayModel, Direction, ExecutionLog, LoggedEvent, SimError, Simulation};
use crate::vclock::{ProcessId, VectorClock};

/// Identity of a reported interval: owner and sequence number.
pub type IntervalId = (ProcessId, u64);

struct Node {
    vc: VectorClock,
    ticked: bool,
}

/// Process events of a run with their transitive happen-before closure.
pub struct EventGraph {
    nodes: Vec<Node>,
    /// `reach[a]` has bit `b` set iff `a → b`.
    reach: Vec<Vec<u64>>,
    /// Node of each log entry that is a process event.
    node_of_entry: BTreeMap<usize, usize>,
}

impl EventGraph {
    pub fn from_log(log: &ExecutionLog) -> Self {
        let mut nodes = Vec::new();
        let mut node_of_entry = BTreeMap::new();
        let mut succ: Vec<Vec<usize>> = Vec::new();
        let mut last_on: BTreeMap<ProcessId, usize> = BTreeMap::new();
        let mut send_node: BTreeMap<usize, usize> = BTreeMap::new();
        for (index, entry) in log.entries.iter().enumerate() {
            let (pid, vc, ticked) = match &entry.event {
                LoggedEvent::Transition { pid, vc, .. } => (*pid, vc, true),
                LoggedEvent::ControlReceived { pid, vc, .. } => (*pid, vc, false),
                LoggedEvent::CheckingReceived { .. } => continue,
            };
            let node = nodes.len();
            nodes.push(Node { vc: vc.clone(), ticked });
            succ.push(Vec::new());
            node_of_entry.insert(index, node);
            if let Some(prev) = last_on.insert(pid, node) {
                succ[prev].push(node);
            }
            match &entry.event {
                LoggedEvent::Transition { sent, .. } => {
                    for &id in sent {
                        send_node.insert(id, node);
                    }
                }
                LoggedEvent::ControlReceived { message, .. } => {
                    succ[send_node[message]].push(node);
                }
                LoggedEvent::CheckingReceived { .. } => unreachable!(),
            }
        }
        // Log order is a topological order: every edge points forward.
        let words = nodes.len().div_ceil(64);
        let mut reach = vec![vec![0u64; words]; nodes.len()];
        for a in (0..nodes.len()).rev() {
            let mut row = vec![0u64; words];
            for &b in &succ[a] {
                row[b / 64] |= 1 << (b % 64);
                for (w, r) in row.iter_mut().zip(&reach[b]) {
                    *w |= r;
                }
            }
            reach[a] = row;
        }
        EventGraph {
            nodes,
            reach,
            node_of_entry,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn happened_before(&self, a: usize, b: usize) -> bool {
        self.reach[a][b / 64] >> (b % 64) & 1 == 1
    }

    /// Pairs of transitions where clock comparison and reachability
    /// disagree. Receives merge without ticking, so they are skipped.
    pub fn clock_mismatches(&self) -> Vec<(usize, usize)> {
        let ticked: Vec<usize> = (0..self.len()).filter(|&n| self.nodes[n].ticked).collect();
        let mut out = Vec::new();
        for &a in &ticked {
            for &b in &ticked {
                let by_clock = self.nodes[a].vc.happened_before(&self.nodes[b].vc).unwrap_or(false);
                if by_clock != self.happened_before(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// A reported interval located in the event graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportedInterval {
    pub id: IntervalId,
    pub ga_id: usize,
    pub lo: usize,
    pub hi: usize,
}

/// Intervals that reached the checker, grouped by process in seq order.
/// The beginning is the up immediately before the reporting down.
pub fn reported_intervals(log: &ExecutionLog, graph: &EventGraph) -> BTreeMap<ProcessId, Vec<ReportedInterval>> {
    let mut last_up: BTreeMap<ProcessId, usize> = BTreeMap::new();
    let mut out: BTreeMap<ProcessId, Vec<ReportedInterval>> = BTreeMap::new();
    for (index, entry) in log.entries.iter().enumerate() {
        let LoggedEvent::Transition { pid, direction, sent, .. } = &entry.event else {
            continue;
        };
        let node = graph.node_of_entry[&index];
        match direction {
            Direction::Up => {
                last_up.insert(*pid, node);
            }
            Direction::Down => {
                for &id in sent {
                    if let crate::agent::MessageBody::Checking(report) = &log.messages[id].message.body {
                        out.entry(*pid).or_default().push(ReportedInterval {
                            id: (*pid, report.seq()),
                            ga_id: report.ga_id,
                            lo: last_up[pid],
                            hi: node,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Occurrence reduced to interval identities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OccurrenceKey {
    pub ga_id: usize,
    /// One interval per member, in member order.
    pub members: Vec<IntervalId>,
    pub kept_lo: BTreeSet<IntervalId>,
    pub kept_hi: BTreeSet<IntervalId>,
}

impl OccurrenceKey {
    pub fn of(occ: &GaOccurrence) -> Self {
        OccurrenceKey {
            ga_id: occ.ga_id,
            members: occ.members(),
            kept_lo: occ.kept_lo_intervals().map(|iv| (iv.owner, iv.seq)).collect(),
            kept_hi: occ.kept_hi_intervals().map(|iv| (iv.owner, iv.seq)).collect(),
        }
    }
}

struct Found<'a> {
    key: OccurrenceKey,
    los: Vec<&'a ReportedInterval>,
    his: Vec<&'a ReportedInterval>,
}

fn overlap(g: &EventGraph, a: &ReportedInterval, b: &ReportedInterval) -> bool {
    g.happened_before(a.lo, b.hi) && g.happened_before(b.lo, a.hi)
}

/// Nodes of `set` not strictly below (`maximal`) or above another member.
fn extremes<'a>(
    g: &EventGraph,
    set: &[&'a ReportedInterval],
    node: impl Fn(&ReportedInterval) -> usize,
    maximal: bool,
) -> Vec<&'a ReportedInterval> {
    set.iter()
        .filter(|x| {
            !set.iter().any(|y| {
                if maximal {
                    g.happened_before(node(x), node(y))
                } else {
                    g.happened_before(node(y), node(x))
                }
            })
        })
        .copied()
        .collect()
}

fn detect_one<'a>(
    g: &EventGraph,
    spec: &ConstraintSpec,
    ga_id: usize,
    seqs: &'a [Vec<ReportedInterval>],
) -> Vec<Found<'a>> {
    let kind = spec.activities()[ga_id - 1].kind;
    let size = seqs.len();
    let mut start = vec![0usize; size];
    let mut out = Vec::new();
    loop {
        if (0..size).any(|p| start[p] >= seqs[p].len()) {
            return out;
        }
        // Enumerate every combination from the current start positions.
        let mut best: Option<Vec<usize>> = None;
        let mut idx = start.clone();
        'enumerate: loop {
            let combo: Vec<&ReportedInterval> = (0..size).map(|p| &seqs[p][idx[p]]).collect();
            let ok = (0..size).all(|a| (a + 1..size).all(|b| overlap(g, combo[a], combo[b])));
            if ok {
                best = Some(match best {
                    None => idx.clone(),
                    Some(b) => b.iter().zip(&idx).map(|(x, y)| *x.min(y)).collect(),
                });
            }
            let mut p = 0;
            loop {
                if p == size {
                    break 'enumerate;
                }
                idx[p] += 1;
                if idx[p] < seqs[p].len() {
                    break;
                }
                idx[p] = start[p];
                p += 1;
            }
        }
        let Some(best) = best else {
            return out;
        };
        let heads: Vec<&ReportedInterval> = (0..size).map(|p| &seqs[p][best[p]]).collect();
        let pairwise = (0..size).all(|a| (a + 1..size).all(|b| overlap(g, heads[a], heads[b])));
        assert!(pairwise, "pointwise minimum of overlapping combinations must overlap");
        let (los, his) = match kind {
            GaKind::And => (extremes(g, &heads, |i| i.lo, true), extremes(g, &heads, |i| i.hi, false)),
            GaKind::Or => (extremes(g, &heads, |i| i.lo, false), extremes(g, &heads, |i| i.hi, true)),
        };
        out.push(Found {
            key: OccurrenceKey {
                ga_id,
                members: heads.iter().map(|i| i.id).collect(),
                kept_lo: los.iter().map(|i| i.id).collect(),
                kept_hi: his.iter().map(|i| i.id).collect(),
            },
            los,
            his,
        });
        for p in 0..size {
            start[p] = best[p] + 1;
        }
    }
}

/// Reference detections and orderings for one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleOutcome {
    /// Occurrences of each activity in detection order, indexed by `ga_id - 1`.
    pub detections: Vec<Vec<OccurrenceKey>>,
    pub satisfactions: Vec<Vec<OccurrenceKey>>,
    pub discarded: u64,
}

pub fn brute_force(log: &ExecutionLog, spec: &ConstraintSpec) -> OracleOutcome {
    let g = EventGraph::from_log(log);
    let mut by_pid = reported_intervals(log, &g);
    let seqs: Vec<Vec<Vec<ReportedInterval>>> = spec
        .activities()
        .iter()
        .map(|ga| ga.members.iter().map(|p| by_pid.remove(p).unwrap_or_default()).collect())
        .collect();
    let found: Vec<Vec<Found>> = spec
        .activities()
        .iter()
        .map(|ga| detect_one(&g, spec, ga.ga_id, &seqs[ga.ga_id - 1]))
        .collect();

    let m = spec.len();
    let mut next = vec![0usize; m];
    let mut chain: Vec<&Found> = Vec::new();
    let mut satisfactions = Vec::new();
    let mut discarded = 0;
    while let Some(current) = found[chain.len()].get(next[chain.len()]) {
        next[chain.len()] += 1;
        let accepted = chain.last().is_none_or(|pre| {
            pre.his
                .iter()
                .all(|h| current.los.iter().all(|l| h.hi == l.lo || g.happened_before(h.hi, l.lo)))
        });
        if !accepted {
            discarded += 1;
            continue;
        }
        chain.push(current);
        if chain.len() == m {
            satisfactions.push(chain.drain(..).map(|f| f.key.clone()).collect());
        }
    }
    OracleOutcome {
        detections: found.into_iter().map(|v| v.into_iter().map(|f| f.key).collect()).collect(),
        satisfactions,
        discarded,
    }
}

/// What the checker actually emitted during the run, in the same shape.
pub fn checker_outcome(log: &ExecutionLog, spec: &ConstraintSpec, discarded: u64) -> OracleOutcome {
    let mut detections = vec![Vec::new(); spec.len()];
    for d in &log.detections {
        detections[d.occurrence.ga_id - 1].push(OccurrenceKey::of(&d.occurrence));
    }
    let satisfactions = log
        .satisfactions
        .iter()
        .map(|s| s.satisfaction.occurrences.iter().map(OccurrenceKey::of).collect())
        .collect();
    OracleOutcome {
        detections,
        satisfactions,
        discarded,
    }
}

/// A small randomized run for equivalence testing.
pub struct MicroRun {
    pub spec: ConstraintSpec,
    pub log: ExecutionLog,
    pub discarded: u64,
}

/// Up to four processes split into randomly typed activities, each doing up
/// to six intervals at random (sometimes coinciding) times, with random
/// message delays.
pub fn micro_run(seed: u64) -> Result<MicroRun, SimError> {
    let mut rng = substream(seed, 0);
    let n = rng.random_range(1..=4usize);
    let mut pids: Vec<usize> = (1..=n).collect();
    pids.shuffle(&mut rng);
    let groups = rng.random_range(1..=n);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); groups];
    for (i, p) in pids.into_iter().enumerate() {
        let g = if i < groups { i } else { rng.random_range(0..groups) };
        members[g].push(p);
    }
    let activities = members
        .into_iter()
        .map(|mut m| {
            m.sort_unstable();
            let kind = if rng.random_bool(0.5) { GaKind::And } else { GaKind::Or };
            (kind, m)
        })
        .collect();
    let spec = ConstraintSpec::new(activities).expect("a partition of 1..=n");

    let mean = [0.2, 1.0, 5.0, 20.0][rng.random_range(0..4)];
    let delay = if rng.random_bool(0.8) {
        DelayModel::exponential(mean)?
    } else {
        DelayModel::constant(mean)?
    };
    let mut sim = Simulation::new(spec.clone(), delay, rng.random(), f64::INFINITY)?;
    let coarse = rng.random_bool(0.3);
    for p in 1..=n {
        let k = rng.random_range(0..=6usize);
        let mut times: Vec<f64> = (0..2 * k)
            .map(|_| {
                let t = rng.random::<f64>() * 100.0;
                if coarse {
                    t.round()
                } else {
                    t
                }
            })
            .collect();
        times.sort_by(f64::total_cmp);
        for pair in times.chunks(2) {
            sim.schedule_transition(pair[0], ProcessId(p), Direction::Up)?;
            sim.schedule_transition(pair[1], ProcessId(p), Direction::Down)?;
        }
    }
    sim.run_until_quiescent()?;
    let discarded = sim.checker().discarded_count();
    let (log, _) = sim.into_parts();
    Ok(MicroRun { spec, log, discarded })
}

/// Differences between the checker and the brute-force reference.
pub fn compare_run(run: &MicroRun) -> Vec<String> {
    let want = brute_force(&run.log, &run.spec);
    let got = checker_outcome(&run.log, &run.spec, run.discarded);
    let mut diffs = Vec::new();
    for (k, (w, g)) in want.detections.iter().zip(&got.detections).enumerate() {
        if w != g {
            diffs.push(format!("GA_{} detections: expected {w:?}, got {g:?}", k + 1));
        }
    }
    if want.satisfactions != got.satisfactions {
        diffs.push(format!(
            "satisfactions: expected {:?}, got {:?}",
            want.satisfactions, got.satisfactions
        ));
    }
    if want.discarded != got.discarded {
        diffs.push(format!("discarded: expected {}, got {}", want.discarded, got.discarded));
    }
    let graph = EventGraph::from_log(&run.log);
    let clock = graph.clock_mismatches();
    if !clock.is_empty() {
        diffs.push(format!("{} event pairs where clocks disagree with reachability", clock.len()));
    }
    diffs
}

/// Run `count` micro traces starting at `first_seed`; returns the seeds
/// that mismatched with their differences.
pub fn equivalence_suite(first_seed: u64, count: u64) -> Result<Vec<(u64, Vec<String>)>, SimError> {
    let mut failures = Vec::new();
    for seed in first_seed..first_seed + count {
        let run = micro_run(seed)?;
        let diffs = compare_run(&run);
        if !diffs.is_empty() {
            failures.push((seed, diffs));
        }
    }
    Ok(failures)
}
