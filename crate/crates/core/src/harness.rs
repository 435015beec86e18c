//! Smart-lock experiment: a user alternates between an office and a corridor,
//! each watched by the sensors of one global activity, and the checker is
//! asked whether it ordered "in the office" before "in the corridor".
//!
//! Pipeline: [`generate_workload`] draws the true stays, [`apply_update_interval`]
//! delays every transition to the sensor's next dissemination tick, the
//! observed schedule drives a [`Simulation`], and [`physical_oracle`] audits
//! every reported satisfaction against the true cycles.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::ConstraintSpec;
use crate::checker::ComparisonCounters;
use crate::simnet::{substream, DelayModel, Direction, ExecutionLog, SimError, Simulation, TimedSatisfaction};
use crate::vclock::ProcessId;

const WORKLOAD_STREAM: u64 = 1;
const PHASE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub lifetime: f64,
    pub mean_stay_in: f64,
    pub mean_stay_out: f64,
    pub update_interval: f64,
    pub mean_delay: f64,
    /// Walking time between leaving one place and entering the other.
    pub transit: f64,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            lifetime: 20.0 * 24.0 * 3600.0,
            mean_stay_in: 600.0,
            mean_stay_out: 300.0,
            update_interval: 1.0,
            mean_delay: 0.06,
            transit: 10.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("{name} must be positive and finite, got {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("the experiment needs exactly two global activities, got {0}")]
    IncompatibleConstraint(usize),
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("sweep needs at least one seed")]
    NoSeeds,
    #[error("unknown sweep axis {0:?} (expected update-interval, mean-delay or mean-stay)")]
    UnknownAxis(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn positive(name: &'static str, value: f64) -> Result<(), HarnessError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::InvalidParam { name, value })
    }
}

impl ScenarioParams {
    /// A zero lifetime is accepted and yields an empty workload.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.lifetime >= 0.0 && self.lifetime.is_finite()) {
            return Err(HarnessError::InvalidParam {
                name: "lifetime",
                value: self.lifetime,
            });
        }
        positive("mean_stay_in", self.mean_stay_in)?;
        positive("mean_stay_out", self.mean_stay_out)?;
        positive("update_interval", self.update_interval)?;
        positive("mean_delay", self.mean_delay)?;
        if !(self.transit >= 0.0 && self.transit.is_finite()) {
            return Err(HarnessError::InvalidParam {
                name: "transit",
                value: self.transit,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Place {
    Office,
    Corridor,
}

/// One visit: true office stay followed by the corridor stay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub office: (f64, f64),
    pub corridor: (f64, f64),
}

impl Cycle {
    pub fn is_ordered(&self) -> bool {
        self.office.0 < self.office.1 && self.office.1 <= self.corridor.0 && self.corridor.0 < self.corridor.1
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub cycles: Vec<Cycle>,
}

impl GroundTruth {
    /// Cycles whose office stay physically precedes their corridor stay.
    pub fn num_phy(&self) -> u64 {
        self.cycles.iter().filter(|c| c.is_ordered()).count() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub time: f64,
    pub pid: ProcessId,
    pub direction: Direction,
}

/// Which sensors watch which place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorLayout {
    pub office: Vec<ProcessId>,
    pub corridor: Vec<ProcessId>,
}

impl SensorLayout {
    /// Office sensors are the members of the first activity, corridor
    /// sensors those of the second.
    pub fn from_constraint(spec: &ConstraintSpec) -> Result<Self, HarnessError> {
        if spec.len() != 2 {
            return Err(HarnessError::IncompatibleConstraint(spec.len()));
        }
        let acts = spec.activities();
        Ok(SensorLayout {
            office: acts[0].members.clone(),
            corridor: acts[1].members.clone(),
        })
    }

    fn sensors(&self, place: Place) -> &[ProcessId] {
        match place {
            Place::Office => &self.office,
            Place::Corridor => &self.corridor,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub truth: GroundTruth,
    /// True transitions in chronological order.
    pub transitions: Vec<Transition>,
}

/// Exponential stays with the configured means. Only cycles that finish
/// within the lifetime are kept.
pub fn generate_workload(params: &ScenarioParams, layout: &SensorLayout) -> Result<Workload, HarnessError> {
    params.validate()?;
    let mut rng = substream(params.seed, WORKLOAD_STREAM);
    let stay_in = Exp::new(1.0 / params.mean_stay_in).expect("validated");
    let stay_out = Exp::new(1.0 / params.mean_stay_out).expect("validated");
    Ok(generate_workload_with(params.lifetime, params.transit, layout, |place| match place {
        Place::Office => stay_in.sample(&mut rng),
        Place::Corridor => stay_out.sample(&mut rng),
    }))
}

/// Workload from an arbitrary stay-duration source. Every stay is followed
/// by `transit` seconds in which no sensor sees the user.
pub fn generate_workload_with(
    lifetime: f64,
    transit: f64,
    layout: &SensorLayout,
    mut stay: impl FnMut(Place) -> f64,
) -> Workload {
    let mut workload = Workload::default();
    let mut t = 0.0;
    loop {
        let inside = stay(Place::Office);
        let outside = stay(Place::Corridor);
        let exit = t + inside;
        let enter = exit + transit;
        let leave = enter + outside;
        if leave > lifetime {
            break;
        }
        let mut emit = |time, place, direction| {
            for &pid in layout.sensors(place) {
                workload.transitions.push(Transition { time, pid, direction });
            }
        };
        emit(t, Place::Office, Direction::Up);
        emit(exit, Place::Office, Direction::Down);
        emit(enter, Place::Corridor, Direction::Up);
        emit(leave, Place::Corridor, Direction::Down);
        workload.truth.cycles.push(Cycle {
            office: (t, exit),
            corridor: (enter, leave),
        });
        t = leave + transit;
    }
    workload
}

/// First tick of the grid `phase + k·period` at or after `t`.
pub fn next_tick(t: f64, phase: f64, period: f64) -> f64 {
    let k = ((t - phase) / period).ceil();
    (phase + k * period).max(t)
}

/// Per-sensor tick phases, uniform in `[0, period)`, indexed by process.
pub fn sensor_phases(process_count: usize, period: f64, seed: u64) -> Vec<f64> {
    let mut rng = substream(seed, PHASE_STREAM);
    (0..process_count).map(|_| rng.random::<f64>() * period).collect()
}

/// Shift each transition to its sensor's next dissemination tick. The
/// result is sorted by observed time; ties keep the input order, so an
/// up and down landing on the same tick stay up-first.
pub fn apply_update_interval(
    schedule: &[Transition],
    update_interval: f64,
    seed: u64,
) -> Result<Vec<Transition>, HarnessError> {
    positive("update_interval", update_interval)?;
    let width = schedule.iter().map(|t| t.pid.0).max().unwrap_or(0);
    let phases = sensor_phases(width, update_interval, seed);
    Ok(observe_with_phases(schedule, update_interval, &phases))
}

pub fn observe_with_phases(schedule: &[Transition], update_interval: f64, phases: &[f64]) -> Vec<Transition> {
    let mut observed: Vec<Transition> = schedule
        .iter()
        .map(|t| Transition {
            time: next_tick(t.time, phases[t.pid.index()], update_interval),
            ..*t
        })
        .collect();
    observed.sort_by(|a, b| a.time.total_cmp(&b.time));
    observed
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub num_oga: u64,
    pub num_phy: u64,
    pub probability: f64,
}

impl ExperimentResult {
    pub fn new(num_oga: u64, num_phy: u64) -> Self {
        let probability = if num_phy == 0 {
            0.0
        } else {
            num_oga as f64 / num_phy as f64
        };
        ExperimentResult {
            num_oga,
            num_phy,
            probability,
        }
    }
}

/// Outcome of auditing satisfactions against the true cycles.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhysicalVerdict {
    pub num_phy: u64,
    /// Cycle index matched to each satisfaction, in emission order.
    pub matched: Vec<usize>,
    pub violations: Vec<String>,
}

impl PhysicalVerdict {
    pub fn is_safe(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Match satisfactions greedily, in emission order, to physically ordered
/// cycles. A satisfaction is matched to the earliest unmatched cycle whose
/// office entry precedes the observed start of its first occurrence and
/// whose corridor entry precedes the observed start of its last. Every
/// ordered pair of consecutive occurrences must also be physically ordered.
pub fn physical_oracle(truth: &GroundTruth, satisfactions: &[TimedSatisfaction]) -> PhysicalVerdict {
    let cycles: Vec<(usize, &Cycle)> = truth.cycles.iter().enumerate().filter(|(_, c)| c.is_ordered()).collect();
    let mut verdict = PhysicalVerdict {
        num_phy: cycles.len() as u64,
        ..Default::default()
    };
    let mut next = 0;
    for timed in satisfactions {
        let sat = &timed.satisfaction;
        for pair in sat.occurrences.windows(2) {
            for hi in pair[0].kept_hi_intervals() {
                for lo in pair[1].kept_lo_intervals() {
                    if hi.phys_hi >= lo.phys_lo {
                        verdict.violations.push(format!(
                            "satisfaction {}: {} ended at {} but {} began at {}",
                            sat.index, hi.owner, hi.phys_hi, lo.owner, lo.phys_lo
                        ));
                    }
                }
            }
        }
        let latest_start = |k: usize| {
            sat.occurrences
                .get(k)
                .map(|occ| occ.kept_lo_intervals().map(|iv| iv.phys_lo).fold(f64::NEG_INFINITY, f64::max))
        };
        let (Some(first), Some(last)) = (latest_start(0), latest_start(sat.occurrences.len().saturating_sub(1))) else {
            verdict.violations.push(format!("satisfaction {} has no occurrences", sat.index));
            continue;
        };
        match cycles.get(next) {
            Some(&(index, cycle)) if cycle.office.0 <= first && cycle.corridor.0 <= last => {
                verdict.matched.push(index);
                next += 1;
            }
            Some(&(index, cycle)) => verdict.violations.push(format!(
                "satisfaction {} at {} precedes cycle {index} (office entry {}, corridor entry {})",
                sat.index, timed.time, cycle.office.0, cycle.corridor.0
            )),
            None => verdict.violations.push(format!(
                "satisfaction {} at {} has no physical cycle left to match",
                sat.index, timed.time
            )),
        }
    }
    verdict
}

/// Everything produced by one experiment.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub params: ScenarioParams,
    pub workload: Workload,
    pub observed: Vec<Transition>,
    pub log: ExecutionLog,
    pub counters: ComparisonCounters,
    pub discarded: u64,
    pub result: ExperimentResult,
    pub verdict: PhysicalVerdict,
}

pub fn run_scenario(params: &ScenarioParams, spec: &ConstraintSpec) -> Result<ScenarioRun, HarnessError> {
    let layout = SensorLayout::from_constraint(spec)?;
    let workload = generate_workload(params, &layout)?;
    let observed = apply_update_interval(&workload.transitions, params.update_interval, params.seed)?;
    let delay = DelayModel::exponential(params.mean_delay)?;
    let mut sim = Simulation::new(spec.clone(), delay, params.seed, params.lifetime)?;
    for t in &observed {
        sim.schedule_transition(t.time, t.pid, t.direction)?;
    }
    sim.run_until_quiescent()?;
    let counters = sim.counters();
    let discarded = sim.checker().discarded_count();
    let (log, _) = sim.into_parts();
    let verdict = physical_oracle(&workload.truth, &log.satisfactions);
    let result = ExperimentResult::new(log.satisfactions.len() as u64, workload.truth.num_phy());
    Ok(ScenarioRun {
        params: *params,
        workload,
        observed,
        log,
        counters,
        discarded,
        result,
        verdict,
    })
}

pub fn run_experiment(params: &ScenarioParams, spec: &ConstraintSpec) -> Result<ExperimentResult, HarnessError> {
    run_scenario(params, spec).map(|run| run.result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    UpdateInterval,
    MeanDelay,
    /// Mean office stay.
    MeanStay,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 3] = [SweepAxis::UpdateInterval, SweepAxis::MeanDelay, SweepAxis::MeanStay];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::UpdateInterval => "update-interval",
            SweepAxis::MeanDelay => "mean-delay",
            SweepAxis::MeanStay => "mean-stay",
        }
    }

    pub fn apply(self, base: &ScenarioParams, value: f64) -> ScenarioParams {
        let mut params = *base;
        match self {
            SweepAxis::UpdateInterval => params.update_interval = value,
            SweepAxis::MeanDelay => params.mean_delay = value,
            SweepAxis::MeanStay => params.mean_stay_in = value,
        }
        params
    }

    /// Grid spanning the configured experiment range, in seconds.
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            SweepAxis::UpdateInterval => vec![1.0, 60.0, 300.0, 600.0, 1200.0, 1800.0, 2700.0, 3600.0, 5400.0],
            SweepAxis::MeanDelay => vec![0.06, 0.6, 1.0, 6.0, 30.0, 60.0, 120.0, 300.0],
            SweepAxis::MeanStay => vec![300.0, 600.0, 900.0, 1200.0, 1800.0, 2400.0, 3000.0],
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepAxis::ALL
            .into_iter()
            .find(|axis| axis.name() == s)
            .ok_or_else(|| HarnessError::UnknownAxis(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub seed: u64,
    pub num_oga: u64,
    pub num_phy: u64,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub axis_value: f64,
    pub n: usize,
    pub mean_probability: f64,
    /// Sample standard deviation; zero for a single run.
    pub std_probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    /// Grid-major, seed-minor.
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<SweepAggregate>,
    /// Safety violations found by the physical oracle in any run.
    pub violations: Vec<String>,
}

impl SweepResult {
    pub fn means(&self) -> Vec<f64> {
        self.aggregates.iter().map(|a| a.mean_probability).collect()
    }

    pub fn mean_at(&self, axis_value: f64) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|a| a.axis_value == axis_value)
            .map(|a| a.mean_probability)
    }
}

/// Run every `(grid value, seed)` combination in parallel. Results are
/// assembled in grid order, so the output does not depend on scheduling.
pub fn run_sweep(
    base: &ScenarioParams,
    spec: &ConstraintSpec,
    axis: SweepAxis,
    grid: &[f64],
    seeds: &[u64],
) -> Result<SweepResult, HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    if seeds.is_empty() {
        return Err(HarnessError::NoSeeds);
    }
    let jobs: Vec<(f64, u64)> = grid.iter().flat_map(|&v| seeds.iter().map(move |&s| (v, s))).collect();
    let runs = jobs
        .par_iter()
        .map(|&(value, seed)| {
            let params = ScenarioParams {
                seed,
                ..axis.apply(base, value)
            };
            run_scenario(&params, spec).map(|run| {
                let violations = run
                    .verdict
                    .violations
                    .into_iter()
                    .map(|v| format!("{axis}={value} seed={seed}: {v}"))
                    .collect::<Vec<_>>();
                let r = run.result;
                let row = SweepRow {
                    axis_value: value,
                    seed,
                    num_oga: r.num_oga,
                    num_phy: r.num_phy,
                    probability: r.probability,
                };
                (row, violations)
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::with_capacity(runs.len());
    let mut violations = Vec::new();
    for (row, v) in runs {
        rows.push(row);
        violations.extend(v);
    }
    let aggregates = rows
        .chunks(seeds.len())
        .map(|chunk| {
            let probs: Vec<f64> = chunk.iter().map(|r| r.probability).collect();
            let (mean, std) = mean_std(&probs);
            SweepAggregate {
                axis_value: chunk[0].axis_value,
                n: chunk.len(),
                mean_probability: mean,
                std_probability: std,
            }
        })
        .collect();
    Ok(SweepResult {
        axis,
        rows,
        aggregates,
        violations,
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Average ranks, ties sharing the mean of their positions.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation. `None` when fewer than two points or a
/// constant series makes it undefined.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let (mx, _) = mean_std(&rx);
    let (my, _) = mean_std(&ry);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> SensorLayout {
        SensorLayout::from_constraint(&ConstraintSpec::smart_lock()).unwrap()
    }

    #[test]
    fn zero_lifetime_is_empty() {
        let params = ScenarioParams {
            lifetime: 0.0,
            ..Default::default()
        };
        let w = generate_workload(&params, &layout()).unwrap();
        assert!(w.transitions.is_empty());
        assert_eq!(w.truth.num_phy(), 0);
    }

    #[test]
    fn constant_stub_counts_whole_cycles() {
        for lifetime in [0.0, 899.0, 900.0, 1_728_000.0, 1_728_899.0] {
            let w = generate_workload_with(lifetime, 0.0, &layout(), |p| match p {
                Place::Office => 600.0,
                Place::Corridor => 300.0,
            });
            assert_eq!(w.truth.num_phy(), (lifetime / 900.0).floor() as u64, "lifetime {lifetime}");
            assert_eq!(w.transitions.len() as u64, 8 * w.truth.num_phy());
        }
    }

    #[test]
    fn each_sensor_alternates_up_down() {
        let w = generate_workload(&ScenarioParams::default(), &layout()).unwrap();
        for pid in 1..=4 {
            let dirs: Vec<_> = w.transitions.iter().filter(|t| t.pid.0 == pid).map(|t| t.direction).collect();
            assert!(dirs.chunks(2).all(|c| c == [Direction::Up, Direction::Down]));
        }
        assert!(w.transitions.windows(2).all(|p| p[0].time <= p[1].time));
    }

    #[test]
    fn next_tick_examples() {
        assert_eq!(next_tick(100.0, 0.0, 60.0), 120.0);
        assert_eq!(next_tick(120.0, 0.0, 60.0), 120.0);
        assert_eq!(next_tick(0.0, 10.0, 60.0), 10.0);
        assert_eq!(next_tick(11.0, 10.0, 60.0), 70.0);
    }

    #[test]
    fn collapsed_interval_stays_up_first() {
        let schedule = [
            Transition {
                time: 10.0,
                pid: ProcessId(1),
                direction: Direction::Up,
            },
            Transition {
                time: 20.0,
                pid: ProcessId(1),
                direction: Direction::Down,
            },
        ];
        let observed = observe_with_phases(&schedule, 60.0, &[0.0]);
        assert_eq!(observed[0].time, 60.0);
        assert_eq!(observed[1].time, 60.0);
        assert_eq!(observed[0].direction, Direction::Up);
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = ScenarioParams {
            update_interval: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(HarnessError::InvalidParam {
                name: "update_interval",
                ..
            })
        ));
        assert!(ScenarioParams {
            lifetime: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(apply_update_interval(&[], -1.0, 0).is_err());
    }

    #[test]
    fn incompatible_constraint() {
        let spec = ConstraintSpec::parse("AND(1,2)").unwrap();
        assert_eq!(
            run_experiment(&ScenarioParams::default(), &spec),
            Err(HarnessError::IncompatibleConstraint(1))
        );
    }

    #[test]
    fn probability_zero_without_cycles() {
        assert_eq!(ExperimentResult::new(0, 0).probability, 0.0);
        assert_eq!(ExperimentResult::new(3, 4).probability, 0.75);
    }

    #[test]
    fn axis_names_round_trip() {
        for axis in SweepAxis::ALL {
            assert_eq!(axis.name().parse::<SweepAxis>().unwrap(), axis);
        }
        assert!("stay".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0], &[5.0, 5.0]), None);
        assert_eq!(spearman(&[1.0], &[5.0]), None);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[4.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(r < -0.9 && r > -1.0, "{r}");
    }

    #[test]
    fn mean_std_sample() {
        assert_eq!(mean_std(&[1.0]), (1.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
    }
}
