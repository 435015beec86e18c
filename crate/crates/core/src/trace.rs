//! Line-oriented message trace.
//!
//! Each line records one sent message as eight space-separated fields:
//!
//! ```text
//! kind time from to  seq ga_id vc_lo     vc_hi
//! CTL  12.5 1    3   -   -     [2,1,0,0] -
//! CHK  12.5 1    che 0   1     [1,0,0,0] [2,1,0,0]
//! ```
//!
//! `time` is the send time. A control message carries its clock in the
//! `vc_lo` column. Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::activity::{ConstraintSpec, TimedInterval};
use crate::agent::{CheckingReport, Endpoint, MessageBody};
use crate::checker::{Checker, CheckerError, GaOccurrence, Satisfaction};
use crate::simnet::ExecutionLog;
use crate::vclock::{ProcessId, VectorClock};

#[derive(Debug, Clone, PartialEq)]
pub enum TraceRecord {
    Control {
        time: f64,
        from: ProcessId,
        to: ProcessId,
        vc: VectorClock,
    },
    Checking {
        time: f64,
        report: CheckingReport,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TraceError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceRecord::Control { time, from, to, vc } => {
                write!(f, "CTL {time} {} {} - - {vc} -", from.0, to.0)
            }
            TraceRecord::Checking { time, report } => write!(
                f,
                "CHK {time} {} che {} {} {} {}",
                report.from().0,
                report.seq(),
                report.ga_id,
                report.interval.lo,
                report.interval.hi
            ),
        }
    }
}

fn field<T: FromStr>(value: &str, name: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("bad {name} {value:?}"))
}

fn pid(value: &str, name: &str) -> Result<ProcessId, String> {
    match field::<usize>(value, name)? {
        0 => Err(format!("{name} must be at least 1")),
        p => Ok(ProcessId(p)),
    }
}

fn dash(value: &str, name: &str) -> Result<(), String> {
    if value == "-" {
        Ok(())
    } else {
        Err(format!("{name} must be '-' on a CTL line, got {value:?}"))
    }
}

fn parse_fields(fields: &[&str]) -> Result<TraceRecord, String> {
    let &[kind, time, from, to, seq, ga_id, lo, hi] = fields else {
        return Err(format!("expected 8 fields, found {}", fields.len()));
    };
    let time: f64 = field(time, "time")?;
    if !time.is_finite() {
        return Err(format!("time must be finite, got {time}"));
    }
    let from = pid(from, "sender")?;
    match kind {
        "CTL" => {
            dash(seq, "seq")?;
            dash(ga_id, "ga_id")?;
            dash(hi, "vc_hi")?;
            Ok(TraceRecord::Control {
                time,
                from,
                to: pid(to, "receiver")?,
                vc: field(lo, "vector clock")?,
            })
        }
        "CHK" => {
            if to != "che" {
                return Err(format!("checking messages go to 'che', got {to:?}"));
            }
            let lo: VectorClock = field(lo, "vector clock")?;
            let hi: VectorClock = field(hi, "vector clock")?;
            let interval = TimedInterval::new(from, field(seq, "seq")?, lo, hi, time, time).map_err(|e| e.to_string())?;
            Ok(TraceRecord::Checking {
                time,
                report: CheckingReport {
                    ga_id: field(ga_id, "ga_id")?,
                    interval,
                },
            })
        }
        other => Err(format!("unknown record kind {other:?}")),
    }
}

pub fn parse_line(line: &str) -> Result<Option<TraceRecord>, String> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let fields: Vec<&str> = trimmed.split_whitespace().collect();
    parse_fields(&fields).map(Some)
}

/// Parse a whole trace; errors carry 1-based line numbers.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, TraceError> {
    let mut records = Vec::new();
    for (index, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(record)) => records.push(record),
            Ok(None) => {}
            Err(message) => {
                return Err(TraceError {
                    line: index + 1,
                    message,
                })
            }
        }
    }
    Ok(records)
}

/// Every message of the log, one line each, in send order.
pub fn records_from_log(log: &ExecutionLog) -> Vec<TraceRecord> {
    log.messages
        .iter()
        .map(|rec| {
            let m = &rec.message;
            match (&m.body, m.to) {
                (MessageBody::Control { vc }, Endpoint::Process(to)) => TraceRecord::Control {
                    time: m.send_time,
                    from: m.from,
                    to,
                    vc: vc.clone(),
                },
                (MessageBody::Checking(report), _) => TraceRecord::Checking {
                    time: m.send_time,
                    report: report.clone(),
                },
                (MessageBody::Control { .. }, Endpoint::Checker) => {
                    unreachable!("control messages are addressed to processes")
                }
            }
        })
        .collect()
}

pub fn export_trace(log: &ExecutionLog) -> String {
    let mut out = String::new();
    for record in records_from_log(log) {
        writeln!(out, "{record}").expect("writing to a String");
    }
    out
}

/// Result of replaying the checking messages of a trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayReport {
    pub detections: Vec<GaOccurrence>,
    pub satisfactions: Vec<Satisfaction>,
    pub discarded: u64,
    pub controls: usize,
    pub warnings: Vec<String>,
}

/// Feed every CHK record to a fresh checker in file order, then release
/// anything still waiting behind a sequence gap.
pub fn replay(records: &[TraceRecord], spec: &ConstraintSpec) -> Result<ReplayReport, CheckerError> {
    let mut checker = Checker::new(spec.clone());
    let mut report = ReplayReport::default();
    for record in records {
        match record {
            TraceRecord::Control { .. } => report.controls += 1,
            TraceRecord::Checking { report: chk, .. } => {
                let out = checker.receive(chk.clone())?;
                report.detections.extend(out.detections);
                report.satisfactions.extend(out.satisfactions);
            }
        }
    }
    let (late, gaps) = checker.flush_gaps();
    report.detections.extend(late);
    report.satisfactions.extend(checker.advance_ordering());
    report.warnings = gaps;
    report.discarded = checker.discarded_count();
    Ok(report)
}

fn members(occ: &GaOccurrence) -> String {
    occ.intervals
        .iter()
        .map(|iv| format!("{}#{}", iv.owner, iv.seq))
        .collect::<Vec<_>>()
        .join(" ")
}

impl ReplayReport {
    /// Human-readable summary. Detections are grouped per activity, which
    /// makes the text independent of how reports from different processes
    /// were interleaved.
    pub fn render(&self, spec: &ConstraintSpec) -> String {
        let mut per_ga: BTreeMap<usize, Vec<&GaOccurrence>> = BTreeMap::new();
        for occ in &self.detections {
            per_ga.entry(occ.ga_id).or_default().push(occ);
        }
        let mut out = String::new();
        let _ = writeln!(out, "constraint: {spec}");
        let _ = writeln!(out, "detections: {}", self.detections.len());
        for ga in spec.activities() {
            let list = per_ga.remove(&ga.ga_id).unwrap_or_default();
            let _ = writeln!(out, "  GA_{} {}: {}", ga.ga_id, ga, list.len());
            for (n, occ) in list.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "    #{} [{}] lo={} hi={}",
                    n + 1,
                    members(occ),
                    join_clocks(&occ.que_lo),
                    join_clocks(&occ.que_hi)
                );
            }
        }
        let _ = writeln!(out, "satisfactions: {}", self.satisfactions.len());
        for sat in &self.satisfactions {
            let chain = sat
                .occurrences
                .iter()
                .map(|o| format!("GA_{}[{}]", o.ga_id, members(o)))
                .collect::<Vec<_>>()
                .join(" < ");
            let _ = writeln!(out, "  #{} {chain}", sat.index);
        }
        let _ = writeln!(out, "discarded: {}", self.discarded);
        out
    }
}

fn join_clocks(clocks: &[VectorClock]) -> String {
    clocks.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}
