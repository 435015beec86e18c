//! Local activity intervals, AND/OR global activities and ordering constraints.
//!
//! Constraint text follows a flat grammar:
//!
//! ```text
//! constraint := ga ( "<" ga )*
//! ga         := ("AND" | "OR") "(" int ( "," int )* ")"
//! ```
//!
//! Whitespace is ignored. Member sets must partition `1..=n`, where `n` is
//! the largest process index mentioned.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vclock::{ClockError, ProcessId, VectorClock};

/// One true-period of a local predicate on `owner`.
///
/// `phys_lo` / `phys_hi` are the simulated physical instants of the two
/// transitions. Detection logic never reads them; they exist for the
/// ground-truth oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedInterval {
    pub owner: ProcessId,
    pub seq: u64,
    pub lo: VectorClock,
    pub hi: VectorClock,
    pub phys_lo: f64,
    pub phys_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error("interval lo {lo} does not happen before hi {hi}")]
    NotOrdered { lo: VectorClock, hi: VectorClock },
    #[error("physical end {hi} precedes physical start {lo}")]
    PhysicalOrder { lo: f64, hi: f64 },
}

impl TimedInterval {
    pub fn new(
        owner: ProcessId,
        seq: u64,
        lo: VectorClock,
        hi: VectorClock,
        phys_lo: f64,
        phys_hi: f64,
    ) -> Result<Self, IntervalError> {
        if !lo.happened_before(&hi)? {
            return Err(IntervalError::NotOrdered { lo, hi });
        }
        // Instantaneous intervals (both transitions seen at one sensor tick)
        // share a physical instant.
        if phys_hi < phys_lo {
            return Err(IntervalError::PhysicalOrder {
                lo: phys_lo,
                hi: phys_hi,
            });
        }
        Ok(TimedInterval {
            owner,
            seq,
            lo,
            hi,
            phys_lo,
            phys_hi,
        })
    }

    /// Interval without physical bookkeeping, for hand-built fixtures and
    /// replayed traces.
    pub fn logical(owner: ProcessId, seq: u64, lo: VectorClock, hi: VectorClock) -> Result<Self, IntervalError> {
        TimedInterval::new(owner, seq, lo, hi, 0.0, 0.0)
    }
}

/// Pairwise overlap: `a.lo → b.hi` and `b.lo → a.hi`.
pub fn intervals_overlap(a: &TimedInterval, b: &TimedInterval) -> Result<bool, ClockError> {
    Ok(a.lo.happened_before(&b.hi)? && b.lo.happened_before(&a.hi)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GaKind {
    And,
    Or,
}

impl GaKind {
    pub fn dual(self) -> Self {
        match self {
            GaKind::And => GaKind::Or,
            GaKind::Or => GaKind::And,
        }
    }
}

impl fmt::Display for GaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GaKind::And => "AND",
            GaKind::Or => "OR",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalActivitySpec {
    /// 1-based position in the constraint.
    pub ga_id: usize,
    pub kind: GaKind,
    pub members: Vec<ProcessId>,
}

impl GlobalActivitySpec {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Position of `pid` inside this activity's member list.
    pub fn member_index(&self, pid: ProcessId) -> Option<usize> {
        self.members.iter().position(|&m| m == pid)
    }
}

impl fmt::Display for GlobalActivitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind)?;
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", m.0)?;
        }
        f.write_str(")")
    }
}

/// `GA_1 ≺ GA_2 ≺ … ≺ GA_m` over a partition of the processes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    activities: Vec<GlobalActivitySpec>,
    process_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("global activity {ga_id} has no members")]
    EmptyActivity { ga_id: usize },
    #[error("process {pid} appears in more than one place (activities {first} and {second})")]
    SharedProcess { pid: usize, first: usize, second: usize },
    #[error("process index {0} is out of range (processes are numbered from 1)")]
    IndexOutOfRange(usize),
    #[error("member sets must cover 1..={n}; process {missing} is not assigned")]
    MissingProcess { n: usize, missing: usize },
}

impl ConstraintSpec {
    pub fn new(activities: Vec<(GaKind, Vec<usize>)>) -> Result<Self, ConstraintError> {
        if activities.is_empty() {
            return Err(ConstraintError::Syntax {
                column: 1,
                message: "expected at least one global activity".into(),
            });
        }
        let mut owner: Vec<Option<usize>> = Vec::new();
        let mut built = Vec::with_capacity(activities.len());
        for (i, (kind, members)) in activities.into_iter().enumerate() {
            let ga_id = i + 1;
            if members.is_empty() {
                return Err(ConstraintError::EmptyActivity { ga_id });
            }
            for &pid in &members {
                if pid == 0 {
                    return Err(ConstraintError::IndexOutOfRange(pid));
                }
                if owner.len() < pid {
                    owner.resize(pid, None);
                }
                if let Some(first) = owner[pid - 1] {
                    return Err(ConstraintError::SharedProcess {
                        pid,
                        first,
                        second: ga_id,
                    });
                }
                owner[pid - 1] = Some(ga_id);
            }
            built.push(GlobalActivitySpec {
                ga_id,
                kind,
                members: members.into_iter().map(ProcessId).collect(),
            });
        }
        let n = owner.len();
        if let Some(missing) = owner.iter().position(Option::is_none) {
            return Err(ConstraintError::MissingProcess { n, missing: missing + 1 });
        }
        Ok(ConstraintSpec {
            activities: built,
            process_count: n,
        })
    }

    /// The two-room smart-lock constraint: office sensors P1, P2 then
    /// corridor sensors P3, P4.
    pub fn smart_lock() -> Self {
        ConstraintSpec::new(vec![(GaKind::And, vec![1, 2]), (GaKind::And, vec![3, 4])])
            .expect("static constraint is well formed")
    }

    pub fn parse(text: &str) -> Result<Self, ConstraintError> {
        Parser::new(text).constraint()
    }

    pub fn activities(&self) -> &[GlobalActivitySpec] {
        &self.activities
    }

    /// `GA_k` for 1-based `k`.
    pub fn activity(&self, ga_id: usize) -> Option<&GlobalActivitySpec> {
        ga_id.checked_sub(1).and_then(|i| self.activities.get(i))
    }

    /// Number of global activities `m`.
    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }

    /// Number of non-checker processes `n`.
    pub fn process_count(&self) -> usize {
        self.process_count
    }

    pub fn activity_of(&self, pid: ProcessId) -> Option<&GlobalActivitySpec> {
        self.activities.iter().find(|ga| ga.member_index(pid).is_some())
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (1..=self.process_count).map(ProcessId)
    }
}

impl fmt::Display for ConstraintSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ga) in self.activities.iter().enumerate() {
            if i > 0 {
                f.write_str(" < ")?;
            }
            write!(f, "{ga}")?;
        }
        Ok(())
    }
}

impl FromStr for ConstraintSpec {
    type Err = ConstraintError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConstraintSpec::parse(s)
    }
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    len: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            chars: text.char_indices().peekable(),
            len: text.len(),
        }
    }

    fn column(&mut self) -> usize {
        self.chars.peek().map_or(self.len, |(i, _)| *i) + 1
    }

    fn error<T>(&mut self, message: impl Into<String>) -> Result<T, ConstraintError> {
        Err(ConstraintError::Syntax {
            column: self.column(),
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.chars.next_if(|(_, c)| c.is_whitespace()).is_some() {}
    }

    fn eat(&mut self, want: char) -> bool {
        self.skip_ws();
        self.chars.next_if(|&(_, c)| c == want).is_some()
    }

    fn expect(&mut self, want: char) -> Result<(), ConstraintError> {
        if self.eat(want) {
            Ok(())
        } else {
            self.error(format!("expected '{want}'"))
        }
    }

    fn constraint(mut self) -> Result<ConstraintSpec, ConstraintError> {
        let mut activities = vec![self.activity()?];
        while self.eat('<') {
            activities.push(self.activity()?);
        }
        self.skip_ws();
        if self.chars.peek().is_some() {
            return self.error("unexpected trailing input");
        }
        ConstraintSpec::new(activities)
    }

    fn activity(&mut self) -> Result<(GaKind, Vec<usize>), ConstraintError> {
        self.skip_ws();
        let start = self.column();
        let mut word = String::new();
        while let Some((_, c)) = self.chars.next_if(|(_, c)| c.is_ascii_alphabetic()) {
            word.push(c);
        }
        let kind = match word.as_str() {
            "AND" => GaKind::And,
            "OR" => GaKind::Or,
            "" => return self.error("expected AND or OR"),
            other => {
                return Err(ConstraintError::Syntax {
                    column: start,
                    message: format!("unknown activity kind {other:?}"),
                })
            }
        };
        self.expect('(')?;
        let mut members = Vec::new();
        if self.eat(')') {
            return Ok((kind, members));
        }
        loop {
            members.push(self.integer()?);
            if self.eat(')') {
                break;
            }
            self.expect(',')?;
        }
        Ok((kind, members))
    }

    fn integer(&mut self) -> Result<usize, ConstraintError> {
        self.skip_ws();
        let mut digits = String::new();
        while let Some((_, c)) = self.chars.next_if(|(_, c)| c.is_ascii_digit()) {
            digits.push(c);
        }
        if digits.is_empty() {
            return self.error("expected a process index");
        }
        match digits.parse() {
            Ok(v) => Ok(v),
            Err(_) => self.error("process index too large"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vc(entries: &[u64]) -> VectorClock {
        VectorClock::from_entries(entries.to_vec()).unwrap()
    }

    fn iv(owner: usize, lo: &[u64], hi: &[u64]) -> TimedInterval {
        TimedInterval::logical(ProcessId(owner), 0, vc(lo), vc(hi)).unwrap()
    }

    #[test]
    fn overlap_examples() {
        let a = iv(1, &[1, 0, 0, 0], &[2, 1, 0, 0]);
        let b = iv(2, &[1, 1, 0, 0], &[2, 2, 0, 0]);
        assert!(intervals_overlap(&a, &b).unwrap());
        assert!(intervals_overlap(&b, &a).unwrap());

        let a = iv(1, &[1, 0], &[2, 0]);
        let b = iv(2, &[2, 1], &[2, 2]);
        assert!(!intervals_overlap(&a, &b).unwrap());

        assert!(intervals_overlap(&a, &a).unwrap());
    }

    #[test]
    fn interval_requires_ordered_endpoints() {
        assert!(TimedInterval::logical(ProcessId(1), 0, vc(&[1, 0]), vc(&[1, 0])).is_err());
        assert!(TimedInterval::logical(ProcessId(1), 0, vc(&[1, 0]), vc(&[0, 1])).is_err());
        assert!(TimedInterval::new(ProcessId(1), 0, vc(&[1]), vc(&[2]), 5.0, 4.0).is_err());
        assert!(TimedInterval::new(ProcessId(1), 0, vc(&[1]), vc(&[2]), 5.0, 5.0).is_ok());
    }

    #[test]
    fn parses_smart_lock() {
        let spec = ConstraintSpec::parse("AND(1,2) < AND(3,4)").unwrap();
        assert_eq!(spec.len(), 2);
        assert_eq!(spec.process_count(), 4);
        let ga1 = spec.activity(1).unwrap();
        assert_eq!(ga1.kind, GaKind::And);
        assert_eq!(ga1.members, vec![ProcessId(1), ProcessId(2)]);
        let ga2 = spec.activity(2).unwrap();
        assert_eq!(ga2.members, vec![ProcessId(3), ProcessId(4)]);
        assert_eq!(spec, ConstraintSpec::smart_lock());
    }

    #[test]
    fn parses_minimal_or() {
        let spec: ConstraintSpec = "OR(1,2)".parse().unwrap();
        assert_eq!(spec.len(), 1);
        assert_eq!(spec.activity(1).unwrap().kind, GaKind::Or);
    }

    #[test]
    fn whitespace_insensitive() {
        let spec = ConstraintSpec::parse("  AND ( 2 ,1 )<OR(3)\n").unwrap();
        assert_eq!(spec.to_string(), "AND(2,1) < OR(3)");
    }

    #[test]
    fn rejects_shared_process() {
        assert_eq!(
            ConstraintSpec::parse("AND(1,2) < AND(2,3)"),
            Err(ConstraintError::SharedProcess {
                pid: 2,
                first: 1,
                second: 2
            })
        );
        assert!(matches!(
            ConstraintSpec::parse("AND(1,1)"),
            Err(ConstraintError::SharedProcess { pid: 1, .. })
        ));
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(ConstraintSpec::parse("AND()"), Err(ConstraintError::EmptyActivity { ga_id: 1 }));
        assert_eq!(ConstraintSpec::parse("AND(0,1)"), Err(ConstraintError::IndexOutOfRange(0)));
        assert_eq!(
            ConstraintSpec::parse("AND(1,3)"),
            Err(ConstraintError::MissingProcess { n: 3, missing: 2 })
        );
        for bad in ["", "XOR(1)", "AND(1", "AND(1,)", "AND(1) <", "AND(1) OR(2)", "and(1)"] {
            assert!(
                matches!(ConstraintSpec::parse(bad), Err(ConstraintError::Syntax { .. })),
                "{bad:?} should be a syntax error"
            );
        }
    }

    #[test]
    fn syntax_error_reports_column() {
        match ConstraintSpec::parse("AND(1,2) < XOR(3)") {
            Err(ConstraintError::Syntax { column, .. }) => assert_eq!(column, 12),
            other => panic!("unexpected {other:?}"),
        }
    }
}
