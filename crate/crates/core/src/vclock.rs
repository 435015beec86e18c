//! Fixed-width vector clocks and the happen-before relation.
//!
//! A clock has one slot per non-checker process. Processes are numbered
//! from 1 (see [`ProcessId`]); slot `i` lives at offset `i - 1`.
//!
//! Given events `e` and `f` stamped with clocks `a` and `b`:
//! - `e → f` iff `a ≤ b` componentwise and `a ≠ b`
//! - `e ∥ f` iff neither happened before the other (and `a ≠ b`)
//!
//! Clocks are values. Every operation returns a new clock.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based index of a non-checker process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub usize);

impl ProcessId {
    /// Zero-based offset into a clock or a per-process table.
    #[inline]
    pub fn index(self) -> usize {
        self.0 - 1
    }

    #[inline]
    pub fn from_index(index: usize) -> Self {
        ProcessId(index + 1)
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClockError {
    #[error("a vector clock needs at least one process")]
    ZeroWidth,
    #[error("process {pid} is out of range for a clock of width {width}")]
    PidOutOfRange { pid: usize, width: usize },
    #[error("clock width mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("malformed vector clock literal {0:?}")]
    Malformed(String),
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct VectorClock {
    entries: Vec<u64>,
}

impl VectorClock {
    /// All-zero clock for `n` processes.
    pub fn new(n: usize) -> Result<Self, ClockError> {
        if n == 0 {
            return Err(ClockError::ZeroWidth);
        }
        Ok(VectorClock {
            entries: vec![0; n],
        })
    }

    pub fn from_entries(entries: Vec<u64>) -> Result<Self, ClockError> {
        if entries.is_empty() {
            return Err(ClockError::ZeroWidth);
        }
        Ok(VectorClock { entries })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn get(&self, pid: ProcessId) -> Option<u64> {
        if pid.0 == 0 {
            return None;
        }
        self.entries.get(pid.index()).copied()
    }

    /// Copy of `self` with the slot of `pid` advanced by one.
    pub fn increment(&self, pid: ProcessId) -> Result<Self, ClockError> {
        if pid.0 == 0 || pid.0 > self.width() {
            return Err(ClockError::PidOutOfRange {
                pid: pid.0,
                width: self.width(),
            });
        }
        let mut entries = self.entries.clone();
        entries[pid.index()] += 1;
        Ok(VectorClock { entries })
    }

    /// Componentwise maximum (least upper bound).
    pub fn merge(&self, other: &VectorClock) -> Result<Self, ClockError> {
        self.check_width(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| *a.max(b))
            .collect();
        Ok(VectorClock { entries })
    }

    /// Strict causal precedence: `self ≤ other` componentwise and `self ≠ other`.
    pub fn happened_before(&self, other: &VectorClock) -> Result<bool, ClockError> {
        self.check_width(other)?;
        Ok(self.precedes(other))
    }

    /// Non-strict componentwise order.
    pub fn leq(&self, other: &VectorClock) -> Result<bool, ClockError> {
        self.check_width(other)?;
        Ok(self.precedes_or_equals(other))
    }

    pub fn concurrent(&self, other: &VectorClock) -> Result<bool, ClockError> {
        self.check_width(other)?;
        Ok(self.partial_cmp(other).is_none())
    }

    fn check_width(&self, other: &VectorClock) -> Result<(), ClockError> {
        if self.width() != other.width() {
            return Err(ClockError::LengthMismatch {
                left: self.width(),
                right: other.width(),
            });
        }
        Ok(())
    }

    // Unchecked forms for callers that validated widths up front.

    #[inline]
    pub(crate) fn precedes(&self, other: &VectorClock) -> bool {
        self.partial_cmp(other) == Some(Ordering::Less)
    }

    #[inline]
    pub(crate) fn precedes_or_equals(&self, other: &VectorClock) -> bool {
        self.entries.iter().zip(&other.entries).all(|(a, b)| a <= b)
    }
}

/// Causal order. Clocks of different widths are incomparable.
impl PartialOrd for VectorClock {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.width() != other.width() {
            return None;
        }
        let mut less = false;
        let mut greater = false;
        for (a, b) in self.entries.iter().zip(&other.entries) {
            match a.cmp(b) {
                Ordering::Less => less = true,
                Ordering::Greater => greater = true,
                Ordering::Equal => {}
            }
            if less && greater {
                return None;
            }
        }
        match (less, greater) {
            (false, false) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (true, true) => None,
        }
    }
}

impl TryFrom<Vec<u64>> for VectorClock {
    type Error = ClockError;

    fn try_from(entries: Vec<u64>) -> Result<Self, Self::Error> {
        VectorClock::from_entries(entries)
    }
}

impl From<VectorClock> for Vec<u64> {
    fn from(vc: VectorClock) -> Self {
        vc.entries
    }
}

impl fmt::Display for VectorClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, v) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for VectorClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VC{self}")
    }
}

/// Parses the bracketed literal written by `Display`, e.g. `[2,1,0,0]`.
impl FromStr for VectorClock {
    type Err = ClockError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|rest| rest.strip_suffix(']'))
            .ok_or_else(|| ClockError::Malformed(s.to_string()))?;
        let entries = inner
            .split(',')
            .map(|part| part.trim().parse::<u64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| ClockError::Malformed(s.to_string()))?;
        VectorClock::from_entries(entries)
    }
}
