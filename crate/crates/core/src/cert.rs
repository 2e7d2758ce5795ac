//! Evidence grading for computed answers.
//!
//! Every analysis routine reports not just a value but how that value was
//! obtained: exactly (closed form or exhaustive finite enumeration), by a
//! stabilised iterative process (the answer is provably correct at the stated
//! resolution), or merely bounded by a truncated computation.

use std::fmt;

/// How trustworthy a computed value is.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Grade {
    /// Truncated computation; correct only as far as the stated depth.
    Bounded(u32),
    /// An iteration stabilised; the value is correct at the stated resolution.
    Stabilized(u32),
    /// Closed form or exhaustive finite enumeration.
    Exact,
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grade::Exact => write!(f, "exact"),
            Grade::Stabilized(k) => write!(f, "stabilized@{k}"),
            Grade::Bounded(k) => write!(f, "bounded@{k}"),
        }
    }
}

/// A graded justification attached to a computed value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub grade: Grade,
    /// Human-readable account of the evidence (method, witnesses, ranges).
    pub evidence: Vec<String>,
}

impl Certificate {
    pub fn exact(evidence: impl Into<String>) -> Self {
        Certificate { grade: Grade::Exact, evidence: vec![evidence.into()] }
    }
    pub fn stabilized(k: u32, evidence: impl Into<String>) -> Self {
        Certificate { grade: Grade::Stabilized(k), evidence: vec![evidence.into()] }
    }
    pub fn bounded(k: u32, evidence: impl Into<String>) -> Self {
        Certificate { grade: Grade::Bounded(k), evidence: vec![evidence.into()] }
    }
    pub fn push(&mut self, line: impl Into<String>) {
        self.evidence.push(line.into());
    }
    /// Combine two certificates; the weaker grade wins.
    pub fn merge(mut self, other: Certificate) -> Certificate {
        let grade = if self.grade <= other.grade { self.grade.clone() } else { other.grade.clone() };
        self.evidence.extend(other.evidence);
        Certificate { grade, evidence: self.evidence }
    }
}

/// Outcome of a decision procedure with graded evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Holds, with a certificate saying why.
    True(Certificate),
    /// Fails, with a description of the refuting witness.
    False(String),
    /// Could not be decided within the given resolution/budget.
    Unknown(u32),
}

impl Verdict {
    pub fn is_true(&self) -> bool {
        matches!(self, Verdict::True(_))
    }
    pub fn is_false(&self) -> bool {
        matches!(self, Verdict::False(_))
    }
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Verdict::True(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::True(c) => write!(f, "true ({})", c.grade),
            Verdict::False(w) => write!(f, "false ({w})"),
            Verdict::Unknown(k) => write!(f, "unknown@{k}"),
        }
    }
}
