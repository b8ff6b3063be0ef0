use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::error::{Error, Result};

/// Which iteration a trace was produced by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmId {
    /// Projected gradient step on the queue-weighted Lagrangian.
    New,
    /// Arrow-Hurwicz-Uzawa primal-dual subgradient baseline.
    PdSubgradient,
    /// Proximal dual-type baseline that solves a subproblem per iteration.
    DualType,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 3] = [AlgorithmId::New, AlgorithmId::PdSubgradient, AlgorithmId::DualType];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::New => "new",
            AlgorithmId::PdSubgradient => "pd-subgradient",
            AlgorithmId::DualType => "dual-type",
        }
    }

    /// Name of the scalar step parameter (γ, c or α).
    pub fn step_name(self) -> &'static str {
        match self {
            AlgorithmId::New => "gamma",
            AlgorithmId::PdSubgradient => "c",
            AlgorithmId::DualType => "alpha",
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL.into_iter().find(|a| a.as_str() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown algorithm '{s}' (expected new, pd-subgradient or dual-type)"
            ))
        })
    }
}

/// State observed at the start of iteration `t`.
///
/// For the queue-based methods, record `t` pairs the queue `Q(t)` with the
/// latest primal iterate `x(t−1)`; record 0 holds the starting point. The
/// running average covers the `t` iterates produced so far, and record 0
/// reuses the starting point as its average. For the subgradient baseline the
/// `queue` slot holds the multiplier vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub x: Vec<f64>,
    pub x_avg: Vec<f64>,
    pub queue: Vec<f64>,
    pub queue_norm: f64,
    pub f_x: f64,
    pub f_avg: f64,
    pub g_avg: Vec<f64>,
    /// `½(‖Q(t)‖² − ‖Q(t−1)‖²)`, zero for record 0.
    pub drift: f64,
}

#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub algorithm: AlgorithmId,
    /// γ, c or α, whichever the algorithm uses.
    pub step: f64,
    pub records: Vec<TraceRecord>,
    pub elapsed: Duration,
    /// Set when the run stopped early on a numerical failure.
    pub aborted: Option<Error>,
}

impl SolverTrace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("a trace always holds the initial record")
    }

    pub fn is_complete(&self) -> bool {
        self.aborted.is_none()
    }

    /// `(t, f* − f(x̄(t)))` for `t >= 1`.
    pub fn gap_series(&self, f_star: f64) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .skip(1)
            .map(|r| (r.t as f64, f_star - r.f_avg))
            .collect()
    }

    /// Per constraint, the first `t >= 1` from which `g_k(x̄(t)) <= 0` holds
    /// for every later record; `None` if the last record is still violated.
    pub fn constraint_onsets(&self) -> Vec<Option<usize>> {
        constraint_onsets(self.records.iter().map(|r| (r.t, r.g_avg.as_slice())))
    }
}

/// Onset of lasting feasibility per constraint from `(t, g(x̄(t)))` rows.
pub fn constraint_onsets<'a>(rows: impl Iterator<Item = (usize, &'a [f64])>) -> Vec<Option<usize>> {
    let mut onset: Vec<Option<usize>> = Vec::new();
    for (t, g) in rows.filter(|(t, _)| *t >= 1) {
        if onset.is_empty() {
            onset = vec![None; g.len()];
        }
        for (o, v) in onset.iter_mut().zip(g) {
            if *v <= 0.0 {
                o.get_or_insert(t);
            } else {
                *o = None;
            }
        }
    }
    onset
}
