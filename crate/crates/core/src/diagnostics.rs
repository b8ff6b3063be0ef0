//! Runtime checks of the provable properties of a queue-gradient trace, plus
//! empirical rate fitting.
//!
//! Every bound is checked with an additive tolerance of `1e-9·(1 + scale)`,
//! where `scale` is the magnitude of the quantities being compared.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{ConstantsPack, ConvexProgram};
use crate::solvers::{AlgorithmId, SolverTrace};

const REL_TOL: f64 = 1e-9;

/// Names of every registered check, in report order.
pub const CHECK_NAMES: [&str; 11] = [
    "queue-nonnegativity",
    "shifted-queue-nonnegativity",
    "queue-norm-ordering",
    "queue-dominates-partial-sums",
    "drift-bound",
    "queue-norm-cap",
    "objective-gap-bound",
    "constraint-violation-bound",
    "duality-lower-bound",
    "averaged-iterate-in-box",
    "trace-consistency",
];

#[derive(Debug, Clone, PartialEq)]
pub enum CheckStatus {
    Passed,
    Failed,
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub status: CheckStatus,
    /// Largest amount by which the checked inequality was exceeded (0 if never).
    pub worst_violation: f64,
    /// Record index at which the worst violation occurred.
    pub worst_t: Option<usize>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Passed
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Failed
    }

    fn skipped(name: &'static str, reason: impl Into<String>) -> Self {
        CheckOutcome {
            name,
            status: CheckStatus::Skipped(reason.into()),
            worst_violation: 0.0,
            worst_t: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub checks: Vec<CheckOutcome>,
}

impl InvariantReport {
    /// True when no check failed. Skipped checks do not count as failures.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| !c.failed())
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| c.failed())
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<30} {:<8} {:>14} {:>10}", "check", "status", "worst", "at t")?;
        for c in &self.checks {
            let (status, note) = match &c.status {
                CheckStatus::Passed => ("pass", String::new()),
                CheckStatus::Failed => ("FAIL", String::new()),
                CheckStatus::Skipped(why) => ("skip", format!("  ({why})")),
            };
            let at = c.worst_t.map_or_else(|| "-".to_string(), |t| t.to_string());
            writeln!(
                f,
                "{:<30} {:<8} {:>14.6e} {:>10}{note}",
                c.name, status, c.worst_violation, at
            )?;
        }
        Ok(())
    }
}

/// Tracks the worst excess of `lhs − rhs` over a tolerance.
struct Tracker {
    name: &'static str,
    worst_excess: f64,
    worst_violation: f64,
    worst_t: Option<usize>,
}

impl Tracker {
    fn new(name: &'static str) -> Self {
        Tracker {
            name,
            worst_excess: f64::NEG_INFINITY,
            worst_violation: 0.0,
            worst_t: None,
        }
    }

    /// `violation > 0` means the inequality is broken by that much.
    fn observe(&mut self, t: usize, violation: f64, scale: f64) {
        let excess = if violation.is_nan() {
            f64::INFINITY
        } else {
            violation - REL_TOL * (1.0 + scale.abs())
        };
        if excess > self.worst_excess {
            self.worst_excess = excess;
            self.worst_violation = violation.max(0.0);
            self.worst_t = Some(t);
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name,
            status: if self.worst_excess > 0.0 {
                CheckStatus::Failed
            } else {
                CheckStatus::Passed
            },
            worst_violation: if self.worst_excess > 0.0 {
                self.worst_violation
            } else {
                0.0
            },
            worst_t: if self.worst_excess > 0.0 { self.worst_t } else { None },
        }
    }
}

/// Checks a queue-gradient or dual-type trace.
///
/// Record `t` is read as the pair `(x(t−1), Q(t))`. Dual-type traces get only
/// the checks that follow from the queue update itself; the step-size
/// dependent bounds are reported as skipped. `lambda_bound` overrides the
/// bound stored in `constants`.
pub fn check_trace(
    trace: &SolverTrace,
    program: &ConvexProgram,
    constants: &ConstantsPack,
    f_star: Option<f64>,
    lambda_bound: Option<f64>,
) -> Result<InvariantReport> {
    if trace.algorithm == AlgorithmId::PdSubgradient {
        return Err(Error::Config(
            "the subgradient baseline keeps multipliers, not virtual queues; no checks apply".into(),
        ));
    }
    if trace.records.is_empty() {
        return Err(Error::InsufficientData("trace has no records".into()));
    }
    let n = program.dim();
    let m = program.num_constraints();
    for r in &trace.records {
        if r.x.len() != n || r.x_avg.len() != n {
            return Err(Error::dim(format!("record {} iterate", r.t), n, r.x.len()));
        }
        if r.queue.len() != m || r.g_avg.len() != m {
            return Err(Error::dim(format!("record {} queue", r.t), m, r.queue.len()));
        }
    }

    let records = &trace.records;
    let g_at: Vec<Vec<f64>> = records
        .iter()
        .map(|r| program.constraint_values(&r.x))
        .collect::<Result<_>>()?;
    let q_norms: Vec<f64> = records.iter().map(|r| linalg::norm(&r.queue)).collect();

    let mut checks = Vec::with_capacity(CHECK_NAMES.len());

    // Q(t) >= 0; the reported norm must be nonnegative too.
    let mut c = Tracker::new("queue-nonnegativity");
    for (i, r) in records.iter().enumerate() {
        let min_q = r.queue.iter().copied().fold(f64::INFINITY, f64::min);
        let v = (-min_q).max(-r.queue_norm);
        c.observe(i, v, q_norms[i]);
    }
    checks.push(c.finish());

    // Q(t) + g(x(t−1)) >= 0
    let mut c = Tracker::new("shifted-queue-nonnegativity");
    for (i, r) in records.iter().enumerate() {
        for (q, g) in r.queue.iter().zip(&g_at[i]) {
            c.observe(i, -(q + g), q.abs() + g.abs());
        }
    }
    checks.push(c.finish());

    // ‖Q(0)‖ <= ‖g(x(−1))‖ and ‖Q(t)‖ >= ‖g(x(t−1))‖ for t >= 1
    let mut c = Tracker::new("queue-norm-ordering");
    for (i, gi) in g_at.iter().enumerate() {
        let gn = linalg::norm(gi);
        let v = if i == 0 { q_norms[0] - gn } else { gn - q_norms[i] };
        c.observe(i, v, gn);
    }
    checks.push(c.finish());

    // Q_k(t) >= Σ_{τ<t} g_k(x(τ))
    let mut c = Tracker::new("queue-dominates-partial-sums");
    let mut sums = vec![0.0; m];
    let mut abs_sums = vec![0.0; m];
    for i in 1..records.len() {
        for k in 0..m {
            sums[k] += g_at[i][k];
            abs_sums[k] += g_at[i][k].abs();
            let q = records[i].queue[k];
            c.observe(i, sums[k] - q, abs_sums[k].max(q.abs()));
        }
    }
    checks.push(c.finish());

    // ½(‖Q(t+1)‖² − ‖Q(t)‖²) <= Q(t)ᵀg(x(t)) + ‖g(x(t))‖²
    let mut c = Tracker::new("drift-bound");
    for i in 0..records.len().saturating_sub(1) {
        let g = &g_at[i + 1];
        let drift = 0.5 * (q_norms[i + 1].powi(2) - q_norms[i].powi(2));
        let gn2 = linalg::dot(g, g);
        let bound = linalg::dot(&records[i].queue, g) + gn2;
        c.observe(i, drift - bound, q_norms[i].powi(2) + gn2);
    }
    checks.push(c.finish());

    let step_dependent = step_dependent_checks(trace, program, constants, f_star, lambda_bound, &q_norms)?;
    checks.extend(step_dependent);

    let mut c = Tracker::new("averaged-iterate-in-box");
    let set = program.feasible_set();
    for (i, r) in records.iter().enumerate().skip(1) {
        for ((x, lo), hi) in r.x_avg.iter().zip(set.lower()).zip(set.upper()) {
            c.observe(i, (lo - x).max(x - hi), lo.abs().max(hi.abs()));
        }
    }
    checks.push(c.finish());

    checks.push(consistency(trace, program, &g_at, &q_norms)?);
    debug_assert!(checks.iter().map(|c| c.name).eq(CHECK_NAMES));
    Ok(InvariantReport { checks })
}

fn step_dependent_checks(
    trace: &SolverTrace,
    program: &ConvexProgram,
    constants: &ConstantsPack,
    f_star: Option<f64>,
    lambda_bound: Option<f64>,
    q_norms: &[f64],
) -> Result<Vec<CheckOutcome>> {
    const NAMES: [&str; 4] = [
        "queue-norm-cap",
        "objective-gap-bound",
        "constraint-violation-bound",
        "duality-lower-bound",
    ];
    if trace.algorithm != AlgorithmId::New {
        return Ok(NAMES
            .iter()
            .map(|n| CheckOutcome::skipped(n, "only proven for the queue-gradient method"))
            .collect());
    }
    let records = &trace.records;
    let gamma = trace.step;
    let lambda_bound = lambda_bound.or(constants.lambda_bound);
    let mut constants = constants.clone();
    if let Some(b) = lambda_bound {
        constants = constants.with_lambda_bound(b);
    }
    let admissible = match constants.gamma_max() {
        Ok(gmax) => {
            if gamma <= gmax * (1.0 + 1e-12) {
                Ok(())
            } else {
                Err(format!("step {gamma:e} exceeds the admissible {gmax:e}"))
            }
        }
        Err(_) => Err("no multiplier bound to evaluate the admissible step".to_string()),
    };
    let cap = constants.queue_cap(gamma);
    let r2 = constants.diameter.powi(2);
    let mut out = Vec::with_capacity(4);

    // ‖Q(t)‖ <= 2λ̄ + R/√γ + C
    out.push(match (&admissible, cap) {
        (Err(why), _) => CheckOutcome::skipped(NAMES[0], why.clone()),
        (Ok(()), None) => CheckOutcome::skipped(NAMES[0], "no multiplier bound"),
        (Ok(()), Some(cap)) => {
            let mut c = Tracker::new(NAMES[0]);
            for (i, qn) in q_norms.iter().enumerate() {
                c.observe(i, qn - cap, cap);
            }
            c.finish()
        }
    });

    // f(x̄(t)) − f* <= R²/(2γt)
    out.push(match (&admissible, f_star) {
        (_, None) => CheckOutcome::skipped(NAMES[1], "no optimal value supplied"),
        (Err(why), _) => CheckOutcome::skipped(NAMES[1], why.clone()),
        (Ok(()), Some(fs)) => {
            let mut c = Tracker::new(NAMES[1]);
            for (i, r) in records.iter().enumerate().skip(1) {
                let bound = r2 / (2.0 * gamma * r.t as f64);
                // only positive gaps can break the bound
                let gap = r.f_avg - fs;
                if gap > 0.0 {
                    c.observe(i, gap - bound, bound + fs.abs());
                }
            }
            c.finish()
        }
    });

    // g_k(x̄(t)) <= (2λ̄ + R/√γ + C)/t
    out.push(match (&admissible, cap) {
        (Err(why), _) => CheckOutcome::skipped(NAMES[2], why.clone()),
        (Ok(()), None) => CheckOutcome::skipped(NAMES[2], "no multiplier bound"),
        (Ok(()), Some(cap)) => {
            let mut c = Tracker::new(NAMES[2]);
            for (i, r) in records.iter().enumerate().skip(1) {
                let g_avg = program.constraint_values(&r.x_avg)?;
                let bound = cap / r.t as f64;
                for g in g_avg {
                    c.observe(i, g - bound, bound);
                }
            }
            c.finish()
        }
    });

    // Σ_{τ<t} f(x(τ)) >= t f* − λ̄‖Q(t)‖
    out.push(match (f_star, lambda_bound) {
        (None, _) => CheckOutcome::skipped(NAMES[3], "no optimal value supplied"),
        (_, None) => CheckOutcome::skipped(NAMES[3], "no multiplier bound"),
        (Some(fs), Some(lb)) => {
            let mut c = Tracker::new(NAMES[3]);
            let mut sum = 0.0;
            let mut abs_sum = 0.0;
            for (i, r) in records.iter().enumerate().skip(1) {
                let f = program.objective_value(&r.x)?;
                sum += f;
                abs_sum += f.abs();
                let t = r.t as f64;
                let bound = t * fs - lb * q_norms[i];
                c.observe(i, bound - sum, abs_sum + (t * fs).abs() + lb * q_norms[i]);
            }
            c.finish()
        }
    });
    Ok(out)
}

/// Compares every stored quantity with its value recomputed from the iterates.
fn consistency(
    trace: &SolverTrace,
    program: &ConvexProgram,
    g_at: &[Vec<f64>],
    q_norms: &[f64],
) -> Result<CheckOutcome> {
    let mut c = Tracker::new("trace-consistency");
    let records = &trace.records;
    let mut queue: Vec<f64> = g_at[0].iter().map(|g| (-g).max(0.0)).collect();
    let mut sum = vec![0.0; program.dim()];
    for (i, r) in records.iter().enumerate() {
        let index_gap = (r.t as f64 - i as f64).abs();
        c.observe(i, index_gap, 0.0);
        if i > 0 {
            for (q, g) in queue.iter_mut().zip(&g_at[i]) {
                *q = (-g).max(*q + g);
            }
            for (s, x) in sum.iter_mut().zip(&r.x) {
                *s += x;
            }
        }
        for (a, b) in r.queue.iter().zip(&queue) {
            c.observe(i, (a - b).abs(), b.abs());
        }
        let avg: Vec<f64> = if i == 0 {
            r.x.clone()
        } else {
            sum.iter().map(|s| s / i as f64).collect()
        };
        for (a, b) in r.x_avg.iter().zip(&avg) {
            c.observe(i, (a - b).abs(), b.abs());
        }
        let f_x = program.objective_value(&r.x)?;
        c.observe(i, (r.f_x - f_x).abs(), f_x);
        let f_avg = program.objective_value(&avg)?;
        c.observe(i, (r.f_avg - f_avg).abs(), f_avg);
        for (a, b) in r.g_avg.iter().zip(program.constraint_values(&avg)?) {
            c.observe(i, (a - b).abs(), b);
        }
        c.observe(i, (r.queue_norm - q_norms[i]).abs(), q_norms[i]);
        let drift = if i == 0 {
            0.0
        } else {
            0.5 * (q_norms[i].powi(2) - q_norms[i - 1].powi(2))
        };
        c.observe(i, (r.drift - drift).abs(), q_norms[i].powi(2));
    }
    Ok(c.finish())
}

/// `(t, ½(‖Q(t+1)‖² − ‖Q(t)‖²))` for each consecutive pair of records.
pub fn drift_series(trace: &SolverTrace) -> Vec<(usize, f64)> {
    trace
        .records
        .windows(2)
        .map(|w| {
            let a = linalg::norm(&w[0].queue);
            let b = linalg::norm(&w[1].queue);
            (w[0].t, 0.5 * (b * b - a * a))
        })
        .collect()
}

/// Log-log least-squares fit of `error ≈ 10^intercept · t^slope`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// RMS deviation of the fit in log10 units.
    pub residual: f64,
    pub points: usize,
}

/// Minimum number of positive points needed for a fit.
pub const MIN_FIT_POINTS: usize = 10;

/// Fits a power law to the points of `series` with `t` in `window` and a
/// positive error.
pub fn fit_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::Config(format!(
            "rate window [{lo}, {hi}] must satisfy 0 < lo < hi"
        )));
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, e)| *t >= lo && *t <= hi && *e > 0.0 && e.is_finite())
        .map(|(t, e)| (t.log10(), e.log10()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} positive points in the window, need at least {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all points share one t".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / k).sqrt();
    Ok(RateFit {
        slope,
        intercept,
        window,
        residual,
        points: pts.len(),
    })
}
