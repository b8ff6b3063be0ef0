//! First-order primal-dual methods driven by virtual queues.
//!
//! The main method keeps a queue vector `Q(t) >= 0` that accumulates
//! constraint violation and takes a single projected gradient step on
//! `φ(x) = f(x) + [Q(t) + g(x(t−1))]ᵀ g(x)` per iteration:
//!
//! ```text
//! d(t)      = ∇f(x(t−1)) + Σ_k [Q_k(t) + g_k(x(t−1))] ∇g_k(x(t−1))
//! x(t)      = P_X[x(t−1) − γ d(t)]
//! Q_k(t+1)  = max{−g_k(x(t)), Q_k(t) + g_k(x(t))}
//! ```
//!
//! With `γ <= 1 / (‖L_g‖R + √D)²` the running average `x̄(t)` is within
//! `O(1/t)` of optimal and feasible. Two baselines share the same driver:
//! the primal-dual subgradient method ([`subgradient`]) and the proximal
//! dual-type method ([`dual_type`]).

pub mod dual_type;
pub mod subgradient;
mod trace;

use std::time::Instant;

pub use dual_type::{step_dual_type, InnerConfig};
pub use subgradient::{step_pd_subgradient, MultiplierState};
pub use trace::constraint_onsets;
pub use trace::{AlgorithmId, SolverTrace, TraceRecord};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{finite_slice, ConstantsPack, ConvexProgram};

/// Any iterate, queue entry or constraint value beyond this aborts the run.
pub const OVERFLOW_LIMIT: f64 = 1e100;

/// Virtual queue vector `Q(t)`; every entry is nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualQueue(Vec<f64>);

impl VirtualQueue {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Builds a queue from explicit values; fails on a negative entry.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|q| !(*q >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "queue entry {} is negative: {}",
                k + 1,
                values[k]
            )));
        }
        Ok(VirtualQueue(values))
    }

    /// `Q_k ← max{−g_k, Q_k + g_k}`
    pub fn update(&mut self, g: &[f64]) {
        for (q, gk) in self.0.iter_mut().zip(g) {
            *q = (-gk).max(*q + gk);
        }
    }
}

/// `Q_k(0) = max{0, −g_k(x_init)}`
pub fn init_virtual_queue(program: &ConvexProgram, x_init: &[f64]) -> Result<VirtualQueue> {
    let g = program.constraint_values(x_init)?;
    Ok(VirtualQueue(g.iter().map(|gk| (-gk).max(0.0)).collect()))
}

/// Iteration state shared by the queue-based methods.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    t: usize,
    x_prev: Vec<f64>,
    queue: VirtualQueue,
    running_sum: Vec<f64>,
    g_prev: Vec<f64>,
}

impl SolverState {
    pub fn new(program: &ConvexProgram, x_init: &[f64]) -> Result<Self> {
        if x_init.len() != program.dim() {
            return Err(Error::dim("initial point", program.dim(), x_init.len()));
        }
        if !program.feasible_set().contains(x_init) {
            return Err(Error::InvalidInput("initial point lies outside the box".into()));
        }
        let g_prev = program.constraint_values(x_init)?;
        let queue = VirtualQueue(g_prev.iter().map(|gk| (-gk).max(0.0)).collect());
        Ok(SolverState {
            t: 0,
            x_prev: x_init.to_vec(),
            queue,
            running_sum: vec![0.0; program.dim()],
            g_prev,
        })
    }

    /// Builds a state with an explicit queue, e.g. to replay a hand trace.
    pub fn with_queue(program: &ConvexProgram, x_prev: &[f64], queue: VirtualQueue) -> Result<Self> {
        let mut s = SolverState::new(program, x_prev)?;
        if queue.len() != program.num_constraints() {
            return Err(Error::dim("queue", program.num_constraints(), queue.len()));
        }
        s.queue = queue;
        Ok(s)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Latest primal iterate `x(t−1)`.
    pub fn x_prev(&self) -> &[f64] {
        &self.x_prev
    }

    pub fn queue(&self) -> &VirtualQueue {
        &self.queue
    }

    /// Cached `g(x(t−1))`.
    pub fn g_prev(&self) -> &[f64] {
        &self.g_prev
    }

    pub fn running_sum(&self) -> &[f64] {
        &self.running_sum
    }

    /// `x̄(t) = (1/t) Σ_{τ<t} x(τ)`; the starting point when `t = 0`.
    pub fn average(&self) -> Vec<f64> {
        if self.t == 0 {
            return self.x_prev.clone();
        }
        let t = self.t as f64;
        self.running_sum.iter().map(|s| s / t).collect()
    }

    /// `Q(t) + g(x(t−1))`, nonnegative by construction of the queue update.
    pub fn weights(&self) -> Vec<f64> {
        self.queue.0.iter().zip(&self.g_prev).map(|(q, g)| q + g).collect()
    }

    pub(crate) fn accept(&mut self, program: &ConvexProgram, x_new: Vec<f64>) -> Result<()> {
        let g_new = program.constraint_values(&x_new)?;
        self.queue.update(&g_new);
        for (s, x) in self.running_sum.iter_mut().zip(&x_new) {
            *s += x;
        }
        self.x_prev = x_new;
        self.g_prev = g_new;
        self.t += 1;
        guard_overflow(&[&self.x_prev, self.queue.as_slice(), &self.g_prev])
    }

    /// One iteration of the queue-gradient method with step `gamma`.
    pub fn step_new(&mut self, program: &ConvexProgram, gamma: f64) -> Result<()> {
        let d = weighted_gradient(program, &self.x_prev, &self.weights())?;
        let mut x_new: Vec<f64> = self.x_prev.iter().zip(&d).map(|(x, di)| x - gamma * di).collect();
        program.feasible_set().project_in_place(&mut x_new)?;
        self.accept(program, x_new)
    }
}

fn guard_overflow(parts: &[&[f64]]) -> Result<()> {
    for part in parts {
        if let Some(v) = part.iter().find(|v| !(v.abs() <= OVERFLOW_LIMIT)) {
            return Err(Error::NumericalFailure(format!(
                "value {v:e} exceeds the overflow guard of {OVERFLOW_LIMIT:e}"
            )));
        }
    }
    Ok(())
}

/// `∇f(x) + Σ_k w_k ∇g_k(x)`
pub(crate) fn weighted_gradient(program: &ConvexProgram, x: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    let mut d = program.objective().gradient(x);
    add_weighted_constraint_gradients(program, x, weights, &mut d);
    finite_slice(&d, "search direction")?;
    Ok(d)
}

pub(crate) fn add_weighted_constraint_gradients(program: &ConvexProgram, x: &[f64], weights: &[f64], out: &mut [f64]) {
    let mut row = vec![0.0; program.dim()];
    for (g, w) in program.constraints().iter().zip(weights) {
        if *w == 0.0 {
            continue;
        }
        g.gradient_into(x, &mut row);
        for (o, r) in out.iter_mut().zip(&row) {
            *o += w * r;
        }
    }
}

/// `d = ∇f(x_prev) + Σ_k [Q_k + g_k(x_prev)] ∇g_k(x_prev)`
pub fn direction(program: &ConvexProgram, x_prev: &[f64], queue: &VirtualQueue) -> Result<Vec<f64>> {
    if queue.len() != program.num_constraints() {
        return Err(Error::dim("queue", program.num_constraints(), queue.len()));
    }
    let g = program.constraint_values(x_prev)?;
    let w: Vec<f64> = queue.0.iter().zip(&g).map(|(q, gk)| q + gk).collect();
    weighted_gradient(program, x_prev, &w)
}

/// Value-returning form of [`SolverState::step_new`].
pub fn step_new_algorithm(program: &ConvexProgram, state: &SolverState, gamma: f64) -> Result<SolverState> {
    check_positive("gamma", gamma)?;
    let mut next = state.clone();
    next.step_new(program, gamma)?;
    Ok(next)
}

/// Largest step admitted by the convergence analysis.
pub fn select_gamma(constants: &ConstantsPack) -> Result<f64> {
    constants.gamma_max()
}

/// Bound on the multiplier norm from a strictly feasible point `x̂`:
/// `(f(x̂) − q_lower) / min_k{−g_k(x̂)}`, where `q_lower` is a certified lower
/// bound on the dual function at λ = 0, i.e. on `min_{x in X} f(x)`.
pub fn multiplier_bound(program: &ConvexProgram, slater_point: &[f64], dual_value_lower: f64) -> Result<f64> {
    if !program.feasible_set().contains(slater_point) {
        return Err(Error::InvalidInput("Slater point must lie in the box".into()));
    }
    let g = program.constraint_values(slater_point)?;
    if let Some((k, v)) = g.iter().enumerate().find(|(_, v)| !(**v < 0.0)) {
        return Err(Error::NotStrictlyFeasible {
            index: k + 1,
            value: *v,
        });
    }
    let f = program.objective_value(slater_point)?;
    if dual_value_lower > f {
        return Err(Error::InvalidInput(format!(
            "dual lower bound {dual_value_lower} exceeds f at the Slater point ({f})"
        )));
    }
    let slack = g.iter().map(|v| -v).fold(f64::INFINITY, f64::min);
    Ok((f - dual_value_lower) / slack)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Step parameter: derived from the constants or given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Step {
    /// γ from the step-size rule; `c = γ` for the subgradient baseline and
    /// `α = 1/(2γ)` for the dual-type baseline.
    #[default]
    Auto,
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub iterations: usize,
    pub step: Step,
    pub x_init: Vec<f64>,
    /// Subgradient baseline: include `∇f` in the primal step.
    pub include_objective_gradient: bool,
    /// Subgradient baseline: multiplier caps; default `2 λ̄ + 1`.
    pub lambda_max: Option<Vec<f64>>,
    /// Dual-type baseline: inner solver settings.
    pub inner: InnerConfig,
    /// Stop once `R²/(2γt)` drops below this (queue-gradient method only).
    pub target_gap: Option<f64>,
}

impl RunConfig {
    pub fn new(iterations: usize, x_init: Vec<f64>) -> Self {
        RunConfig {
            iterations,
            step: Step::Auto,
            x_init,
            include_objective_gradient: true,
            lambda_max: None,
            inner: InnerConfig::default(),
            target_gap: None,
        }
    }

    pub fn with_step(mut self, step: Step) -> Self {
        self.step = step;
        self
    }
}

/// Resolves the scalar step parameter for `algorithm`.
pub fn resolve_step(algorithm: AlgorithmId, constants: &ConstantsPack, step: Step) -> Result<f64> {
    let value = match (step, algorithm) {
        (Step::Explicit(v), _) => v,
        (Step::Auto, AlgorithmId::New | AlgorithmId::PdSubgradient) => select_gamma(constants)?,
        (Step::Auto, AlgorithmId::DualType) => 1.0 / (2.0 * select_gamma(constants)?),
    };
    check_positive(algorithm.step_name(), value)?;
    Ok(value)
}

enum Engine {
    Queue { state: SolverState, prev_norm_sq: f64 },
    Multiplier { state: MultiplierState, prev_norm_sq: f64 },
}

/// Steps one algorithm and produces trace records on demand.
pub struct Runner<'p> {
    program: &'p ConvexProgram,
    algorithm: AlgorithmId,
    step: f64,
    lambda_max: Vec<f64>,
    include_objective_gradient: bool,
    inner: InnerConfig,
    engine: Engine,
    last_drift: f64,
}

impl<'p> Runner<'p> {
    pub fn new(
        algorithm: AlgorithmId,
        program: &'p ConvexProgram,
        constants: &ConstantsPack,
        config: &RunConfig,
    ) -> Result<Self> {
        let step = resolve_step(algorithm, constants, config.step)?;
        let m = program.num_constraints();
        let lambda_max = match (algorithm, &config.lambda_max) {
            (AlgorithmId::PdSubgradient, Some(caps)) => {
                if caps.len() != m {
                    return Err(Error::dim("lambda_max", m, caps.len()));
                }
                caps.clone()
            }
            (AlgorithmId::PdSubgradient, None) => {
                let bound = constants.lambda_bound.ok_or_else(|| {
                    Error::Config("the subgradient baseline needs a multiplier bound or explicit caps".into())
                })?;
                vec![2.0 * bound + 1.0; m]
            }
            _ => Vec::new(),
        };
        let engine = match algorithm {
            AlgorithmId::PdSubgradient => {
                let state = MultiplierState::new(program, &config.x_init)?;
                Engine::Multiplier {
                    state,
                    prev_norm_sq: 0.0,
                }
            }
            _ => {
                let state = SolverState::new(program, &config.x_init)?;
                let prev_norm_sq = state.queue.norm().powi(2);
                Engine::Queue { state, prev_norm_sq }
            }
        };
        Ok(Runner {
            program,
            algorithm,
            step,
            lambda_max,
            include_objective_gradient: config.include_objective_gradient,
            inner: config.inner,
            engine,
            last_drift: 0.0,
        })
    }

    pub fn step_parameter(&self) -> f64 {
        self.step
    }

    pub fn t(&self) -> usize {
        match &self.engine {
            Engine::Queue { state, .. } => state.t,
            Engine::Multiplier { state, .. } => state.t(),
        }
    }

    pub fn advance(&mut self) -> Result<()> {
        let program = self.program;
        match &mut self.engine {
            Engine::Queue { state, prev_norm_sq } => {
                match self.algorithm {
                    AlgorithmId::DualType => dual_type::advance(state, program, self.step, &self.inner)?,
                    _ => state.step_new(program, self.step)?,
                }
                let norm_sq = state.queue.norm().powi(2);
                self.last_drift = 0.5 * (norm_sq - *prev_norm_sq);
                *prev_norm_sq = norm_sq;
            }
            Engine::Multiplier { state, prev_norm_sq } => {
                state.step(program, self.step, &self.lambda_max, self.include_objective_gradient)?;
                let norm_sq = linalg::norm(state.lambda()).powi(2);
                self.last_drift = 0.5 * (norm_sq - *prev_norm_sq);
                *prev_norm_sq = norm_sq;
            }
        }
        Ok(())
    }

    pub fn record(&self) -> Result<TraceRecord> {
        let (t, x, x_avg, queue) = match &self.engine {
            Engine::Queue { state, .. } => (state.t, state.x_prev.clone(), state.average(), state.queue.0.clone()),
            Engine::Multiplier { state, .. } => {
                (state.t(), state.x().to_vec(), state.average(), state.lambda().to_vec())
            }
        };
        Ok(TraceRecord {
            t,
            f_x: self.program.objective_value(&x)?,
            f_avg: self.program.objective_value(&x_avg)?,
            g_avg: self.program.constraint_values(&x_avg)?,
            queue_norm: linalg::norm(&queue),
            queue,
            x,
            x_avg,
            drift: if t == 0 { 0.0 } else { self.last_drift },
        })
    }
}

/// Runs `algorithm` for the full budget, recording every iterate.
///
/// Configuration problems are returned as `Err`. A numerical failure during
/// the iteration ends the run early; the partial trace is returned with
/// [`SolverTrace::aborted`] set.
pub fn run(
    algorithm: AlgorithmId,
    program: &ConvexProgram,
    constants: &ConstantsPack,
    config: &RunConfig,
) -> Result<SolverTrace> {
    if config.iterations == 0 {
        return Err(Error::Config("iterations must be ≥ 1".into()));
    }
    let start = Instant::now();
    let mut runner = Runner::new(algorithm, program, constants, config)?;
    let mut records = Vec::with_capacity(config.iterations + 1);
    records.push(runner.record()?);
    let stop_at = stopping_iteration(algorithm, constants, runner.step, config);
    let mut aborted = None;
    for _ in 0..stop_at {
        match runner.advance().and_then(|_| runner.record()) {
            Ok(r) => records.push(r),
            Err(e) => {
                aborted = Some(e);
                break;
            }
        }
    }
    Ok(SolverTrace {
        algorithm,
        step: runner.step,
        records,
        elapsed: start.elapsed(),
        aborted,
    })
}

fn stopping_iteration(algorithm: AlgorithmId, constants: &ConstantsPack, step: f64, config: &RunConfig) -> usize {
    match (algorithm, config.target_gap) {
        (AlgorithmId::New, Some(eps)) if eps > 0.0 => {
            let bound_one = constants.diameter.powi(2) / (2.0 * step);
            let t = (bound_one / eps).floor() as usize + 1;
            t.min(config.iterations)
        }
        _ => config.iterations,
    }
}

/// Final state of a run that keeps no history.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub algorithm: AlgorithmId,
    pub step: f64,
    pub last: TraceRecord,
    pub aborted: Option<Error>,
}

/// Like [`run`] but only the final record is kept; suited to long runs.
pub fn run_summary(
    algorithm: AlgorithmId,
    program: &ConvexProgram,
    constants: &ConstantsPack,
    config: &RunConfig,
) -> Result<RunSummary> {
    if config.iterations == 0 {
        return Err(Error::Config("iterations must be ≥ 1".into()));
    }
    let mut runner = Runner::new(algorithm, program, constants, config)?;
    let stop_at = stopping_iteration(algorithm, constants, runner.step, config);
    let mut aborted = None;
    for _ in 0..stop_at {
        if let Err(e) = runner.advance() {
            aborted = Some(e);
            break;
        }
    }
    Ok(RunSummary {
        algorithm,
        step: runner.step,
        last: runner.record()?,
        aborted,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::instances::{build_lp, build_qp, example_lp_instance, example_qp_instance, random_instance, Family};
    use crate::linalg::Matrix;
    use crate::problem::{Affine, BoxSet, Quadratic, SharedFunction};

    /// f(x) = (x − 1)², g(x) = x − 0.5 on [0, 1].
    fn one_dim() -> ConvexProgram {
        let f = Quadratic::new(Matrix::identity(1), vec![-2.0], 1.0, 2.0).unwrap();
        let g: SharedFunction = Arc::new(Affine::new(vec![1.0], -0.5));
        ConvexProgram::new(Arc::new(f), vec![g], BoxSet::new(vec![0.0], vec![1.0]).unwrap()).unwrap()
    }

    #[test]
    fn initial_queue_examples() {
        let (lp, _) = build_lp(&example_lp_instance()).unwrap();
        assert_eq!(
            init_virtual_queue(&lp, &[10.0; 4]).unwrap().as_slice(),
            &[0.0, 0.0, 0.0]
        );
        let (qp, _) = build_qp(&example_qp_instance()).unwrap();
        assert_eq!(
            init_virtual_queue(&qp, &[0.0, 0.0]).unwrap().as_slice(),
            &[4.0, 1.0, 5.0]
        );
        let p = one_dim();
        assert_eq!(init_virtual_queue(&p, &[0.5]).unwrap().as_slice(), &[0.0]);
    }

    #[test]
    fn direction_examples() {
        let p = one_dim();
        let q = VirtualQueue::from_values(vec![0.5]).unwrap();
        // 2(0 − 1) + (0.5 − 0.5)·1
        assert_eq!(direction(&p, &[0.0], &q).unwrap(), vec![-2.0]);

        let flat = ConvexProgram::new(
            Arc::new(Affine::new(vec![0.0, 0.0], 0.0)),
            vec![Arc::new(Affine::new(vec![1.0, 1.0], -1.0)) as SharedFunction],
            BoxSet::new(vec![0.0; 2], vec![2.0; 2]).unwrap(),
        )
        .unwrap();
        // Q + g(x) = 0 + 0 at x = (0.5, 0.5)
        let zero = VirtualQueue::from_values(vec![0.0]).unwrap();
        assert_eq!(direction(&flat, &[0.5, 0.5], &zero).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn lp_direction_matches_closed_form() {
        for seed in 0..5 {
            let spec = match random_instance(Family::Lp, 4, 3, seed).unwrap() {
                crate::instances::ProblemSpec::Lp(s) => s,
                _ => unreachable!(),
            };
            let (program, _) = build_lp(&spec).unwrap();
            let x = program.feasible_set().center();
            let q = VirtualQueue::from_values(vec![0.3, 1.7, 0.0]).unwrap();
            let d = direction(&program, &x, &q).unwrap();
            // c + Aᵀ(Q + Ax − b)
            let w: Vec<f64> = spec
                .a
                .mul_vec(&x)
                .iter()
                .zip(&spec.b)
                .zip(q.as_slice())
                .map(|((ax, b), qk)| qk + ax - b)
                .collect();
            let expected: Vec<f64> = spec.a.tr_mul_vec(&w).iter().zip(&spec.c).map(|(v, c)| v + c).collect();
            for (a, b) in d.iter().zip(&expected) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn hand_trace_two_steps() {
        let p = one_dim();
        let s0 = SolverState::new(&p, &[0.0]).unwrap();
        assert_eq!(s0.queue().as_slice(), &[0.5]);
        let s1 = step_new_algorithm(&p, &s0, 0.25).unwrap();
        assert_eq!(s1.x_prev(), &[0.5]);
        assert_eq!(s1.g_prev(), &[0.0]);
        assert_eq!(s1.queue().as_slice(), &[0.5]);
        let s2 = step_new_algorithm(&p, &s1, 0.25).unwrap();
        assert_eq!(s2.x_prev(), &[0.625]);
        assert_eq!(s2.queue().as_slice(), &[0.625]);
        assert_eq!(s2.average(), vec![0.5625]);
        assert_eq!(s2.t(), 2);
    }

    #[test]
    fn queue_update_in_isolation() {
        let mut q = VirtualQueue::from_values(vec![2.0]).unwrap();
        q.update(&[-5.0]);
        assert_eq!(q.as_slice(), &[5.0]);
        assert!(VirtualQueue::from_values(vec![-1.0]).is_err());
    }

    #[test]
    fn step_rejects_nonpositive_gamma() {
        let p = one_dim();
        let s = SolverState::new(&p, &[0.0]).unwrap();
        assert!(matches!(step_new_algorithm(&p, &s, 0.0), Err(Error::Config(_))));
        assert!(SolverState::new(&p, &[2.0]).is_err());
    }

    #[test]
    fn select_gamma_examples() {
        let (_, k) = build_lp(&example_lp_instance()).unwrap();
        assert!((select_gamma(&k).unwrap() * 257.0 - 1.0).abs() < 1e-15);
        let k = ConstantsPack::new(2.0, vec![0.0], 1.0, 0.0, 1.0).unwrap();
        assert_eq!(select_gamma(&k).unwrap(), 1.0 / 3.0);
        let k = ConstantsPack::new(0.0, vec![1.0], 1.0, 0.0, 1.0)
            .unwrap()
            .with_lambda_bound(0.0);
        assert_eq!(select_gamma(&k).unwrap(), 0.25);
        let (_, k) = build_qp(&example_qp_instance()).unwrap();
        assert!(matches!(select_gamma(&k), Err(Error::Config(_))));
    }

    #[test]
    fn multiplier_bound_examples() {
        let (qp, _) = build_qp(&example_qp_instance()).unwrap();
        assert_eq!(multiplier_bound(&qp, &[0.0, 0.0], -50.0).unwrap(), 50.0);
        assert_eq!(multiplier_bound(&qp, &[0.0, 0.0], 0.0).unwrap(), 0.0);

        // slack 2 with the same f and lower bound halves the result
        let p = ConvexProgram::new(
            Arc::new(Affine::new(vec![1.0], 0.0)),
            vec![Arc::new(Affine::new(vec![1.0], -2.0)) as SharedFunction],
            BoxSet::new(vec![0.0], vec![1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(multiplier_bound(&p, &[0.0], -50.0).unwrap(), 25.0);

        let err = multiplier_bound(&qp, &[0.5, 0.0], -50.0).unwrap_err();
        assert_eq!(err, Error::NotStrictlyFeasible { index: 2, value: 0.0 });
    }

    #[test]
    fn run_reproduces_hand_trace_and_sizes() {
        let p = one_dim();
        let k = ConstantsPack::new(2.0, vec![0.0], 1.0, 1.0, 1.0).unwrap();
        let cfg = RunConfig::new(1, vec![0.0]).with_step(Step::Explicit(0.25));
        let trace = run(AlgorithmId::New, &p, &k, &cfg).unwrap();
        assert_eq!(trace.records.len(), 2);
        let r1 = &trace.records[1];
        assert_eq!((r1.t, r1.x[0], r1.queue[0], r1.x_avg[0]), (1, 0.5, 0.5, 0.5));
        assert_eq!(r1.drift, 0.0);
        assert_eq!(trace.step, 0.25);

        let cfg = RunConfig::new(0, vec![0.0]);
        assert_eq!(
            run(AlgorithmId::New, &p, &k, &cfg).unwrap_err(),
            Error::Config("iterations must be ≥ 1".into())
        );
    }

    #[test]
    fn oversized_step_aborts_with_partial_trace() {
        // f = −x pushes right; one step of 1e6 makes g = 1e95(x − 1) exceed the guard
        let p = ConvexProgram::new(
            Arc::new(Affine::new(vec![-1.0], 0.0)),
            vec![Arc::new(Affine::new(vec![1e95], -1e95)) as SharedFunction],
            BoxSet::new(vec![0.0], vec![1e12]).unwrap(),
        )
        .unwrap();
        let k = ConstantsPack::new(0.0, vec![0.0], 1e95, 1e107, 1e12).unwrap();
        let cfg = RunConfig::new(50, vec![0.0]).with_step(Step::Explicit(1e6));
        let trace = run(AlgorithmId::New, &p, &k, &cfg).unwrap();
        assert!(matches!(trace.aborted, Some(Error::NumericalFailure(_))));
        assert_eq!(trace.records.len(), 1);
    }

    #[test]
    fn target_gap_stops_early() {
        let (p, k) = build_lp(&example_lp_instance()).unwrap();
        let mut cfg = RunConfig::new(1_000_000, vec![10.0; 4]);
        // R²/(2γt) = 51400/t <= 514 from t = 100
        cfg.target_gap = Some(514.0);
        let trace = run(AlgorithmId::New, &p, &k, &cfg).unwrap();
        assert!(trace.records.len() <= 102);
    }
}
