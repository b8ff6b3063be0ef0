//! Proximal dual-type baseline.
//!
//! Each iteration solves
//! `x(t) = argmin_{x in X} f(x) + [Q(t) + g(x(t−1))]ᵀ g(x) + α‖x − x(t−1)‖²`
//! and then applies the same queue and averaging updates as the
//! queue-gradient method.

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{finite_slice, ConvexProgram};

use super::{weighted_gradient, SolverState};

/// Settings for the inner projected-gradient solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    /// Stop when `‖x − P(x − ∇Φ/L)‖ <= tol·(1 + ‖x‖)`.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig {
            tol: 1e-10,
            max_iterations: 100_000,
        }
    }
}

/// Per-coordinate curvature of the subproblem when every function is
/// separable: `h_f + Σ_k w_k h_k`.
fn separable_curvature(program: &ConvexProgram, weights: &[f64]) -> Option<Vec<f64>> {
    let mut h = program.objective().separable_curvature()?;
    for (g, w) in program.constraints().iter().zip(weights) {
        let hk = g.separable_curvature()?;
        for (a, b) in h.iter_mut().zip(&hk) {
            *a += w * b;
        }
    }
    Some(h)
}

/// Solves the subproblem from `state` and returns the minimizer.
pub(crate) fn solve_subproblem(
    state: &SolverState,
    program: &ConvexProgram,
    alpha: f64,
    inner: &InnerConfig,
) -> Result<Vec<f64>> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Config(format!("alpha must be positive and finite, got {alpha}")));
    }
    let p = state.x_prev();
    let w = state.weights();
    let d = weighted_gradient(program, p, &w)?;

    if let Some(h) = separable_curvature(program, &w) {
        // φ is an exact separable quadratic around p
        let mut x: Vec<f64> = p
            .iter()
            .zip(&d)
            .zip(&h)
            .map(|((pi, di), hi)| pi - di / (2.0 * (hi + alpha)))
            .collect();
        finite_slice(&x, "subproblem solution")?;
        program.feasible_set().project_in_place(&mut x)?;
        return Ok(x);
    }

    let smooth = program.objective().smoothness()
        + program
            .constraints()
            .iter()
            .zip(&w)
            .map(|(g, wk)| wk * g.smoothness())
            .sum::<f64>()
        + 2.0 * alpha;
    let set = program.feasible_set();
    let mut x = p.to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..inner.max_iterations {
        let mut grad = weighted_gradient(program, &x, &w)?;
        for ((gi, xi), pi) in grad.iter_mut().zip(&x).zip(p) {
            *gi += 2.0 * alpha * (xi - pi);
        }
        let mut next: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - gi / smooth).collect();
        set.project_in_place(&mut next)?;
        residual = linalg::distance(&x, &next);
        let scale = 1.0 + linalg::norm(&x);
        x = next;
        if residual <= inner.tol * scale {
            return Ok(x);
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: inner.max_iterations,
        residual,
    })
}

pub(crate) fn advance(state: &mut SolverState, program: &ConvexProgram, alpha: f64, inner: &InnerConfig) -> Result<()> {
    let x = solve_subproblem(state, program, alpha, inner)?;
    state.accept(program, x)
}

/// One iteration of the dual-type baseline with proximal weight `alpha`.
pub fn step_dual_type(
    program: &ConvexProgram,
    state: &SolverState,
    alpha: f64,
    inner: &InnerConfig,
) -> Result<SolverState> {
    let mut next = state.clone();
    advance(&mut next, program, alpha, inner)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::instances::{build_lp, example_lp_instance};
    use crate::linalg::Matrix;
    use crate::problem::{Affine, BoxSet, Quadratic, SharedFunction, SmoothFunction};
    use crate::solvers::VirtualQueue;

    #[test]
    fn lp_closed_form() {
        let spec = example_lp_instance();
        let (p, _) = build_lp(&spec).unwrap();
        let x0 = vec![1.0, 2.0, 0.5, 0.0];
        let q = VirtualQueue::from_values(vec![0.5, 0.0, 3.0]).unwrap();
        let s = SolverState::with_queue(&p, &x0, q.clone()).unwrap();
        let alpha = 100.0;
        let next = step_dual_type(&p, &s, alpha, &InnerConfig::default()).unwrap();
        let g = p.constraint_values(&x0).unwrap();
        let weights: Vec<f64> = q.as_slice().iter().zip(&g).map(|(a, b)| a + b).collect();
        let w: Vec<f64> = spec
            .a
            .tr_mul_vec(&weights)
            .iter()
            .zip(&spec.c)
            .map(|(a, c)| a + c)
            .collect();
        for i in 0..4 {
            let expected = (x0[i] - w[i] / (2.0 * alpha)).clamp(0.0, 10.0);
            assert!((next.x_prev()[i] - expected).abs() < 1e-15);
        }
    }

    /// Quadratic with a coupling term, forcing the iterative inner solver.
    #[derive(Debug)]
    struct Coupled(Quadratic);

    impl SmoothFunction for Coupled {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn value(&self, x: &[f64]) -> f64 {
            self.0.value(x)
        }
        fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
            self.0.gradient_into(x, out)
        }
        fn smoothness(&self) -> f64 {
            self.0.smoothness()
        }
    }

    fn coupled_program() -> ConvexProgram {
        let m = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]], 2).unwrap();
        let f = Quadratic::new(m, vec![-1.0, -1.0], 0.0, 2.0 * 2.21).unwrap();
        let g: SharedFunction = Arc::new(Affine::new(vec![1.0, 1.0], -1.5));
        ConvexProgram::new(
            Arc::new(Coupled(f)),
            vec![g],
            BoxSet::new(vec![-2.0; 2], vec![2.0; 2]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn fixed_point_is_preserved() {
        let p = coupled_program();
        // unconstrained minimizer of f: (2M) x = −l gives (1/7, 3/7)
        let x = [1.0 / 7.0, 3.0 / 7.0];
        let g = p.constraint_values(&x).unwrap();
        // Q = −g makes every weight zero
        let q = VirtualQueue::from_values(vec![-g[0]]).unwrap();
        let s = SolverState::with_queue(&p, &x, q).unwrap();
        let y = solve_subproblem(&s, &p, 1.0, &InnerConfig::default()).unwrap();
        assert!(linalg::distance(&x, &y) < 1e-12);
    }

    #[test]
    fn iterative_inner_solver_matches_optimality() {
        let p = coupled_program();
        let s = SolverState::new(&p, &[0.0, 0.0]).unwrap();
        let alpha = 0.7;
        let x = solve_subproblem(&s, &p, alpha, &InnerConfig::default()).unwrap();
        // projected-gradient fixed point of the subproblem
        let w = s.weights();
        let mut grad = weighted_gradient(&p, &x, &w).unwrap();
        for (gi, xi) in grad.iter_mut().zip(&x) {
            *gi += 2.0 * alpha * xi;
        }
        let probe: Vec<f64> = x.iter().zip(&grad).map(|(a, b)| a - 0.01 * b).collect();
        let back = p.feasible_set().project(&probe).unwrap();
        assert!(linalg::distance(&x, &back) < 1e-9);
    }

    #[test]
    fn inner_cap_reports_residual() {
        let p = coupled_program();
        let s = SolverState::new(&p, &[0.0, 0.0]).unwrap();
        let cfg = InnerConfig {
            tol: 0.0,
            max_iterations: 3,
        };
        match solve_subproblem(&s, &p, 0.5, &cfg) {
            Err(Error::ConvergenceFailure { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }
}
