//! Arrow-Hurwicz-Uzawa primal-dual subgradient baseline.
//!
//! Primal and dual updates both read the previous pair `(x, λ)`:
//!
//! ```text
//! x(t) = P_X[x(t−1) − c (∇f(x(t−1)) + Σ_k λ_k(t−1) ∇g_k(x(t−1)))]
//! λ(t) = clip(λ(t−1) + c g(x(t−1)), 0, λ_max)
//! ```
//!
//! The `∇f` term can be switched off to get the variant that moves only along
//! the constraint gradients.

use crate::error::{Error, Result};
use crate::problem::{finite_slice, ConvexProgram};

use super::{add_weighted_constraint_gradients, guard_overflow};

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierState {
    t: usize,
    x: Vec<f64>,
    lambda: Vec<f64>,
    running_sum: Vec<f64>,
}

impl MultiplierState {
    /// Starts from `x(0) = x_init` and `λ(0) = 0`.
    pub fn new(program: &ConvexProgram, x_init: &[f64]) -> Result<Self> {
        if x_init.len() != program.dim() {
            return Err(Error::dim("initial point", program.dim(), x_init.len()));
        }
        if !program.feasible_set().contains(x_init) {
            return Err(Error::InvalidInput("initial point lies outside the box".into()));
        }
        Ok(MultiplierState {
            t: 0,
            x: x_init.to_vec(),
            lambda: vec![0.0; program.num_constraints()],
            running_sum: vec![0.0; program.dim()],
        })
    }

    pub fn with_multipliers(program: &ConvexProgram, x: &[f64], lambda: Vec<f64>) -> Result<Self> {
        let mut s = MultiplierState::new(program, x)?;
        if lambda.len() != program.num_constraints() {
            return Err(Error::dim("multipliers", program.num_constraints(), lambda.len()));
        }
        s.lambda = lambda;
        Ok(s)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Mean of `x(1), …, x(t)`; the starting point when `t = 0`.
    pub fn average(&self) -> Vec<f64> {
        if self.t == 0 {
            return self.x.clone();
        }
        let t = self.t as f64;
        self.running_sum.iter().map(|s| s / t).collect()
    }

    pub fn step(
        &mut self,
        program: &ConvexProgram,
        c: f64,
        lambda_max: &[f64],
        include_objective_gradient: bool,
    ) -> Result<()> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Config(format!("c must be positive and finite, got {c}")));
        }
        if lambda_max.len() != self.lambda.len() {
            return Err(Error::dim("lambda_max", self.lambda.len(), lambda_max.len()));
        }
        let g = program.constraint_values(&self.x)?;
        let mut d = if include_objective_gradient {
            program.objective().gradient(&self.x)
        } else {
            vec![0.0; program.dim()]
        };
        add_weighted_constraint_gradients(program, &self.x, &self.lambda, &mut d);
        finite_slice(&d, "search direction")?;

        let mut x_new: Vec<f64> = self.x.iter().zip(&d).map(|(x, di)| x - c * di).collect();
        program.feasible_set().project_in_place(&mut x_new)?;
        for ((l, gk), cap) in self.lambda.iter_mut().zip(&g).zip(lambda_max) {
            *l = (*l + c * gk).clamp(0.0, *cap);
        }
        for (s, x) in self.running_sum.iter_mut().zip(&x_new) {
            *s += x;
        }
        self.x = x_new;
        self.t += 1;
        guard_overflow(&[&self.x, &self.lambda, &g])
    }
}

/// Value-returning form of [`MultiplierState::step`].
pub fn step_pd_subgradient(
    program: &ConvexProgram,
    state: &MultiplierState,
    c: f64,
    lambda_max: &[f64],
    include_objective_gradient: bool,
) -> Result<MultiplierState> {
    let mut next = state.clone();
    next.step(program, c, lambda_max, include_objective_gradient)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{build_qp, example_qp_instance};

    #[test]
    fn zero_multipliers_without_objective_gradient_stay_put() {
        let (p, _) = build_qp(&example_qp_instance()).unwrap();
        let s = MultiplierState::new(&p, &[0.3, 0.2]).unwrap();
        let next = step_pd_subgradient(&p, &s, 0.1, &[10.0; 3], false).unwrap();
        assert_eq!(next.x(), &[0.3, 0.2]);
    }

    #[test]
    fn zero_multipliers_with_objective_gradient_is_projected_gradient() {
        let (p, _) = build_qp(&example_qp_instance()).unwrap();
        let x0 = [0.3, 0.2];
        let s = MultiplierState::new(&p, &x0).unwrap();
        let next = step_pd_subgradient(&p, &s, 0.1, &[10.0; 3], true).unwrap();
        let grad = p.objective_gradient(&x0).unwrap();
        let expected = p
            .feasible_set()
            .project(&[x0[0] - 0.1 * grad[0], x0[1] - 0.1 * grad[1]])
            .unwrap();
        assert_eq!(next.x(), expected.as_slice());
    }

    #[test]
    fn multiplier_is_clipped_below() {
        use crate::problem::{Affine, BoxSet, SharedFunction};
        use std::sync::Arc;
        // g(x) = −4 everywhere
        let p = ConvexProgram::new(
            Arc::new(Affine::new(vec![0.0], 0.0)),
            vec![Arc::new(Affine::new(vec![0.0], -4.0)) as SharedFunction],
            BoxSet::new(vec![0.0], vec![1.0]).unwrap(),
        )
        .unwrap();
        let s = MultiplierState::with_multipliers(&p, &[0.5], vec![1.0]).unwrap();
        let next = step_pd_subgradient(&p, &s, 0.5, &[10.0], true).unwrap();
        assert_eq!(next.lambda(), &[0.0]);
        assert_eq!(next.average(), vec![0.5]);
    }
}
