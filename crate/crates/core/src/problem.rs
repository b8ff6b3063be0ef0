//! Constrained convex programs over a box, as value/gradient oracles.
//!
//! A [`ConvexProgram`] is `minimize f(x) s.t. g_k(x) <= 0, x in X` where `X`
//! is a [`BoxSet`] and every function is a [`SmoothFunction`] with a known
//! Lipschitz constant for its gradient.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// A differentiable function on ℝⁿ with Lipschitz-continuous gradient.
pub trait SmoothFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇h(x)` into `out`.
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    /// Lipschitz constant of the gradient.
    fn smoothness(&self) -> f64;

    /// If the function is `Σ h_i x_i² + (linear) + const`, returns `h`.
    ///
    /// Used by the proximal baseline to solve its per-iteration subproblem in
    /// closed form.
    fn separable_curvature(&self) -> Option<Vec<f64>> {
        None
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        g
    }
}

/// `h(x) = aᵀx + offset`
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub coef: Vec<f64>,
    pub offset: f64,
}

impl Affine {
    pub fn new(coef: Vec<f64>, offset: f64) -> Self {
        Affine { coef, offset }
    }
}

impl SmoothFunction for Affine {
    fn dim(&self) -> usize {
        self.coef.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.coef, x) + self.offset
    }

    fn gradient_into(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.coef);
    }

    fn smoothness(&self) -> f64 {
        0.0
    }

    fn separable_curvature(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.coef.len()])
    }
}

/// `h(x) = xᵀMx + lᵀx + offset` with `M` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub quad: Matrix,
    pub lin: Vec<f64>,
    pub offset: f64,
    smoothness: f64,
}

impl Quadratic {
    /// `smoothness` must bound the norm of the Hessian `2M`.
    pub fn new(quad: Matrix, lin: Vec<f64>, offset: f64, smoothness: f64) -> Result<Self> {
        if !quad.is_square() || quad.rows() != lin.len() {
            return Err(Error::dim("quadratic form", lin.len(), quad.rows()));
        }
        Ok(Quadratic {
            quad,
            lin,
            offset,
            smoothness,
        })
    }
}

impl SmoothFunction for Quadratic {
    fn dim(&self) -> usize {
        self.lin.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.quad.quad_form(x) + linalg::dot(&self.lin, x) + self.offset
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = 2.0 * linalg::dot(self.quad.row(i), x) + self.lin[i];
        }
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn separable_curvature(&self) -> Option<Vec<f64>> {
        self.quad.is_diagonal().then(|| self.quad.diagonal())
    }
}

/// `{x : lower <= x <= upper}`
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dim("box bounds", lower.len(), upper.len()));
        }
        if lower.is_empty() {
            return Err(Error::InvalidInput("box must have dimension >= 1".into()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::InvalidInput(format!(
                "box bound {} has lower {} > upper {}",
                i + 1,
                lower[i],
                upper[i]
            )));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("box bounds must be finite".into()));
        }
        let set = BoxSet { lower, upper };
        if set.diameter() <= 0.0 {
            return Err(Error::InvalidInput("box has zero diameter".into()));
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    /// `‖upper − lower‖`, the largest distance between two points of the box.
    pub fn diameter(&self) -> f64 {
        linalg::distance(&self.upper, &self.lower)
    }

    /// `sup_{x in box} ‖x‖`
    pub fn max_norm(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| {
                let v = l.abs().max(u.abs());
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Euclidean projection: the componentwise clip of `x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = x.to_vec();
        self.project_in_place(&mut out)?;
        Ok(out)
    }

    pub fn project_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::dim("projection", self.dim(), x.len()));
        }
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.max(*l).min(*u);
        }
        Ok(())
    }
}

/// Free-function form of [`BoxSet::project`].
pub fn project(set: &BoxSet, x: &[f64]) -> Result<Vec<f64>> {
    set.project(x)
}

/// Constraint values `g(x)` and the Jacobian (row k is `∇g_k(x)`).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintEval {
    pub values: Vec<f64>,
    pub jacobian: Matrix,
}

pub type SharedFunction = Arc<dyn SmoothFunction>;

/// `minimize f(x) s.t. g_k(x) <= 0 (k = 1..m), x in X`.
#[derive(Debug, Clone)]
pub struct ConvexProgram {
    objective: SharedFunction,
    constraints: Vec<SharedFunction>,
    feasible_set: BoxSet,
}

impl ConvexProgram {
    pub fn new(objective: SharedFunction, constraints: Vec<SharedFunction>, feasible_set: BoxSet) -> Result<Self> {
        let n = feasible_set.dim();
        if constraints.is_empty() {
            return Err(Error::InvalidInput("program needs at least one constraint".into()));
        }
        if objective.dim() != n {
            return Err(Error::dim("objective", n, objective.dim()));
        }
        if let Some((k, g)) = constraints.iter().enumerate().find(|(_, g)| g.dim() != n) {
            return Err(Error::dim(format!("constraint {}", k + 1), n, g.dim()));
        }
        Ok(ConvexProgram {
            objective,
            constraints,
            feasible_set,
        })
    }

    pub fn dim(&self) -> usize {
        self.feasible_set.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &dyn SmoothFunction {
        self.objective.as_ref()
    }

    pub fn constraints(&self) -> &[SharedFunction] {
        &self.constraints
    }

    pub fn feasible_set(&self) -> &BoxSet {
        &self.feasible_set
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::dim("point", self.dim(), x.len()));
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        finite(self.objective.value(x), "objective value")
    }

    pub fn objective_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let g = self.objective.gradient(x);
        finite_slice(&g, "objective gradient")?;
        Ok(g)
    }

    pub fn constraint_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.num_constraints()];
        self.constraint_values_into(x, &mut out)?;
        Ok(out)
    }

    pub fn constraint_values_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_dim(x)?;
        for (o, g) in out.iter_mut().zip(&self.constraints) {
            *o = g.value(x);
        }
        finite_slice(out, "constraint value")
    }

    /// All constraint values and gradients at `x` in one call.
    pub fn evaluate_constraints(&self, x: &[f64]) -> Result<ConstraintEval> {
        let values = self.constraint_values(x)?;
        let n = self.dim();
        let mut jac = Vec::with_capacity(n * self.num_constraints());
        let mut row = vec![0.0; n];
        for g in &self.constraints {
            g.gradient_into(x, &mut row);
            jac.extend_from_slice(&row);
        }
        finite_slice(&jac, "constraint gradient")?;
        Ok(ConstraintEval {
            values,
            jacobian: Matrix::from_row_major(self.num_constraints(), n, jac)?,
        })
    }

    /// Largest constraint value, `max_k g_k(x)`.
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        Ok(self.constraint_values(x)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Free-function form of [`ConvexProgram::evaluate_constraints`].
pub fn evaluate_constraints(program: &ConvexProgram, x: &[f64]) -> Result<ConstraintEval> {
    program.evaluate_constraints(x)
}

pub(crate) fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericalFailure(format!("non-finite {what}: {v}")))
    }
}

pub(crate) fn finite_slice(v: &[f64], what: &str) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::NumericalFailure(format!(
            "non-finite {what} at index {}: {}",
            i + 1,
            v[i]
        ))),
    }
}

/// Maximum over coordinates of `|analytic − fd| / (1 + |analytic|)`, where
/// `fd` is the central difference with step `1e-6·(1 + ‖x‖∞)`.
///
/// `x` should sit far enough inside the box that `x ± h e_i` stays feasible.
pub fn check_gradient(function: &dyn SmoothFunction, x: &[f64]) -> f64 {
    let h = 1e-6 * (1.0 + linalg::norm_inf(x));
    let analytic = function.gradient(x);
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = function.value(&probe);
        probe[i] = x[i] - h;
        let down = function.value(&probe);
        probe[i] = x[i];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((analytic[i] - fd).abs() / (1.0 + analytic[i].abs()));
    }
    worst
}

/// Constants that drive step-size selection and the convergence bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsPack {
    /// Smoothness modulus of the objective.
    pub objective_smoothness: f64,
    /// Per-constraint smoothness moduli.
    pub constraint_smoothness: Vec<f64>,
    /// Lipschitz modulus of the stacked constraint map `g`.
    pub lipschitz: f64,
    /// Bound on `‖g(x)‖` over the box.
    pub constraint_bound: f64,
    /// Bound on `‖x − y‖` over the box.
    pub diameter: f64,
    /// Upper bound on the norm of a Lagrange multiplier vector, if known.
    pub lambda_bound: Option<f64>,
}

impl ConstantsPack {
    pub fn new(
        objective_smoothness: f64,
        constraint_smoothness: Vec<f64>,
        lipschitz: f64,
        constraint_bound: f64,
        diameter: f64,
    ) -> Result<Self> {
        let all = [objective_smoothness, lipschitz, constraint_bound, diameter];
        if all
            .iter()
            .chain(&constraint_smoothness)
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::InvalidInput("constants must be finite and nonnegative".into()));
        }
        Ok(ConstantsPack {
            objective_smoothness,
            constraint_smoothness,
            lipschitz,
            constraint_bound,
            diameter,
            lambda_bound: None,
        })
    }

    pub fn with_lambda_bound(mut self, bound: f64) -> Self {
        self.lambda_bound = Some(bound);
        self
    }

    /// `‖L_g‖`
    pub fn constraint_smoothness_norm(&self) -> f64 {
        linalg::norm(&self.constraint_smoothness)
    }

    /// `D = β² + L_f + 2 λ̄ ‖L_g‖ + 2 C ‖L_g‖`.
    ///
    /// With all-linear constraints the multiplier term vanishes and no
    /// multiplier bound is required.
    pub fn drift_constant(&self) -> Result<f64> {
        let lg = self.constraint_smoothness_norm();
        let base = self.lipschitz * self.lipschitz + self.objective_smoothness;
        if lg == 0.0 {
            return Ok(base);
        }
        let lambda = self
            .lambda_bound
            .ok_or_else(|| Error::Config("a multiplier bound is required when constraints are curved".into()))?;
        Ok(base + 2.0 * lambda * lg + 2.0 * self.constraint_bound * lg)
    }

    /// Largest admissible step, `1 / (‖L_g‖ R + √D)²`, which is `1 / (β² + L_f)`
    /// when every constraint is linear.
    pub fn gamma_max(&self) -> Result<f64> {
        let d = self.drift_constant()?;
        let lg = self.constraint_smoothness_norm();
        let gamma = if lg == 0.0 {
            1.0 / d
        } else {
            let s = lg * self.diameter + d.sqrt();
            1.0 / (s * s)
        };
        if gamma.is_finite() && gamma > 0.0 {
            Ok(gamma)
        } else {
            Err(Error::Config(format!(
                "no finite step size for these constants (D = {d})"
            )))
        }
    }

    /// `2 λ̄ + R/√γ + C`, the bound on the queue norm for admissible `γ`.
    pub fn queue_cap(&self, gamma: f64) -> Option<f64> {
        self.lambda_bound
            .map(|l| 2.0 * l + self.diameter / gamma.sqrt() + self.constraint_bound)
    }
}
