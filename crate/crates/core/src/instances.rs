//! LP-over-box and QP-over-box problem families.
//!
//! Builders return the oracle form of the program together with the
//! constants needed for step-size selection. Matrix norms default to the
//! Frobenius norm, which upper-bounds the spectral norm and therefore only
//! ever shrinks the admissible step.

use std::sync::Arc;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::problem::{Affine, BoxSet, ConstantsPack, ConvexProgram, Quadratic, SharedFunction};
use crate::solvers::multiplier_bound;

/// `min cᵀx s.t. Ax <= b, lower <= x <= upper`
#[derive(Debug, Clone, PartialEq)]
pub struct LpSpec {
    pub c: Vec<f64>,
    pub a: Matrix,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// `min xᵀPx + cᵀx s.t. Ax <= b, xᵀQx + dᵀx <= e, lower <= x <= upper`
///
/// `A` may have zero rows; the quadratic constraint is always present.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSpec {
    pub p: Matrix,
    pub c: Vec<f64>,
    pub a: Matrix,
    pub b: Vec<f64>,
    pub q: Matrix,
    pub d: Vec<f64>,
    pub e: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Lp,
    Qp,
}

/// How matrix norms are bounded during constant derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixNorm {
    #[default]
    Frobenius,
    /// Power iteration on `MᵀM` (50 iterations, tolerance 1e-10).
    Spectral,
}

impl MatrixNorm {
    fn of(self, m: &Matrix) -> f64 {
        match self {
            MatrixNorm::Frobenius => m.frobenius_norm(),
            // power iteration converges from below; never report more than ‖M‖_F
            MatrixNorm::Spectral => m.spectral_norm(50, 1e-10).min(m.frobenius_norm()),
        }
    }
}

const PSD_TOL: f64 = 1e-10;

fn check_box(lower: &[f64], upper: &[f64], n: usize) -> Result<BoxSet> {
    if lower.len() != n {
        return Err(Error::dim("lower bound", n, lower.len()));
    }
    if upper.len() != n {
        return Err(Error::dim("upper bound", n, upper.len()));
    }
    BoxSet::new(lower.to_vec(), upper.to_vec())
}

fn check_linear_rows(a: &Matrix, b: &[f64], n: usize) -> Result<()> {
    if a.cols() != n && a.rows() > 0 {
        return Err(Error::dim("constraint matrix columns", n, a.cols()));
    }
    if a.rows() != b.len() {
        return Err(Error::dim("right-hand side b", a.rows(), b.len()));
    }
    Ok(())
}

fn check_psd(m: &Matrix, name: &str, n: usize) -> Result<()> {
    if m.rows() != n || m.cols() != n {
        return Err(Error::dim(format!("matrix {name}"), n, m.rows()));
    }
    if !m.is_symmetric(1e-12) {
        return Err(Error::InvalidInput(format!("matrix {name} is not symmetric")));
    }
    let min_eig = m.min_symmetric_eigenvalue();
    if min_eig < -PSD_TOL {
        return Err(Error::InvalidInput(format!(
            "matrix {name} is not positive semidefinite (min eigenvalue {min_eig:e})"
        )));
    }
    Ok(())
}

/// `min_{x in box} cᵀx`, attained at a vertex.
fn linear_min_over_box(c: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    c.iter()
        .zip(lower.iter().zip(upper))
        .map(|(ci, (l, u))| (ci * l).min(ci * u))
        .sum()
}

fn linear_rows(a: &Matrix, b: &[f64]) -> Vec<SharedFunction> {
    (0..a.rows())
        .map(|k| Arc::new(Affine::new(a.row(k).to_vec(), -b[k])) as SharedFunction)
        .collect()
}

impl LpSpec {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::InvalidInput("c must have at least one entry".into()));
        }
        if self.a.rows() == 0 {
            return Err(Error::InvalidInput("LP needs at least one row in A".into()));
        }
        check_linear_rows(&self.a, &self.b, n)?;
        check_box(&self.lower, &self.upper, n)?;
        Ok(())
    }

    pub fn feasible_set(&self) -> Result<BoxSet> {
        check_box(&self.lower, &self.upper, self.dim())
    }

    /// Exact value of `min_{x in box} cᵀx`, i.e. the dual function at λ = 0.
    pub fn objective_lower_bound(&self) -> f64 {
        linear_min_over_box(&self.c, &self.lower, &self.upper)
    }
}

impl QpSpec {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::InvalidInput("c must have at least one entry".into()));
        }
        check_psd(&self.p, "P", n)?;
        check_psd(&self.q, "Q", n)?;
        check_linear_rows(&self.a, &self.b, n)?;
        if self.d.len() != n {
            return Err(Error::dim("vector d", n, self.d.len()));
        }
        if !self.e.is_finite() {
            return Err(Error::InvalidInput("e must be finite".into()));
        }
        check_box(&self.lower, &self.upper, n)?;
        Ok(())
    }

    pub fn feasible_set(&self) -> Result<BoxSet> {
        check_box(&self.lower, &self.upper, self.dim())
    }

    /// Lower bound on `min_{x in box} xᵀPx + cᵀx`, using `xᵀPx >= 0`.
    pub fn objective_lower_bound(&self) -> f64 {
        linear_min_over_box(&self.c, &self.lower, &self.upper)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.p.quad_form(x) + linalg::dot(&self.c, x)
    }

    /// Constraint values in program order: linear rows, then the quadratic.
    pub fn constraint_values(&self, x: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = self.a.mul_vec(x).iter().zip(&self.b).map(|(ax, b)| ax - b).collect();
        g.push(self.q.quad_form(x) + linalg::dot(&self.d, x) - self.e);
        g
    }
}

/// Either problem family.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Lp(LpSpec),
    Qp(QpSpec),
}

impl ProblemSpec {
    pub fn family(&self) -> Family {
        match self {
            ProblemSpec::Lp(_) => Family::Lp,
            ProblemSpec::Qp(_) => Family::Qp,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProblemSpec::Lp(s) => s.dim(),
            ProblemSpec::Qp(s) => s.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProblemSpec::Lp(s) => s.validate(),
            ProblemSpec::Qp(s) => s.validate(),
        }
    }

    pub fn lower(&self) -> &[f64] {
        match self {
            ProblemSpec::Lp(s) => &s.lower,
            ProblemSpec::Qp(s) => &s.lower,
        }
    }

    pub fn upper(&self) -> &[f64] {
        match self {
            ProblemSpec::Lp(s) => &s.upper,
            ProblemSpec::Qp(s) => &s.upper,
        }
    }

    pub fn build(&self) -> Result<(ConvexProgram, ConstantsPack)> {
        self.build_with(MatrixNorm::default())
    }

    pub fn build_with(&self, norm: MatrixNorm) -> Result<(ConvexProgram, ConstantsPack)> {
        match self {
            ProblemSpec::Lp(s) => build_lp_with(s, norm),
            ProblemSpec::Qp(s) => build_qp_with(s, norm),
        }
    }

    pub fn objective_lower_bound(&self) -> f64 {
        match self {
            ProblemSpec::Lp(s) => s.objective_lower_bound(),
            ProblemSpec::Qp(s) => s.objective_lower_bound(),
        }
    }

    /// Starting point used by the reproduction runs: the upper corner for
    /// LPs and the lower corner for QPs.
    pub fn default_start(&self) -> Vec<f64> {
        match self {
            ProblemSpec::Lp(s) => s.upper.clone(),
            ProblemSpec::Qp(s) => s.lower.clone(),
        }
    }

    /// Multiplier bound from the first strictly feasible point among the
    /// lower corner, the box center and the upper corner.
    ///
    /// Returns `None` if none of them is strictly feasible.
    pub fn slater_multiplier_bound(&self, program: &ConvexProgram) -> Option<f64> {
        let set = program.feasible_set();
        [set.lower().to_vec(), set.center(), set.upper().to_vec()]
            .into_iter()
            .find_map(|x| multiplier_bound(program, &x, self.objective_lower_bound()).ok())
    }
}

pub fn build_lp(spec: &LpSpec) -> Result<(ConvexProgram, ConstantsPack)> {
    build_lp_with(spec, MatrixNorm::default())
}

/// `f = cᵀx`, `g = Ax − b`; `L_f = 0`, `L_g = 0`, `β = ‖A‖`,
/// `R = ‖upper − lower‖`, `C = ‖A‖ r_X + ‖b‖` with `r_X = sup_box ‖x‖`.
pub fn build_lp_with(spec: &LpSpec, norm: MatrixNorm) -> Result<(ConvexProgram, ConstantsPack)> {
    spec.validate()?;
    let set = spec.feasible_set()?;
    let objective: SharedFunction = Arc::new(Affine::new(spec.c.clone(), 0.0));
    let a_norm = norm.of(&spec.a);
    let constants = ConstantsPack::new(
        0.0,
        vec![0.0; spec.a.rows()],
        a_norm,
        a_norm * set.max_norm() + linalg::norm(&spec.b),
        set.diameter(),
    )?;
    let program = ConvexProgram::new(objective, linear_rows(&spec.a, &spec.b), set)?;
    Ok((program, constants))
}

pub fn build_qp(spec: &QpSpec) -> Result<(ConvexProgram, ConstantsPack)> {
    build_qp_with(spec, MatrixNorm::default())
}

/// With `s = ‖lower‖ + ‖upper‖`:
/// `R = s`, `β = ‖A‖ + 2‖Q‖s + ‖d‖`,
/// `C = ‖A‖s + ‖b‖ + ‖Q‖s² + ‖d‖s + |e|`,
/// `L_f = 2‖P‖` and `2‖Q‖` for the quadratic constraint (the Hessian of
/// `xᵀMx` is `2M`).
///
/// The multiplier bound is left unset; attach one with
/// [`ConstantsPack::with_lambda_bound`].
pub fn build_qp_with(spec: &QpSpec, norm: MatrixNorm) -> Result<(ConvexProgram, ConstantsPack)> {
    spec.validate()?;
    let set = spec.feasible_set()?;
    let s = linalg::norm(&spec.lower) + linalg::norm(&spec.upper);
    let a_norm = if spec.a.rows() == 0 { 0.0 } else { norm.of(&spec.a) };
    let p_norm = norm.of(&spec.p);
    let q_norm = norm.of(&spec.q);
    let d_norm = linalg::norm(&spec.d);

    let objective: SharedFunction = Arc::new(Quadratic::new(spec.p.clone(), spec.c.clone(), 0.0, 2.0 * p_norm)?);
    let mut constraints = linear_rows(&spec.a, &spec.b);
    constraints.push(Arc::new(Quadratic::new(
        spec.q.clone(),
        spec.d.clone(),
        -spec.e,
        2.0 * q_norm,
    )?));

    let mut smooth_g = vec![0.0; spec.a.rows()];
    smooth_g.push(2.0 * q_norm);
    let constants = ConstantsPack::new(
        2.0 * p_norm,
        smooth_g,
        a_norm + 2.0 * q_norm * s + d_norm,
        a_norm * s + linalg::norm(&spec.b) + q_norm * s * s + d_norm * s + spec.e.abs(),
        s,
    )?;
    let program = ConvexProgram::new(objective, constraints, set)?;
    Ok((program, constants))
}

/// The four-variable, three-row LP used in the LP reproduction run.
///
/// Optimum `x* = [0.4, 4/3, 0, 0]`, `f* = −86/15 ≈ −5.73333`.
pub fn example_lp_instance() -> LpSpec {
    LpSpec {
        c: vec![-1.0, -4.0, -3.0, -2.0],
        a: Matrix::from_rows(
            &[
                vec![6.0, 1.0, 5.0, 1.0],
                vec![0.0, 3.0, 6.0, 6.0],
                vec![5.0, 6.0, 4.0, 6.0],
            ],
            4,
        )
        .expect("static data"),
        b: vec![6.0, 4.0, 10.0],
        lower: vec![0.0; 4],
        upper: vec![10.0; 4],
    }
}

/// The two-variable QP used in the QP reproduction run.
///
/// Optimum `x* = [0.5, 0]`, `f* = −3.75`.
pub fn example_qp_instance() -> QpSpec {
    QpSpec {
        p: Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]], 2).expect("static data"),
        c: vec![-8.0, -2.0],
        a: Matrix::from_rows(&[vec![3.0, 1.0], vec![2.0, 2.0]], 2).expect("static data"),
        b: vec![4.0, 1.0],
        q: Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]], 2).expect("static data"),
        d: vec![-1.0, 2.0],
        e: 5.0,
        lower: vec![0.0; 2],
        upper: vec![5.0; 2],
    }
}

/// Multiplier bound quoted for the QP instance.
pub const EXAMPLE_QP_LAMBDA_BOUND: f64 = 50.0;

/// Deterministic uniform draws on top of SplitMix64.
///
/// A draw in `[lo, hi)` is `lo + (hi − lo)·u` with `u = (next_u64 >> 11)·2⁻⁵³`,
/// so instances are reproducible from the seed alone.
struct Draws(SplitMix64);

impl Draws {
    fn new(seed: u64) -> Self {
        Draws(SplitMix64::seed_from_u64(seed))
    }

    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    fn vec(&mut self, len: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..len).map(|_| self.uniform(lo, hi)).collect()
    }

    fn matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
        Matrix::from_row_major(rows, cols, self.vec(rows * cols, lo, hi)).expect("sized")
    }
}

/// `MᵀM`, symmetric positive semidefinite by construction.
fn gram(m: &Matrix) -> Matrix {
    let n = m.cols();
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = (0..m.rows()).map(|r| m[(r, i)] * m[(r, j)]).sum();
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Seeded random instance with `n` variables and `m` constraints.
///
/// Box: `lower_i ∈ [−5, 0)`, `upper_i = lower_i + [1, 5)`. Objective and
/// constraint coefficients are drawn from `[−5, 5)`. Right-hand sides are
/// set to `(A x_c)_k + [0.5, 5)` where `x_c` is the box center, so `x_c` is a
/// Slater point. For QPs, `P = MᵀM` and `Q = NᵀN` with `M, N` drawn from
/// `[−1, 1)` (entries stay within `[−5, 5]` for `n <= 5`); the program has
/// `m − 1` linear rows plus the quadratic constraint.
pub fn random_instance(family: Family, n: usize, m: usize, seed: u64) -> Result<ProblemSpec> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("random instances need n >= 1 and m >= 1".into()));
    }
    let mut rng = Draws::new(seed);
    let lower = rng.vec(n, -5.0, 0.0);
    let upper: Vec<f64> = lower.iter().map(|l| l + rng.uniform(1.0, 5.0)).collect();
    let center: Vec<f64> = lower.iter().zip(&upper).map(|(l, u)| 0.5 * (l + u)).collect();
    let c = rng.vec(n, -5.0, 5.0);
    let rows = match family {
        Family::Lp => m,
        Family::Qp => m - 1,
    };
    let a = rng.matrix(rows, n, -5.0, 5.0);
    let b: Vec<f64> = a
        .mul_vec(&center)
        .into_iter()
        .map(|ax| ax + rng.uniform(0.5, 5.0))
        .collect();
    let spec = match family {
        Family::Lp => ProblemSpec::Lp(LpSpec { c, a, b, lower, upper }),
        Family::Qp => {
            let p = gram(&rng.matrix(n, n, -1.0, 1.0));
            let q = gram(&rng.matrix(n, n, -1.0, 1.0));
            let d = rng.vec(n, -5.0, 5.0);
            let e = q.quad_form(&center) + linalg::dot(&d, &center) + rng.uniform(0.5, 5.0);
            ProblemSpec::Qp(QpSpec {
                p,
                c,
                a,
                b,
                q,
                d,
                e,
                lower,
                upper,
            })
        }
    };
    spec.validate()?;
    Ok(spec)
}
