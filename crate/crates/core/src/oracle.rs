//! Reference solvers for small instances, independent of the iterative
//! methods: exhaustive vertex enumeration for LPs and a feasible grid search
//! with local polishing for low-dimensional QPs.

use crate::error::{Error, Result};
use crate::instances::{LpSpec, QpSpec};
use crate::linalg::{self, Matrix};
use crate::sweep;

/// Pivot magnitude below which an active set is treated as singular.
pub const PIVOT_TOL: f64 = 1e-10;
/// Largest constraint violation accepted for a candidate point.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Largest `n + rows` handled by vertex enumeration.
pub const VERTEX_BUDGET: usize = 20;
/// Largest dimension handled by the grid search.
pub const GRID_MAX_DIM: usize = 3;
pub const GRID_MIN_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    VertexEnumeration,
    GridPolish,
}

impl OracleMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleMethod::VertexEnumeration => "vertex-enumeration",
            OracleMethod::GridPolish => "grid-polish",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub method: OracleMethod,
    /// Largest constraint violation at `x_star` (0 when strictly feasible).
    pub certificate: f64,
}

/// Every `k`-subset of `0..n`, in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn lp_violation(spec: &LpSpec, x: &[f64]) -> f64 {
    let rows = spec
        .a
        .mul_vec(x)
        .iter()
        .zip(&spec.b)
        .map(|(ax, b)| ax - b)
        .fold(0.0, f64::max);
    let bounds = x
        .iter()
        .zip(spec.lower.iter().zip(&spec.upper))
        .map(|(xi, (l, u))| (l - xi).max(xi - u))
        .fold(0.0, f64::max);
    rows.max(bounds)
}

/// Basic points whose `k` free coordinates are pinned by the rows in `rows`;
/// the other coordinates sit on a box face.
fn basic_points_for_rows(spec: &LpSpec, rows: &[usize]) -> Vec<Vec<f64>> {
    let n = spec.dim();
    let k = rows.len();
    let mut found = Vec::new();
    for free in subsets(n, k) {
        let fixed: Vec<usize> = (0..n).filter(|i| !free.contains(i)).collect();
        // a coordinate with equal bounds has a single face
        let choices: Vec<usize> = fixed
            .iter()
            .map(|&i| if spec.lower[i] == spec.upper[i] { 1 } else { 2 })
            .collect();
        let total: usize = choices.iter().product();
        for code in 0..total {
            let mut x = vec![0.0; n];
            let mut c = code;
            for (&i, &nc) in fixed.iter().zip(&choices) {
                x[i] = if c % nc == 0 { spec.lower[i] } else { spec.upper[i] };
                c /= nc;
            }
            if k > 0 {
                let mut sys = Matrix::zeros(k, k);
                let mut rhs = vec![0.0; k];
                for (r, &row) in rows.iter().enumerate() {
                    let a = spec.a.row(row);
                    for (j, &col) in free.iter().enumerate() {
                        sys[(r, j)] = a[col];
                    }
                    rhs[r] = spec.b[row] - fixed.iter().map(|&i| a[i] * x[i]).sum::<f64>();
                }
                let Some(sol) = linalg::solve_dense(&sys, &rhs, PIVOT_TOL) else {
                    continue;
                };
                for (&col, v) in free.iter().zip(sol) {
                    x[col] = v;
                }
            }
            if lp_violation(spec, &x) <= FEASIBILITY_TOL {
                for (xi, (l, u)) in x.iter_mut().zip(spec.lower.iter().zip(&spec.upper)) {
                    *xi = xi.clamp(*l, *u);
                }
                found.push(x);
            }
        }
    }
    found
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Solves a small LP exactly by enumerating its basic points.
///
/// A basic point has `n` active constraints drawn from the rows of `A` and
/// the box faces. Opposite faces of one coordinate never form a nonsingular
/// system, so each coordinate is either free or on one face, and the free
/// coordinates are fixed by an equal number of rows. Among optimal points
/// (values within `1e-12` relative of the minimum) the lexicographically
/// smallest is returned.
pub fn lp_vertex_solve(spec: &LpSpec) -> Result<ReferenceSolution> {
    spec.validate()?;
    let n = spec.dim();
    let m = spec.a.rows();
    if n + m > VERTEX_BUDGET {
        return Err(Error::InvalidInput(format!(
            "vertex enumeration budget exceeded: n + rows = {} > {VERTEX_BUDGET}",
            n + m
        )));
    }
    let row_sets: Vec<Vec<usize>> = (0..=n.min(m)).flat_map(|k| subsets(m, k)).collect();
    let candidates: Vec<Vec<f64>> = sweep::map(&row_sets, |rows| basic_points_for_rows(spec, rows))
        .into_iter()
        .flatten()
        .collect();
    if candidates.is_empty() {
        return Err(Error::Infeasible("no feasible basic point".into()));
    }
    let values: Vec<f64> = candidates.iter().map(|x| linalg::dot(&spec.c, x)).collect();
    let f_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tie = 1e-12 * (1.0 + f_min.abs());
    let mut best: Option<usize> = None;
    for (i, (x, f)) in candidates.iter().zip(&values).enumerate() {
        if *f <= f_min + tie && best.is_none_or(|b| lex_less(x, &candidates[b])) {
            best = Some(i);
        }
    }
    let i = best.expect("nonempty");
    let x_star = candidates[i].clone();
    Ok(ReferenceSolution {
        certificate: lp_violation(spec, &x_star),
        f_star: values[i],
        x_star,
        method: OracleMethod::VertexEnumeration,
    })
}

fn qp_feasible(spec: &QpSpec, x: &[f64]) -> bool {
    spec.constraint_values(x).iter().all(|g| *g <= 0.0)
}

fn qp_violation(spec: &QpSpec, x: &[f64]) -> f64 {
    spec.constraint_values(x).into_iter().fold(0.0, f64::max)
}

fn grid_axis(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let h = (hi - lo) / (points - 1) as f64;
    (0..points).map(move |i| if i + 1 == points { hi } else { lo + h * i as f64 })
}

/// Best feasible point of a tensor grid; `None` if no grid point is feasible.
fn grid_best(spec: &QpSpec, lower: &[f64], upper: &[f64], points: usize) -> Option<(f64, Vec<f64>)> {
    let n = spec.dim();
    let first: Vec<f64> = grid_axis(lower[0], upper[0], points).collect();
    let per_slab = sweep::map(&first, |&x0| {
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut idx = vec![0usize; n - 1];
        let axes: Vec<Vec<f64>> = (1..n)
            .map(|i| grid_axis(lower[i], upper[i], points).collect())
            .collect();
        loop {
            let mut x = Vec::with_capacity(n);
            x.push(x0);
            x.extend(idx.iter().zip(&axes).map(|(&j, a)| a[j]));
            if qp_feasible(spec, &x) {
                let f = spec.objective_value(&x);
                if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                    best = Some((f, x));
                }
            }
            // odometer over the remaining axes
            let mut d = 0;
            while d < n - 1 {
                idx[d] += 1;
                if idx[d] < points {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == n - 1 {
                break;
            }
        }
        best
    });
    per_slab
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<(f64, Vec<f64>)>, cand| match acc {
            Some(a) if a.0 <= cand.0 => Some(a),
            _ => Some(cand),
        })
}

/// Projected gradient on `f` that never leaves the feasible set: a step that
/// would break a constraint is halved until it does not.
fn polish_projected_gradient(spec: &QpSpec, mut x: Vec<f64>, mut f: f64, steps: usize) -> (f64, Vec<f64>) {
    let lip = 2.0 * spec.p.frobenius_norm();
    let base = if lip > 0.0 { 1.0 / lip } else { 1.0 };
    for _ in 0..steps {
        let grad: Vec<f64> = spec
            .p
            .mul_vec(&x)
            .iter()
            .zip(&spec.c)
            .map(|(px, c)| 2.0 * px + c)
            .collect();
        let mut s = base;
        let mut moved = false;
        for _ in 0..60 {
            let y: Vec<f64> = x
                .iter()
                .zip(&grad)
                .zip(spec.lower.iter().zip(&spec.upper))
                .map(|((xi, gi), (l, u))| (xi - s * gi).clamp(*l, *u))
                .collect();
            if qp_feasible(spec, &y) {
                let fy = spec.objective_value(&y);
                if fy < f {
                    x = y;
                    f = fy;
                    moved = true;
                }
                break;
            }
            s *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (f, x)
}

/// Shrinking local grids around the incumbent; corners where a constraint
/// meets a box face stall plain projected gradient but not this search.
fn polish_zoom(spec: &QpSpec, mut x: Vec<f64>, mut f: f64, mut h: f64, levels: usize) -> (f64, Vec<f64>) {
    const HALF_WIDTH: f64 = 5.0;
    const POINTS: usize = 21;
    for _ in 0..levels {
        let lo: Vec<f64> = x
            .iter()
            .zip(&spec.lower)
            .map(|(xi, l)| (xi - HALF_WIDTH * h).max(*l))
            .collect();
        let hi: Vec<f64> = x
            .iter()
            .zip(&spec.upper)
            .map(|(xi, u)| (xi + HALF_WIDTH * h).min(*u))
            .collect();
        if lo.iter().zip(&hi).all(|(a, b)| a < b) {
            if let Some((fz, xz)) = grid_best(spec, &lo, &hi, POINTS) {
                if fz < f {
                    f = fz;
                    x = xz;
                }
            }
        }
        h *= 0.5;
    }
    (f, x)
}

/// Reference optimum of a QP with at most three variables.
///
/// Scans a tensor grid with `points` per axis for the best strictly
/// feasible point, refines it with feasibility-preserving projected gradient
/// and then with a sequence of shrinking local grids.
pub fn qp_grid_polish(spec: &QpSpec, points: usize) -> Result<ReferenceSolution> {
    spec.validate()?;
    let n = spec.dim();
    if n > GRID_MAX_DIM {
        return Err(Error::InvalidInput(format!(
            "grid search handles at most {GRID_MAX_DIM} variables, got {n}"
        )));
    }
    if points < GRID_MIN_POINTS {
        return Err(Error::InvalidInput(format!(
            "grid needs at least {GRID_MIN_POINTS} points per axis, got {points}"
        )));
    }
    let (f, x) = grid_best(spec, &spec.lower, &spec.upper, points)
        .ok_or_else(|| Error::Infeasible("no feasible grid point".into()))?;
    let (f, x) = polish_projected_gradient(spec, x, f, 10_000);
    let h = spec
        .lower
        .iter()
        .zip(&spec.upper)
        .map(|(l, u)| (u - l) / (points - 1) as f64)
        .fold(0.0, f64::max);
    let (f, x) = polish_zoom(spec, x, f, h, 60);
    Ok(ReferenceSolution {
        certificate: qp_violation(spec, &x),
        f_star: f,
        x_star: x,
        method: OracleMethod::GridPolish,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{example_lp_instance, example_qp_instance};

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(3, 0), vec![Vec::<usize>::new()]);
        assert!(subsets(2, 3).is_empty());
        assert_eq!(subsets(3, 3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn example_lp_optimum() {
        let sol = lp_vertex_solve(&example_lp_instance()).unwrap();
        assert!((sol.f_star + 86.0 / 15.0).abs() < 1e-12);
        let expected = [0.4, 4.0 / 3.0, 0.0, 0.0];
        for (a, b) in sol.x_star.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(sol.certificate <= 1e-9);
    }

    #[test]
    fn one_dimensional_box_face() {
        let spec = LpSpec {
            c: vec![1.0],
            a: Matrix::from_rows(&[vec![0.0]], 1).unwrap(),
            b: vec![1.0],
            lower: vec![0.0],
            upper: vec![1.0],
        };
        let sol = lp_vertex_solve(&spec).unwrap();
        assert_eq!((sol.x_star[0], sol.f_star), (0.0, 0.0));
    }

    #[test]
    fn tied_optimum_picks_lexicographically_smallest() {
        let spec = LpSpec {
            c: vec![-1.0, -1.0],
            a: Matrix::from_rows(&[vec![1.0, 1.0]], 2).unwrap(),
            b: vec![1.0],
            lower: vec![0.0; 2],
            upper: vec![1.0; 2],
        };
        let sol = lp_vertex_solve(&spec).unwrap();
        assert_eq!(sol.f_star, -1.0);
        assert_eq!(sol.x_star, vec![0.0, 1.0]);
    }

    #[test]
    fn infeasible_and_oversized_lps() {
        let spec = LpSpec {
            c: vec![1.0],
            a: Matrix::from_rows(&[vec![1.0]], 1).unwrap(),
            b: vec![-1.0],
            lower: vec![0.0],
            upper: vec![1.0],
        };
        assert!(matches!(lp_vertex_solve(&spec), Err(Error::Infeasible(_))));
        let n = 11;
        let big = LpSpec {
            c: vec![1.0; n],
            a: Matrix::zeros(10, n),
            b: vec![1.0; 10],
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        };
        assert!(lp_vertex_solve(&big).unwrap_err().to_string().contains("budget"));
    }

    #[test]
    fn example_qp_optimum() {
        let sol = qp_grid_polish(&example_qp_instance(), 200).unwrap();
        assert!((sol.f_star + 3.75).abs() < 1e-6, "{}", sol.f_star);
        assert!((sol.x_star[0] - 0.5).abs() < 1e-4 && sol.x_star[1].abs() < 1e-4);
        assert!(sol.certificate <= 1e-9);
    }

    #[test]
    fn interior_minimum_is_the_stationary_point() {
        // f = x₁² + x₂² − 2x₁ − x₂, minimum at (1, 0.5)
        let spec = QpSpec {
            p: Matrix::identity(2),
            c: vec![-2.0, -1.0],
            a: Matrix::zeros(0, 2),
            b: vec![],
            q: Matrix::zeros(2, 2),
            d: vec![1.0, 0.0],
            e: 100.0,
            lower: vec![-3.0; 2],
            upper: vec![3.0; 2],
        };
        let sol = qp_grid_polish(&spec, 50).unwrap();
        assert!((sol.x_star[0] - 1.0).abs() < 1e-6 && (sol.x_star[1] - 0.5).abs() < 1e-6);
        assert!((sol.f_star + 1.25).abs() < 1e-10);
    }

    #[test]
    fn empty_feasible_set_is_reported() {
        let mut spec = example_qp_instance();
        // xᵀQx + dᵀx <= −1000 has no solution in the box
        spec.e = -1000.0;
        assert!(matches!(qp_grid_polish(&spec, 50), Err(Error::Infeasible(_))));
        assert!(qp_grid_polish(&example_qp_instance(), 10).is_err());
    }
}
