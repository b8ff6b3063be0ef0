//! Small dense vectors and matrices.
//!
//! Everything here is sized for desk-scale programs (a handful to a few
//! hundred variables), so plain row-major storage is enough.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from a list of rows. All rows must have `cols` entries.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::dim(format!("matrix row {}", i + 1), cols, row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("matrix data", rows * cols, data.len()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `out = self * x`
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `selfᵀ * y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    /// `xᵀ self x` for a square matrix.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| x[i] * dot(self.row(i), x)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * (1.0 + self[(i, j)].abs())))
    }

    pub fn is_diagonal(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)] == 0.0))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&a| a == 0.0)
    }

    /// Smallest eigenvalue of a symmetric matrix.
    pub fn min_symmetric_eigenvalue(&self) -> f64 {
        if self.rows == 0 {
            return 0.0;
        }
        let m = nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data);
        nalgebra::SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Spectral norm estimate by power iteration on `selfᵀ self`.
    ///
    /// Starts from the all-ones vector so the result is reproducible.
    pub fn spectral_norm(&self, max_iter: usize, tol: f64) -> f64 {
        if self.rows == 0 || self.cols == 0 || self.is_zero() {
            return 0.0;
        }
        let mut v = vec![1.0 / (self.cols as f64).sqrt(); self.cols];
        let mut sigma = 0.0;
        for _ in 0..max_iter {
            let w = self.tr_mul_vec(&self.mul_vec(&v));
            let nw = norm(&w);
            if nw == 0.0 {
                // start vector orthogonal to the top singular space; fall back
                return self.frobenius_norm();
            }
            let next = nw.sqrt();
            v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi = wi / nw);
            if (next - sigma).abs() <= tol * next.max(1.0) {
                sigma = next;
                break;
            }
            sigma = next;
        }
        sigma
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Solves the square system `m x = rhs` by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot falls below `pivot_tol` in magnitude.
pub fn solve_dense(m: &Matrix, rhs: &[f64], pivot_tol: f64) -> Option<Vec<f64>> {
    let n = m.rows();
    debug_assert!(m.is_square());
    let mut a = m.data.clone();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let (piv, max) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if max < pivot_tol {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let p = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / p;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= factor * a[col * n + j];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i * n + j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mat_vec_products() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]], 2).unwrap();
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![3.0, 7.0, 11.0]);
        assert_eq!(a.tr_mul_vec(&[1.0, 0.0, 1.0]), vec![6.0, 8.0]);
        assert_eq!(a.frobenius_norm(), 91f64.sqrt());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]], 2).unwrap_err();
        assert!(err.to_string().contains("row 2"));
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let mut d = Matrix::zeros(3, 3);
        d[(0, 0)] = 1.0;
        d[(1, 1)] = -7.0;
        d[(2, 2)] = 2.0;
        assert!((d.spectral_norm(200, 1e-14) - 7.0).abs() < 1e-9);
        assert!(d.spectral_norm(50, 1e-10) <= d.frobenius_norm());
    }

    #[test]
    fn eigen_and_symmetry() {
        let p = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]], 2).unwrap();
        assert!(p.is_symmetric(0.0));
        assert!(p.min_symmetric_eigenvalue().abs() < 1e-12);
        let q = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 1.0]], 2).unwrap();
        assert!(!q.is_symmetric(1e-12));
    }

    #[test]
    fn dense_solve_and_singular_detection() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]], 2).unwrap();
        let x = solve_dense(&a, &[3.0, 5.0], 1e-10).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]], 2).unwrap();
        assert!(solve_dense(&s, &[1.0, 2.0], 1e-10).is_none());
    }
}
