//! Dense symmetric matrices stored as their upper triangle.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{GeoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymMatrix {
    n: usize,
    /// Upper triangle, row-major: (0,0), (0,1), ..., (0,n-1), (1,1), ...
    entries: Vec<f64>,
}

#[inline]
fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Builds the matrix from `f(i, j)` evaluated on `i <= j`.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut entries = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                entries.push(f(i, j));
            }
        }
        Self { n, entries }
    }

    /// `scale * v v^T`
    pub fn outer(v: &[f64], scale: f64) -> Self {
        Self::from_fn(v.len(), |i, j| scale * v[i] * v[j])
    }

    /// Symmetrizes a dense row-major matrix by averaging `(i,j)` and `(j,i)`.
    pub fn from_dense(n: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != n * n {
            return Err(GeoError::DimensionMismatch {
                expected: n * n,
                found: rows.len(),
            });
        }
        Ok(Self::from_fn(n, |i, j| {
            0.5 * (rows[i * n + j] + rows[j * n + i])
        }))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[upper_index(self.n, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = upper_index(self.n, i, j);
        self.entries[k] = value;
    }

    pub fn upper(&self) -> &[f64] {
        &self.entries
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.get(i, j);
            }
        }
        out
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `v^T M v`
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    pub fn map<F: Fn(usize, usize, f64) -> f64>(&self, f: F) -> Self {
        Self::from_fn(self.n, |i, j| f(i, j, self.get(i, j)))
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        assert_eq!(self.n, other.n);
        self.map(|i, j, v| v + other.get(i, j))
    }

    /// Largest entrywise difference scaled by `max(1, max|other|)`.
    pub fn scaled_diff(&self, reference: &SymMatrix) -> f64 {
        crate::tolerance::max_scaled_diff(&self.entries, &reference.entries)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_nalgebra())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Number of eigenvalues with `|lambda| > tol * max|lambda|`.
    pub fn rank(&self, tol: f64) -> usize {
        rank(self, tol)
    }

    pub fn determinant(&self) -> f64 {
        match self.n {
            0 => 1.0,
            1 => self.get(0, 0),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(0, 1),
            _ => self.to_nalgebra().lu().determinant(),
        }
    }
}

/// Numerical rank with a tolerance relative to the largest `|eigenvalue|`.
pub fn rank(m: &SymMatrix, tol: f64) -> usize {
    let ev = m.eigenvalues();
    let top = ev.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
    if top == 0.0 {
        return 0;
    }
    ev.iter().filter(|e| e.abs() > tol * top).count()
}

/// Inverse of a 2x2 symmetric matrix by the adjugate formula.
pub fn inverse_2x2(m: &SymMatrix) -> Result<SymMatrix> {
    assert_eq!(m.dim(), 2);
    let det = m.determinant();
    let scale = m.max_abs();
    if det.abs() <= 1e-12 * scale * scale || !det.is_finite() {
        return Err(GeoError::SingularMetric {
            what: "det",
            value: det,
        });
    }
    Ok(SymMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => m.get(1, 1) / det,
        (1, 1) => m.get(0, 0) / det,
        _ => -m.get(0, 1) / det,
    }))
}
