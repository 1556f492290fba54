//! Small dense linear algebra: Gram matrices, determinants of symmetric
//! positive-semidefinite matrices, adjugates, and random orthogonal matrices.
//!
//! Everything is row-major `f64`. Sizes in this crate are tiny on the Gram side
//! (n ≤ ~12) and moderate on the feature side (D ≤ ~1024), so plain loops are
//! used throughout.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;

/// Dense row-major matrix with finite entries.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("matrix shape {rows}x{cols} is empty")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.as_ref().len() != cols) {
            return Err(Error::Dimension(format!(
                "row {i} has length {} but row 0 has length {cols}",
                r.as_ref().len()
            )));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Matrix::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_slices(&self) -> Vec<&[f64]> {
        self.data.chunks_exact(self.cols).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                let src = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Square symmetric matrix, stored in full.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Validates symmetry to 1e-12 relative to the largest entry.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {dim}x{dim} symmetric matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("symmetric matrix"));
        }
        let scale = data.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..dim {
            for j in i + 1..dim {
                if (data[i * dim + j] - data[j * dim + i]).abs() > 1e-12 * scale {
                    return Err(Error::Dimension(format!("entry ({i},{j}) breaks symmetry")));
                }
            }
        }
        Ok(SymMatrix { dim, data })
    }

    /// Builds from the upper triangle of `f`, mirrored.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        SymMatrix { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix::from_upper(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim).map(move |i| self.data[i * self.dim + i])
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Gram matrix `M Mᵀ` of the rows of `m`.
pub fn gram(m: &Matrix) -> Result<SymMatrix> {
    gram_rows(&m.row_slices())
}

/// Gram matrix of a set of equally long vectors. Only the upper triangle is
/// computed; the lower one is a copy, so the result is exactly symmetric.
pub fn gram_rows(rows: &[&[f64]]) -> Result<SymMatrix> {
    if rows.len() < 2 {
        return Err(Error::Dimension(format!(
            "a Gram matrix needs at least 2 vectors, got {}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Dimension("vectors must share a nonzero length".into()));
    }
    Ok(SymMatrix::from_upper(rows.len(), |i, j| dot(rows[i], rows[j])))
}

/// In-place lower Cholesky factor of a row-major `n×n` matrix.
/// Returns `None` when a pivot is not strictly positive.
fn cholesky_in_place(a: &mut [f64], n: usize) -> Option<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let l = d.sqrt();
        a[j * n + j] = l;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l;
        }
    }
    Some(())
}

/// Determinant of a general row-major `n×n` matrix by LU with partial
/// pivoting. The input is overwritten.
pub fn lu_det(a: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| a[x * n + c].abs().total_cmp(&a[y * n + c].abs()))
            .unwrap_or(c);
        if a[p * n + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..n {
                a.swap(c * n + k, p * n + k);
            }
            det = -det;
        }
        let pivot = a[c * n + c];
        det *= pivot;
        for r in c + 1..n {
            let f = a[r * n + c] / pivot;
            if f != 0.0 {
                for k in c + 1..n {
                    a[r * n + k] -= f * a[c * n + k];
                }
            }
        }
    }
    det
}

/// Determinant of a symmetric matrix without clamping.
///
/// Cholesky is tried first; a non-positive pivot (semidefinite or indefinite
/// input) falls back to LU with partial pivoting.
pub fn det_sym(g: &SymMatrix) -> Result<f64> {
    if g.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("symmetric matrix"));
    }
    let n = g.dim;
    let mut work = g.data.clone();
    if cholesky_in_place(&mut work, n).is_some() {
        return Ok((0..n).map(|i| work[i * n + i] * work[i * n + i]).product());
    }
    work.copy_from_slice(&g.data);
    Ok(lu_det(&mut work, n))
}

/// Determinant of a positive-semidefinite matrix, clamped to be nonnegative.
pub fn det_psd(g: &SymMatrix) -> Result<f64> {
    Ok(det_sym(g)?.max(0.0))
}

/// Relative size of the smallest Cholesky pivot below which the adjugate is
/// built from cofactors instead of `det · G⁻¹`.
const ADJUGATE_PIVOT_RATIO: f64 = 1e-10;

/// Adjugate of `g` together with its (unclamped) determinant.
///
/// Well-conditioned positive-definite input goes through a Cholesky inverse,
/// `adj = det · G⁻¹`. Anything else, including singular matrices, uses the
/// cofactor definition directly, so `adj(G) · G = det(G) · I` holds without
/// ever dividing by the determinant.
pub fn inv_or_adjugate(g: &SymMatrix) -> (SymMatrix, f64) {
    let n = g.dim;
    if n == 1 {
        return (SymMatrix::identity(1), g.data[0]);
    }
    let mut chol = g.data.clone();
    if cholesky_in_place(&mut chol, n).is_some() {
        let max_diag = g.diagonal().fold(0.0f64, f64::max);
        let min_pivot = (0..n).map(|i| chol[i * n + i] * chol[i * n + i]).fold(f64::INFINITY, f64::min);
        if min_pivot > ADJUGATE_PIVOT_RATIO * max_diag {
            let det: f64 = (0..n).map(|i| chol[i * n + i] * chol[i * n + i]).product();
            let inv = cholesky_inverse(&chol, n);
            let adj = SymMatrix::from_upper(n, |i, j| det * 0.5 * (inv[i * n + j] + inv[j * n + i]));
            return (adj, det);
        }
    }
    let mut minor = vec![0.0; (n - 1) * (n - 1)];
    let adj = SymMatrix::from_upper(n, |i, j| {
        // Cofactor C_ij; the adjugate is Cᵀ, which equals C for symmetric G.
        let mut w = 0;
        for r in (0..n).filter(|&r| r != i) {
            for c in (0..n).filter(|&c| c != j) {
                minor[w] = g.data[r * n + c];
                w += 1;
            }
        }
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * lu_det(&mut minor, n - 1)
    });
    let mut work = g.data.clone();
    (adj, lu_det(&mut work, n))
}

/// Inverse from a lower Cholesky factor stored in the lower triangle of `l`.
fn cholesky_inverse(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    let mut y = vec![0.0; n];
    for col in 0..n {
        // L y = e_col
        for i in 0..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i] * inv[k * n + col];
            }
            inv[i * n + col] = s / l[i * n + i];
        }
    }
    inv
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(Error::Dimension("solve needs a square system".into()));
    }
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i * n + c].abs().total_cmp(&m[j * n + c].abs()))
            .unwrap_or(c);
        if m[p * n + c] == 0.0 {
            return Err(Error::Dimension("singular system".into()));
        }
        if p != c {
            for k in 0..n {
                m.swap(c * n + k, p * n + k);
            }
            x.swap(c, p);
        }
        for r in c + 1..n {
            let f = m[r * n + c] / m[c * n + c];
            for k in c..n {
                m[r * n + k] -= f * m[c * n + k];
            }
            x[r] -= f * x[c];
        }
    }
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r * n + k] * x[k]).sum();
        x[r] = (x[r] - s) / m[r * n + r];
    }
    Ok(x)
}

/// Random `dim×dim` orthogonal matrix: a standard Gaussian matrix whose rows
/// are orthonormalized by two passes of modified Gram-Schmidt.
/// Deterministic in `seed`.
pub fn random_orthogonal(dim: usize, seed: u64) -> Matrix {
    assert!(dim >= 1, "orthogonal matrix needs dim >= 1");
    let mut rng = rng::stream(seed, rng::streams::ORTHOGONAL);
    loop {
        let data: Vec<f64> = (0..dim * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut q = Matrix { rows: dim, cols: dim, data };
        if orthonormalize_rows(&mut q) {
            return q;
        }
    }
}

/// Returns false if the rows were numerically dependent.
fn orthonormalize_rows(q: &mut Matrix) -> bool {
    let n = q.rows;
    for i in 0..n {
        for _pass in 0..2 {
            for j in 0..i {
                let (head, tail) = q.data.split_at_mut(i * q.cols);
                let prev = &head[j * q.cols..(j + 1) * q.cols];
                let cur = &mut tail[..q.cols];
                let p = dot(prev, cur);
                cur.iter_mut().zip(prev).for_each(|(c, v)| *c -= p * v);
            }
        }
        let row = q.row_mut(i);
        let norm = l2_norm(row);
        if norm < 1e-8 {
            return false;
        }
        row.iter_mut().for_each(|v| *v /= norm);
    }
    true
}
