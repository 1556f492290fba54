//! The joint generalized cosine similarity and its gradient.
//!
//! For rows `f_1 … f_n` with Gram matrix `G`,
//!
//! ```text
//! sin²Θ = det(G) / ∏ ‖f_i‖²        cosΘ = sqrt(1 − sin²Θ)
//! ```
//!
//! `cosΘ` is 1 for linearly dependent rows and 0 for pairwise orthogonal ones.
//! Negating a row leaves `G`'s determinant unchanged, so the measure cannot tell
//! `f` from `−f`; encoders feeding it should end in a ReLU.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, dot, gram_rows, inv_or_adjugate, Matrix, SymMatrix};

/// Rows with a norm at or below this are rejected.
pub const EPS_NORM: f64 = 1e-12;
/// Upper clamp margin on `sin²Θ` in the gradient path: `sin²Θ ≤ 1 − EPS_SIN`.
pub const EPS_SIN: f64 = 1e-12;
/// Floor on `cosΘ` in the gradient denominator.
pub const EPS_COS: f64 = 1e-6;

/// An `n×D` matrix whose rows are the feature vectors of one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTuple {
    m: Matrix,
}

impl FeatureTuple {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.rows() < 2 {
            return Err(Error::Dimension(format!(
                "a feature tuple needs at least 2 vectors, got {}",
                m.rows()
            )));
        }
        Ok(FeatureTuple { m })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        FeatureTuple::new(Matrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.m.rows()
    }

    pub fn dim(&self) -> usize {
        self.m.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn rows(&self) -> Vec<&[f64]> {
        self.m.row_slices()
    }
}

/// Everything computed on the way to `cosΘ` for one tuple.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimilarityResult {
    pub det_g: f64,
    pub hypervolume: f64,
    pub norms: Vec<f64>,
    pub sin2: f64,
    pub cos_theta: f64,
    /// Radians, in `[0, π/2]`.
    pub theta: f64,
    /// Cosines of pairs `(0,1), (0,2), …, (1,2), …` in row-major upper-triangle order.
    pub pairwise_cos: Vec<f64>,
}

/// Row norms from the Gram diagonal, rejecting degenerate rows.
fn checked_norms(g: &SymMatrix) -> Result<Vec<f64>> {
    g.diagonal()
        .enumerate()
        .map(|(i, sq)| {
            let norm = sq.sqrt();
            if norm > EPS_NORM {
                Ok(norm)
            } else {
                Err(Error::DegenerateVector { sample: 0, modality: i, norm })
            }
        })
        .collect()
}

fn pairwise_from_gram(g: &SymMatrix, norms: &[f64]) -> Vec<f64> {
    let n = norms.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push((g.get(i, j) / (norms[i] * norms[j])).clamp(-1.0, 1.0));
        }
    }
    out
}

/// `det(G) / ∏‖f_i‖²` before any clamping.
fn raw_sin2(g: &SymMatrix, norms: &[f64]) -> Result<(f64, f64)> {
    let det = linalg::det_sym(g)?;
    let denom: f64 = norms.iter().map(|v| v * v).product();
    Ok((det, det / denom))
}

fn result_from_gram(g: &SymMatrix) -> Result<SimilarityResult> {
    let norms = checked_norms(g)?;
    let (det, s) = raw_sin2(g, &norms)?;
    let det_g = det.max(0.0);
    let sin2 = s.clamp(0.0, 1.0);
    Ok(SimilarityResult {
        det_g,
        hypervolume: det_g.sqrt(),
        sin2,
        cos_theta: (1.0 - sin2).sqrt(),
        theta: sin2.sqrt().min(1.0).asin(),
        pairwise_cos: pairwise_from_gram(g, &norms),
        norms,
    })
}

/// Full similarity report for a tuple.
pub fn similarity(t: &FeatureTuple) -> Result<SimilarityResult> {
    similarity_rows(&t.rows())
}

/// [`similarity`] over borrowed rows, avoiding a copy into a [`FeatureTuple`].
pub fn similarity_rows(rows: &[&[f64]]) -> Result<SimilarityResult> {
    result_from_gram(&gram_rows(rows)?)
}

/// Just `cosΘ`; the hot path for loss evaluation.
pub fn cos_theta_rows(rows: &[&[f64]]) -> Result<f64> {
    let g = gram_rows(rows)?;
    let norms = checked_norms(&g)?;
    let (_, s) = raw_sin2(&g, &norms)?;
    Ok((1.0 - s.clamp(0.0, 1.0)).sqrt())
}

/// Ordinary cosine of two vectors. Both norms are recomputed on every call.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    let na = linalg::l2_norm(a);
    let nb = linalg::l2_norm(b);
    for (modality, norm) in [(0, na), (1, nb)] {
        if norm <= EPS_NORM {
            return Err(Error::DegenerateVector { sample: 0, modality, norm });
        }
    }
    Ok(dot(a, b) / (na * nb))
}

/// Gradient of [`cosine`] with respect to both arguments.
pub fn cosine_gradient(a: &[f64], b: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let c = cosine(a, b)?;
    let na = linalg::l2_norm(a);
    let nb = linalg::l2_norm(b);
    let inv = 1.0 / (na * nb);
    let ga = a.iter().zip(b).map(|(x, y)| y * inv - c * x / (na * na)).collect();
    let gb = b.iter().zip(a).map(|(y, x)| x * inv - c * y / (nb * nb)).collect();
    Ok((c, ga, gb))
}

/// Closed-form three-vector expression
/// `cos²θ_fg + cos²θ_fk + cos²θ_gk − 2·cosθ_fg·cosθ_fk·cosθ_gk`,
/// built from plain pairwise cosines. Equals `cos²Θ` of the triple; it shares
/// no code with the determinant path and serves as its cross-check.
pub fn phi3(f: &[f64], g: &[f64], k: &[f64]) -> Result<f64> {
    if f.len() != g.len() || f.len() != k.len() || f.is_empty() {
        return Err(Error::Dimension("phi3 needs three vectors of equal length".into()));
    }
    for (modality, v) in [f, g, k].into_iter().enumerate() {
        let norm = linalg::l2_norm(v);
        if norm <= EPS_NORM {
            return Err(Error::DegenerateVector { sample: 0, modality, norm });
        }
    }
    let cfg = cosine(f, g)?;
    let cfk = cosine(f, k)?;
    let cgk = cosine(g, k)?;
    Ok(cfg * cfg + cfk * cfk + cgk * cgk - 2.0 * cfg * cfk * cgk)
}

/// `cosΘ` and its gradient with respect to every row.
pub fn similarity_gradient(t: &FeatureTuple) -> Result<(SimilarityResult, Matrix)> {
    let rows = t.rows();
    let (res, grad) = similarity_gradient_rows(&rows)?;
    let grad = Matrix::new(t.n(), t.dim(), grad)?;
    Ok((res, grad))
}

/// Row-slice form of [`similarity_gradient`]; the gradient comes back flat,
/// row-major `n×D`.
///
/// With `s = det(G)/P`, `P = ∏‖f_i‖²`, and `A = adj(G)`:
///
/// ```text
/// ∂s/∂f_i    = 2·(A M)_i / P − 2·s·f_i / ‖f_i‖²
/// ∂cosΘ/∂f_i = −∂s/∂f_i / (2·cosΘ)
/// ```
///
/// The adjugate keeps this finite at `det(G) = 0`. In the denominator `s` is
/// clamped to `[0, 1 − EPS_SIN]` and `cosΘ` is floored at `EPS_COS`.
pub fn similarity_gradient_rows(rows: &[&[f64]]) -> Result<(SimilarityResult, Vec<f64>)> {
    let g = gram_rows(rows)?;
    let res = result_from_gram(&g)?;
    let n = rows.len();
    let d = rows[0].len();
    let (adj, det) = inv_or_adjugate(&g);
    let norms = &res.norms;
    let p: f64 = norms.iter().map(|v| v * v).product();
    let s_raw = det / p;
    let cos_g = (1.0 - s_raw.clamp(0.0, 1.0 - EPS_SIN)).sqrt().max(EPS_COS);
    let scale = -1.0 / (2.0 * cos_g);

    let mut grad = vec![0.0; n * d];
    for (i, out) in grad.chunks_exact_mut(d).enumerate() {
        // (A M)_i
        for (j, row) in rows.iter().enumerate() {
            let a = adj.get(i, j);
            if a != 0.0 {
                out.iter_mut().zip(*row).for_each(|(o, v)| *o += a * v);
            }
        }
        let self_coef = 2.0 * s_raw / (norms[i] * norms[i]);
        for (o, f) in out.iter_mut().zip(rows[i]) {
            let ds = 2.0 * *o / p - self_coef * f;
            *o = scale * ds;
        }
    }
    Ok((res, grad))
}
