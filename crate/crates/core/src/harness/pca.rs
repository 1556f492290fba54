//! Two-component PCA by power iteration with deflation.

use crate::error::{Error, Result};
use crate::linalg::dot;

pub const TOLERANCE: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 1000;

/// Top principal directions of a point set.
#[derive(Clone, Debug, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit vectors, leading first.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalues of the (1/N-normalized) covariance.
    pub variances: Vec<f64>,
}

impl Pca {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        self.components.iter().map(|c| dot(&centered, c)).collect()
    }
}

/// Deterministic start vector. It has no special alignment with any basis
/// direction, so it is almost surely not orthogonal to the leading eigenvector.
fn start_vector(dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|i| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_75).fract()).collect();
    normalized(v)
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let norm = dot(&v, &v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Flips `v` so that its largest-magnitude entry is positive.
fn normalize_sign(v: &mut [f64]) {
    let lead = v.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
    if lead < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Fits `k` principal components of the rows of `points`.
pub fn fit(points: &[&[f64]], k: usize) -> Result<Pca> {
    if points.len() < 3 {
        return Err(Error::Dimension(format!("PCA needs at least 3 vectors, got {}", points.len())));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::Dimension("PCA vectors must share a positive length".into()));
    }
    let count = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        mean.iter_mut().zip(*p).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= count);

    let mut cov = vec![0.0; dim * dim];
    for p in points {
        let c: Vec<f64> = p.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..dim {
            let ci = c[i];
            if ci == 0.0 {
                continue;
            }
            for (j, cj) in c.iter().enumerate().skip(i) {
                cov[i * dim + j] += ci * cj;
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v = cov[i * dim + j] / count;
            cov[i * dim + j] = v;
            cov[j * dim + i] = v;
        }
    }

    let apply = |cov: &[f64], v: &[f64]| -> Vec<f64> { cov.chunks_exact(dim).map(|row| dot(row, v)).collect() };
    let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for _ in 0..k {
        let mut v = start_vector(dim);
        // Start orthogonal to what was already found, so the deflated
        // iteration stays in the remaining subspace.
        for c in &components {
            let proj = dot(&v, c);
            v.iter_mut().zip(c).for_each(|(x, y)| *x -= proj * y);
        }
        v = normalized(v);
        let mut lambda = 0.0;
        for _ in 0..MAX_ITERATIONS {
            let w = apply(&cov, &v);
            let norm = dot(&w, &w).sqrt();
            if norm == 0.0 {
                lambda = 0.0;
                break;
            }
            let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
            let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            lambda = norm;
            if change < TOLERANCE {
                break;
            }
        }
        normalize_sign(&mut v);
        // Deflate: cov ← cov − λ v vᵀ.
        for i in 0..dim {
            for j in 0..dim {
                cov[i * dim + j] -= lambda * v[i] * v[j];
            }
        }
        components.push(v);
        variances.push(lambda);
    }
    Ok(Pca { mean, components, variances })
}

/// 2-D coordinates of every point in the plane of its two leading principal
/// directions.
pub fn pca_project(points: &[&[f64]]) -> Result<Vec<[f64; 2]>> {
    let pca = fit(points, 2)?;
    Ok(points
        .iter()
        .map(|p| {
            let c = pca.project(p);
            [c[0], c[1]]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_orthogonal;
    use crate::rng;
    use rand::Rng;

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn planar_points_keep_their_distances() {
        let dim = 256;
        let q = random_orthogonal(dim, 3);
        let mut r = rng::seeded(4);
        let planar: Vec<[f64; 2]> = (0..30).map(|_| [r.random_range(-5.0..5.0), r.random_range(-1.0..1.0)]).collect();
        // x = 3 + a·q₀ + b·q₁ in 256-D.
        let points: Vec<Vec<f64>> = planar
            .iter()
            .map(|[a, b]| (0..dim).map(|t| 3.0 + a * q.get(0, t) + b * q.get(1, t)).collect())
            .collect();
        let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        let proj = pca_project(&refs).unwrap();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let want = dist(&planar[i], &planar[j]);
                let got = dist(&proj[i], &proj[j]);
                assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn duplicates_share_coordinates() {
        let mut r = rng::seeded(5);
        let base: Vec<Vec<f64>> = (0..6).map(|_| (0..10).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let mut points = base.clone();
        points.extend(base.iter().cloned());
        let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        let proj = pca_project(&refs).unwrap();
        for i in 0..6 {
            assert_eq!(proj[i], proj[i + 6]);
        }
    }

    #[test]
    fn reconstruction_error_matches_dense_eigensolver() {
        let (count, dim) = (40, 12);
        let mut r = rng::seeded(6);
        // Anisotropic cloud so the leading eigenvalues are well separated.
        let scales: Vec<f64> = (0..dim).map(|i| 3.0 / (1.0 + i as f64)).collect();
        let points: Vec<Vec<f64>> = (0..count)
            .map(|_| scales.iter().map(|s| s * r.random_range(-1.0..1.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        let pca = fit(&refs, 2).unwrap();

        let residual = |basis: &[Vec<f64>]| -> f64 {
            points
                .iter()
                .map(|p| {
                    let c: Vec<f64> = p.iter().zip(&pca.mean).map(|(v, m)| v - m).collect();
                    let mut rest = c.clone();
                    for b in basis {
                        let t = dot(&c, b);
                        rest.iter_mut().zip(b).for_each(|(x, y)| *x -= t * y);
                    }
                    dot(&rest, &rest)
                })
                .sum()
        };

        let mut cov = nalgebra::DMatrix::<f64>::zeros(dim, dim);
        for p in &points {
            let c = nalgebra::DVector::from_iterator(dim, p.iter().zip(&pca.mean).map(|(v, m)| v - m));
            cov += &c * c.transpose();
        }
        cov /= count as f64;
        let eig = nalgebra::SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let oracle: Vec<Vec<f64>> = order[..2].iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();

        let (ours, theirs) = (residual(&pca.components), residual(&oracle));
        assert!((ours - theirs).abs() <= 1e-6 * theirs, "{ours} vs {theirs}");
        for (v, &i) in pca.variances.iter().zip(&order[..2]) {
            assert!((v - eig.eigenvalues[i]).abs() < 1e-8 * eig.eigenvalues[i]);
        }
    }

    #[test]
    fn needs_three_points() {
        let a = [1.0, 2.0];
        assert!(pca_project(&[&a, &a]).is_err());
    }

    #[test]
    fn sign_convention_is_stable() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, -2.0 * i as f64, 0.5]).collect();
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let pca = fit(&refs, 1).unwrap();
        let lead = pca.components[0].iter().copied().fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
        assert!(lead > 0.0);
    }
}
