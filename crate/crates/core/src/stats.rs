//! Summary statistics and least-squares polynomial fits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{solve, Matrix};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median of the means of `groups` consecutive chunks.
pub fn median_of_means(xs: &[f64], groups: usize) -> f64 {
    let size = xs.len().div_ceil(groups.max(1)).max(1);
    let means: Vec<f64> = xs.chunks(size).map(mean).collect();
    median(&means)
}

/// Least-squares polynomial fit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyFit {
    /// Coefficients, constant term first.
    pub coefficients: Vec<f64>,
    /// Residual sum of squares.
    pub rss: f64,
    pub r_squared: f64,
}

impl PolyFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Fits a polynomial of `degree` through the points by solving the normal
/// equations on centered, scaled abscissae.
pub fn poly_fit(xs: &[f64], ys: &[f64], degree: usize) -> Result<PolyFit> {
    if xs.len() != ys.len() || xs.len() <= degree {
        return Err(Error::Dimension(format!(
            "a degree-{degree} fit needs more than {degree} paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let xm = mean(xs);
    let xs_scale = xs.iter().fold(0.0f64, |m, x| m.max((x - xm).abs())).max(f64::MIN_POSITIVE);
    let u: Vec<f64> = xs.iter().map(|x| (x - xm) / xs_scale).collect();
    let p = degree + 1;
    let mut ata = Matrix::zeros(p, p);
    let mut aty = vec![0.0; p];
    for (ui, yi) in u.iter().zip(ys) {
        let powers: Vec<f64> = (0..p).map(|k| ui.powi(k as i32)).collect();
        for r in 0..p {
            aty[r] += powers[r] * yi;
            for c in 0..p {
                ata.set(r, c, ata.get(r, c) + powers[r] * powers[c]);
            }
        }
    }
    let beta = solve(&ata, &aty)?;
    // Expand back to powers of x: Σ β_k ((x − xm)/s)^k.
    let mut coefficients = vec![0.0; p];
    for (k, b) in beta.iter().enumerate() {
        let mut binom = 1.0;
        for j in 0..=k {
            // C(k, j) x^j (−xm)^{k−j} / s^k
            coefficients[j] += b * binom * (-xm).powi((k - j) as i32) / xs_scale.powi(k as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    let fitted = |ui: f64| beta.iter().rev().fold(0.0, |acc, c| acc * ui + c);
    let rss: f64 = u.iter().zip(ys).map(|(ui, y)| (y - fitted(*ui)).powi(2)).sum();
    let ym = mean(ys);
    let tss: f64 = ys.iter().map(|y| (y - ym).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    Ok(PolyFit { coefficients, rss, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn summaries() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert_relative_eq!(std_dev(&xs), (5.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_eq!(median(&xs), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_of_means(&[1.0, 3.0, 10.0, 10.0, 2.0, 2.0], 3), 2.0);
    }

    #[test]
    fn exact_fits() {
        let xs: Vec<f64> = (3..=12).map(f64::from).collect();
        let lin: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let f = poly_fit(&xs, &lin, 1).unwrap();
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        assert_relative_eq!(f.coefficients[1], 2.0, epsilon = 1e-10);
        assert_relative_eq!(f.coefficients[0], -1.0, epsilon = 1e-10);

        let quad: Vec<f64> = xs.iter().map(|x| 0.5 * x * x + x + 3.0).collect();
        let q = poly_fit(&xs, &quad, 2).unwrap();
        assert!(q.rss < 1e-18);
        assert_relative_eq!(q.eval(20.0), 0.5 * 400.0 + 23.0, max_relative = 1e-10);
        assert!(poly_fit(&xs, &quad, 1).unwrap().rss > 1.0);
    }

    #[test]
    fn fit_needs_enough_points() {
        assert!(poly_fit(&[1.0, 2.0], &[1.0, 2.0], 2).is_err());
    }
}
