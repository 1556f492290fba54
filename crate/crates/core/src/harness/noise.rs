//! Sensitivity of `cosΘ` to additive white Gaussian noise.
//!
//! Clean triplets are standard normal. For each noise level a fresh noise draw
//! is added to every entry (no clipping or renormalization) and the absolute
//! change in `cosΘ` is recorded per triplet.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::data::gen_gaussian_tuples;
use crate::error::Result;
use crate::rng::{self, streams};
use crate::similarity::cos_theta_rows;
use crate::stats::{mean, poly_fit, std_dev};

pub const SIGMAS: [f64; 5] = [0.01, 0.03, 0.05, 0.07, 0.1];
/// Published mean absolute errors at [`SIGMAS`].
pub const REFERENCE_MEANS: [f64; 5] = [0.0006, 0.0022, 0.0035, 0.0048, 0.0064];
pub const TRIPLETS: usize = 100;
pub const DIM: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseLevel {
    pub sigma: f64,
    /// `|cosΘ_noisy − cosΘ_clean|` per triplet.
    pub errors: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseReport {
    pub seed: u64,
    pub triplets: usize,
    pub dim: usize,
    pub levels: Vec<NoiseLevel>,
    /// Mean error against σ.
    pub fit: LinearFit,
    pub strictly_increasing: bool,
}

/// The standard experiment at [`SIGMAS`].
pub fn run_noise_experiment(seed: u64) -> Result<NoiseReport> {
    run_noise_with(seed, &SIGMAS, TRIPLETS, DIM)
}

/// Same procedure with arbitrary noise levels and sizes. Level `l` draws its
/// noise from its own stream, so adding a level does not change the others.
pub fn run_noise_with(seed: u64, sigmas: &[f64], triplets: usize, dim: usize) -> Result<NoiseReport> {
    let clean = gen_gaussian_tuples(triplets, 3, dim, seed)?;
    let clean_cos: Vec<f64> = (0..triplets)
        .map(|s| cos_theta_rows(&clean.tuple(s)).map_err(|e| e.at_sample(s)))
        .collect::<Result<_>>()?;

    let mut levels = Vec::with_capacity(sigmas.len());
    for (l, &sigma) in sigmas.iter().enumerate() {
        let mut noise_rng = rng::stream(seed, streams::NOISE_BASE + l as u64);
        let mut noisy = clean.clone();
        for v in noisy.as_mut_slice() {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            *v += sigma * z;
        }
        let errors: Vec<f64> = (0..triplets)
            .map(|s| Ok((cos_theta_rows(&noisy.tuple(s)).map_err(|e| e.at_sample(s))? - clean_cos[s]).abs()))
            .collect::<Result<_>>()?;
        levels.push(NoiseLevel { sigma, mean: mean(&errors), std: std_dev(&errors), errors });
    }

    let xs: Vec<f64> = levels.iter().map(|l| l.sigma).collect();
    let ys: Vec<f64> = levels.iter().map(|l| l.mean).collect();
    let fit = if levels.len() >= 2 {
        let p = poly_fit(&xs, &ys, 1)?;
        LinearFit { intercept: p.coefficients[0], slope: p.coefficients[1], r_squared: p.r_squared }
    } else {
        LinearFit { slope: f64::NAN, intercept: f64::NAN, r_squared: f64::NAN }
    };
    let strictly_increasing = ys.windows(2).all(|w| w[1] > w[0]);
    Ok(NoiseReport { seed, triplets, dim, levels, fit, strictly_increasing })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_gives_zero_error() {
        let r = run_noise_with(3, &[0.0, 0.05], 20, 32).unwrap();
        assert!(r.levels[0].errors.iter().all(|&e| e == 0.0));
        assert!(r.levels[1].errors.iter().all(|&e| e >= 0.0));
        assert_eq!(r.levels[1].errors.len(), 20);
    }

    #[test]
    fn levels_use_independent_streams() {
        let a = run_noise_with(5, &[0.01, 0.05], 10, 16).unwrap();
        let b = run_noise_with(5, &[0.01, 0.05, 0.1], 10, 16).unwrap();
        assert_eq!(a.levels[..], b.levels[..2]);
    }

    #[test]
    fn standard_run_shape() {
        let r = run_noise_experiment(42).unwrap();
        assert_eq!(r.levels.len(), 5);
        assert!(r.levels.iter().all(|l| l.errors.len() == TRIPLETS));
        assert_eq!(r, run_noise_experiment(42).unwrap());
    }
}
