//! Multimodal sample containers and the Gaussian data generator.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;

/// `count × n × D` values: `count` samples, each with `n` modality vectors of
/// length `D`. Stored sample-major, then modality, then feature.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    count: usize,
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Dataset {
    pub fn new(count: usize, n: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if count == 0 || n == 0 || dim == 0 {
            return Err(Error::Dimension(format!("dataset shape {count}x{n}x{dim} is empty")));
        }
        if data.len() != count * n * dim {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {count}x{n}x{dim} dataset",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Dataset { count, n, dim, data })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Feature vector of `modality` for `sample`.
    pub fn feature(&self, sample: usize, modality: usize) -> &[f64] {
        let start = (sample * self.n + modality) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// All modality vectors of one sample.
    pub fn tuple(&self, sample: usize) -> Vec<&[f64]> {
        (0..self.n).map(|m| self.feature(sample, m)).collect()
    }
}

/// `count × n × D` independent standard normal values, deterministic in `seed`.
pub fn gen_gaussian_tuples(count: usize, n: usize, dim: usize, seed: u64) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let mut rng = rng::stream(seed, rng::streams::DATA);
    let data = (0..count * n * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    Dataset::new(count, n, dim, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments() {
        let ds = gen_gaussian_tuples(1000, 4, 250, 1).unwrap();
        let v = ds.as_slice();
        assert_eq!(v.len(), 1_000_000);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn same_seed_same_data() {
        assert_eq!(gen_gaussian_tuples(3, 3, 8, 9).unwrap(), gen_gaussian_tuples(3, 3, 8, 9).unwrap());
        assert_ne!(gen_gaussian_tuples(3, 3, 8, 9).unwrap(), gen_gaussian_tuples(3, 3, 8, 10).unwrap());
    }

    #[test]
    fn indexing() {
        let ds = Dataset::new(2, 3, 2, (0..12).map(f64::from).collect()).unwrap();
        assert_eq!(ds.feature(1, 2), &[10.0, 11.0]);
        assert_eq!(ds.tuple(0), vec![&[0.0, 1.0][..], &[2.0, 3.0], &[4.0, 5.0]]);
        assert!(gen_gaussian_tuples(0, 3, 2, 1).is_err());
    }
}
