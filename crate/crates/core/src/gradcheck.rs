//! Central-difference gradient verification for every differentiable piece,
//! from the similarity up to the encoder parameters.

use ndarray::Array2;
use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::exec::Exec;
use crate::losses::{
    angular_equilibrium, gha_contrastive, gha_contrastive_value, gha_loss, sample_negatives, Batch, LossConfig,
    NegScheme,
};
use crate::nn::{pipeline_loss_grad, EncoderParams, EncoderShape};
use crate::rng::{self, streams};
use crate::similarity::{cos_theta_rows, cosine_gradient, similarity_gradient_rows};

/// Finite-difference step.
pub const STEP: f64 = 1e-6;
/// Tolerance for every component except the end-to-end pipeline.
pub const TOLERANCE: f64 = 1e-4;
pub const PIPELINE_TOLERANCE: f64 = 1e-3;
/// Magnitudes below this count as absolute rather than relative error.
pub const REL_FLOOR: f64 = 1e-6;

/// Batch size, negatives, hidden width, and temperature of the check instances.
const BATCH: usize = 4;
const NEGATIVES: usize = 2;
const HIDDEN: usize = 8;
const TAU: f64 = 0.1;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Central-difference gradient of `f` at `x`.
pub fn central_difference(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic.iter().zip(numeric).map(|(a, n)| relative_error(*a, *n)).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentReport {
    pub name: &'static str,
    pub max_rel_error: f64,
    pub tolerance: f64,
    /// Number of gradient entries compared.
    pub checked: usize,
    pub passed: bool,
}

impl ComponentReport {
    fn new(name: &'static str, analytic: &[f64], numeric: &[f64], tolerance: f64) -> Self {
        let max_rel_error = max_relative_error(analytic, numeric);
        ComponentReport {
            name,
            max_rel_error,
            tolerance,
            checked: analytic.len(),
            passed: max_rel_error < tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    pub components: Vec<ComponentReport>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.components.iter().all(|c| c.passed)
    }
}

fn positive_values(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(0.05..1.0)).collect()
}

fn split_rows(flat: &[f64], dim: usize) -> Vec<&[f64]> {
    flat.chunks_exact(dim).collect()
}

/// Checks every analytic gradient against central differences on a small
/// random instance with `n` modalities of dimension `dim`. Features are
/// strictly positive, as encoder outputs are after training starts.
pub fn run_gradcheck(n: usize, dim: usize, seed: u64) -> Result<GradcheckReport> {
    let mut components = Vec::new();
    let stream = |i: u64| rng::stream(seed, streams::GRADCHECK_BASE + i);

    // cosΘ of one tuple.
    let x = positive_values(n * dim, &mut stream(0));
    let (_, analytic) = similarity_gradient_rows(&split_rows(&x, dim))?;
    let numeric = central_difference(&x, STEP, |p| cos_theta_rows(&split_rows(p, dim)).unwrap_or(f64::NAN));
    components.push(ComponentReport::new("similarity", &analytic, &numeric, TOLERANCE));

    // n = 2 against the classical cosine gradient; cosΘ = |cos θ| there.
    let pair = positive_values(2 * dim, &mut stream(1));
    let (a, b) = pair.split_at(dim);
    let (_, general) = similarity_gradient_rows(&[a, b])?;
    let (c, ga, gb) = cosine_gradient(a, b)?;
    let classical: Vec<f64> = ga.iter().chain(&gb).map(|g| c.signum() * g).collect();
    components.push(ComponentReport::new("similarity_n2_vs_cosine", &general, &classical, TOLERANCE));

    let cfg = LossConfig { tau: TAU, negatives: NEGATIVES, ..LossConfig::default() };
    let values = positive_values(BATCH * n * dim, &mut stream(2));
    let batch = Batch::new(BATCH, n, dim, values.clone())?;
    let neg = sample_negatives(BATCH, n, NEGATIVES, NegScheme::AnchorFixed, &mut stream(3))?;
    let rebatch = |p: &[f64]| Batch::new(BATCH, n, dim, p.to_vec()).expect("same shape");
    let exec = Exec::Sequential;

    let lc = gha_contrastive(&batch, &neg, &cfg, exec)?;
    let numeric = central_difference(&values, STEP, |p| {
        gha_contrastive_value(&rebatch(p), &neg, &cfg, exec).unwrap_or(f64::NAN)
    });
    components.push(ComponentReport::new("contrastive", &lc.grads, &numeric, TOLERANCE));

    let la = angular_equilibrium(&batch, exec)?;
    let numeric = central_difference(&values, STEP, |p| {
        angular_equilibrium(&rebatch(p), exec).map_or(f64::NAN, |l| l.value)
    });
    components.push(ComponentReport::new("angular", &la.grads, &numeric, TOLERANCE));

    let gha = gha_loss(&batch, &neg, &cfg, exec)?;
    let numeric = central_difference(&values, STEP, |p| {
        gha_loss(&rebatch(p), &neg, &cfg, exec).map_or(f64::NAN, |l| l.l_total)
    });
    components.push(ComponentReport::new("gha", &gha.grads, &numeric, TOLERANCE));

    // Encoders → batch → GHA loss, differentiated with respect to every
    // parameter of every encoder. Biases start positive so that no ReLU sits
    // on its kink, where central differences are meaningless.
    let shape = EncoderShape { input: dim, hidden: HIDDEN, output: dim };
    let encoders: Vec<EncoderParams> = (0..n)
        .map(|m| {
            let mut e = EncoderParams::init(shape, &mut stream(10 + m as u64));
            e.layers.iter_mut().for_each(|l| l.bias.mapv_inplace(|b| b.abs() + 0.1));
            e
        })
        .collect();
    let mut input_rng = stream(4);
    let inputs: Vec<Array2<f64>> = (0..n)
        .map(|_| Array2::from_shape_fn((BATCH, dim), |_| input_rng.random_range(-1.0..1.0)))
        .collect();
    let (_, grads) = pipeline_loss_grad(&encoders, &inputs, &neg, &cfg, exec)?;
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for m in 0..n {
        let flat = encoders[m].flat_params();
        analytic.extend(grads[m].flat());
        let mut probe = encoders.clone();
        numeric.extend(central_difference(&flat, STEP, |p| {
            probe[m].set_flat_params(p).expect("same length");
            pipeline_loss_grad(&probe, &inputs, &neg, &cfg, exec).map_or(f64::NAN, |(l, _)| l.l_total)
        }));
    }
    components.push(ComponentReport::new("pipeline", &analytic, &numeric, PIPELINE_TOLERANCE));

    Ok(GradcheckReport { n, dim, seed, components })
}
