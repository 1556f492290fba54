//! Wall-clock comparison of the GHA loss against the pairwise Dual loss.
//!
//! Both kinds evaluate the loss value only (no gradients), single-threaded, on
//! the same batch. Negative sampling is timed separately so the loss columns
//! compare the kernels alone.

use std::time::Instant;

use serde::Serialize;

use crate::data::gen_gaussian_tuples;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::losses::{dual_loss_value, gha_loss_value, sample_negatives, sample_pair_negatives, Batch, LossConfig};
use crate::rng::{self, streams};
use crate::stats::{mean, median_of_means, poly_fit, std_dev};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMode {
    /// n = 3, K ∈ {5, 10, …, 50}.
    ByNegatives,
    /// n ∈ {3, …, 12} at the configured K.
    ByModalities,
}

impl std::str::FromStr for BenchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "by_negatives" | "by-negatives" => Ok(BenchMode::ByNegatives),
            "by_modalities" | "by-modalities" => Ok(BenchMode::ByModalities),
            other => Err(Error::Config(format!("unknown benchmark mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for BenchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BenchMode::ByNegatives => "by_negatives",
            BenchMode::ByModalities => "by_modalities",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LossKind {
    #[serde(rename = "GHA")]
    Gha,
    Dual,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Gha => "GHA",
            LossKind::Dual => "Dual",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchConfig {
    pub mode: BenchMode,
    pub batch: usize,
    pub dim: usize,
    pub repetitions: usize,
    pub warmups: usize,
    /// τ, λ, and K (K is used by `by_modalities`; `by_negatives` sweeps it).
    pub loss: LossConfig,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            mode: BenchMode::ByNegatives,
            batch: 256,
            dim: 256,
            repetitions: 10,
            warmups: 2,
            loss: LossConfig::default(),
            seed: 42,
        }
    }
}

impl BenchConfig {
    /// `(n, K)` of every configuration in run order.
    pub fn configurations(&self) -> Vec<(usize, usize)> {
        match self.mode {
            BenchMode::ByNegatives => (1..=10).map(|i| (3, 5 * i)).collect(),
            BenchMode::ByModalities => (3..=12).map(|n| (n, self.loss.negatives)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if self.batch < 2 || self.dim < 1 || self.repetitions < 1 {
            return Err(Error::Config("benchmark needs batch >= 2, dim >= 1, repetitions >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkRecord {
    pub kind: LossKind,
    pub n: usize,
    pub k: usize,
    pub b: usize,
    pub d: usize,
    pub repetitions: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub median_of_means_ms: f64,
    /// Mean time to draw the negatives, not included in `mean_ms`.
    pub sampler_ms: f64,
    /// Loss value of the last repetition; identical across repetitions.
    pub loss: f64,
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Times `run` `warmups + repetitions` times and keeps the last `repetitions`.
fn time_reps<T>(warmups: usize, repetitions: usize, mut run: impl FnMut() -> Result<T>) -> Result<(Vec<f64>, T)> {
    for _ in 0..warmups {
        std::hint::black_box(run()?);
    }
    let mut times = Vec::with_capacity(repetitions);
    let mut last = None;
    for _ in 0..repetitions {
        let start = Instant::now();
        let out = std::hint::black_box(run()?);
        times.push(millis(start));
        last = Some(out);
    }
    Ok((times, last.expect("at least one repetition")))
}

fn record(kind: LossKind, n: usize, k: usize, cfg: &BenchConfig, times: &[f64], sampler: &[f64], loss: f64) -> BenchmarkRecord {
    BenchmarkRecord {
        kind,
        n,
        k,
        b: cfg.batch,
        d: cfg.dim,
        repetitions: times.len(),
        mean_ms: mean(times),
        std_ms: std_dev(times),
        median_of_means_ms: median_of_means(times, 5),
        sampler_ms: mean(sampler),
        loss,
    }
}

/// Runs every configuration of `cfg.mode`; two records (GHA, then Dual) per
/// configuration. Each configuration gets fresh data from its own stream.
pub fn run_runtime_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchmarkRecord>> {
    cfg.validate()?;
    let exec = Exec::Sequential;
    let mut out = Vec::new();
    for (c, (n, k)) in cfg.configurations().into_iter().enumerate() {
        let data_seed = cfg.seed.wrapping_add(c as u64);
        let batch = Batch::from_dataset(gen_gaussian_tuples(cfg.batch, n, cfg.dim, data_seed)?)?;
        let loss_cfg = LossConfig { negatives: k, ..cfg.loss };

        let mut neg_rng = rng::stream(cfg.seed, streams::BENCH_BASE + 2 * c as u64);
        let (gha_sampler, neg) = time_reps(0, cfg.repetitions, || {
            sample_negatives(cfg.batch, n, k, loss_cfg.scheme, &mut neg_rng)
        })?;
        let (gha_times, gha) = time_reps(cfg.warmups, cfg.repetitions, || gha_loss_value(&batch, &neg, &loss_cfg, exec))?;

        let mut pair_rng = rng::stream(cfg.seed, streams::BENCH_BASE + 2 * c as u64 + 1);
        let (dual_sampler, pair_neg) = time_reps(0, cfg.repetitions, || sample_pair_negatives(cfg.batch, n, k, &mut pair_rng))?;
        let (dual_times, dual) = time_reps(cfg.warmups, cfg.repetitions, || dual_loss_value(&batch, &pair_neg, &loss_cfg, exec))?;

        out.push(record(LossKind::Gha, n, k, cfg, &gha_times, &gha_sampler, gha));
        out.push(record(LossKind::Dual, n, k, cfg, &dual_times, &dual_sampler, dual));
    }
    Ok(out)
}

/// How runtime grows with the number of modalities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingAnalysis {
    pub gha_linear_r_squared: f64,
    pub dual_linear_rss: f64,
    pub dual_quadratic_rss: f64,
    /// Linear over quadratic residual sum of squares for Dual.
    pub dual_residual_ratio: f64,
    /// Dual/GHA mean runtime at the smallest and largest n.
    pub ratio_first: f64,
    pub ratio_last: f64,
}

fn series(records: &[BenchmarkRecord], kind: LossKind) -> (Vec<f64>, Vec<f64>) {
    records.iter().filter(|r| r.kind == kind).map(|r| (r.n as f64, r.mean_ms)).unzip()
}

/// Fits GHA and Dual runtimes against n (records from `by_modalities`).
pub fn analyze_scaling(records: &[BenchmarkRecord]) -> Result<ScalingAnalysis> {
    let (gx, gy) = series(records, LossKind::Gha);
    let (dx, dy) = series(records, LossKind::Dual);
    if gx.len() < 4 || gx != dx {
        return Err(Error::Config("scaling analysis needs at least 4 matched modality counts".into()));
    }
    let lin = poly_fit(&dx, &dy, 1)?;
    let quad = poly_fit(&dx, &dy, 2)?;
    let last = gy.len() - 1;
    Ok(ScalingAnalysis {
        gha_linear_r_squared: poly_fit(&gx, &gy, 1)?.r_squared,
        dual_linear_rss: lin.rss,
        dual_quadratic_rss: quad.rss,
        dual_residual_ratio: lin.rss / quad.rss,
        ratio_first: dy[0] / gy[0],
        ratio_last: dy[last] / gy[last],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(mode: BenchMode) -> BenchConfig {
        BenchConfig { mode, batch: 8, dim: 8, repetitions: 3, warmups: 1, ..BenchConfig::default() }
    }

    #[test]
    fn configuration_grids() {
        let k = BenchConfig::default().configurations();
        assert_eq!(k.first(), Some(&(3, 5)));
        assert_eq!(k.last(), Some(&(3, 50)));
        assert_eq!(k.len(), 10);
        let n = BenchConfig { mode: BenchMode::ByModalities, ..BenchConfig::default() }.configurations();
        assert_eq!(n.iter().map(|c| c.0).collect::<Vec<_>>(), (3..=12).collect::<Vec<_>>());
        assert!(n.iter().all(|c| c.1 == 7));
    }

    #[test]
    fn records_per_kind_and_deterministic_values() {
        let cfg = tiny(BenchMode::ByModalities);
        let a = run_runtime_benchmark(&cfg).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(a.iter().filter(|r| r.kind == LossKind::Dual).count(), 10);
        assert!(a.iter().all(|r| r.repetitions == 3 && r.mean_ms > 0.0 && r.loss.is_finite()));
        let b = run_runtime_benchmark(&cfg).unwrap();
        let losses = |rs: &[BenchmarkRecord]| rs.iter().map(|r| r.loss).collect::<Vec<_>>();
        assert_eq!(losses(&a), losses(&b));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("by_negatives".parse::<BenchMode>().unwrap(), BenchMode::ByNegatives);
        assert_eq!("by_modalities".parse::<BenchMode>().unwrap().to_string(), "by_modalities");
        assert!("by_n".parse::<BenchMode>().is_err());
    }

    #[test]
    fn scaling_analysis_on_synthetic_timings() {
        let mk = |kind, n: usize, ms: f64| BenchmarkRecord {
            kind, n, k: 7, b: 1, d: 1, repetitions: 1, mean_ms: ms, std_ms: 0.0,
            median_of_means_ms: ms, sampler_ms: 0.0, loss: 0.0,
        };
        let mut rs = Vec::new();
        for n in 3..=12 {
            rs.push(mk(LossKind::Gha, n, 2.0 * n as f64 + 1.0));
            rs.push(mk(LossKind::Dual, n, (n * (n - 1)) as f64 + 0.01 * (n % 2) as f64));
        }
        let a = analyze_scaling(&rs).unwrap();
        assert!(a.gha_linear_r_squared > 0.999_999);
        assert!(a.dual_residual_ratio > 100.0);
        assert!(a.ratio_last > a.ratio_first);
    }
}
