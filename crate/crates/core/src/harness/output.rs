//! CSV and JSON writers for experiment results.
//!
//! CSV files start with `# key: value` metadata lines (seed, configuration,
//! version) followed by a header row. Floats are written in scientific
//! notation with 17 significant digits, so they parse back to the same `f64`.
//! JSON uses serde_json's shortest round-trip representation and carries the
//! same metadata under `"metadata"`. No file contains timestamps or host
//! information, so reruns with the same flags produce identical bytes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::Result;
use crate::harness::align::EmbeddingDump;
use crate::harness::bench::{BenchmarkRecord, ScalingAnalysis};
use crate::harness::noise::{NoiseReport, REFERENCE_MEANS, SIGMAS};
use crate::nn::EpochRecord;

pub const NOISE_REPORT: &str = "noise_report.csv";
pub const NOISE_SUMMARY: &str = "noise_summary.json";
pub const BENCH: &str = "bench.csv";
pub const EMBEDDINGS_BEFORE: &str = "embeddings_before.csv";
pub const EMBEDDINGS_AFTER: &str = "embeddings_after.csv";
pub const HISTORY: &str = "history.csv";

/// Ordered `key: value` pairs written at the top of every file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    /// Starts with the artifact version, experiment name, and seed.
    pub fn new(experiment: &str, seed: u64) -> Self {
        Metadata::default()
            .with("artifact", format!("jgcs {}", crate::VERSION))
            .with("experiment", experiment)
            .with("seed", seed)
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_owned(), value.to_string().replace('\n', " ")));
        self
    }

    /// Adds `value` as a compact JSON string.
    pub fn with_json(self, key: &str, value: &impl Serialize) -> Result<Self> {
        Ok(self.with(key, serde_json::to_string(value)?))
    }

    fn write_comments<W: Write>(&self, w: &mut W) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }

    fn to_json(&self) -> Value {
        Value::Object(self.entries.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect::<Map<_, _>>())
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(dir: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    Ok((BufWriter::new(File::create(&path)?), path))
}

/// `sigma, triplet_id, abs_error` for every triplet at every level.
pub fn write_noise_report(dir: &Path, report: &NoiseReport, meta: &Metadata) -> Result<PathBuf> {
    let (mut w, path) = create(dir, NOISE_REPORT)?;
    meta.write_comments(&mut w)?;
    writeln!(w, "sigma,triplet_id,abs_error")?;
    for level in &report.levels {
        for (t, e) in level.errors.iter().enumerate() {
            writeln!(w, "{},{t},{}", fmt_f64(level.sigma), fmt_f64(*e))?;
        }
    }
    w.flush()?;
    Ok(path)
}

/// Published mean error at `sigma`, if it is one of the standard levels.
pub fn reference_mean(sigma: f64) -> Option<f64> {
    SIGMAS.iter().position(|&s| s == sigma).map(|i| REFERENCE_MEANS[i])
}

pub fn noise_summary_json(report: &NoiseReport, meta: &Metadata) -> Value {
    let levels: Vec<Value> = report
        .levels
        .iter()
        .map(|l| {
            let reference = reference_mean(l.sigma);
            json!({
                "sigma": l.sigma,
                "count": l.errors.len(),
                "mean": l.mean,
                "std": l.std,
                "reference_mean": reference,
                "ratio_to_reference": reference.map(|r| l.mean / r),
            })
        })
        .collect();
    json!({
        "metadata": meta.to_json(),
        "triplets": report.triplets,
        "dim": report.dim,
        "levels": levels,
        "linear_fit": report.fit,
        "strictly_increasing": report.strictly_increasing,
    })
}

pub fn write_noise_summary(dir: &Path, report: &NoiseReport, meta: &Metadata) -> Result<PathBuf> {
    let (mut w, path) = create(dir, NOISE_SUMMARY)?;
    serde_json::to_writer_pretty(&mut w, &noise_summary_json(report, meta))?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

/// One row per record. Timing columns differ between runs; everything else
/// is reproducible.
pub fn write_bench(dir: &Path, records: &[BenchmarkRecord], scaling: Option<&ScalingAnalysis>, meta: &Metadata) -> Result<PathBuf> {
    let (mut w, path) = create(dir, BENCH)?;
    meta.write_comments(&mut w)?;
    if let Some(s) = scaling {
        writeln!(w, "# gha_linear_r_squared: {}", fmt_f64(s.gha_linear_r_squared))?;
        writeln!(w, "# dual_linear_over_quadratic_rss: {}", fmt_f64(s.dual_residual_ratio))?;
        writeln!(w, "# dual_over_gha_ratio_first_last: {} {}", fmt_f64(s.ratio_first), fmt_f64(s.ratio_last))?;
        writeln!(
            w,
            "# note: Dual evaluates C(n,2) pairwise losses, so its cost grows quadratically in n, not exponentially"
        )?;
    }
    writeln!(w, "kind,n,k,b,d,repetitions,mean_ms,std_ms,median_of_means_ms,sampler_ms,loss")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.kind,
            r.n,
            r.k,
            r.b,
            r.d,
            r.repetitions,
            fmt_f64(r.mean_ms),
            fmt_f64(r.std_ms),
            fmt_f64(r.median_of_means_ms),
            fmt_f64(r.sampler_ms),
            fmt_f64(r.loss)
        )?;
    }
    w.flush()?;
    Ok(path)
}

/// `sample_id, modality, x, y, d0 … d{D−1}`.
pub fn write_embeddings(dir: &Path, name: &str, dump: &EmbeddingDump, meta: &Metadata) -> Result<PathBuf> {
    let (mut w, path) = create(dir, name)?;
    meta.write_comments(&mut w)?;
    let dim = dump.rows.first().map_or(0, |r| r.raw.len());
    write!(w, "sample_id,modality,x,y")?;
    for d in 0..dim {
        write!(w, ",d{d}")?;
    }
    writeln!(w)?;
    for r in &dump.rows {
        write!(w, "{},{},{},{}", r.sample_id, r.modality, fmt_f64(r.xy[0]), fmt_f64(r.xy[1]))?;
        for v in &r.raw {
            write!(w, ",{}", fmt_f64(*v))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_history(dir: &Path, history: &[EpochRecord], meta: &Metadata) -> Result<PathBuf> {
    let (mut w, path) = create(dir, HISTORY)?;
    meta.write_comments(&mut w)?;
    writeln!(w, "epoch,l_contrastive,l_angular,l_total,mean_cos_pos,skipped")?;
    for h in history {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            h.epoch,
            fmt_f64(h.l_contrastive),
            fmt_f64(h.l_angular),
            fmt_f64(h.l_total),
            fmt_f64(h.mean_cos_pos),
            h.skipped
        )?;
    }
    w.flush()?;
    Ok(path)
}
