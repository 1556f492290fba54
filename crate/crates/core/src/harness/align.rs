//! Alignment of three randomly initialized encoders on random Gaussian data.

use serde::Serialize;

use crate::data::{gen_gaussian_tuples, Dataset};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::harness::pca::pca_project;
use crate::nn::{embed_dataset, init_encoders, mean_cos_pos, train_alignment_with, EncoderParams, EncoderShape, EpochRecord, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignConfig {
    pub count: usize,
    pub n: usize,
    pub dim: usize,
    /// Samples `0..dump_samples` are exported before and after training.
    pub dump_samples: usize,
    pub train: TrainConfig,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig { count: 4000, n: 3, dim: 256, dump_samples: 7, train: TrainConfig::default() }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.n < 2 || self.dim < 1 || self.count < 2 {
            return Err(Error::Config("alignment needs n >= 2, dim >= 1, count >= 2".into()));
        }
        if self.dump_samples > self.count || self.dump_samples * self.n < 3 {
            return Err(Error::Config(format!(
                "cannot dump {} of {} samples (the projection needs at least 3 vectors)",
                self.dump_samples, self.count
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingRow {
    pub sample_id: usize,
    pub modality: usize,
    /// PCA coordinates within the dump this row belongs to.
    pub xy: [f64; 2],
    pub raw: Vec<f64>,
}

/// Embeddings of selected samples, projected jointly to 2-D.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingDump {
    pub rows: Vec<EmbeddingRow>,
}

/// Embeds `samples` with every encoder and projects the pooled set.
pub fn dump_embeddings(encoders: &[EncoderParams], dataset: &Dataset, samples: &[usize], exec: Exec) -> Result<EmbeddingDump> {
    let emb = embed_dataset(encoders, dataset, exec);
    let mut rows: Vec<EmbeddingRow> = Vec::with_capacity(samples.len() * encoders.len());
    for &s in samples {
        for (m, z) in emb.iter().enumerate() {
            rows.push(EmbeddingRow { sample_id: s, modality: m, xy: [0.0; 2], raw: z.row(s).to_vec() });
        }
    }
    let pooled: Vec<&[f64]> = rows.iter().map(|r| r.raw.as_slice()).collect();
    let xy = pca_project(&pooled)?;
    for (r, p) in rows.iter_mut().zip(xy) {
        r.xy = p;
    }
    Ok(EmbeddingDump { rows })
}

#[derive(Clone, Debug)]
pub struct AlignReport {
    pub before: EmbeddingDump,
    pub after: EmbeddingDump,
    pub history: Vec<EpochRecord>,
    pub initial_mean_cos_pos: f64,
    pub final_mean_cos_pos: f64,
    pub early_stopped: bool,
    pub encoders: Vec<EncoderParams>,
}

pub fn run_alignment_experiment(cfg: &AlignConfig) -> Result<AlignReport> {
    run_alignment_experiment_with(cfg, |_| {})
}

/// [`run_alignment_experiment`] with a per-epoch progress callback.
pub fn run_alignment_experiment_with(cfg: &AlignConfig, on_epoch: impl FnMut(&EpochRecord)) -> Result<AlignReport> {
    cfg.validate()?;
    let dataset = gen_gaussian_tuples(cfg.count, cfg.n, cfg.dim, cfg.train.seed)?;
    let shape = EncoderShape { input: cfg.dim, hidden: cfg.train.hidden, output: cfg.dim };
    let samples: Vec<usize> = (0..cfg.dump_samples).collect();
    let exec = cfg.train.exec;

    let initial = init_encoders(shape, cfg.n, cfg.train.seed);
    let before = dump_embeddings(&initial, &dataset, &samples, exec)?;
    drop(initial);

    let outcome = train_alignment_with(&dataset, &cfg.train, on_epoch)?;
    let after = dump_embeddings(&outcome.encoders, &dataset, &samples, exec)?;
    let final_mean_cos_pos = match outcome.history.last() {
        Some(h) => h.mean_cos_pos,
        None => mean_cos_pos(&outcome.encoders, &dataset, exec).0,
    };
    Ok(AlignReport {
        before,
        after,
        history: outcome.history,
        initial_mean_cos_pos: outcome.initial_mean_cos_pos,
        final_mean_cos_pos,
        early_stopped: outcome.early_stopped,
        encoders: outcome.encoders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> AlignConfig {
        AlignConfig {
            count: 64,
            n: 3,
            dim: 8,
            dump_samples: 7,
            train: TrainConfig { epochs: 2, batch_size: 16, hidden: 8, ..TrainConfig::default() },
        }
    }

    #[test]
    fn dumps_have_one_row_per_sample_and_modality() {
        let r = run_alignment_experiment(&small()).unwrap();
        assert_eq!(r.before.rows.len(), 21);
        assert_eq!(r.after.rows.len(), 21);
        assert_eq!((r.before.rows[4].sample_id, r.before.rows[4].modality), (1, 1));
        assert!(r.after.rows.iter().all(|row| row.raw.len() == 8 && row.raw.iter().all(|&v| v >= 0.0)));
        assert_eq!(r.history.len(), 2);
    }

    #[test]
    fn same_seed_same_dumps() {
        let a = run_alignment_experiment(&small()).unwrap();
        let b = run_alignment_experiment(&small()).unwrap();
        assert_eq!(a.before, b.before);
        assert_eq!(a.after, b.after);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn rejects_bad_dump_size() {
        let cfg = AlignConfig { dump_samples: 1000, ..small() };
        assert!(run_alignment_experiment(&cfg).is_err());
    }
}
