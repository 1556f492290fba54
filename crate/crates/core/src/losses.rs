//! Contrastive objectives over multimodal batches.
//!
//! * [`gha_contrastive`]: InfoNCE where each logit is the joint similarity of a
//!   whole n-tuple. The positive tuple is sample `i` in every modality; the
//!   negatives mix in features of other samples.
//! * [`angular_equilibrium`]: mean variance of the pairwise cosines of each
//!   positive tuple. It keeps any two modalities from collapsing together while
//!   a third lags behind.
//! * [`gha_loss`]: `L_C + λ·L_A`.
//! * [`dual_loss`]: the baseline. It sums ordinary pairwise InfoNCE over all
//!   `C(n,2)` modality pairs.
//!
//! All gradients are with respect to the batch features, laid out like the
//! batch itself (`B × n × D`). Per-sample terms may be evaluated in parallel;
//! they are reduced in sample order so the result does not depend on [`Exec`].

use rand::Rng;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::gram_rows;
use crate::similarity::{self, cos_theta_rows, cosine, cosine_gradient, similarity_gradient_rows, EPS_NORM};

/// `B ≥ 2` samples of `n ≥ 2` modality vectors each.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch(Dataset);

impl Batch {
    pub fn new(b: usize, n: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        Batch::from_dataset(Dataset::new(b, n, dim, data)?)
    }

    pub fn from_dataset(ds: Dataset) -> Result<Self> {
        if ds.count() < 2 {
            return Err(Error::Dimension(format!("a batch needs at least 2 samples, got {}", ds.count())));
        }
        if ds.n() < 2 {
            return Err(Error::Dimension(format!("a batch needs at least 2 modalities, got {}", ds.n())));
        }
        Ok(Batch(ds))
    }

    pub fn b(&self) -> usize {
        self.0.count()
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn feature(&self, sample: usize, modality: usize) -> &[f64] {
        self.0.feature(sample, modality)
    }

    pub fn tuple(&self, sample: usize) -> Vec<&[f64]> {
        self.0.tuple(sample)
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_dataset(self) -> Dataset {
        self.0
    }

    fn rows_for(&self, indices: &[usize]) -> Vec<&[f64]> {
        indices.iter().enumerate().map(|(m, &s)| self.feature(s, m)).collect()
    }

    fn offset(&self, sample: usize, modality: usize) -> usize {
        (sample * self.n() + modality) * self.dim()
    }
}

/// How negative n-tuples are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegScheme {
    /// Modality 0 stays the anchor sample; every other modality comes from a
    /// different sample, drawn uniformly.
    #[default]
    AnchorFixed,
    /// All n indices drawn uniformly from the batch; only the exact positive
    /// tuple is rejected.
    ResampleAll,
}

impl std::str::FromStr for NegScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anchor-fixed" => Ok(NegScheme::AnchorFixed),
            "resample-all" => Ok(NegScheme::ResampleAll),
            other => Err(Error::Config(format!("unknown negative scheme {other:?}"))),
        }
    }
}

impl std::fmt::Display for NegScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NegScheme::AnchorFixed => "anchor-fixed",
            NegScheme::ResampleAll => "resample-all",
        })
    }
}

/// For each sample `i` and slot `j < K`, the sample index used for every
/// modality of the `j`-th negative tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegativeAssignment {
    b: usize,
    n: usize,
    k: usize,
    idx: Vec<usize>,
}

impl NegativeAssignment {
    /// Validates a hand-built assignment; `idx` is laid out `[i][j][m]`.
    pub fn from_indices(b: usize, n: usize, k: usize, idx: Vec<usize>) -> Result<Self> {
        if idx.len() != b * k * n {
            return Err(Error::Dimension(format!("expected {} indices, got {}", b * k * n, idx.len())));
        }
        let a = NegativeAssignment { b, n, k, idx };
        for i in 0..b {
            for j in 0..k {
                let t = a.tuple(i, j);
                if t.iter().any(|&s| s >= b) {
                    return Err(Error::Config(format!("negative ({i},{j}) indexes outside the batch")));
                }
                if t.iter().all(|&s| s == i) {
                    return Err(Error::Config(format!("negative ({i},{j}) equals the positive tuple")));
                }
            }
        }
        Ok(a)
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tuple(&self, sample: usize, slot: usize) -> &[usize] {
        let start = (sample * self.k + slot) * self.n;
        &self.idx[start..start + self.n]
    }
}

/// Uniform draw from `[0, b) \ {exclude}`.
fn other_index<R: Rng + ?Sized>(b: usize, exclude: usize, rng: &mut R) -> usize {
    let r = rng.random_range(0..b - 1);
    if r >= exclude {
        r + 1
    } else {
        r
    }
}

/// Draws `K` negative tuples per sample. Slots are independent, so the same
/// negative may appear twice for one sample.
pub fn sample_negatives<R: Rng + ?Sized>(
    b: usize,
    n: usize,
    k: usize,
    scheme: NegScheme,
    rng: &mut R,
) -> Result<NegativeAssignment> {
    if b < 2 {
        return Err(Error::Config(format!("negative sampling needs a batch of at least 2, got {b}")));
    }
    if k < 1 || n < 2 {
        return Err(Error::Config(format!("need K >= 1 and n >= 2, got K={k}, n={n}")));
    }
    let mut idx = Vec::with_capacity(b * k * n);
    for i in 0..b {
        for _ in 0..k {
            match scheme {
                NegScheme::AnchorFixed => {
                    idx.push(i);
                    for _ in 1..n {
                        idx.push(other_index(b, i, rng));
                    }
                }
                NegScheme::ResampleAll => loop {
                    let start = idx.len();
                    idx.extend((0..n).map(|_| rng.random_range(0..b)));
                    if idx[start..].iter().any(|&s| s != i) {
                        break;
                    }
                    idx.truncate(start);
                },
            }
        }
    }
    Ok(NegativeAssignment { b, n, k, idx })
}

/// Temperature, regularization weight, negatives per sample, and the negative scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossConfig {
    pub tau: f64,
    pub lambda: f64,
    pub negatives: usize,
    pub scheme: NegScheme,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            tau: 0.005,
            lambda: 1.0,
            negatives: 7,
            scheme: NegScheme::AnchorFixed,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if self.negatives < 1 {
            return Err(Error::Config("need at least one negative per sample".into()));
        }
        Ok(())
    }
}

/// A scalar loss and its gradient with respect to the batch features.
#[derive(Clone, Debug, PartialEq)]
pub struct LossGrad {
    pub value: f64,
    pub grads: Vec<f64>,
}

/// Result of [`gha_loss`].
#[derive(Clone, Debug, PartialEq)]
pub struct LossBreakdown {
    pub l_contrastive: f64,
    pub l_angular: f64,
    pub l_total: f64,
    pub grads: Vec<f64>,
    /// `cosΘ` of each positive tuple.
    pub cos_pos: Vec<f64>,
}

/// One InfoNCE term `−log softmax(sims/τ)[0]`, where `sims[0]` is the positive.
/// Returns the term and its derivative with respect to every similarity.
///
/// The maximum logit is subtracted before exponentiating; at τ = 0.005 raw
/// exponents reach e²⁰⁰.
pub fn info_nce(sims: &[f64], tau: f64) -> (f64, Vec<f64>) {
    let max = sims.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s / tau));
    let exps: Vec<f64> = sims.iter().map(|&s| (s / tau - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let loss = nce_from_exps(&exps, max, sims[0] / tau);
    let grads = exps
        .iter()
        .enumerate()
        .map(|(t, e)| (e / total - if t == 0 { 1.0 } else { 0.0 }) / tau)
        .collect();
    (loss, grads)
}

/// `log Σ exp(z) − z₀` from shifted exponentials `exps = exp(z − max)`.
/// When the positive holds the maximum this is `ln(1 + rest)`; `ln_1p` keeps
/// it strictly positive even when `rest` is far below machine epsilon.
fn nce_from_exps(exps: &[f64], max: f64, z0: f64) -> f64 {
    let rest: f64 = exps[1..].iter().sum();
    if z0 == max {
        rest.ln_1p()
    } else {
        (max - z0) + (exps[0] + rest).ln()
    }
}

/// [`info_nce`] without the gradient.
pub fn info_nce_value(sims: &[f64], tau: f64) -> f64 {
    let max = sims.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s / tau));
    let exps: Vec<f64> = sims.iter().map(|&s| (s / tau - max).exp()).collect();
    nce_from_exps(&exps, max, sims[0] / tau)
}

fn check_assignment(batch: &Batch, neg: &NegativeAssignment) -> Result<()> {
    if neg.b != batch.b() || neg.n != batch.n() {
        return Err(Error::Dimension(format!(
            "assignment is for B={}, n={} but the batch has B={}, n={}",
            neg.b,
            neg.n,
            batch.b(),
            batch.n()
        )));
    }
    Ok(())
}

/// Per-sample contrastive term with everything needed to scatter its gradient.
struct SampleTerm {
    loss: f64,
    cos_pos: f64,
    /// (tuple indices, dL/dcosΘ, ∂cosΘ/∂rows)
    parts: Vec<(Vec<usize>, f64, Vec<f64>)>,
}

fn contrastive_sample(batch: &Batch, neg: &NegativeAssignment, tau: f64, i: usize) -> Result<SampleTerm> {
    let n = batch.n();
    let mut tuples: Vec<Vec<usize>> = Vec::with_capacity(neg.k + 1);
    tuples.push(vec![i; n]);
    tuples.extend((0..neg.k).map(|j| neg.tuple(i, j).to_vec()));
    let mut sims = Vec::with_capacity(tuples.len());
    let mut row_grads = Vec::with_capacity(tuples.len());
    for t in &tuples {
        let (res, g) = similarity_gradient_rows(&batch.rows_for(t)).map_err(|e| e.at_tuple(t))?;
        sims.push(res.cos_theta);
        row_grads.push(g);
    }
    let (loss, dsims) = info_nce(&sims, tau);
    let parts = tuples
        .into_iter()
        .zip(dsims)
        .zip(row_grads)
        .map(|((t, c), g)| (t, c, g))
        .collect();
    Ok(SampleTerm { loss, cos_pos: sims[0], parts })
}

/// Contrastive term `L_C` and its gradient; also returns the positive similarities.
fn contrastive_with_pos(
    batch: &Batch,
    neg: &NegativeAssignment,
    cfg: &LossConfig,
    exec: Exec,
) -> Result<(LossGrad, Vec<f64>)> {
    cfg.validate()?;
    check_assignment(batch, neg)?;
    let (b, n, d) = (batch.b(), batch.n(), batch.dim());
    let terms = exec.try_map(b, |i| contrastive_sample(batch, neg, cfg.tau, i))?;
    let inv_b = 1.0 / b as f64;
    let mut grads = vec![0.0; b * n * d];
    let mut total = 0.0;
    let mut cos_pos = Vec::with_capacity(b);
    for term in &terms {
        total += term.loss;
        cos_pos.push(term.cos_pos);
        for (t, coef, g) in &term.parts {
            let c = coef * inv_b;
            for (m, &s) in t.iter().enumerate() {
                let off = batch.offset(s, m);
                grads[off..off + d]
                    .iter_mut()
                    .zip(&g[m * d..(m + 1) * d])
                    .for_each(|(o, v)| *o += c * v);
            }
        }
    }
    Ok((LossGrad { value: total * inv_b, grads }, cos_pos))
}

/// `L_C = −(1/B) Σ_i log[ e^{cosΘ_pos/τ} / (e^{cosΘ_pos/τ} + Σ_j e^{cosΘ_neg,j/τ}) ]`
/// with its gradient.
pub fn gha_contrastive(batch: &Batch, neg: &NegativeAssignment, cfg: &LossConfig, exec: Exec) -> Result<LossGrad> {
    contrastive_with_pos(batch, neg, cfg, exec).map(|(lg, _)| lg)
}

/// `L_C` only; no gradient work.
pub fn gha_contrastive_value(batch: &Batch, neg: &NegativeAssignment, cfg: &LossConfig, exec: Exec) -> Result<f64> {
    cfg.validate()?;
    check_assignment(batch, neg)?;
    let n = batch.n();
    let terms = exec.try_map(batch.b(), |i| {
        let mut sims = Vec::with_capacity(neg.k + 1);
        let pos = vec![i; n];
        sims.push(cos_theta_rows(&batch.rows_for(&pos)).map_err(|e| e.at_sample(i))?);
        for j in 0..neg.k {
            let t = neg.tuple(i, j);
            sims.push(cos_theta_rows(&batch.rows_for(t)).map_err(|e| e.at_tuple(t))?);
        }
        Ok::<_, Error>(info_nce_value(&sims, cfg.tau))
    })?;
    Ok(terms.iter().sum::<f64>() / batch.b() as f64)
}

/// Pairwise cosines of sample `i`, in upper-triangle order, with the row norms.
fn pairwise_cosines(batch: &Batch, i: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = batch.tuple(i);
    let g = gram_rows(&rows)?;
    let norms: Vec<f64> = g.diagonal().map(f64::sqrt).collect();
    if let Some((m, &norm)) = norms.iter().enumerate().find(|(_, &v)| v <= EPS_NORM) {
        return Err(Error::DegenerateVector { sample: i, modality: m, norm });
    }
    let n = rows.len();
    let mut c = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            c.push(g.get(a, b) / (norms[a] * norms[b]));
        }
    }
    Ok((c, norms))
}

/// `L_A = (1/B) Σ_i (1/C(n,2)) Σ_{m<k} (c_i^{(m,k)} − c̄_i)²` over the positive
/// tuples, with its gradient.
pub fn angular_equilibrium(batch: &Batch, exec: Exec) -> Result<LossGrad> {
    let (b, n, d) = (batch.b(), batch.n(), batch.dim());
    let per_sample = exec.try_map(b, |i| {
        let (c, norms) = pairwise_cosines(batch, i)?;
        let pairs = c.len() as f64;
        let mean = c.iter().sum::<f64>() / pairs;
        let value = c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / pairs;
        // The deviations sum to zero, so the mean contributes nothing to dL/dc.
        let rows = batch.tuple(i);
        let mut g = vec![0.0; n * d];
        let mut p = 0;
        for m in 0..n {
            for k in m + 1..n {
                let dc = 2.0 * (c[p] - mean) / pairs;
                p += 1;
                if dc == 0.0 {
                    continue;
                }
                let inv = 1.0 / (norms[m] * norms[k]);
                let cm = c[p - 1] / (norms[m] * norms[m]);
                let ck = c[p - 1] / (norms[k] * norms[k]);
                for t in 0..d {
                    g[m * d + t] += dc * (rows[k][t] * inv - cm * rows[m][t]);
                    g[k * d + t] += dc * (rows[m][t] * inv - ck * rows[k][t]);
                }
            }
        }
        Ok::<_, Error>((value, g))
    })?;
    let inv_b = 1.0 / b as f64;
    let mut grads = Vec::with_capacity(b * n * d);
    let mut total = 0.0;
    for (v, g) in per_sample {
        total += v;
        grads.extend(g.into_iter().map(|x| x * inv_b));
    }
    Ok(LossGrad { value: total * inv_b, grads })
}

/// `L_GHA = L_C + λ·L_A` with the summed gradient.
pub fn gha_loss(batch: &Batch, neg: &NegativeAssignment, cfg: &LossConfig, exec: Exec) -> Result<LossBreakdown> {
    let (contrastive, cos_pos) = contrastive_with_pos(batch, neg, cfg, exec)?;
    let angular = angular_equilibrium(batch, exec)?;
    let grads = contrastive
        .grads
        .iter()
        .zip(&angular.grads)
        .map(|(c, a)| c + cfg.lambda * a)
        .collect();
    Ok(LossBreakdown {
        l_contrastive: contrastive.value,
        l_angular: angular.value,
        l_total: contrastive.value + cfg.lambda * angular.value,
        grads,
        cos_pos,
    })
}

/// [`angular_equilibrium`] value only.
pub fn angular_equilibrium_value(batch: &Batch, exec: Exec) -> Result<f64> {
    let per_sample = exec.try_map(batch.b(), |i| {
        let (c, _) = pairwise_cosines(batch, i)?;
        let pairs = c.len() as f64;
        let mean = c.iter().sum::<f64>() / pairs;
        Ok::<_, Error>(c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / pairs)
    })?;
    Ok(per_sample.iter().sum::<f64>() / batch.b() as f64)
}

/// [`gha_loss`] total only; no gradient work.
pub fn gha_loss_value(batch: &Batch, neg: &NegativeAssignment, cfg: &LossConfig, exec: Exec) -> Result<f64> {
    Ok(gha_contrastive_value(batch, neg, cfg, exec)? + cfg.lambda * angular_equilibrium_value(batch, exec)?)
}

/// Modality pairs `(m, k)`, `m < k`, in the order [`dual_loss`] visits them.
pub fn modality_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|m| (m + 1..n).map(move |k| (m, k))).collect()
}

/// Negatives for the pairwise baseline: for pair `p = (m, k)`, sample `i`, and
/// slot `j`, the sample whose modality-`k` feature replaces sample `i`'s.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairNegatives {
    b: usize,
    n: usize,
    k: usize,
    idx: Vec<usize>,
}

impl PairNegatives {
    /// Validates a hand-built table laid out `[pair][i][j]`.
    pub fn from_indices(b: usize, n: usize, k: usize, idx: Vec<usize>) -> Result<Self> {
        let pairs = n * (n - 1) / 2;
        if idx.len() != pairs * b * k {
            return Err(Error::Dimension(format!("expected {} indices, got {}", pairs * b * k, idx.len())));
        }
        let out = PairNegatives { b, n, k, idx };
        for p in 0..pairs {
            for i in 0..b {
                if out.slots(p, i).iter().any(|&s| s >= b || s == i) {
                    return Err(Error::Config(format!("pair {p}, sample {i}: negative must be another sample")));
                }
            }
        }
        Ok(out)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn slots(&self, pair: usize, sample: usize) -> &[usize] {
        let start = (pair * self.b + sample) * self.k;
        &self.idx[start..start + self.k]
    }
}

pub fn sample_pair_negatives<R: Rng + ?Sized>(b: usize, n: usize, k: usize, rng: &mut R) -> Result<PairNegatives> {
    if b < 2 || n < 2 || k < 1 {
        return Err(Error::Config(format!("need B >= 2, n >= 2, K >= 1; got B={b}, n={n}, K={k}")));
    }
    let pairs = n * (n - 1) / 2;
    let mut idx = Vec::with_capacity(pairs * b * k);
    for _ in 0..pairs {
        for i in 0..b {
            for _ in 0..k {
                idx.push(other_index(b, i, rng));
            }
        }
    }
    Ok(PairNegatives { b, n, k, idx })
}

fn check_pair_negatives(batch: &Batch, neg: &PairNegatives) -> Result<()> {
    if neg.b != batch.b() || neg.n != batch.n() {
        return Err(Error::Dimension("pair negatives do not match the batch shape".into()));
    }
    Ok(())
}

/// Pairwise InfoNCE summed over all modality pairs, with ordinary cosine
/// similarity and the gradient with respect to the batch.
pub fn dual_loss(batch: &Batch, neg: &PairNegatives, cfg: &LossConfig, exec: Exec) -> Result<LossGrad> {
    cfg.validate()?;
    check_pair_negatives(batch, neg)?;
    let (b, n, d) = (batch.b(), batch.n(), batch.dim());
    let pairs = modality_pairs(n);
    // Per sample: loss per pair, and (sample, modality, coefficient, gradient) pieces.
    type Piece = (usize, usize, f64, Vec<f64>);
    let per_sample = exec.try_map(b, |i| {
        let mut losses = Vec::with_capacity(pairs.len());
        let mut pieces: Vec<Piece> = Vec::new();
        for (p, &(m, k)) in pairs.iter().enumerate() {
            let anchor = batch.feature(i, m);
            let others: Vec<usize> = std::iter::once(i).chain(neg.slots(p, i).iter().copied()).collect();
            let mut sims = Vec::with_capacity(others.len());
            let mut grads = Vec::with_capacity(others.len());
            for &s in &others {
                let (c, ga, gb) = cosine_gradient(anchor, batch.feature(s, k)).map_err(|e| match e {
                    Error::DegenerateVector { modality, norm, .. } => Error::DegenerateVector {
                        sample: if modality == 0 { i } else { s },
                        modality: if modality == 0 { m } else { k },
                        norm,
                    },
                    other => other,
                })?;
                sims.push(c);
                grads.push((ga, gb));
            }
            let (loss, dsims) = info_nce(&sims, cfg.tau);
            losses.push(loss);
            for ((&s, ds), (ga, gb)) in others.iter().zip(dsims).zip(grads) {
                pieces.push((i, m, ds, ga));
                pieces.push((s, k, ds, gb));
            }
        }
        Ok::<_, Error>((losses, pieces))
    })?;
    let inv_b = 1.0 / b as f64;
    let mut pair_totals = vec![0.0; pairs.len()];
    let mut grads = vec![0.0; b * n * d];
    for (losses, pieces) in &per_sample {
        for (acc, l) in pair_totals.iter_mut().zip(losses) {
            *acc += l;
        }
        for (s, m, coef, g) in pieces {
            let off = batch.offset(*s, *m);
            let c = coef * inv_b;
            grads[off..off + d].iter_mut().zip(g).for_each(|(o, v)| *o += c * v);
        }
    }
    let value = pair_totals.iter().map(|t| t * inv_b).sum();
    Ok(LossGrad { value, grads })
}

/// [`dual_loss`] value only.
pub fn dual_loss_value(batch: &Batch, neg: &PairNegatives, cfg: &LossConfig, exec: Exec) -> Result<f64> {
    cfg.validate()?;
    check_pair_negatives(batch, neg)?;
    let pairs = modality_pairs(batch.n());
    let per_sample = exec.try_map(batch.b(), |i| {
        pairs
            .iter()
            .enumerate()
            .map(|(p, &(m, k))| {
                let anchor = batch.feature(i, m);
                let sims = std::iter::once(i)
                    .chain(neg.slots(p, i).iter().copied())
                    .map(|s| cosine(anchor, batch.feature(s, k)))
                    .collect::<Result<Vec<f64>>>()
                    .map_err(|e| e.at_sample(i))?;
                Ok(info_nce_value(&sims, cfg.tau))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let inv_b = 1.0 / batch.b() as f64;
    let mut pair_totals = vec![0.0; pairs.len()];
    for losses in &per_sample {
        for (acc, l) in pair_totals.iter_mut().zip(losses) {
            *acc += l;
        }
    }
    Ok(pair_totals.iter().map(|t| t * inv_b).sum())
}

/// Mean `cosΘ` of the positive tuples of a batch.
pub fn mean_positive_similarity(batch: &Batch, exec: Exec) -> Result<f64> {
    let sims = exec.try_map(batch.b(), |i| similarity::cos_theta_rows(&batch.tuple(i)).map_err(|e| e.at_sample(i)))?;
    Ok(sims.iter().sum::<f64>() / sims.len() as f64)
}
