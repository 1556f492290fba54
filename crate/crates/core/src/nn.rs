//! Three-layer ReLU encoders, hand-written backpropagation, Adam, and the
//! multimodal alignment training loop.
//!
//! Every encoder computes `z = relu(W₃·relu(W₂·relu(W₁x + b₁) + b₂) + b₃)`. The
//! final ReLU keeps embeddings entry-wise nonnegative, which the joint
//! similarity needs because it cannot distinguish `f` from `−f`.

use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::losses::{gha_loss, sample_negatives, Batch, LossBreakdown, LossConfig, NegativeAssignment};
use crate::rng;
use crate::similarity::{cos_theta_rows, EPS_NORM};

/// Layer widths of one encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EncoderShape {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl EncoderShape {
    /// All three layers `dim × dim`.
    pub fn square(dim: usize) -> Self {
        EncoderShape { input: dim, hidden: dim, output: dim }
    }

    /// `(out, in)` of each layer.
    pub fn layer_dims(&self) -> [(usize, usize); 3] {
        [(self.hidden, self.input), (self.hidden, self.hidden), (self.output, self.hidden)]
    }
}

/// One affine layer with its Adam moment estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub m_weight: Array2<f64>,
    pub v_weight: Array2<f64>,
    pub m_bias: Array1<f64>,
    pub v_bias: Array1<f64>,
}

impl Layer {
    fn new(weight: Array2<f64>, bias: Array1<f64>) -> Self {
        let (o, i) = weight.dim();
        Layer {
            m_weight: Array2::zeros((o, i)),
            v_weight: Array2::zeros((o, i)),
            m_bias: Array1::zeros(o),
            v_bias: Array1::zeros(o),
            weight,
            bias,
        }
    }
}

/// Parameters of one encoder plus optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub shape: EncoderShape,
    pub layers: Vec<Layer>,
    /// Adam steps taken so far.
    pub step: u64,
}

impl EncoderParams {
    /// Weights and biases uniform in `±1/√fan_in`.
    pub fn init<R: Rng + ?Sized>(shape: EncoderShape, rng: &mut R) -> Self {
        let layers = shape
            .layer_dims()
            .iter()
            .map(|&(o, i)| {
                let bound = 1.0 / (i as f64).sqrt();
                let w = Array2::from_shape_fn((o, i), |_| rng.random_range(-bound..bound));
                let b = Array1::from_shape_fn(o, |_| rng.random_range(-bound..bound));
                Layer::new(w, b)
            })
            .collect();
        EncoderParams { shape, layers, step: 0 }
    }

    pub fn zeros(shape: EncoderShape) -> Self {
        let layers = shape
            .layer_dims()
            .iter()
            .map(|&(o, i)| Layer::new(Array2::zeros((o, i)), Array1::zeros(o)))
            .collect();
        EncoderParams { shape, layers, step: 0 }
    }

    /// Builds an encoder from explicit `(weight, bias)` pairs.
    pub fn from_weights(weights: Vec<(Array2<f64>, Array1<f64>)>) -> Result<Self> {
        if weights.len() != 3 {
            return Err(Error::Dimension(format!("an encoder has 3 layers, got {}", weights.len())));
        }
        let shape = EncoderShape {
            input: weights[0].0.ncols(),
            hidden: weights[0].0.nrows(),
            output: weights[2].0.nrows(),
        };
        for ((w, b), (o, i)) in weights.iter().zip(shape.layer_dims()) {
            if w.dim() != (o, i) || b.len() != o {
                return Err(Error::Dimension(format!(
                    "layer shape {:?}/{} does not chain as {o}x{i}",
                    w.dim(),
                    b.len()
                )));
            }
        }
        Ok(EncoderParams {
            shape,
            layers: weights.into_iter().map(|(w, b)| Layer::new(w, b)).collect(),
            step: 0,
        })
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Parameters flattened as `W₁, b₁, W₂, b₂, W₃, b₃` (row-major weights).
    pub fn flat_params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    /// Inverse of [`EncoderParams::flat_params`]. Optimizer state is untouched.
    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Dimension(format!("expected {} parameters, got {}", self.num_params(), flat.len())));
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.weight.iter_mut().chain(l.bias.iter_mut()).for_each(|p| *p = it.next().unwrap_or(0.0));
        }
        Ok(())
    }
}

/// Activations saved by the forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    input: Array2<f64>,
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

/// Forward pass for a batch of inputs (one per row).
pub fn encoder_forward_batch(params: &EncoderParams, x: ArrayView2<'_, f64>) -> (Array2<f64>, ForwardCache) {
    let mut pre = Vec::with_capacity(3);
    let mut post = Vec::with_capacity(3);
    let mut act = x.to_owned();
    for layer in &params.layers {
        let mut a = act.dot(&layer.weight.t());
        a += &layer.bias;
        let h = a.mapv(|v| v.max(0.0));
        pre.push(a);
        post.push(h.clone());
        act = h;
    }
    (act, ForwardCache { input: x.to_owned(), pre, post })
}

/// Forward pass for a single input vector.
pub fn encoder_forward(params: &EncoderParams, x: &[f64]) -> (Vec<f64>, ForwardCache) {
    let view = ArrayView2::from_shape((1, x.len()), x).expect("one row");
    let (z, cache) = encoder_forward_batch(params, view);
    (z.into_iter().collect(), cache)
}

/// Parameter gradients of one encoder.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl EncoderGrads {
    pub fn zeros(shape: EncoderShape) -> Self {
        let dims = shape.layer_dims();
        EncoderGrads {
            weights: dims.iter().map(|&(o, i)| Array2::zeros((o, i))).collect(),
            biases: dims.iter().map(|&(o, _)| Array1::zeros(o)).collect(),
        }
    }

    /// Same ordering as [`EncoderParams::flat_params`].
    pub fn flat(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}

/// Backpropagates `dz = ∂loss/∂z` (one row per cached input). Returns the
/// parameter gradients and `∂loss/∂x`. The ReLU derivative at 0 is 0.
pub fn encoder_backward(
    params: &EncoderParams,
    cache: &ForwardCache,
    dz: ArrayView2<'_, f64>,
) -> (EncoderGrads, Array2<f64>) {
    let mut weights = Vec::with_capacity(3);
    let mut biases = Vec::with_capacity(3);
    let mut upstream = dz.to_owned();
    for l in (0..params.layers.len()).rev() {
        let mut dpre = upstream;
        Zip::from(&mut dpre).and(&cache.pre[l]).for_each(|d, &p| {
            if p <= 0.0 {
                *d = 0.0;
            }
        });
        let below = if l == 0 { &cache.input } else { &cache.post[l - 1] };
        weights.push(dpre.t().dot(below));
        biases.push(dpre.sum_axis(Axis(0)));
        upstream = dpre.dot(&params.layers[l].weight);
    }
    weights.reverse();
    biases.reverse();
    (EncoderGrads { weights, biases }, upstream)
}

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: DEFAULT_SIM_LEARNING_RATE,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of every parameter.
pub fn adam_step(params: &mut EncoderParams, grads: &EncoderGrads, cfg: &AdamConfig) {
    params.step += 1;
    let t = params.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let (b1, b2, lr, eps) = (cfg.beta1, cfg.beta2, cfg.learning_rate, cfg.epsilon);
    let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: &f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };
    for ((layer, gw), gb) in params.layers.iter_mut().zip(&grads.weights).zip(&grads.biases) {
        Zip::from(&mut layer.weight)
            .and(&mut layer.m_weight)
            .and(&mut layer.v_weight)
            .and(gw)
            .for_each(update);
        Zip::from(&mut layer.bias)
            .and(&mut layer.m_bias)
            .and(&mut layer.v_bias)
            .and(gb)
            .for_each(update);
    }
}

/// Learning rate used by the alignment simulation unless overridden.
pub const DEFAULT_SIM_LEARNING_RATE: f64 = 1e-4;
/// Temperature used by the alignment simulation unless overridden.
pub const DEFAULT_SIM_TAU: f64 = 0.2;

/// Everything that controls a training run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub loss: LossConfig,
    pub seed: u64,
    /// Hidden width of every encoder.
    pub hidden: usize,
    /// Stop once the epoch's mean positive similarity exceeds this.
    pub early_stop: Option<f64>,
    /// Abort when more than this fraction of samples has an all-zero embedding
    /// for `DEAD_EPOCH_LIMIT` consecutive epochs.
    pub max_skip_rate: f64,
    #[serde(skip)]
    pub exec: Exec,
}

/// Consecutive epochs above `max_skip_rate` that abort training.
pub const DEAD_EPOCH_LIMIT: usize = 3;

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 64,
            adam: AdamConfig::default(),
            loss: LossConfig { tau: DEFAULT_SIM_TAU, ..LossConfig::default() },
            seed: 42,
            hidden: 256,
            early_stop: Some(0.99),
            max_skip_rate: 0.01,
            exec: Exec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if !(self.adam.learning_rate >= 0.0 && self.adam.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be nonnegative, got {}", self.adam.learning_rate)));
        }
        if self.batch_size < 2 {
            return Err(Error::Config(format!("batch size must be at least 2, got {}", self.batch_size)));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) || self.adam.epsilon <= 0.0 {
            return Err(Error::Config("Adam betas must lie in [0, 1) and epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Runs every encoder on its modality's inputs.
fn forward_all(
    encoders: &[EncoderParams],
    inputs: &[Array2<f64>],
    exec: Exec,
) -> Vec<(Array2<f64>, ForwardCache)> {
    exec.map(encoders.len(), |m| encoder_forward_batch(&encoders[m], inputs[m].view()))
}

/// Rows whose embedding is usable in every modality.
fn alive_rows(outputs: &[&Array2<f64>]) -> Vec<usize> {
    let rows = outputs[0].nrows();
    (0..rows)
        .filter(|&r| outputs.iter().all(|z| z.row(r).dot(&z.row(r)).sqrt() > EPS_NORM))
        .collect()
}

fn gather_batch(outputs: &[&Array2<f64>], rows: &[usize]) -> Result<Batch> {
    let n = outputs.len();
    let d = outputs[0].ncols();
    let mut data = Vec::with_capacity(rows.len() * n * d);
    for &r in rows {
        for z in outputs {
            data.extend(z.row(r).iter());
        }
    }
    Batch::new(rows.len(), n, d, data)
}

/// Splits batch gradients back into per-modality `dz` matrices over all rows.
fn scatter_dz(grads: &[f64], rows: &[usize], total_rows: usize, n: usize, d: usize) -> Vec<Array2<f64>> {
    let mut dz = vec![Array2::zeros((total_rows, d)); n];
    for (bi, &r) in rows.iter().enumerate() {
        for (m, out) in dz.iter_mut().enumerate() {
            let src = &grads[(bi * n + m) * d..(bi * n + m + 1) * d];
            out.row_mut(r).iter_mut().zip(src).for_each(|(o, v)| *o = *v);
        }
    }
    dz
}

fn backward_all(
    encoders: &[EncoderParams],
    caches: &[&ForwardCache],
    dz: &[Array2<f64>],
    exec: Exec,
) -> Vec<EncoderGrads> {
    exec.map(encoders.len(), |m| encoder_backward(&encoders[m], caches[m], dz[m].view()).0)
}

/// Loss and parameter gradients of the full pipeline (encoders → batch →
/// GHA loss) for a fixed negative assignment. Every embedding must be usable.
pub fn pipeline_loss_grad(
    encoders: &[EncoderParams],
    inputs: &[Array2<f64>],
    neg: &NegativeAssignment,
    loss: &LossConfig,
    exec: Exec,
) -> Result<(LossBreakdown, Vec<EncoderGrads>)> {
    let fwd = forward_all(encoders, inputs, exec);
    let outputs: Vec<&Array2<f64>> = fwd.iter().map(|(z, _)| z).collect();
    let rows: Vec<usize> = (0..outputs[0].nrows()).collect();
    let batch = gather_batch(&outputs, &rows)?;
    let breakdown = gha_loss(&batch, neg, loss, exec)?;
    let dz = scatter_dz(&breakdown.grads, &rows, rows.len(), encoders.len(), batch.dim());
    let caches: Vec<&ForwardCache> = fwd.iter().map(|(_, c)| c).collect();
    let grads = backward_all(encoders, &caches, &dz, exec);
    Ok((breakdown, grads))
}

/// Per-modality input matrices for a set of dataset rows.
pub fn modality_inputs(dataset: &Dataset, samples: &[usize]) -> Vec<Array2<f64>> {
    let d = dataset.dim();
    (0..dataset.n())
        .map(|m| {
            let mut x = Array2::zeros((samples.len(), d));
            for (r, &s) in samples.iter().enumerate() {
                x.row_mut(r).iter_mut().zip(dataset.feature(s, m)).for_each(|(o, v)| *o = *v);
            }
            x
        })
        .collect()
}

const EVAL_CHUNK: usize = 512;

/// Embeds every sample; one `count × output` matrix per modality.
pub fn embed_dataset(encoders: &[EncoderParams], dataset: &Dataset, exec: Exec) -> Vec<Array2<f64>> {
    let out_dim = encoders[0].shape.output;
    let mut out: Vec<Array2<f64>> = (0..encoders.len()).map(|_| Array2::zeros((dataset.count(), out_dim))).collect();
    let ids: Vec<usize> = (0..dataset.count()).collect();
    for chunk in ids.chunks(EVAL_CHUNK) {
        let inputs = modality_inputs(dataset, chunk);
        for (m, (z, _)) in forward_all(encoders, &inputs, exec).into_iter().enumerate() {
            for (r, &s) in chunk.iter().enumerate() {
                out[m].row_mut(s).assign(&z.row(r));
            }
        }
    }
    out
}

/// Mean `cosΘ` over positive tuples, skipping samples with an all-zero
/// embedding. Returns the mean and how many samples were skipped.
pub fn mean_cos_pos(encoders: &[EncoderParams], dataset: &Dataset, exec: Exec) -> (f64, usize) {
    let emb = embed_dataset(encoders, dataset, exec);
    let sims = exec.map(dataset.count(), |s| {
        let rows: Vec<&[f64]> = emb.iter().map(|z| z.row(s).to_slice().expect("row-major")).collect();
        cos_theta_rows(&rows).ok()
    });
    let valid: Vec<f64> = sims.iter().flatten().copied().collect();
    let skipped = sims.len() - valid.len();
    let mean = if valid.is_empty() { 0.0 } else { valid.iter().sum::<f64>() / valid.len() as f64 };
    (mean, skipped)
}

/// Per-epoch training summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub l_contrastive: f64,
    pub l_angular: f64,
    pub l_total: f64,
    /// Over the whole dataset, after the epoch's updates.
    pub mean_cos_pos: f64,
    /// Samples dropped from gradient steps for an all-zero embedding.
    pub skipped: usize,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub encoders: Vec<EncoderParams>,
    pub history: Vec<EpochRecord>,
    pub initial_mean_cos_pos: f64,
    pub early_stopped: bool,
}

/// Freshly initialized encoders, one per modality, each from its own stream.
pub fn init_encoders(shape: EncoderShape, n: usize, seed: u64) -> Vec<EncoderParams> {
    (0..n)
        .map(|m| EncoderParams::init(shape, &mut rng::stream(seed, rng::streams::INIT_BASE + m as u64)))
        .collect()
}

/// Trains one encoder per modality with the GHA loss.
///
/// Each epoch shuffles the samples, then for every mini-batch: embed all
/// modalities, drop samples with an all-zero embedding, draw negatives, compute
/// the loss, backpropagate into each encoder, and take one Adam step per
/// encoder. A trailing batch with fewer than two samples is skipped.
pub fn train_alignment(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_alignment_with(dataset, cfg, |_| {})
}

/// [`train_alignment`] that reports every finished epoch to `on_epoch`.
pub fn train_alignment_with(
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.n() < 2 {
        return Err(Error::Config("alignment needs at least 2 modalities".into()));
    }
    let shape = EncoderShape { input: dataset.dim(), hidden: cfg.hidden, output: dataset.dim() };
    let n = dataset.n();
    let mut encoders = init_encoders(shape, n, cfg.seed);
    let mut shuffle_rng = rng::stream(cfg.seed, rng::streams::SHUFFLE);
    let mut neg_rng = rng::stream(cfg.seed, rng::streams::NEGATIVES);
    let (initial_mean_cos_pos, _) = mean_cos_pos(&encoders, dataset, cfg.exec);

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..dataset.count()).collect();
    let mut dead_streak = 0;
    let mut early_stopped = false;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut lc, mut la, mut lt, mut batches, mut skipped) = (0.0, 0.0, 0.0, 0usize, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let inputs = modality_inputs(dataset, chunk);
            let fwd = forward_all(&encoders, &inputs, cfg.exec);
            let outputs: Vec<&Array2<f64>> = fwd.iter().map(|(z, _)| z).collect();
            let rows = alive_rows(&outputs);
            skipped += chunk.len() - rows.len();
            if rows.len() < 2 {
                continue;
            }
            let batch = gather_batch(&outputs, &rows)?;
            let neg = sample_negatives(rows.len(), n, cfg.loss.negatives, cfg.loss.scheme, &mut neg_rng)?;
            let loss = gha_loss(&batch, &neg, &cfg.loss, cfg.exec)?;
            if !loss.l_total.is_finite() || loss.grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training {
                    epoch,
                    reason: format!(
                        "non-finite loss (L_C = {}, L_A = {}) after {batches} batches",
                        loss.l_contrastive, loss.l_angular
                    ),
                });
            }
            let dz = scatter_dz(&loss.grads, &rows, chunk.len(), n, batch.dim());
            let caches: Vec<&ForwardCache> = fwd.iter().map(|(_, c)| c).collect();
            let grads = backward_all(&encoders, &caches, &dz, cfg.exec);
            for (enc, g) in encoders.iter_mut().zip(&grads) {
                adam_step(enc, g, &cfg.adam);
            }
            lc += loss.l_contrastive;
            la += loss.l_angular;
            lt += loss.l_total;
            batches += 1;
        }
        let skip_rate = skipped as f64 / dataset.count() as f64;
        dead_streak = if skip_rate > cfg.max_skip_rate { dead_streak + 1 } else { 0 };
        if dead_streak >= DEAD_EPOCH_LIMIT {
            return Err(Error::Training {
                epoch,
                reason: format!(
                    "{skipped} of {} samples had an all-zero embedding ({:.2}%), above {:.2}% for {DEAD_EPOCH_LIMIT} epochs",
                    dataset.count(),
                    100.0 * skip_rate,
                    100.0 * cfg.max_skip_rate
                ),
            });
        }
        if batches == 0 {
            return Err(Error::Training { epoch, reason: "no usable mini-batch".into() });
        }
        let (mean_cos, _) = mean_cos_pos(&encoders, dataset, cfg.exec);
        let k = batches as f64;
        history.push(EpochRecord {
            epoch,
            l_contrastive: lc / k,
            l_angular: la / k,
            l_total: lt / k,
            mean_cos_pos: mean_cos,
            skipped,
        });
        on_epoch(history.last().expect("just pushed"));
        if cfg.early_stop.is_some_and(|t| mean_cos > t) {
            early_stopped = true;
            break;
        }
    }
    Ok(TrainOutcome { encoders, history, initial_mean_cos_pos, early_stopped })
}

const CHECKPOINT_MAGIC: &str = "jgcs-encoders";
const CHECKPOINT_VERSION: u32 = 1;

/// Writes encoders, including Adam state, as text. Floats carry 17
/// significant digits so a reload is exact.
pub fn save_checkpoint<W: Write>(mut w: W, encoders: &[EncoderParams], seed: u64) -> Result<()> {
    writeln!(w, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}")?;
    writeln!(w, "seed {seed}")?;
    writeln!(w, "encoders {}", encoders.len())?;
    for enc in encoders {
        let s = enc.shape;
        writeln!(w, "shape {} {} {}", s.input, s.hidden, s.output)?;
        writeln!(w, "step {}", enc.step)?;
        for l in &enc.layers {
            for block in [&l.weight, &l.m_weight, &l.v_weight] {
                for row in block.rows() {
                    write_values(&mut w, row.iter())?;
                }
            }
            for block in [&l.bias, &l.m_bias, &l.v_bias] {
                write_values(&mut w, block.iter())?;
            }
        }
    }
    Ok(())
}

fn write_values<'a, W: Write>(w: &mut W, values: impl Iterator<Item = &'a f64>) -> Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            w.write_all(b" ")?;
        }
        write!(w, "{v:.16e}")?;
        first = false;
    }
    w.write_all(b"\n")?;
    Ok(())
}

/// Reads a file written by [`save_checkpoint`]; returns the encoders and seed.
pub fn load_checkpoint<R: BufRead>(r: R) -> Result<(Vec<EncoderParams>, u64)> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = move || -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i, l)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::Parse { line: 0, message: "unexpected end of checkpoint".into() }),
        }
    };
    let header = |(line, text): (usize, String), key: &str| -> Result<Vec<String>> {
        let mut parts = text.split_whitespace().map(str::to_owned);
        if parts.next().as_deref() != Some(key) {
            return Err(Error::Parse { line, message: format!("expected {key:?}") });
        }
        Ok(parts.collect())
    };
    let num = |line: usize, s: &str| -> Result<u64> {
        s.parse().map_err(|_| Error::Parse { line, message: format!("bad integer {s:?}") })
    };

    let first = next()?;
    let line = first.0;
    let magic = header(first, CHECKPOINT_MAGIC)?;
    if magic.first().map(String::as_str) != Some("1") {
        return Err(Error::Parse { line, message: format!("unsupported checkpoint version {magic:?}") });
    }
    let (line, text) = next()?;
    let seed = num(line, header((line, text), "seed")?.first().map_or("", String::as_str))?;
    let (line, text) = next()?;
    let count = num(line, header((line, text), "encoders")?.first().map_or("", String::as_str))? as usize;

    let mut encoders = Vec::with_capacity(count);
    for _ in 0..count {
        let (line, text) = next()?;
        let dims = header((line, text), "shape")?;
        if dims.len() != 3 {
            return Err(Error::Parse { line, message: "shape needs 3 integers".into() });
        }
        let shape = EncoderShape {
            input: num(line, &dims[0])? as usize,
            hidden: num(line, &dims[1])? as usize,
            output: num(line, &dims[2])? as usize,
        };
        let (line, text) = next()?;
        let step = num(line, header((line, text), "step")?.first().map_or("", String::as_str))?;
        let mut enc = EncoderParams::zeros(shape);
        enc.step = step;
        for l in &mut enc.layers {
            for block in [&mut l.weight, &mut l.m_weight, &mut l.v_weight] {
                for mut row in block.rows_mut() {
                    let (line, text) = next()?;
                    parse_values(line, &text, row.iter_mut())?;
                }
            }
            for block in [&mut l.bias, &mut l.m_bias, &mut l.v_bias] {
                let (line, text) = next()?;
                parse_values(line, &text, block.iter_mut())?;
            }
        }
        encoders.push(enc);
    }
    Ok((encoders, seed))
}

fn parse_values<'a>(line: usize, text: &str, slots: impl ExactSizeIterator<Item = &'a mut f64>) -> Result<()> {
    let expected = slots.len();
    let mut fields = text.split_whitespace();
    for slot in slots {
        let field = fields
            .next()
            .ok_or_else(|| Error::Parse { line, message: format!("expected {expected} values") })?;
        *slot = field
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("bad number {field:?}") })?;
    }
    if fields.next().is_some() {
        return Err(Error::Parse { line, message: format!("more than {expected} values") });
    }
    Ok(())
}
