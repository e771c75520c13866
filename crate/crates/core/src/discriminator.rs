//! Feed-forward discriminator that scores how data-like a latent point is.
//!
//! Hidden layers use ReLU, the output a sigmoid. The net is trained with
//! binary cross-entropy to separate dataset points (label 1) from fresh
//! draws of the standard normal prior (label 0), using Adam.
//!
//! Output logits are clamped to `[-LOGIT_CLAMP, LOGIT_CLAMP]` before the
//! sigmoid so scores stay strictly inside `(0, 1)`.

use std::fmt::Write as _;
use std::path::Path as FsPath;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dataset::{write_file, LatentDataset};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mvn::{standard_normal, RngState};

pub const LOGIT_CLAMP: f64 = 30.0;
pub const DEFAULT_HIDDEN: [usize; 3] = [100, 200, 500];

const WEIGHTS_MAGIC: &str = "pfbi-discriminator v1";

/// Anything that maps a latent point to a score in `(0, 1)`.
pub trait Scorer: Sync {
    /// Expected input dimension, if fixed.
    fn input_dim(&self) -> Option<usize>;

    fn score(&self, z: &[f64]) -> f64;

    fn score_batch(&self, points: &[&[f64]]) -> Vec<f64> {
        points.iter().map(|p| self.score(p)).collect()
    }
}

/// `f(z) = c` everywhere.
#[derive(Clone, Copy, Debug)]
pub struct ConstantScorer(pub f64);

impl Scorer for ConstantScorer {
    fn input_dim(&self) -> Option<usize> {
        None
    }

    fn score(&self, _z: &[f64]) -> f64 {
        self.0
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-log sigmoid(x)`, stable for large |x|.
#[inline]
fn softplus_neg(x: f64) -> f64 {
    (-x).max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Binary cross-entropy of a logit against a 0/1 label.
#[inline]
fn bce_logit(logit: f64, label: f64) -> f64 {
    label * softplus_neg(logit) + (1.0 - label) * softplus_neg(-logit)
}

/// The standard normal prior `N(0, I_d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PriorSpec {
    dim: usize,
}

impl PriorSpec {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("prior dimension must be at least 1"));
        }
        Ok(PriorSpec { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim).map(|_| standard_normal(rng)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Dense {
    /// `out x in`
    weights: DMatrix<f64>,
    bias: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorNet {
    layers: Vec<Dense>,
}

impl DiscriminatorNet {
    /// Builds a net from per-layer `(weights, bias)` with weights shaped `out x in`.
    pub fn from_layers(layers: Vec<(DMatrix<f64>, DVector<f64>)>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        for (i, (w, b)) in layers.iter().enumerate() {
            if w.nrows() != b.len() {
                return Err(Error::DimensionMismatch { expected: w.nrows(), found: b.len() });
            }
            if i > 0 && layers[i - 1].0.nrows() != w.ncols() {
                return Err(Error::DimensionMismatch { expected: layers[i - 1].0.nrows(), found: w.ncols() });
            }
        }
        let out = layers[layers.len() - 1].0.nrows();
        if out != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: out });
        }
        let layers = layers.into_iter().map(|(weights, bias)| Dense { weights, bias }).collect();
        Ok(DiscriminatorNet { layers })
    }

    fn check_sizes(sizes: &[usize]) -> Result<()> {
        if sizes.len() < 2 || sizes.contains(&0) || sizes[sizes.len() - 1] != 1 {
            return Err(Error::invalid(format!("layer sizes must be positive and end in 1, got {sizes:?}")));
        }
        Ok(())
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        Self::check_sizes(sizes)?;
        let layers = sizes
            .windows(2)
            .map(|w| Dense { weights: DMatrix::zeros(w[1], w[0]), bias: DVector::zeros(w[1]) })
            .collect();
        Ok(DiscriminatorNet { layers })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        Self::check_sizes(sizes)?;
        let layers = sizes
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                let weights = DMatrix::from_fn(w[1], w[0], |_, _| rng.random_range(-limit..limit));
                Dense { weights, bias: DVector::zeros(w[1]) }
            })
            .collect();
        Ok(DiscriminatorNet { layers })
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim()).chain(self.layers.iter().map(|l| l.weights.nrows())).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn layer(&self, i: usize) -> (&DMatrix<f64>, &DVector<f64>) {
        (&self.layers[i].weights, &self.layers[i].bias)
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Unclamped logits for a `d x n` batch (one sample per column).
    fn logits_matrix(&self, x: DMatrix<f64>) -> DMatrix<f64> {
        let last = self.layers.len() - 1;
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut a = &layer.weights * &h;
            for mut col in a.column_iter_mut() {
                col += &layer.bias;
            }
            if i < last {
                a.apply(|v| *v = v.max(0.0));
            }
            h = a;
        }
        h
    }

    fn batch_matrix(&self, points: &[&[f64]]) -> Result<DMatrix<f64>> {
        let d = self.input_dim();
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: p.len() });
        }
        Ok(DMatrix::from_fn(d, points.len(), |i, j| points[j][i]))
    }

    pub fn logit(&self, z: &[f64]) -> Result<f64> {
        let x = self.batch_matrix(&[z])?;
        Ok(self.logits_matrix(x)[(0, 0)])
    }

    pub fn forward(&self, z: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.logit(z)?.clamp(-LOGIT_CLAMP, LOGIT_CLAMP)))
    }

    pub fn forward_batch(&self, points: &[&[f64]]) -> Result<Vec<f64>> {
        if points.is_empty() {
            return Ok(Vec::new());
        }
        let x = self.batch_matrix(points)?;
        Ok(self.logits_matrix(x).iter().map(|&a| sigmoid(a.clamp(-LOGIT_CLAMP, LOGIT_CLAMP))).collect())
    }

    /// Mean binary cross-entropy over labelled points.
    pub fn bce(&self, positives: &[&[f64]], negatives: &[&[f64]]) -> Result<f64> {
        let pos = self.logits_matrix(self.batch_matrix(positives)?);
        let neg = self.logits_matrix(self.batch_matrix(negatives)?);
        let total: f64 = pos.iter().map(|&a| bce_logit(a, 1.0)).sum::<f64>() + neg.iter().map(|&a| bce_logit(a, 0.0)).sum::<f64>();
        Ok(total / (positives.len() + negatives.len()) as f64)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{WEIGHTS_MAGIC}").unwrap();
        let sizes = self.layer_sizes().iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(out, "dims: {sizes}").unwrap();
        for layer in &self.layers {
            out.push_str("W\n");
            for row in layer.weights.row_iter() {
                let line = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
                writeln!(out, "{line}").unwrap();
            }
            let b = layer.bias.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
            writeln!(out, "b {b}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::parse(0, format!("unexpected end of file, expected {what}")));

        let (n, magic) = next("header")?;
        if magic != WEIGHTS_MAGIC {
            return Err(Error::parse(n, format!("expected `{WEIGHTS_MAGIC}`")));
        }
        let (n, dims) = next("dims line")?;
        let sizes: Vec<usize> = dims
            .strip_prefix("dims:")
            .ok_or_else(|| Error::parse(n, "expected `dims: ...`"))?
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::parse(n, format!("bad layer size `{s}`"))))
            .collect::<Result<_>>()?;
        Self::check_sizes(&sizes).map_err(|e| Error::parse(n, e.to_string()))?;

        let parse_nums = |n: usize, s: &str| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| Error::parse(n, format!("bad number `{v}`"))))
                .collect()
        };

        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let (n, tag) = next("`W`")?;
            if tag != "W" {
                return Err(Error::parse(n, format!("expected `W`, found `{tag}`")));
            }
            let mut rows = Vec::with_capacity(fan_out * fan_in);
            let mut nrows = 0;
            let bias = loop {
                let (n, line) = next("weight row or `b` line")?;
                if let Some(rest) = line.strip_prefix('b') {
                    if nrows != fan_out {
                        return Err(Error::DimensionMismatch { expected: fan_out, found: nrows });
                    }
                    let b = parse_nums(n, rest)?;
                    if b.len() != fan_out {
                        return Err(Error::DimensionMismatch { expected: fan_out, found: b.len() });
                    }
                    break b;
                }
                if line == "W" {
                    return Err(Error::DimensionMismatch { expected: fan_out, found: nrows });
                }
                let row = parse_nums(n, line)?;
                if row.len() != fan_in {
                    return Err(Error::DimensionMismatch { expected: fan_in, found: row.len() });
                }
                rows.extend(row);
                nrows += 1;
                if nrows > fan_out {
                    return Err(Error::DimensionMismatch { expected: fan_out, found: nrows });
                }
            };
            layers.push((DMatrix::from_row_slice(fan_out, fan_in, &rows), DVector::from_vec(bias)));
        }
        if let Some((n, line)) = lines.next() {
            return Err(Error::parse(n, format!("trailing content `{line}`")));
        }
        Self::from_layers(layers)
    }
}

impl Scorer for DiscriminatorNet {
    fn input_dim(&self) -> Option<usize> {
        Some(DiscriminatorNet::input_dim(self))
    }

    fn score(&self, z: &[f64]) -> f64 {
        self.forward(z).expect("dimension checked by caller")
    }

    fn score_batch(&self, points: &[&[f64]]) -> Vec<f64> {
        self.forward_batch(points).expect("dimension checked by caller")
    }
}

pub fn save_net(net: &DiscriminatorNet, path: impl AsRef<FsPath>) -> Result<()> {
    write_file(path.as_ref(), &net.to_text())
}

pub fn load_net(path: impl AsRef<FsPath>) -> Result<DiscriminatorNet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DiscriminatorNet::from_text(&text)
}

/// Scores many points, chunked so each chunk is one batched forward pass.
pub fn score_points<S: Scorer + ?Sized>(scorer: &S, points: &[&[f64]], exec: Execution) -> Vec<f64> {
    const CHUNK: usize = 64;
    let chunks = points.len().div_ceil(CHUNK);
    exec.map(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(points.len());
        scorer.score_batch(&points[lo..hi])
    })
    .into_iter()
    .flatten()
    .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Samples per Adam step, split evenly between data and prior.
    pub batch_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { batch_size: 256, steps: 2000, learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, seed: 0 }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::invalid("batch size must be at least 2"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("train steps must be positive"));
        }
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.learning_rate) || !pos(self.epsilon) {
            return Err(Error::invalid("learning rate and epsilon must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("adam betas must lie in [0, 1)"));
        }
        Ok(())
    }
}

struct AdamState {
    m: Vec<(DMatrix<f64>, DVector<f64>)>,
    v: Vec<(DMatrix<f64>, DVector<f64>)>,
    t: i32,
}

impl AdamState {
    fn new(net: &DiscriminatorNet) -> Self {
        let zeros: Vec<_> = net
            .layers
            .iter()
            .map(|l| (DMatrix::zeros(l.weights.nrows(), l.weights.ncols()), DVector::zeros(l.bias.len())))
            .collect();
        AdamState { m: zeros.clone(), v: zeros, t: 0 }
    }

    fn update(&mut self, net: &mut DiscriminatorNet, grads: &[(DMatrix<f64>, DVector<f64>)], cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let step = cfg.learning_rate * (1.0 - b2.powi(self.t)).sqrt() / (1.0 - b1.powi(self.t));
        let eps_hat = cfg.epsilon * (1.0 - b2.powi(self.t)).sqrt();
        for (((layer, g), m), v) in net.layers.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let apply = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
                for i in 0..p.len() {
                    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                    p[i] -= step * m[i] / (v[i].sqrt() + eps_hat);
                }
            };
            apply(layer.weights.as_mut_slice(), g.0.as_slice(), m.0.as_mut_slice(), v.0.as_mut_slice());
            apply(layer.bias.as_mut_slice(), g.1.as_slice(), m.1.as_mut_slice(), v.1.as_mut_slice());
        }
    }
}

/// Mean BCE and its gradients for a labelled `d x n` batch.
type Grads = Vec<(DMatrix<f64>, DVector<f64>)>;

fn loss_and_grads(net: &DiscriminatorNet, x: DMatrix<f64>, labels: &[f64]) -> (f64, Grads) {
    let last = net.layers.len() - 1;
    let n = labels.len() as f64;
    // activations[i] is the input to layer i
    let mut activations = Vec::with_capacity(net.layers.len());
    let mut h = x;
    for (i, layer) in net.layers.iter().enumerate() {
        let mut a = &layer.weights * &h;
        for mut col in a.column_iter_mut() {
            col += &layer.bias;
        }
        if i < last {
            a.apply(|v| *v = v.max(0.0));
        }
        activations.push(h);
        h = a;
    }
    let logits = h;
    let loss = logits.iter().zip(labels).map(|(&a, &y)| bce_logit(a, y)).sum::<f64>() / n;
    let mut delta = DMatrix::from_fn(1, labels.len(), |_, j| (sigmoid(logits[(0, j)]) - labels[j]) / n);

    let mut grads = vec![(DMatrix::zeros(0, 0), DVector::zeros(0)); net.layers.len()];
    for i in (0..net.layers.len()).rev() {
        let input = &activations[i];
        let gw = &delta * input.transpose();
        let gb = delta.column_sum();
        if i > 0 {
            let mut back = net.layers[i].weights.transpose() * &delta;
            // input > 0 exactly where the previous ReLU was active
            back.zip_apply(input, |b, a| {
                if a <= 0.0 {
                    *b = 0.0
                }
            });
            delta = back;
        }
        grads[i] = (gw, gb);
    }
    (loss, grads)
}

/// Trains a discriminator; `hidden` lists the hidden-layer widths.
pub fn train(data: &LatentDataset, prior: &PriorSpec, cfg: &TrainConfig, hidden: &[usize]) -> Result<DiscriminatorNet> {
    train_with_callback(data, prior, cfg, hidden, |_, _, _| {})
}

/// As [`train`], calling `on_step(step, loss, &net)` after every update.
pub fn train_with_callback<F>(
    data: &LatentDataset,
    prior: &PriorSpec,
    cfg: &TrainConfig,
    hidden: &[usize],
    mut on_step: F,
) -> Result<DiscriminatorNet>
where
    F: FnMut(usize, f64, &DiscriminatorNet),
{
    cfg.validate()?;
    if data.dim() != prior.dim() {
        return Err(Error::DimensionMismatch { expected: prior.dim(), found: data.dim() });
    }
    let d = data.dim();
    let sizes: Vec<usize> = std::iter::once(d).chain(hidden.iter().copied()).chain([1]).collect();
    let mut init_rng = RngState::new(cfg.seed, 0);
    let mut net = DiscriminatorNet::glorot(&sizes, &mut init_rng)?;
    let mut batch_rng = RngState::new(cfg.seed, 1);
    let mut adam = AdamState::new(&net);

    let n_pos = cfg.batch_size / 2;
    let n_neg = cfg.batch_size - n_pos;
    let labels: Vec<f64> = (0..n_pos).map(|_| 1.0).chain((0..n_neg).map(|_| 0.0)).collect();
    let mut x = DMatrix::zeros(d, cfg.batch_size);
    for step in 0..cfg.steps {
        for j in 0..n_pos {
            let p = &data.points()[batch_rng.random_range(0..data.len())];
            x.column_mut(j).copy_from_slice(p);
        }
        for j in n_pos..cfg.batch_size {
            for i in 0..d {
                x[(i, j)] = standard_normal(&mut batch_rng);
            }
        }
        let (loss, grads) = loss_and_grads(&net, x.clone(), &labels);
        if !loss.is_finite() || grads.iter().any(|(w, b)| w.iter().chain(b.iter()).any(|g| !g.is_finite())) {
            return Err(Error::NonFiniteLoss { step });
        }
        adam.update(&mut net, &grads, cfg);
        on_step(step, loss, &net);
    }
    Ok(net)
}

/// Held-out classification quality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Holdout {
    pub loss: f64,
    /// Fraction classified correctly with threshold 0.5.
    pub accuracy: f64,
    pub auc: f64,
}

/// Area under the ROC curve via the Mann-Whitney statistic, ties counted half.
pub fn auc(pos_scores: &[f64], neg_scores: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = pos_scores.iter().map(|&s| (s, true)).chain(neg_scores.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += all[i..=j].iter().filter(|e| e.1).count() as f64 * avg_rank;
        i = j + 1;
    }
    let (np, nn) = (pos_scores.len() as f64, neg_scores.len() as f64);
    (rank_sum - np * (np + 1.0) / 2.0) / (np * nn)
}

pub fn evaluate<S: AsRef<[f64]>>(net: &DiscriminatorNet, positives: &[S], negatives: &[S]) -> Result<Holdout> {
    let pos: Vec<&[f64]> = positives.iter().map(|p| p.as_ref()).collect();
    let neg: Vec<&[f64]> = negatives.iter().map(|p| p.as_ref()).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, found: 0 });
    }
    let loss = net.bce(&pos, &neg)?;
    let ps = net.forward_batch(&pos)?;
    let ns = net.forward_batch(&neg)?;
    let correct = ps.iter().filter(|&&s| s > 0.5).count() + ns.iter().filter(|&&s| s <= 0.5).count();
    Ok(Holdout { loss, accuracy: correct as f64 / (ps.len() + ns.len()) as f64, auc: auc(&ps, &ns) })
}
