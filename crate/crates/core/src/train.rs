//! Minibatch Adam training of the fused-feature classifier with dev-epoch
//! selection.

use alloc::vec::Vec;

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{chunk_count, chunk_range, Executor};
use crate::fusion::fuse_into;
use crate::label::{position, Label};
use crate::manifest::ResolvedPair;
use crate::metrics::evaluate;
use crate::mlp::{Activation, Mlp, Params};
use crate::store::EmbeddingStore;

/// Examples per gradient task. Fixed so the reduction order does not depend
/// on the number of workers.
const GRAD_CHUNK: usize = 32;
const PREDICT_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub hidden: usize,
    pub activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            hidden: 250,
            activation: Activation::Relu,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.into()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.hidden == 0 {
            return bad("hidden size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if self.adam_epsilon.is_nan() || self.adam_epsilon <= 0.0 {
            return bad("adam_epsilon must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean minibatch loss over the epoch.
    pub train_loss: f64,
    /// Accuracy of the minibatch predictions made during the epoch.
    pub train_accuracy: f64,
    pub dev_accuracy: f64,
    pub dev_macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch with the highest dev accuracy (earliest on ties).
    pub best_epoch: usize,
}

/// Random-access labelled inputs.
pub trait ExampleSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn input_dim(&self) -> usize;

    fn label(&self, i: usize) -> Label;

    /// Writes input `i` into `out` (length `input_dim()`).
    fn fill(&self, i: usize, out: &mut [f32]);
}

/// Premise/hypothesis pairs fused on the fly from store rows.
#[derive(Debug, Clone, Copy)]
pub struct FusedPairs<'a> {
    store: &'a EmbeddingStore,
    pairs: &'a [ResolvedPair],
}

impl<'a> FusedPairs<'a> {
    pub fn new(store: &'a EmbeddingStore, pairs: &'a [ResolvedPair]) -> Self {
        Self { store, pairs }
    }

    pub fn pairs(&self) -> &'a [ResolvedPair] {
        self.pairs
    }
}

impl ExampleSource for FusedPairs<'_> {
    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn input_dim(&self) -> usize {
        5 * self.store.dim()
    }

    fn label(&self, i: usize) -> Label {
        self.pairs[i].label
    }

    fn fill(&self, i: usize, out: &mut [f32]) {
        let p = &self.pairs[i];
        fuse_into(self.store.row(p.premise_row), self.store.row(p.hypothesis_row), out)
            .expect("store rows share a dimension");
    }
}

/// Inputs held as one dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseExamples {
    dim: usize,
    inputs: Vec<f32>,
    labels: Vec<Label>,
}

impl DenseExamples {
    pub fn new(dim: usize, inputs: Vec<f32>, labels: Vec<Label>) -> Result<Self> {
        if dim == 0 || inputs.len() != dim * labels.len() {
            return Err(Error::ShapeMismatch { rows: labels.len(), dim, values: inputs.len() });
        }
        Ok(Self { dim, inputs, labels })
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }
}

impl ExampleSource for DenseExamples {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    fn fill(&self, i: usize, out: &mut [f32]) {
        out.copy_from_slice(&self.inputs[i * self.dim..(i + 1) * self.dim]);
    }
}

struct Adam {
    m: Params<f32>,
    v: Params<f32>,
    t: i32,
}

impl Adam {
    fn new(like: &Params<f32>) -> Self {
        Self { m: like.zeros_like(), v: like.zeros_like(), t: 0 }
    }

    fn step(&mut self, params: &mut Params<f32>, grads: &Params<f32>, cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.beta1 as f32, cfg.beta2 as f32);
        let c1 = 1.0 - Float::powi(cfg.beta1, self.t);
        let c2 = 1.0 - Float::powi(cfg.beta2, self.t);
        let step = (cfg.learning_rate * Float::sqrt(c2) / c1) as f32;
        let eps = (cfg.adam_epsilon * Float::sqrt(c2)) as f32;
        let blocks = params.blocks_mut().into_iter().zip(self.m.blocks_mut()).zip(self.v.blocks_mut()).zip(grads.blocks());
        for (((p, m), v), g) in blocks {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= step * m[i] / (Float::sqrt(v[i]) + eps);
            }
        }
    }
}

/// Predictions of `model` for every example of `source`, in order.
pub fn predict_all<S: ExampleSource, E: Executor>(model: &Mlp<f32>, source: &S, exec: &E) -> Result<Vec<Label>> {
    if source.input_dim() != model.d_in() {
        return Err(Error::DimensionMismatch { expected: model.d_in(), found: source.input_dim() });
    }
    let n = source.len();
    let chunks = exec.map_indexed(chunk_count(n, PREDICT_CHUNK), |c| {
        let mut x = alloc::vec![0.0f32; model.d_in()];
        chunk_range(n, PREDICT_CHUNK, c)
            .map(|i| {
                source.fill(i, &mut x);
                model.predict(&x).expect("input dimension checked")
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Trains a fresh model for `cfg.epochs` epochs and returns the weights of
/// the epoch with the best dev accuracy.
///
/// Minibatches are drawn from a seeded shuffle each epoch. The result is a
/// deterministic function of the data and `cfg`, for any executor.
pub fn train<S: ExampleSource, E: Executor>(
    train_set: &S,
    dev_set: &S,
    cfg: &TrainConfig,
    exec: &E,
) -> Result<(Mlp<f32>, TrainHistory)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if dev_set.is_empty() {
        return Err(Error::Empty("dev set"));
    }
    let d_in = train_set.input_dim();
    if dev_set.input_dim() != d_in {
        return Err(Error::DimensionMismatch { expected: d_in, found: dev_set.input_dim() });
    }
    let labels = Label::ALL.to_vec();
    let targets: Vec<usize> =
        (0..train_set.len()).map(|i| position(&labels, train_set.label(i))).collect::<Result<_>>()?;
    let dev_gold: Vec<Label> = (0..dev_set.len()).map(|i| dev_set.label(i)).collect();

    let mut model = Mlp::<f32>::init(d_in, cfg.hidden, labels.clone(), cfg.activation, cfg.seed)?;
    let mut adam = Adam::new(model.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut history = TrainHistory { epochs: Vec::with_capacity(cfg.epochs), best_epoch: 0 };
    let mut best: Option<(f64, Mlp<f32>)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct, mut batches) = (0.0f64, 0usize, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f32;
            let current = &model;
            let parts = exec.map_indexed(chunk_count(batch.len(), GRAD_CHUNK), |c| {
                let idx = &batch[chunk_range(batch.len(), GRAD_CHUNK, c)];
                let mut x = alloc::vec![0.0f32; idx.len() * d_in];
                for (row, &i) in x.chunks_exact_mut(d_in).zip(idx) {
                    train_set.fill(i, row);
                }
                let t: Vec<usize> = idx.iter().map(|&i| targets[i]).collect();
                let mut g = current.params().zeros_like();
                let (loss, ok) = current.accumulate_gradients(&x, &t, scale, &mut g).expect("shapes checked");
                (g, loss, ok)
            });
            let mut iter = parts.into_iter();
            let (mut grads, mut batch_loss, mut batch_ok) = iter.next().expect("non-empty batch");
            for (g, loss, ok) in iter {
                grads.add_assign(&g);
                batch_loss += loss;
                batch_ok += ok;
            }
            adam.step(model.params_mut(), &grads, cfg);
            loss_sum += (batch_loss / batch.len() as f32) as f64;
            correct += batch_ok;
            batches += 1;
        }
        if !model.params().all_finite() {
            return Err(Error::InvalidArgument(alloc::format!("training diverged at epoch {epoch}")));
        }

        let dev_pred = predict_all(&model, dev_set, exec)?;
        let report = evaluate(&dev_gold, &dev_pred, &labels)?;
        history.epochs.push(EpochStats {
            epoch,
            train_loss: loss_sum / batches as f64,
            train_accuracy: correct as f64 / train_set.len() as f64,
            dev_accuracy: report.accuracy,
            dev_macro_f1: report.macro_f1,
        });
        if best.as_ref().is_none_or(|(acc, _)| report.accuracy > *acc) {
            best = Some((report.accuracy, model.clone()));
            history.best_epoch = epoch;
        }
    }
    let (_, best_model) = best.expect("at least one epoch");
    Ok((best_model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Serial;
    use alloc::vec;

    fn toy(n: usize, seed: u64) -> DenseExamples {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let c = i % 3;
            for d in 0..4 {
                let centre = if d == c { 2.0 } else { 0.0 };
                inputs.push(centre + rng.random_range(-0.5f32..0.5));
            }
            labels.push(Label::ALL[c]);
        }
        DenseExamples::new(4, inputs, labels).unwrap()
    }

    #[test]
    fn learns_toy_problem_deterministically() {
        let cfg = TrainConfig { epochs: 20, batch_size: 16, hidden: 8, learning_rate: 1e-2, ..Default::default() };
        let (tr, dev) = (toy(150, 1), toy(60, 2));
        let (m1, h1) = train(&tr, &dev, &cfg, &Serial).unwrap();
        let (m2, h2) = train(&tr, &dev, &cfg, &Serial).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
        assert_eq!(h1.epochs.len(), 20);
        let best = &h1.epochs[h1.best_epoch - 1];
        assert!(h1.epochs.iter().all(|e| e.dev_accuracy <= best.dev_accuracy));
        assert!(h1.epochs[..h1.best_epoch - 1].iter().all(|e| e.dev_accuracy < best.dev_accuracy));
        assert!(best.dev_accuracy > 0.95, "{best:?}");
        let preds = predict_all(&m1, &dev, &Serial).unwrap();
        let acc = preds.iter().zip(dev.labels()).filter(|(a, b)| a == b).count() as f64 / 60.0;
        assert_eq!(acc, best.dev_accuracy);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = TrainConfig { epochs: 1, ..Default::default() };
        let empty = DenseExamples::new(4, vec![], vec![]).unwrap();
        assert_eq!(train(&empty, &toy(3, 0), &cfg, &Serial).unwrap_err(), Error::Empty("training set"));
        assert_eq!(train(&toy(3, 0), &empty, &cfg, &Serial).unwrap_err(), Error::Empty("dev set"));
        let zero = TrainConfig { epochs: 0, ..Default::default() };
        assert!(train(&toy(3, 0), &toy(3, 0), &zero, &Serial).is_err());
        let narrow = DenseExamples::new(2, vec![0.0; 2], vec![Label::Neutral]).unwrap();
        assert!(matches!(train(&toy(3, 0), &narrow, &cfg, &Serial), Err(Error::DimensionMismatch { .. })));
    }
}
