#![allow(clippy::needless_range_loop)]

use proptest::collection::vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use synthve_core::fusion::fuse;
use synthve_core::mlp::{gradient_check, Activation, Mlp, Params};
use synthve_core::train::{train, DenseExamples, TrainConfig};
use synthve_core::{Label, Serial};

fn random_model(rng: &mut ChaCha8Rng, activation: Activation) -> (Mlp<f64>, Vec<f64>, Vec<usize>) {
    let d_in = rng.random_range(1..7);
    let h = rng.random_range(1..6);
    let labels = if rng.random_bool(0.5) { Label::ALL.to_vec() } else { vec![Label::Entailment, Label::Contradiction] };
    let mut model = Mlp::<f64>::zeros(d_in, h, labels, activation).unwrap();
    let mut p = model.params().clone();
    for block in p.blocks_mut() {
        for w in block.iter_mut() {
            *w = rng.random_range(-1.5..1.5);
        }
    }
    model.set_params(p).unwrap();
    let batch = rng.random_range(1..6);
    let inputs = (0..batch * d_in).map(|_| rng.random_range(-2.0..2.0)).collect();
    let targets = (0..batch).map(|_| rng.random_range(0..model.d_out())).collect();
    (model, inputs, targets)
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..100 {
        let activation = if trial % 4 == 3 { Activation::Identity } else { Activation::Relu };
        let (model, x, t) = random_model(&mut rng, activation);
        let err = gradient_check(&model, &x, &t, 1e-6).unwrap();
        assert!(err < 1e-4, "trial {trial}: relative error {err}");
    }
}

/// With an identity hidden layer, identity first-layer weights and zero
/// first-layer bias, the network is multinomial logistic regression, whose
/// gradient is `x (p - y)^T`.
#[test]
fn identity_network_matches_logistic_regression() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = 4;
    let labels = Label::ALL.to_vec();
    let mut params = Params::<f64>::zeros(d, d, 3);
    for i in 0..d {
        params.w1[i * d + i] = 1.0;
    }
    for w in params.w2.iter_mut().chain(params.b2.iter_mut()) {
        *w = rng.random_range(-1.0..1.0);
    }
    let model = Mlp::new(d, d, labels, Activation::Identity, params.clone()).unwrap();
    let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let target = 2;

    let logits: Vec<f64> = (0..3).map(|o| params.b2[o] + (0..d).map(|j| x[j] * params.w2[j * 3 + o]).sum::<f64>()).collect();
    let z: f64 = logits.iter().map(|l| l.exp()).sum();
    let g: Vec<f64> = (0..3).map(|o| logits[o].exp() / z - if o == target { 1.0 } else { 0.0 }).collect();

    let mut grads = params.zeros_like();
    let (loss, _) = model.accumulate_gradients(&x, &[target], 1.0, &mut grads).unwrap();
    assert!((loss - (z.ln() - logits[target])).abs() < 1e-12);
    for o in 0..3 {
        assert!((grads.b2[o] - g[o]).abs() < 1e-12);
        for j in 0..d {
            assert!((grads.w2[j * 3 + o] - x[j] * g[o]).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn forward_is_a_distribution(seed in any::<u64>(), scale in prop_oneof![Just(1.0), Just(1e3), Just(1e6)]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (model, _, _) = random_model(&mut rng, Activation::Relu);
        let x: Vec<f64> = (0..model.d_in()).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let p = model.forward(&x).unwrap();
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predict_ignores_positive_logit_scaling(seed in any::<u64>(), exp in -30i32..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (model, x, _) = random_model(&mut rng, Activation::Relu);
        let x = &x[..model.d_in()];
        // Scaling the output layer by a power of two scales every logit
        // exactly.
        let alpha = 2f64.powi(exp);
        let mut scaled = model.clone();
        let mut p = model.params().clone();
        for w in p.w2.iter_mut().chain(p.b2.iter_mut()) {
            *w *= alpha;
        }
        scaled.set_params(p).unwrap();
        let (a, b) = (model.logits(x).unwrap(), scaled.logits(x).unwrap());
        for (u, v) in a.iter().zip(&b) {
            prop_assert_eq!(u * alpha, *v);
        }
        prop_assert_eq!(model.predict(x).unwrap(), scaled.predict(x).unwrap());
    }

    #[test]
    fn fuse_recovers_inputs((v1, v2) in (1usize..64).prop_flat_map(|d| (vec(-1e3f32..1e3, d), vec(-1e3f32..1e3, d)))) {
        let f = fuse(&v1, &v2).unwrap();
        prop_assert_eq!(f.as_slice().len(), 5 * v1.len());
        let (a, b) = f.inputs();
        prop_assert_eq!(a, &v1[..]);
        prop_assert_eq!(b, &v2[..]);
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f32 {
    StandardNormal.sample(rng)
}

fn separable(seed: u64, n: usize, d: usize) -> DenseExamples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<Vec<f32>> = (0..3).map(|_| (0..d).map(|_| 2.0 * normal(&mut rng)).collect()).collect();
    let mut inputs = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 3;
        inputs.extend(centres[c].iter().map(|m| m + 0.5 * normal(&mut rng)));
        labels.push(Label::ALL[c]);
    }
    DenseExamples::new(d, inputs, labels).unwrap()
}

#[test]
fn training_loss_mostly_decreases() {
    let train_set = separable(1, 600, 20);
    let dev_set = separable(1, 90, 20);
    let cfg = TrainConfig { epochs: 60, hidden: 32, batch_size: 64, ..Default::default() };
    let (_, history) = train(&train_set, &dev_set, &cfg, &Serial).unwrap();
    let rises = history.epochs.windows(2).filter(|w| w[1].train_loss > w[0].train_loss).count();
    assert!(rises * 20 <= history.epochs.len(), "{rises} of {} epochs increased the loss", history.epochs.len());
    assert!(history.epochs.last().unwrap().dev_accuracy > 0.95);
}

#[test]
fn training_is_reproducible() {
    let train_set = separable(4, 300, 10);
    let dev_set = separable(5, 60, 10);
    let cfg = TrainConfig { epochs: 5, hidden: 16, batch_size: 32, seed: 9, ..Default::default() };
    let (m1, h1) = train(&train_set, &dev_set, &cfg, &Serial).unwrap();
    let (m2, h2) = train(&train_set, &dev_set, &cfg, &Serial).unwrap();
    assert_eq!(h1, h2);
    assert_eq!(m1, m2);
    let (_, h3) = train(&train_set, &dev_set, &TrainConfig { seed: 10, ..cfg }, &Serial).unwrap();
    assert_ne!(h1, h3);
}

#[test]
fn best_epoch_is_earliest_maximum() {
    let train_set = separable(6, 300, 10);
    let dev_set = separable(6, 60, 10);
    let cfg = TrainConfig { epochs: 15, hidden: 16, ..Default::default() };
    let (_, h) = train(&train_set, &dev_set, &cfg, &Serial).unwrap();
    let best = h.epochs.iter().map(|e| e.dev_accuracy).fold(f64::MIN, f64::max);
    assert_eq!(h.best_epoch, h.epochs.iter().find(|e| e.dev_accuracy == best).unwrap().epoch);
}
