//! One-hidden-layer perceptron with softmax output and hand-written
//! backpropagation.
//!
//! Weights are row-major: `w1[i * d_hidden + j]` connects input `i` to
//! hidden unit `j`, and `w2[j * d_out + o]` connects hidden unit `j` to
//! output `o`. The loss is mean softmax cross-entropy.

use alloc::vec::Vec;
use core::fmt::Debug;

use num_traits::{Float, NumCast};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::label::Label;

/// Floating-point type the network can run in.
pub trait Scalar: Float + From<f32> + Default + Debug + Send + Sync + 'static {}
impl<T: Float + From<f32> + Default + Debug + Send + Sync + 'static> Scalar for T {}

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Identity => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Identity),
            _ => None,
        }
    }

    #[inline]
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Identity => x,
        }
    }

    /// Derivative at pre-activation `x`; ReLU uses 0 at the kink.
    #[inline]
    fn derivative<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu if x > T::zero() => T::one(),
            Activation::Relu => T::zero(),
            Activation::Identity => T::one(),
        }
    }
}

/// Network parameters; also used for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

impl<T: Scalar> Params<T> {
    pub fn zeros(d_in: usize, d_hidden: usize, d_out: usize) -> Self {
        Self {
            w1: alloc::vec![T::zero(); d_in * d_hidden],
            b1: alloc::vec![T::zero(); d_hidden],
            w2: alloc::vec![T::zero(); d_hidden * d_out],
            b2: alloc::vec![T::zero(); d_out],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w1: alloc::vec![T::zero(); self.w1.len()],
            b1: alloc::vec![T::zero(); self.b1.len()],
            w2: alloc::vec![T::zero(); self.w2.len()],
            b2: alloc::vec![T::zero(); self.b2.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn blocks(&self) -> [&[T]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn blocks_mut(&mut self) -> [&mut [T]; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = *x + *y;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    fn cast<U: Scalar>(&self) -> Params<U> {
        let c = |v: &Vec<T>| v.iter().map(|x| <U as NumCast>::from(*x).expect("finite cast")).collect();
        Params { w1: c(&self.w1), b1: c(&self.b1), w2: c(&self.w2), b2: c(&self.b2) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    d_in: usize,
    d_hidden: usize,
    labels: Vec<Label>,
    activation: Activation,
    params: Params<T>,
}

impl<T: Scalar> Mlp<T> {
    /// Validates shapes, label order and finiteness.
    pub fn new(
        d_in: usize,
        d_hidden: usize,
        labels: Vec<Label>,
        activation: Activation,
        params: Params<T>,
    ) -> Result<Self> {
        if d_in == 0 || d_hidden == 0 {
            return Err(Error::InvalidArgument("layer sizes must be positive".into()));
        }
        if labels.is_empty() {
            return Err(Error::Empty("label order"));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidArgument(alloc::format!("label `{l}` repeated in label order")));
            }
        }
        let d_out = labels.len();
        let expect = [d_in * d_hidden, d_hidden, d_hidden * d_out, d_out];
        for (block, want) in params.blocks().iter().zip(expect) {
            if block.len() != want {
                return Err(Error::DimensionMismatch { expected: want, found: block.len() });
            }
        }
        if !params.all_finite() {
            return Err(Error::InvalidArgument("non-finite weight".into()));
        }
        Ok(Self { d_in, d_hidden, labels, activation, params })
    }

    pub fn zeros(d_in: usize, d_hidden: usize, labels: Vec<Label>, activation: Activation) -> Result<Self> {
        let params = Params::zeros(d_in, d_hidden, labels.len());
        Self::new(d_in, d_hidden, labels, activation, params)
    }

    /// Seeded fan-in scaled uniform init: `U(-sqrt(6 / d_in), sqrt(6 / d_in))`
    /// for the hidden layer, `U(-1 / sqrt(d_hidden), 1 / sqrt(d_hidden))` for
    /// the output layer, zero biases.
    pub fn init(d_in: usize, d_hidden: usize, labels: Vec<Label>, activation: Activation, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(d_in, d_hidden, labels, activation)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b1 = Float::sqrt(6.0 / d_in as f64);
        let b2 = 1.0 / Float::sqrt(d_hidden as f64);
        for w in model.params.w1.iter_mut() {
            *w = cast(rng.random_range(-b1..b1));
        }
        for w in model.params.w2.iter_mut() {
            *w = cast(rng.random_range(-b2..b2));
        }
        Ok(model)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_hidden(&self) -> usize {
        self.d_hidden
    }

    pub fn d_out(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    /// Replaces the parameters; shapes must match.
    pub fn set_params(&mut self, params: Params<T>) -> Result<()> {
        *self = Self::new(self.d_in, self.d_hidden, self.labels.clone(), self.activation, params)?;
        Ok(())
    }

    pub(crate) fn params_mut(&mut self) -> &mut Params<T> {
        &mut self.params
    }

    pub fn cast<U: Scalar>(&self) -> Mlp<U> {
        Mlp {
            d_in: self.d_in,
            d_hidden: self.d_hidden,
            labels: self.labels.clone(),
            activation: self.activation,
            params: self.params.cast(),
        }
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.d_in {
            return Err(Error::DimensionMismatch { expected: self.d_in, found: x.len() });
        }
        Ok(())
    }

    /// Pre-activations of the hidden layer and output logits.
    fn forward_raw(&self, x: &[T], pre: &mut [T], logits: &mut [T]) {
        let h = self.d_hidden;
        let p = &self.params;
        pre.copy_from_slice(&p.b1);
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            let row = &p.w1[i * h..(i + 1) * h];
            for (a, &w) in pre.iter_mut().zip(row) {
                *a = *a + xi * w;
            }
        }
        let d_out = self.d_out();
        logits.copy_from_slice(&p.b2);
        for (j, &z) in pre.iter().enumerate() {
            let a = self.activation.apply(z);
            if a == T::zero() {
                continue;
            }
            let row = &p.w2[j * d_out..(j + 1) * d_out];
            for (l, &w) in logits.iter_mut().zip(row) {
                *l = *l + a * w;
            }
        }
    }

    pub fn logits(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let mut pre = alloc::vec![T::zero(); self.d_hidden];
        let mut logits = alloc::vec![T::zero(); self.d_out()];
        self.forward_raw(x, &mut pre, &mut logits);
        Ok(logits)
    }

    /// Class probabilities in label order.
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        let mut out = self.logits(x)?;
        softmax_in_place(&mut out);
        Ok(out)
    }

    pub fn predict_index(&self, x: &[T]) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    /// Most probable label; ties go to the earlier label.
    pub fn predict(&self, x: &[T]) -> Result<Label> {
        Ok(self.labels[self.predict_index(x)?])
    }

    /// Adds `scale * d(loss)/d(params)` over the examples in `inputs`
    /// (row-major, `targets.len() x d_in`) to `grads`.
    ///
    /// Returns the summed (unscaled) cross-entropy and the number of
    /// examples whose argmax matched the target.
    pub fn accumulate_gradients(
        &self,
        inputs: &[T],
        targets: &[usize],
        scale: T,
        grads: &mut Params<T>,
    ) -> Result<(T, usize)> {
        if inputs.len() != targets.len() * self.d_in {
            return Err(Error::DimensionMismatch { expected: targets.len() * self.d_in, found: inputs.len() });
        }
        let (h, d_out) = (self.d_hidden, self.d_out());
        if let Some(&t) = targets.iter().find(|&&t| t >= d_out) {
            return Err(Error::InvalidArgument(alloc::format!("target {t} outside {d_out} outputs")));
        }
        let p = &self.params;
        let mut pre = alloc::vec![T::zero(); h];
        let mut probs = alloc::vec![T::zero(); d_out];
        let mut dlogits = alloc::vec![T::zero(); d_out];
        let mut dh = alloc::vec![T::zero(); h];
        let mut loss = T::zero();
        let mut correct = 0;

        for (x, &t) in inputs.chunks_exact(self.d_in).zip(targets) {
            self.forward_raw(x, &mut pre, &mut probs);
            if argmax(&probs) == t {
                correct += 1;
            }
            loss = loss + cross_entropy_in_place(&mut probs, t);

            for (o, d) in dlogits.iter_mut().enumerate() {
                let y = if o == t { T::one() } else { T::zero() };
                *d = (probs[o] - y) * scale;
            }
            for (b, &d) in grads.b2.iter_mut().zip(&dlogits) {
                *b = *b + d;
            }
            for j in 0..h {
                let a = self.activation.apply(pre[j]);
                let w_row = &p.w2[j * d_out..(j + 1) * d_out];
                let g_row = &mut grads.w2[j * d_out..(j + 1) * d_out];
                let mut back = T::zero();
                for o in 0..d_out {
                    g_row[o] = g_row[o] + a * dlogits[o];
                    back = back + w_row[o] * dlogits[o];
                }
                dh[j] = back * self.activation.derivative(pre[j]);
            }
            for (b, &d) in grads.b1.iter_mut().zip(&dh) {
                *b = *b + d;
            }
            for (i, &xi) in x.iter().enumerate() {
                if xi == T::zero() {
                    continue;
                }
                let g_row = &mut grads.w1[i * h..(i + 1) * h];
                for (g, &d) in g_row.iter_mut().zip(&dh) {
                    *g = *g + xi * d;
                }
            }
        }
        Ok((loss, correct))
    }

    /// Mean cross-entropy over a batch.
    pub fn loss(&self, inputs: &[T], targets: &[usize]) -> Result<T> {
        if targets.is_empty() {
            return Err(Error::Empty("batch"));
        }
        if inputs.len() != targets.len() * self.d_in {
            return Err(Error::DimensionMismatch { expected: targets.len() * self.d_in, found: inputs.len() });
        }
        let mut pre = alloc::vec![T::zero(); self.d_hidden];
        let mut logits = alloc::vec![T::zero(); self.d_out()];
        let mut total = T::zero();
        for (x, &t) in inputs.chunks_exact(self.d_in).zip(targets) {
            self.forward_raw(x, &mut pre, &mut logits);
            total = total + cross_entropy_in_place(&mut logits, t);
        }
        Ok(total / cast(targets.len() as f64))
    }
}

fn cast<T: Scalar>(x: f64) -> T {
    <T as NumCast>::from(x).expect("finite cast")
}

/// Index of the first maximum.
pub fn argmax<T: PartialOrd>(values: &[T]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

pub fn softmax_in_place<T: Scalar>(v: &mut [T]) {
    let m = v.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        sum = sum + *x;
    }
    for x in v.iter_mut() {
        *x = *x / sum;
    }
}

/// Turns `logits` into probabilities and returns `-ln p[target]`, computed
/// from the log-sum-exp rather than the rounded probability.
fn cross_entropy_in_place<T: Scalar>(logits: &mut [T], target: usize) -> T {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let shifted_target = logits[target] - m;
    let mut sum = T::zero();
    for x in logits.iter_mut() {
        *x = (*x - m).exp();
        sum = sum + *x;
    }
    for x in logits.iter_mut() {
        *x = *x / sum;
    }
    sum.ln() - shifted_target
}

/// Largest discrepancy between backpropagated gradients and central finite
/// differences, over every parameter of `model`.
///
/// Per parameter the error is `|a - n| / max(|a|, |n|)`. A parameter whose
/// analytic and numeric gradients are both below `1e-8` in magnitude counts
/// as zero error, so (near) zero gradients do not divide noise by noise.
pub fn gradient_check(model: &Mlp<f64>, inputs: &[f64], targets: &[usize], epsilon: f64) -> Result<f64> {
    if !(1e-6..=1e-4).contains(&epsilon) {
        return Err(Error::InvalidArgument("epsilon must lie in [1e-6, 1e-4]".into()));
    }
    if targets.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let mut analytic = model.params.zeros_like();
    model.accumulate_gradients(inputs, targets, 1.0 / targets.len() as f64, &mut analytic)?;

    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for b in 0..4 {
        for i in 0..analytic.blocks()[b].len() {
            let original = probe.params.blocks()[b][i];
            probe.params.blocks_mut()[b][i] = original + epsilon;
            let up = probe.loss(inputs, targets)?;
            probe.params.blocks_mut()[b][i] = original - epsilon;
            let down = probe.loss(inputs, targets)?;
            probe.params.blocks_mut()[b][i] = original;

            let numeric = (up - down) / (2.0 * epsilon);
            let a = analytic.blocks()[b][i];
            let scale = Float::max(Float::abs(a), Float::abs(numeric));
            let err = if scale < 1e-8 { 0.0 } else { Float::abs(a - numeric) / scale };
            worst = Float::max(worst, err);
        }
    }
    Ok(worst)
}
