//! Learned strategies: the basis of a single-sample problem is predicted from
//! its uncertainty parameter by a multiclass MLP, and the prediction replaces
//! the full violating block in the sequential loop whenever it pays off.

use crate::error::{Error, Result};
use crate::mip::{find_basis_with_shared, solve_mip, MipOptions, MipStatus};
use crate::model::{Basis, ConstraintId, LinearConstraint, SampledProblem, Solution};
use crate::scalar::{compensated_sum, Scalar};
use crate::scenario::{draw_block, UncertaintyModel};
use crate::sequential::{solve_subset, strict_tolerance, verify, Loop, SeqOptions, SeqTrace};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::time::Instant;

/// Distinct bases, as row indices within a block, labelled in order of first
/// appearance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StrategyDictionary {
    entries: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl StrategyDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a dictionary from its entries; duplicates are rejected.
    pub fn from_entries(entries: Vec<Vec<usize>>) -> Result<Self> {
        let mut dict = Self::new();
        for (k, e) in entries.into_iter().enumerate() {
            if dict.intern(e) != k {
                return Err(Error::InvalidModel(format!("strategy {k} repeats an earlier one")));
            }
        }
        Ok(dict)
    }

    /// Label of `pattern`, adding it if new.
    pub fn intern(&mut self, pattern: Vec<usize>) -> usize {
        if let Some(&k) = self.lookup.get(&pattern) {
            return k;
        }
        let k = self.entries.len();
        self.lookup.insert(pattern.clone(), k);
        self.entries.push(pattern);
        k
    }

    pub fn label_of(&self, pattern: &[usize]) -> Option<usize> {
        self.lookup.get(pattern).copied()
    }

    pub fn get(&self, label: usize) -> Option<&[usize]> {
        self.entries.get(label).map(Vec::as_slice)
    }

    pub fn entries(&self) -> &[Vec<usize>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Labelled parameters with a fixed 80/20 train/test partition.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet<T> {
    pub q: Vec<Vec<T>>,
    pub labels: Vec<usize>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl<T: Scalar> TrainingSet<T> {
    /// Shuffles the indices with `seed` and puts the first 80% in the
    /// training split.
    pub fn new(q: Vec<Vec<T>>, labels: Vec<usize>, seed: u64) -> Result<Self> {
        if q.len() != labels.len() {
            return Err(Error::dim("training labels", q.len(), labels.len()));
        }
        if q.is_empty() {
            return Err(Error::InvalidModel("training set is empty".into()));
        }
        let dim = q[0].len();
        if let Some(bad) = q.iter().find(|v| v.len() != dim) {
            return Err(Error::dim("training input", dim, bad.len()));
        }
        let mut order: Vec<usize> = (0..q.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = ((q.len() * 4 + 2) / 5).max(1);
        let test = order.split_off(cut);
        Ok(Self {
            q,
            labels,
            train: order,
            test,
        })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn dim_q(&self) -> usize {
        self.q[0].len()
    }
}

/// Solves `M` single-sample problems and labels each draw with its basis.
///
/// Solves run in parallel; labels are interned afterwards in sample order so
/// the dictionary does not depend on scheduling.
pub fn generate_training_data<T: Scalar, M: UncertaintyModel<T> + ?Sized>(
    model: &M,
    m: usize,
    seed: u64,
    opts: &MipOptions<T>,
) -> Result<(TrainingSet<T>, StrategyDictionary)> {
    if m == 0 {
        return Err(Error::InvalidModel("at least one training sample is required".into()));
    }
    let solved = (1..=m)
        .into_par_iter()
        .map(|i| {
            let block = draw_block(model, i, seed)?;
            let rows: Vec<&LinearConstraint<T>> = model.shared_rows().iter().chain(&block.rows).collect();
            let out = solve_mip(model.objective(), &rows, model.vars(), opts)?;
            if out.status != MipStatus::Optimal {
                return Err(Error::InvalidModel(format!(
                    "single-sample problem {i} is {:?}",
                    out.status
                )));
            }
            let basis = find_basis_with_shared(model.objective(), model.shared_rows(), &block.rows, model.vars(), &out, opts)?;
            Ok((block.q.unwrap_or_default(), basis.row_pattern()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut dict = StrategyDictionary::new();
    let mut q = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for (qi, pattern) in solved {
        labels.push(dict.intern(pattern));
        q.push(qi);
    }
    Ok((TrainingSet::new(q, labels, seed)?, dict))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Coefficient of the `0.5 |W|^2` penalty on weights (not biases).
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// The published MILP setting: two hidden layers of 512, 200 epochs,
    /// batches of 1024.
    fn default() -> Self {
        Self {
            hidden_layers: 2,
            hidden_width: 512,
            epochs: 200,
            batch_size: 1024,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Two hidden layers of 128 with small batches, for desk-size training sets.
    pub fn desk(seed: u64) -> Self {
        Self {
            hidden_width: 128,
            epochs: 100,
            batch_size: 64,
            weight_decay: 0.01,
            seed,
            ..Self::default()
        }
    }

    fn check(&self, n_train: usize) -> Result<()> {
        if self.hidden_layers > 0 && self.hidden_width == 0 {
            return Err(Error::InvalidModel("hidden width must be positive".into()));
        }
        if self.batch_size == 0 || self.batch_size > n_train {
            return Err(Error::InvalidModel(format!(
                "batch size {} must be in 1..={n_train}",
                self.batch_size
            )));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidModel("weight decay must be nonnegative".into()));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::InvalidModel("invalid optimizer settings".into()));
        }
        Ok(())
    }
}

/// Dense layer `z = W a + b` with `W` row-major, `outputs x inputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            w: vec![T::zero(); inputs * outputs],
            b: vec![T::zero(); outputs],
        }
    }

    fn apply(&self, a: &[T], z: &mut Vec<T>) {
        z.clear();
        z.extend(self.w.chunks(self.inputs).zip(&self.b).map(|(row, bias)| crate::scalar::dot(row, a) + *bias));
    }
}

/// Parameter-shaped buffers: gradients and optimizer moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> Gradients<T> {
    fn zeros_like(layers: &[Layer<T>]) -> Self {
        Self {
            layers: layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    fn add(&mut self, other: &Self) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.w.iter_mut().zip(&b.w).for_each(|(x, y)| *x += *y);
            a.b.iter_mut().zip(&b.b).for_each(|(x, y)| *x += *y);
        }
    }

    fn scale(&mut self, s: T) {
        for l in &mut self.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|x| *x *= s);
        }
    }

    /// Flat view in the order of [`MlpClassifier::parameter`].
    pub fn get(&self, k: usize) -> T {
        *flat(&self.layers, k)
    }

    pub fn norm(&self) -> T {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(&l.b))
            .fold(T::zero(), |s, v| s + *v * *v)
            .sqrt()
    }
}

fn flat<T>(layers: &[Layer<T>], mut k: usize) -> &T {
    for l in layers {
        if k < l.w.len() {
            return &l.w[k];
        }
        k -= l.w.len();
        if k < l.b.len() {
            return &l.b[k];
        }
        k -= l.b.len();
    }
    panic!("parameter index out of range")
}

fn flat_mut<T>(layers: &mut [Layer<T>], mut k: usize) -> &mut T {
    for l in layers {
        if k < l.w.len() {
            return &mut l.w[k];
        }
        k -= l.w.len();
        if k < l.b.len() {
            return &mut l.b[k];
        }
        k -= l.b.len();
    }
    panic!("parameter index out of range")
}

#[derive(Clone, Debug, PartialEq)]
struct Adam<T> {
    m: Gradients<T>,
    v: Gradients<T>,
    step: i32,
}

/// ReLU network with a softmax output. Inputs are standardized with a
/// per-feature shift and scale fitted on the training split.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpClassifier<T> {
    layers: Vec<Layer<T>>,
    shift: Vec<T>,
    scale: Vec<T>,
    adam: Adam<T>,
}

/// Forward activations kept for backpropagation: `acts[0]` is the
/// standardized input, `acts[l]` the output of layer `l`.
struct Tape<T> {
    acts: Vec<Vec<T>>,
}

/// Samples per partial gradient; fixed so the reduction order never depends
/// on the thread count.
const GRAD_CHUNK: usize = 16;

impl<T: Scalar> MlpClassifier<T> {
    /// He-uniform weights `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero
    /// biases, identity standardization.
    pub fn new(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidModel(format!("invalid layer dimensions {dims:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers: Vec<Layer<T>> = dims
            .windows(2)
            .map(|w| {
                let limit = (6.0 / w[0] as f64).sqrt();
                let mut layer = Layer::zeros(w[0], w[1]);
                for x in &mut layer.w {
                    *x = T::lit(rng.random_range(-limit..limit));
                }
                layer
            })
            .collect();
        Ok(Self::assemble(layers, vec![T::zero(); dims[0]], vec![T::one(); dims[0]]))
    }

    fn assemble(layers: Vec<Layer<T>>, shift: Vec<T>, scale: Vec<T>) -> Self {
        let adam = Adam {
            m: Gradients::zeros_like(&layers),
            v: Gradients::zeros_like(&layers),
            step: 0,
        };
        Self {
            layers,
            shift,
            scale,
            adam,
        }
    }

    /// Rebuilds a network from stored parameters.
    pub fn from_parts(layers: Vec<Layer<T>>, shift: Vec<T>, scale: Vec<T>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidModel("network has no layers".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.w.len() != l.inputs * l.outputs || l.b.len() != l.outputs {
                return Err(Error::InvalidModel(format!("layer {k} has inconsistent sizes")));
            }
            if k > 0 && layers[k - 1].outputs != l.inputs {
                return Err(Error::InvalidModel(format!("layer {k} does not match its predecessor")));
            }
        }
        let n = layers[0].inputs;
        if shift.len() != n || scale.len() != n {
            return Err(Error::dim("standardization", n, shift.len().min(scale.len())));
        }
        if scale.iter().any(|s| !(*s > T::zero())) {
            return Err(Error::InvalidModel("standardization scale must be positive".into()));
        }
        Ok(Self::assemble(layers, shift, scale))
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn shift(&self) -> &[T] {
        &self.shift
    }

    pub fn scale(&self) -> &[T] {
        &self.scale
    }

    /// `[dim_q, h_1, ..., h_L, classes]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// Fits the standardization to the mean and standard deviation of
    /// `rows`; constant features keep scale 1.
    pub fn standardize_on(&mut self, rows: &[&[T]]) {
        let n = T::lit(rows.len().max(1) as f64);
        for j in 0..self.input_dim() {
            let mean = compensated_sum(rows.iter().map(|r| r[j])) / n;
            let var = compensated_sum(rows.iter().map(|r| (r[j] - mean).powi(2))) / n;
            let sd = var.sqrt();
            self.shift[j] = mean;
            self.scale[j] = if sd > T::lit(1e-12) * mean.abs().max(T::one()) { sd } else { T::one() };
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Parameter `k`, counting layer by layer, weights (row-major) before biases.
    pub fn parameter(&self, k: usize) -> T {
        *flat(&self.layers, k)
    }

    pub fn set_parameter(&mut self, k: usize, v: T) {
        *flat_mut(&mut self.layers, k) = v;
    }

    fn check_input(&self, q: &[T]) -> Result<()> {
        if q.len() != self.input_dim() {
            return Err(Error::dim("classifier input", self.input_dim(), q.len()));
        }
        Ok(())
    }

    fn run(&self, q: &[T]) -> Tape<T> {
        let mut acts: Vec<Vec<T>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(q.iter().zip(&self.shift).zip(&self.scale).map(|((v, s), k)| (*v - *s) / *k).collect());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.apply(&acts[l], &mut z);
            if l < last {
                z.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            acts.push(z);
        }
        Tape { acts }
    }

    /// Pre-softmax scores.
    pub fn logits(&self, q: &[T]) -> Result<Vec<T>> {
        self.check_input(q)?;
        Ok(self.run(q).acts.pop().unwrap_or_default())
    }

    /// Class probabilities.
    pub fn forward(&self, q: &[T]) -> Result<Vec<T>> {
        Ok(softmax(&self.logits(q)?))
    }

    /// Most probable class, lowest label on ties.
    pub fn predict_label(&self, q: &[T]) -> Result<usize> {
        Ok(argmax(&self.logits(q)?))
    }

    /// Mean cross-entropy over the batch.
    pub fn loss(&self, qs: &[&[T]], labels: &[usize]) -> Result<T> {
        self.check_batch(qs, labels)?;
        let terms = qs.iter().zip(labels).map(|(q, y)| {
            let z = self.run(q).acts.pop().unwrap_or_default();
            log_sum_exp(&z) - z[*y]
        });
        Ok(compensated_sum(terms) / T::lit(qs.len() as f64))
    }

    fn check_batch(&self, qs: &[&[T]], labels: &[usize]) -> Result<()> {
        if qs.is_empty() {
            return Err(Error::InvalidModel("empty batch".into()));
        }
        if qs.len() != labels.len() {
            return Err(Error::dim("batch labels", qs.len(), labels.len()));
        }
        for q in qs {
            self.check_input(q)?;
        }
        if let Some(y) = labels.iter().find(|y| **y >= self.classes()) {
            return Err(Error::InvalidModel(format!("label {y} exceeds {} classes", self.classes())));
        }
        Ok(())
    }

    /// Exact gradient of the mean cross-entropy over the batch.
    pub fn gradient(&self, qs: &[&[T]], labels: &[usize]) -> Result<Gradients<T>> {
        Ok(self.loss_and_gradient(qs, labels)?.1)
    }

    pub fn loss_and_gradient(&self, qs: &[&[T]], labels: &[usize]) -> Result<(T, Gradients<T>)> {
        self.check_batch(qs, labels)?;
        let parts: Vec<(T, Gradients<T>)> = qs
            .par_chunks(GRAD_CHUNK)
            .zip(labels.par_chunks(GRAD_CHUNK))
            .map(|(qc, yc)| {
                let mut g = Gradients::zeros_like(&self.layers);
                let mut loss = T::zero();
                for (q, y) in qc.iter().zip(yc) {
                    loss += self.backprop(q, *y, &mut g);
                }
                (loss, g)
            })
            .collect();
        let mut total = Gradients::zeros_like(&self.layers);
        let mut loss = T::zero();
        for (l, g) in &parts {
            loss += *l;
            total.add(g);
        }
        let inv = T::one() / T::lit(qs.len() as f64);
        total.scale(inv);
        Ok((loss * inv, total))
    }

    /// Adds the gradient of one sample's loss to `g`; returns that loss.
    fn backprop(&self, q: &[T], y: usize, g: &mut Gradients<T>) -> T {
        let tape = self.run(q);
        let z = tape.acts.last().unwrap();
        let loss = log_sum_exp(z) - z[y];
        let mut delta = softmax(z);
        delta[y] -= T::one();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &tape.acts[l];
            let gl = &mut g.layers[l];
            for (o, d) in delta.iter().enumerate() {
                gl.b[o] += *d;
                let row = &mut gl.w[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(input).for_each(|(w, a)| *w += *d * *a);
            }
            if l == 0 {
                break;
            }
            let mut back = vec![T::zero(); layer.inputs];
            for (o, d) in delta.iter().enumerate() {
                let row = &layer.w[o * layer.inputs..(o + 1) * layer.inputs];
                back.iter_mut().zip(row).for_each(|(b, w)| *b += *d * *w);
            }
            // ReLU: the stored activation is positive exactly where z was.
            back.iter_mut().zip(input).for_each(|(b, a)| {
                if *a <= T::zero() {
                    *b = T::zero();
                }
            });
            delta = back;
        }
        loss
    }

    /// One Adam update with bias correction.
    pub fn adam_step(&mut self, g: &Gradients<T>, cfg: &TrainConfig) {
        let (b1, b2) = (T::lit(cfg.adam_beta1), T::lit(cfg.adam_beta2));
        let (lr, eps) = (T::lit(cfg.learning_rate), T::lit(cfg.adam_eps));
        self.adam.step += 1;
        let c1 = T::one() - b1.powi(self.adam.step);
        let c2 = T::one() - b2.powi(self.adam.step);
        for (l, layer) in self.layers.iter_mut().enumerate() {
            let (m, v, gl) = (&mut self.adam.m.layers[l], &mut self.adam.v.layers[l], &g.layers[l]);
            let params = layer.w.iter_mut().chain(layer.b.iter_mut());
            let moments = m.w.iter_mut().chain(m.b.iter_mut()).zip(v.w.iter_mut().chain(v.b.iter_mut()));
            let grads = gl.w.iter().chain(&gl.b);
            for ((p, (m, v)), g) in params.zip(moments).zip(grads) {
                *m = b1 * *m + (T::one() - b1) * *g;
                *v = b2 * *v + (T::one() - b2) * *g * *g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            }
        }
    }

    /// Fraction of `indices` whose predicted label matches; NaN when empty.
    pub fn accuracy(&self, ts: &TrainingSet<T>, indices: &[usize]) -> f64 {
        if indices.is_empty() {
            return f64::NAN;
        }
        let hits = indices
            .par_iter()
            .filter(|&&i| self.predict_label(&ts.q[i]).ok() == Some(ts.labels[i]))
            .count();
        hits as f64 / indices.len() as f64
    }
}

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let top = z.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = z.iter().map(|v| (*v - top).exp()).collect();
    let s = compensated_sum(e.iter().copied());
    e.into_iter().map(|v| v / s).collect()
}

fn log_sum_exp<T: Scalar>(z: &[T]) -> T {
    let top = z.iter().copied().fold(T::neg_infinity(), T::max);
    top + compensated_sum(z.iter().map(|v| (*v - top).exp())).ln()
}

fn argmax<T: Scalar>(z: &[T]) -> usize {
    let mut best = 0;
    for (k, v) in z.iter().enumerate() {
        if *v > z[best] {
            best = k;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub train_acc: f64,
    pub test_acc: f64,
    pub dict_size: usize,
    pub final_loss: f64,
}

/// Trains a fresh network on the training split with shuffled mini-batches
/// and reports accuracy on both splits.
pub fn train<T: Scalar>(
    ts: &TrainingSet<T>,
    dict: &StrategyDictionary,
    cfg: &TrainConfig,
) -> Result<(MlpClassifier<T>, TrainMetrics)> {
    cfg.check(ts.train.len())?;
    if let Some(y) = ts.labels.iter().find(|y| **y >= dict.len()) {
        return Err(Error::InvalidModel(format!("label {y} is not in the dictionary")));
    }
    let mut dims = vec![ts.dim_q()];
    dims.extend(std::iter::repeat(cfg.hidden_width).take(cfg.hidden_layers));
    dims.push(dict.len());
    let mut net = MlpClassifier::new(&dims, cfg.seed)?;
    let train_rows: Vec<&[T]> = ts.train.iter().map(|&i| ts.q[i].as_slice()).collect();
    net.standardize_on(&train_rows);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order = ts.train.clone();
    let mut step = 0;
    let mut last_loss = f64::NAN;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = Vec::new();
        for batch in order.chunks(cfg.batch_size) {
            let qs: Vec<&[T]> = batch.iter().map(|&i| ts.q[i].as_slice()).collect();
            let ys: Vec<usize> = batch.iter().map(|&i| ts.labels[i]).collect();
            let (loss, mut g) = net.loss_and_gradient(&qs, &ys)?;
            if cfg.weight_decay > 0.0 {
                let wd = T::lit(cfg.weight_decay);
                for (gl, l) in g.layers.iter_mut().zip(&net.layers) {
                    gl.w.iter_mut().zip(&l.w).for_each(|(g, w)| *g += wd * *w);
                }
            }
            if !loss.is_finite() || !g.norm().is_finite() {
                return Err(Error::Divergence {
                    step,
                    loss: loss.as_f64(),
                });
            }
            net.adam_step(&g, cfg);
            epoch_loss.push(loss.as_f64() * batch.len() as f64);
            step += 1;
        }
        last_loss = compensated_sum(epoch_loss) / order.len() as f64;
    }
    let metrics = TrainMetrics {
        train_acc: net.accuracy(ts, &ts.train),
        test_acc: net.accuracy(ts, &ts.test),
        dict_size: dict.len(),
        final_loss: last_loss,
    };
    Ok((net, metrics))
}

/// The dictionary entry of the predicted class, anchored at `sample_index`.
pub fn predict_basis<T: Scalar>(
    net: &MlpClassifier<T>,
    dict: &StrategyDictionary,
    q: &[T],
    sample_index: usize,
) -> Result<Basis> {
    let label = net.predict_label(q)?;
    let rows = dict
        .get(label)
        .ok_or_else(|| Error::InvalidModel(format!("class {label} is not in the dictionary")))?;
    Ok(rows.iter().map(|&row| ConstraintId::new(sample_index, row)).collect())
}

/// Anything that guesses the basis rows of a single-sample problem from its
/// parameter.
pub trait StrategyPredictor<T>: Sync {
    fn predict_rows(&self, q: &[T]) -> Result<Vec<usize>>;
}

/// A trained network together with its label space.
pub struct LearnedStrategy<'a, T> {
    pub net: &'a MlpClassifier<T>,
    pub dict: &'a StrategyDictionary,
}

impl<T: Scalar> StrategyPredictor<T> for LearnedStrategy<'_, T> {
    fn predict_rows(&self, q: &[T]) -> Result<Vec<usize>> {
        Ok(predict_basis(self.net, self.dict, q, 0)?.row_pattern())
    }
}

/// [`solve_sequential_with`] driven by a trained network.
pub fn solve_sequential_learned<T: Scalar>(
    problem: &SampledProblem<T>,
    net: &MlpClassifier<T>,
    dict: &StrategyDictionary,
    opts: &SeqOptions<T>,
) -> Result<(Solution<T>, Basis, SeqTrace<T>)> {
    solve_sequential_with(problem, &LearnedStrategy { net, dict }, opts)
}

/// The sequential loop with one violating sample per iteration whose block is
/// replaced by the predicted basis rows. When that solve fails to raise the
/// objective, the iteration is redone with the whole block. `opts.r` is not
/// used.
pub fn solve_sequential_with<T: Scalar, P: StrategyPredictor<T> + ?Sized>(
    problem: &SampledProblem<T>,
    predictor: &P,
    opts: &SeqOptions<T>,
) -> Result<(Solution<T>, Basis, SeqTrace<T>)> {
    let mut state = Loop::start(problem, &opts.mip)?;
    let tol = opts.mip.tol.feasibility;
    loop {
        let since = Instant::now();
        let check = verify(&state.x, problem, 1, tol);
        let Some(&s) = check.violations.first() else {
            break;
        };
        state.guard(opts.max_iterations)?;
        let block = &problem.blocks[s - 1];
        let q = block
            .q
            .as_deref()
            .ok_or_else(|| Error::InvalidModel(format!("sample {s} carries no uncertainty parameter")))?;
        let predicted: Vec<ConstraintId> = predictor
            .predict_rows(q)?
            .into_iter()
            .filter(|&row| row < block.rows.len())
            .map(|row| ConstraintId::new(s, row))
            .collect();
        let with = |extra: &[ConstraintId]| {
            let mut ids: Vec<ConstraintId> = state.basis.members().to_vec();
            ids.extend_from_slice(extra);
            ids.sort();
            ids.dedup();
            ids
        };
        let mut step = None;
        if !predicted.is_empty() {
            let guess = solve_subset(problem, state.mip, &with(&predicted))?;
            state.trace.total_solve_calls += 1;
            if guess.objective > state.objective + strict_tolerance(state.objective) {
                step = Some((guess, predicted.len() + state.basis.len(), false));
            }
        }
        let (step, constraints, fallback) = match step {
            Some(s) => s,
            None => {
                let all: Vec<ConstraintId> = block.rows.iter().map(|r| r.id).collect();
                let full = solve_subset(problem, state.mip, &with(&all))?;
                state.trace.total_solve_calls += 1;
                (full, 1 + state.basis.len(), true)
            }
        };
        state.advance(step, 1, constraints, fallback, since);
    }
    Ok(state.finish())
}
