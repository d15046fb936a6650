//! Deterministic minibatch SGD and parameter sparsification.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Tensor;

use super::layers::{Layer, LayerGradient};
use super::{Dataset, LayeredModel, NetError};

/// Hyper-parameters for [`sgd_train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Step size applied to averaged minibatch gradients.
    pub learning_rate: f64,
    /// Full passes over the training set.
    pub epochs: usize,
    /// Samples per gradient step (the final batch of an epoch may be short).
    pub batch_size: usize,
    /// Seed for the shuffle order; fixes the whole run bit-for-bit.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 30,
            batch_size: 16,
            seed: 0,
        }
    }
}

/// Summary of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean cross-entropy over the training set after the last epoch.
    pub final_loss: f64,
    /// Accuracy on the training set after the last epoch.
    pub train_accuracy: f64,
    /// Accuracy on the held-out set, when one was provided.
    pub test_accuracy: Option<f64>,
}

/// Trains a copy of `model` by minibatch SGD on the cross-entropy loss.
///
/// The epoch shuffle is driven by a seeded generator and every arithmetic
/// step is plain f64, so two runs with the same inputs and config produce
/// bit-identical weights. A learning rate of zero performs all the
/// bookkeeping but leaves the parameters unchanged.
pub fn sgd_train(
    model: &LayeredModel,
    train: &Dataset,
    test: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<(LayeredModel, TrainReport), NetError> {
    if !(config.learning_rate.is_finite() && config.learning_rate >= 0.0) {
        return Err(NetError::InvalidArgument(format!(
            "learning rate must be finite and non-negative, got {}",
            config.learning_rate
        )));
    }
    if config.batch_size == 0 {
        return Err(NetError::InvalidArgument(
            "batch size must be positive".to_string(),
        ));
    }
    if train.is_empty() {
        return Err(NetError::EmptyDataset);
    }
    if train.class_count() != model.class_count() {
        return Err(NetError::InvalidArgument(format!(
            "dataset has {} classes but model expects {}",
            train.class_count(),
            model.class_count()
        )));
    }

    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut indices: Vec<usize> = (0..train.len()).collect();

    for _ in 0..config.epochs {
        indices.shuffle(&mut rng);
        for batch in indices.chunks(config.batch_size) {
            let mut grads: Vec<LayerGradient> = model
                .layers()
                .iter()
                .map(|l| zero_gradient_like(l))
                .collect();
            for &sample_index in batch {
                let sample_grads =
                    sample_gradients(&model, train.sample(sample_index), train.label(sample_index))?;
                for (acc, g) in grads.iter_mut().zip(sample_grads.iter()) {
                    acc.accumulate(g);
                }
            }
            let scale = -config.learning_rate / batch.len() as f64;
            apply_gradients(&mut model, &grads, scale);
        }
    }

    let mut loss = 0.0;
    for i in 0..train.len() {
        let probs = model.forward(train.sample(i))?;
        loss -= probs[train.label(i)].max(1e-300).ln();
    }
    let report = TrainReport {
        final_loss: loss / train.len() as f64,
        train_accuracy: accuracy(&model, train)?,
        test_accuracy: test.map(|d| accuracy(&model, d)).transpose()?,
    };
    Ok((model, report))
}

/// Fraction of samples whose predicted class (lowest index wins ties)
/// matches the label.
pub fn accuracy(model: &LayeredModel, data: &Dataset) -> Result<f64, NetError> {
    if data.is_empty() {
        return Err(NetError::EmptyDataset);
    }
    let mut correct = 0usize;
    for i in 0..data.len() {
        let probs = model.forward(data.sample(i))?;
        if argmax(probs.data()) == data.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Index of the largest entry; the lowest index wins exact ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Randomly zeroes parameters, keeping each one independently with
/// probability `reserve_rate`.
///
/// This simulates an attacker whose surrogate only partially matches the
/// network the directions were meant for. Decisions are drawn from a seeded
/// generator in a fixed order (layers first to last; within a layer the
/// weight tensor in row-major order, then the bias), so a given
/// `(reserve_rate, seed)` pair always zeroes the same entries. A rate of 1
/// draws but never zeroes and returns a bit-identical copy; a rate of 0
/// zeroes everything.
pub fn zero_parameters(
    model: &LayeredModel,
    reserve_rate: f64,
    seed: u64,
) -> Result<LayeredModel, NetError> {
    if !(reserve_rate.is_finite() && (0.0..=1.0).contains(&reserve_rate)) {
        return Err(NetError::InvalidArgument(format!(
            "reserve rate must lie in [0, 1], got {reserve_rate}"
        )));
    }
    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = |value: &mut f64| {
        // Uniform draws live in [0, 1), so rate 1.0 keeps everything.
        if rng.random::<f64>() >= reserve_rate {
            *value = 0.0;
        }
    };
    for layer in model.layers_mut() {
        match layer {
            Layer::Dense { weights, bias } => {
                weights.data_mut().iter_mut().for_each(&mut keep);
                bias.data_mut().iter_mut().for_each(&mut keep);
            }
            Layer::Conv2d { kernels, .. } => {
                kernels.data_mut().iter_mut().for_each(&mut keep);
            }
            _ => {}
        }
    }
    Ok(model)
}

/// Per-layer parameter gradients of the cross-entropy loss at one sample.
fn sample_gradients(
    model: &LayeredModel,
    sample: &Tensor,
    label: usize,
) -> Result<Vec<LayerGradient>, NetError> {
    if label >= model.class_count() {
        return Err(NetError::LabelOutOfRange {
            label,
            class_count: model.class_count(),
        });
    }
    let trace = model.forward_trace(sample)?;
    let layer_count = model.layers().len();
    let probs = trace.last().expect("trace is never empty");

    // Softmax + cross-entropy fuse to `p - onehot(y)` at the logits, which
    // is both cheaper and better conditioned than differentiating the two
    // pieces separately.
    let mut grad = probs.clone();
    grad[label] -= 1.0;

    let mut grads = vec![LayerGradient::None; layer_count];
    for idx in (0..layer_count - 1).rev() {
        grads[idx] = model.layers()[idx].backward_params(&trace[idx], &grad)?;
        grad = model.layers()[idx].backward_input(&trace[idx], &trace[idx + 1], &grad)?;
    }
    Ok(grads)
}

fn zero_gradient_like(layer: &Layer) -> LayerGradient {
    match layer {
        Layer::Dense { weights, bias } => LayerGradient::Dense {
            weights: Tensor::zeros(weights.shape()),
            bias: Tensor::zeros(bias.shape()),
        },
        Layer::Conv2d { kernels, .. } => LayerGradient::Conv2d {
            kernels: Tensor::zeros(kernels.shape()),
        },
        _ => LayerGradient::None,
    }
}

fn apply_gradients(model: &mut LayeredModel, grads: &[LayerGradient], scale: f64) {
    for (layer, grad) in model.layers_mut().iter_mut().zip(grads.iter()) {
        match (layer, grad) {
            (
                Layer::Dense { weights, bias },
                LayerGradient::Dense {
                    weights: dw,
                    bias: db,
                },
            ) => {
                axpy(weights, dw, scale);
                axpy(bias, db, scale);
            }
            (Layer::Conv2d { kernels, .. }, LayerGradient::Conv2d { kernels: dk }) => {
                axpy(kernels, dk, scale);
            }
            _ => {}
        }
    }
}

fn axpy(target: &mut Tensor, delta: &Tensor, scale: f64) {
    for (t, d) in target.data_mut().iter_mut().zip(delta.data().iter()) {
        *t += scale * d;
    }
}
