//! The layered classifier and its exact reverse-mode derivatives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Tensor;

use super::layers::Layer;
use super::NetError;

/// A feed-forward classifier split at an intermediate representation.
///
/// The split point `representation_index` divides the stack into the
/// feature map `h` (layers before the index) and the head `g` (layers from
/// the index on), so the full network is `g(h(x))`. Attacks differentiate
/// `h`; training and probability queries use the whole stack.
///
/// Structural invariants enforced at construction: the final layer is a
/// softmax, softmax appears nowhere else, consecutive dense layers agree on
/// their dimensions, and the class count matches the final dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredModel {
    layers: Vec<Layer>,
    representation_index: usize,
    class_count: usize,
}

impl LayeredModel {
    /// Validates and assembles a model.
    pub fn new(
        layers: Vec<Layer>,
        representation_index: usize,
        class_count: usize,
    ) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::InvalidModel("model has no layers".to_string()));
        }
        if class_count < 2 {
            return Err(NetError::InvalidModel(format!(
                "class count must be at least 2, got {class_count}"
            )));
        }
        if representation_index > layers.len() {
            return Err(NetError::InvalidModel(format!(
                "representation index {representation_index} exceeds layer count {}",
                layers.len()
            )));
        }
        if !matches!(layers.last(), Some(Layer::Softmax)) {
            return Err(NetError::InvalidModel(
                "final layer must be a softmax".to_string(),
            ));
        }
        if layers[..layers.len() - 1]
            .iter()
            .any(|l| matches!(l, Layer::Softmax))
        {
            return Err(NetError::InvalidModel(
                "softmax may only appear as the final layer".to_string(),
            ));
        }

        // Static shape walk: track the activation length where it is known.
        let mut len: Option<usize> = None;
        for (i, layer) in layers.iter().enumerate() {
            if let (Some(have), Some(need)) = (len, layer.input_len_requirement()) {
                if have != need {
                    return Err(NetError::InvalidModel(format!(
                        "layer {i} expects input length {need} but receives {have}"
                    )));
                }
            }
            if let Layer::Dense { weights, bias } = layer {
                if bias.len() != weights.rows() {
                    return Err(NetError::InvalidModel(format!(
                        "layer {i}: bias length {} does not match {} output rows",
                        bias.len(),
                        weights.rows()
                    )));
                }
            }
            if let Layer::Conv2d { kernels, stride } = layer {
                if kernels.rank() != 4 {
                    return Err(NetError::InvalidModel(format!(
                        "layer {i}: convolution kernels must be rank 4, got {:?}",
                        kernels.shape()
                    )));
                }
                if *stride == 0 {
                    return Err(NetError::InvalidModel(format!(
                        "layer {i}: convolution stride must be positive"
                    )));
                }
            }
            len = layer.output_len_hint(len);
        }
        if let Some(final_len) = len {
            if final_len != class_count {
                return Err(NetError::InvalidModel(format!(
                    "model outputs {final_len} values but declares {class_count} classes"
                )));
            }
        }

        Ok(Self {
            layers,
            representation_index,
            class_count,
        })
    }

    /// A dense network with ReLU activations after every hidden layer,
    /// Glorot-uniform initial weights, and zero biases. The representation
    /// split sits after the last hidden activation, so `h` is everything up
    /// to (and including) the final ReLU and `g` is the classification head.
    pub fn mlp(
        input_dim: usize,
        hidden: &[usize],
        class_count: usize,
        seed: u64,
    ) -> Result<Self, NetError> {
        if input_dim == 0 || hidden.iter().any(|&w| w == 0) {
            return Err(NetError::InvalidArgument(
                "layer widths must be positive".to_string(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut fan_in = input_dim;
        for &width in hidden {
            layers.push(glorot_dense(width, fan_in, &mut rng));
            layers.push(Layer::Relu);
            fan_in = width;
        }
        layers.push(glorot_dense(class_count, fan_in, &mut rng));
        layers.push(Layer::Softmax);
        let representation_index = 2 * hidden.len();
        Self::new(layers, representation_index, class_count)
    }

    /// The layer stack.
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Index of the first layer belonging to the head `g`.
    pub fn representation_index(&self) -> usize {
        self.representation_index
    }

    /// Number of output classes.
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Class probabilities for an input: the full forward pass.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NetError> {
        let mut activation = input.clone();
        for layer in &self.layers {
            activation = layer.forward(&activation)?;
        }
        Ok(activation)
    }

    /// The intermediate representation `h(x)`: the activation entering layer
    /// `representation_index`. With index 0 this is the input itself.
    pub fn representation(&self, input: &Tensor) -> Result<Tensor, NetError> {
        let mut activation = input.clone();
        for layer in &self.layers[..self.representation_index] {
            activation = layer.forward(&activation)?;
        }
        Ok(activation)
    }

    /// Length of `h(x)` for inputs shaped like `input`.
    pub fn representation_dim(&self, input: &Tensor) -> Result<usize, NetError> {
        Ok(self.representation(input)?.len())
    }

    /// All activations of the forward pass: `trace[0]` is the input and
    /// `trace[i + 1]` the output of layer `i`.
    pub(crate) fn forward_trace(&self, input: &Tensor) -> Result<Vec<Tensor>, NetError> {
        let mut trace = Vec::with_capacity(self.layers.len() + 1);
        trace.push(input.clone());
        for layer in &self.layers {
            let next = layer.forward(trace.last().expect("trace is never empty"))?;
            trace.push(next);
        }
        Ok(trace)
    }

    /// Pulls a gradient at the output of layer `top - 1` back to the input
    /// of layer `bottom` (both indices into the layer stack).
    fn pull_back(
        &self,
        trace: &[Tensor],
        top: usize,
        bottom: usize,
        seed: Tensor,
    ) -> Result<Tensor, NetError> {
        let mut grad = seed;
        for idx in (bottom..top).rev() {
            grad = self.layers[idx].backward_input(&trace[idx], &trace[idx + 1], &grad)?;
        }
        Ok(grad)
    }

    /// The exact Jacobian of the representation map `h` at `input`, as an
    /// `m x n` matrix over the flattened input (`m` = representation length,
    /// `n` = input length). Computed with one reverse sweep per row.
    pub fn jacobian_h(&self, input: &Tensor) -> Result<Tensor, NetError> {
        let trace = self.trace_to_representation(input)?;
        let m = trace[self.representation_index].len();
        let n = input.len();
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            let row = self.jacobian_row_from_trace(&trace, i)?;
            data[i * n..(i + 1) * n].copy_from_slice(row.data());
        }
        Ok(Tensor::from_parts(vec![m, n], data))
    }

    /// A single row of [`Self::jacobian_h`]: the input gradient of
    /// representation coordinate `coordinate`.
    pub fn jacobian_h_row(&self, input: &Tensor, coordinate: usize) -> Result<Tensor, NetError> {
        let trace = self.trace_to_representation(input)?;
        self.jacobian_row_from_trace(&trace, coordinate)
    }

    fn trace_to_representation(&self, input: &Tensor) -> Result<Vec<Tensor>, NetError> {
        let mut trace = Vec::with_capacity(self.representation_index + 1);
        trace.push(input.clone());
        for layer in &self.layers[..self.representation_index] {
            let next = layer.forward(trace.last().expect("trace is never empty"))?;
            trace.push(next);
        }
        Ok(trace)
    }

    fn jacobian_row_from_trace(
        &self,
        trace: &[Tensor],
        coordinate: usize,
    ) -> Result<Tensor, NetError> {
        let representation = &trace[self.representation_index];
        let m = representation.len();
        if coordinate >= m {
            return Err(NetError::InvalidArgument(format!(
                "representation coordinate {coordinate} out of range for length {m}"
            )));
        }
        let mut seed = Tensor::zeros(representation.shape());
        seed[coordinate] = 1.0;
        let grad = self.pull_back(trace, self.representation_index, 0, seed)?;
        Ok(grad.reshape(&[grad.len()])?)
    }

    /// Gradient of the class probability `p(class | input)` with respect to
    /// the (flattened) input.
    pub fn input_gradient(&self, input: &Tensor, class: usize) -> Result<Tensor, NetError> {
        let trace = self.forward_trace(input)?;
        let seed = self.class_seed(&trace, class)?;
        let grad = self.pull_back(&trace, self.layers.len(), 0, seed)?;
        Ok(grad.reshape(&[grad.len()])?)
    }

    /// Gradient of `p(class | input)` with respect to the representation
    /// `z = h(input)`: the derivative of the head `g` alone.
    pub fn representation_gradient(
        &self,
        input: &Tensor,
        class: usize,
    ) -> Result<Tensor, NetError> {
        let trace = self.forward_trace(input)?;
        let seed = self.class_seed(&trace, class)?;
        let grad = self.pull_back(&trace, self.layers.len(), self.representation_index, seed)?;
        Ok(grad.reshape(&[grad.len()])?)
    }

    fn class_seed(&self, trace: &[Tensor], class: usize) -> Result<Tensor, NetError> {
        if class >= self.class_count {
            return Err(NetError::ClassOutOfRange {
                class,
                class_count: self.class_count,
            });
        }
        let output = trace.last().expect("trace is never empty");
        let mut seed = Tensor::zeros(output.shape());
        seed[class] = 1.0;
        Ok(seed)
    }

    /// Mutable access for training and sparsification.
    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Total trainable parameter count.
    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Layer::parameter_count).sum()
    }
}

fn glorot_dense(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Layer {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-limit..limit))
        .collect();
    Layer::Dense {
        weights: Tensor::from_parts(vec![rows, cols], data),
        bias: Tensor::zeros(&[rows]),
    }
}
