//! The individual layer kinds and their exact forward/backward maps.

use crate::linalg::Tensor;

use super::NetError;

/// One layer of a [`super::LayeredModel`].
///
/// Layers are pure functions of their input; all state lives in the
/// parameter tensors. Convolutions carry no bias term.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// Affine map `W x + b` with `W` of shape `[out, in]`.
    Dense {
        /// Weight matrix, `[out, in]`.
        weights: Tensor,
        /// Bias vector, `[out]`.
        bias: Tensor,
    },
    /// Elementwise `max(0, x)`.
    Relu,
    /// Valid (no padding) cross-correlation with kernels `[oc, ic, kh, kw]`.
    Conv2d {
        /// Kernel stack, `[out_channels, in_channels, kernel_h, kernel_w]`.
        kernels: Tensor,
        /// Step between kernel applications, same on both axes.
        stride: usize,
    },
    /// Reshape to a rank-1 tensor.
    Flatten,
    /// Numerically stable softmax over a vector.
    Softmax,
}

/// Parameter gradient for one layer, mirroring the layer's parameters.
#[derive(Debug, Clone)]
pub(crate) enum LayerGradient {
    Dense { weights: Tensor, bias: Tensor },
    Conv2d { kernels: Tensor },
    None,
}

impl Layer {
    /// Applies the layer to an activation.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NetError> {
        match self {
            Layer::Dense { weights, bias } => {
                if !input.is_vector() || input.len() != weights.cols() {
                    return Err(shape_error("dense forward", &[weights.cols()], input));
                }
                Ok(weights.matvec(input)?.add(bias)?)
            }
            Layer::Relu => Ok(map(input, |v| v.max(0.0))),
            Layer::Conv2d { kernels, stride } => conv_forward(kernels, *stride, input),
            Layer::Flatten => Ok(input.reshape(&[input.len()])?),
            Layer::Softmax => {
                if !input.is_vector() {
                    return Err(shape_error("softmax forward", &[input.len()], input));
                }
                Ok(softmax(input))
            }
        }
    }

    /// Vector-Jacobian product: pulls `grad_out` (gradient at this layer's
    /// output) back to a gradient at its input. `input` and `output` must be
    /// the activations recorded on the forward pass.
    pub fn backward_input(
        &self,
        input: &Tensor,
        output: &Tensor,
        grad_out: &Tensor,
    ) -> Result<Tensor, NetError> {
        match self {
            Layer::Dense { weights, .. } => {
                Ok(weights.transpose()?.matvec(&grad_out.reshape(&[grad_out.len()])?)?)
            }
            Layer::Relu => {
                // Subgradient 0 at exactly-zero preactivations.
                let mut out = grad_out.clone();
                for (g, &x) in out.data_mut().iter_mut().zip(input.data().iter()) {
                    if x <= 0.0 {
                        *g = 0.0;
                    }
                }
                Ok(out)
            }
            Layer::Conv2d { kernels, stride } => {
                conv_backward_input(kernels, *stride, input, grad_out)
            }
            Layer::Flatten => Ok(grad_out.reshape(input.shape())?),
            Layer::Softmax => {
                // d/dx softmax(x)^T g = p (g - <g, p>) with p the output.
                let inner = grad_out.dot(output)?;
                let data = output
                    .data()
                    .iter()
                    .zip(grad_out.data().iter())
                    .map(|(&p, &g)| p * (g - inner))
                    .collect();
                Ok(Tensor::from_parts(output.shape().to_vec(), data))
            }
        }
    }

    /// Gradient of the layer's parameters given the output gradient.
    pub(crate) fn backward_params(
        &self,
        input: &Tensor,
        grad_out: &Tensor,
    ) -> Result<LayerGradient, NetError> {
        match self {
            Layer::Dense { weights, .. } => {
                let (rows, cols) = (weights.rows(), weights.cols());
                let mut dw = vec![0.0; rows * cols];
                for r in 0..rows {
                    let g = grad_out.get(r);
                    if g == 0.0 {
                        continue;
                    }
                    for c in 0..cols {
                        dw[r * cols + c] = g * input.get(c);
                    }
                }
                Ok(LayerGradient::Dense {
                    weights: Tensor::from_parts(vec![rows, cols], dw),
                    bias: grad_out.reshape(&[rows])?,
                })
            }
            Layer::Conv2d { kernels, stride } => {
                conv_backward_kernels(kernels, *stride, input, grad_out)
            }
            _ => Ok(LayerGradient::None),
        }
    }

    /// Number of trainable parameters.
    pub fn parameter_count(&self) -> usize {
        match self {
            Layer::Dense { weights, bias } => weights.len() + bias.len(),
            Layer::Conv2d { kernels, .. } => kernels.len(),
            _ => 0,
        }
    }

    /// Output length when it can be determined from the input length alone.
    /// Convolutions return `None` because their output depends on the full
    /// input shape.
    pub(crate) fn output_len_hint(&self, input_len: Option<usize>) -> Option<usize> {
        match self {
            Layer::Dense { weights, .. } => Some(weights.rows()),
            Layer::Relu | Layer::Softmax | Layer::Flatten => input_len,
            Layer::Conv2d { .. } => None,
        }
    }

    /// Input length the layer requires, when fixed by its parameters.
    pub(crate) fn input_len_requirement(&self) -> Option<usize> {
        match self {
            Layer::Dense { weights, .. } => Some(weights.cols()),
            _ => None,
        }
    }
}

impl LayerGradient {
    /// Adds another sample's gradient into this accumulator.
    pub(crate) fn accumulate(&mut self, other: &LayerGradient) {
        match (self, other) {
            (
                LayerGradient::Dense { weights, bias },
                LayerGradient::Dense {
                    weights: dw,
                    bias: db,
                },
            ) => {
                add_in_place(weights, dw);
                add_in_place(bias, db);
            }
            (LayerGradient::Conv2d { kernels }, LayerGradient::Conv2d { kernels: dk }) => {
                add_in_place(kernels, dk);
            }
            (LayerGradient::None, LayerGradient::None) => {}
            _ => unreachable!("gradient kind always matches its layer"),
        }
    }
}

fn add_in_place(acc: &mut Tensor, delta: &Tensor) {
    for (a, d) in acc.data_mut().iter_mut().zip(delta.data().iter()) {
        *a += d;
    }
}

fn map(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::from_parts(t.shape().to_vec(), t.data().iter().map(|&v| f(v)).collect())
}

fn softmax(input: &Tensor) -> Tensor {
    let max = input.data().iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = input.data().iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Tensor::from_parts(
        input.shape().to_vec(),
        exps.into_iter().map(|e| e / total).collect(),
    )
}

fn shape_error(context: &str, expected: &[usize], got: &Tensor) -> NetError {
    NetError::ShapeMismatch {
        context: context.to_string(),
        expected: expected.to_vec(),
        got: got.shape().to_vec(),
    }
}

/// Shape bookkeeping shared by the convolution passes.
struct ConvDims {
    in_channels: usize,
    height: usize,
    width: usize,
    out_channels: usize,
    kernel_h: usize,
    kernel_w: usize,
    out_h: usize,
    out_w: usize,
}

fn conv_dims(kernels: &Tensor, stride: usize, input: &Tensor) -> Result<ConvDims, NetError> {
    if kernels.rank() != 4 {
        return Err(NetError::InvalidModel(format!(
            "convolution kernels must be rank 4, got shape {:?}",
            kernels.shape()
        )));
    }
    // Accept [h, w] as shorthand for a single input channel.
    let (in_channels, height, width) = match input.shape() {
        &[h, w] => (1, h, w),
        &[c, h, w] => (c, h, w),
        _ => {
            return Err(shape_error(
                "conv2d forward",
                &[kernels.shape()[1], 0, 0],
                input,
            ))
        }
    };
    let &[out_channels, kc, kernel_h, kernel_w] = kernels.shape() else {
        unreachable!("rank checked above");
    };
    if kc != in_channels || kernel_h > height || kernel_w > width {
        return Err(shape_error(
            "conv2d forward",
            &[kc, kernel_h, kernel_w],
            input,
        ));
    }
    Ok(ConvDims {
        in_channels,
        height,
        width,
        out_channels,
        kernel_h,
        kernel_w,
        out_h: (height - kernel_h) / stride + 1,
        out_w: (width - kernel_w) / stride + 1,
    })
}

fn conv_forward(kernels: &Tensor, stride: usize, input: &Tensor) -> Result<Tensor, NetError> {
    let d = conv_dims(kernels, stride, input)?;
    let mut out = vec![0.0; d.out_channels * d.out_h * d.out_w];
    let x = input.data();
    let k = kernels.data();
    for o in 0..d.out_channels {
        for y in 0..d.out_h {
            for xo in 0..d.out_w {
                let mut acc = 0.0;
                for i in 0..d.in_channels {
                    for p in 0..d.kernel_h {
                        for q in 0..d.kernel_w {
                            let iy = y * stride + p;
                            let ix = xo * stride + q;
                            acc += k[((o * d.in_channels + i) * d.kernel_h + p) * d.kernel_w + q]
                                * x[(i * d.height + iy) * d.width + ix];
                        }
                    }
                }
                out[(o * d.out_h + y) * d.out_w + xo] = acc;
            }
        }
    }
    Ok(Tensor::from_parts(vec![d.out_channels, d.out_h, d.out_w], out))
}

fn conv_backward_input(
    kernels: &Tensor,
    stride: usize,
    input: &Tensor,
    grad_out: &Tensor,
) -> Result<Tensor, NetError> {
    let d = conv_dims(kernels, stride, input)?;
    let mut grad_in = vec![0.0; input.len()];
    let g = grad_out.data();
    let k = kernels.data();
    for o in 0..d.out_channels {
        for y in 0..d.out_h {
            for xo in 0..d.out_w {
                let gv = g[(o * d.out_h + y) * d.out_w + xo];
                if gv == 0.0 {
                    continue;
                }
                for i in 0..d.in_channels {
                    for p in 0..d.kernel_h {
                        for q in 0..d.kernel_w {
                            let iy = y * stride + p;
                            let ix = xo * stride + q;
                            grad_in[(i * d.height + iy) * d.width + ix] += gv
                                * k[((o * d.in_channels + i) * d.kernel_h + p) * d.kernel_w + q];
                        }
                    }
                }
            }
        }
    }
    Ok(Tensor::from_parts(input.shape().to_vec(), grad_in))
}

fn conv_backward_kernels(
    kernels: &Tensor,
    stride: usize,
    input: &Tensor,
    grad_out: &Tensor,
) -> Result<LayerGradient, NetError> {
    let d = conv_dims(kernels, stride, input)?;
    let mut dk = vec![0.0; kernels.len()];
    let g = grad_out.data();
    let x = input.data();
    for o in 0..d.out_channels {
        for y in 0..d.out_h {
            for xo in 0..d.out_w {
                let gv = g[(o * d.out_h + y) * d.out_w + xo];
                if gv == 0.0 {
                    continue;
                }
                for i in 0..d.in_channels {
                    for p in 0..d.kernel_h {
                        for q in 0..d.kernel_w {
                            let iy = y * stride + p;
                            let ix = xo * stride + q;
                            dk[((o * d.in_channels + i) * d.kernel_h + p) * d.kernel_w + q] +=
                                gv * x[(i * d.height + iy) * d.width + ix];
                        }
                    }
                }
            }
        }
    }
    Ok(LayerGradient::Conv2d {
        kernels: Tensor::from_parts(kernels.shape().to_vec(), dk),
    })
}
