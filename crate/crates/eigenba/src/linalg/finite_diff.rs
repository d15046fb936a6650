//! Central-difference Jacobians for cross-checking analytic derivatives.

use super::{LinalgError, Tensor};

/// Approximates the Jacobian of `f` at `x` by central differences.
///
/// `f` may map tensors of any shape to vectors; the result is an `m x n`
/// matrix where `m` is the output length and `n` the flattened input length.
/// This is a testing aid: it costs `2n` evaluations of `f` and carries the
/// usual `O(step^2)` truncation error, but it shares no code with the
/// reverse-mode Jacobians it is used to validate.
pub fn finite_difference_jacobian<F>(
    mut f: F,
    x: &Tensor,
    step: f64,
) -> Result<Tensor, LinalgError>
where
    F: FnMut(&Tensor) -> Tensor,
{
    if !(step.is_finite() && step > 0.0) {
        return Err(LinalgError::InvalidArgument(format!(
            "finite-difference step must be positive and finite, got {step}"
        )));
    }
    let n = x.len();
    let m = f(x).len();

    let mut data = vec![0.0; m * n];
    for j in 0..n {
        let plus = f(&nudged(x, j, step));
        let minus = f(&nudged(x, j, -step));
        if plus.len() != m || minus.len() != m {
            return Err(LinalgError::ShapeMismatch {
                context: "finite_difference_jacobian".to_string(),
                left: vec![m],
                right: vec![plus.len()],
            });
        }
        for i in 0..m {
            data[i * n + j] = (plus.get(i) - minus.get(i)) / (2.0 * step);
        }
    }
    Tensor::matrix(m, n, data)
}

fn nudged(x: &Tensor, index: usize, step: f64) -> Tensor {
    let mut data = x.data().to_vec();
    data[index] += step;
    Tensor::from_parts(x.shape().to_vec(), data)
}
