//! Truncated singular value decomposition via one-sided Jacobi rotations.

use super::{LinalgError, Tensor};

/// Maximum number of full Jacobi sweeps before giving up.
const MAX_SWEEPS: usize = 64;

/// Pairs whose cosine falls below this are considered orthogonal.
const COS_TOL: f64 = 1e-14;

/// Truncated SVD of a real matrix.
///
/// Invariants guaranteed by [`truncated_svd`]:
///
/// - `singular_values` has length `k`, is non-negative and non-increasing;
/// - the columns of `left_vectors` (`m x k`) and `right_vectors` (`n x k`)
///   are orthonormal to high accuracy;
/// - `matrix * v_i = sigma_i * u_i` for every retained index `i`;
/// - each right vector's largest-magnitude entry is non-negative, which
///   pins down the sign of the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    /// Number of retained singular triplets.
    pub k: usize,
    /// Retained singular values, largest first.
    pub singular_values: Vec<f64>,
    /// `m x k` matrix whose columns are the retained left singular vectors.
    pub left_vectors: Tensor,
    /// `n x k` matrix whose columns are the retained right singular vectors.
    pub right_vectors: Tensor,
}

impl SvdResult {
    /// The `i`-th left singular vector as an `m`-vector.
    pub fn left_vector(&self, i: usize) -> Result<Tensor, LinalgError> {
        self.left_vectors.column(i)
    }

    /// The `i`-th right singular vector as an `n`-vector.
    pub fn right_vector(&self, i: usize) -> Result<Tensor, LinalgError> {
        self.right_vectors.column(i)
    }
}

/// Computes the top `k` singular triplets of `matrix`.
///
/// The implementation runs one-sided Jacobi rotations on the transposed
/// matrix whenever `m < n`, so the iteration always orthogonalises the
/// smaller set of columns. Singular values that are zero at working
/// precision are reported as exactly `0.0` and their missing singular
/// vectors are completed to an orthonormal set, so callers can rely on the
/// orthonormality invariant even for rank-deficient inputs.
pub fn truncated_svd(matrix: &Tensor, k: usize) -> Result<SvdResult, LinalgError> {
    if !matrix.is_matrix() {
        return Err(LinalgError::ShapeMismatch {
            context: "truncated_svd".to_string(),
            left: matrix.shape().to_vec(),
            right: vec![],
        });
    }
    let (m, n) = (matrix.rows(), matrix.cols());
    if k == 0 || k > m.min(n) {
        return Err(LinalgError::RankOutOfRange {
            requested: k,
            rows: m,
            cols: n,
        });
    }

    // Work on a tall matrix: columns of `work` are what the sweeps rotate.
    let transposed = m < n;
    let work = if transposed {
        matrix.transpose()?
    } else {
        matrix.clone()
    };
    let (p, q) = (work.rows(), work.cols());

    let mut cols: Vec<Vec<f64>> = (0..q)
        .map(|j| (0..p).map(|i| work.get2(i, j)).collect())
        .collect();
    // Accumulates the product of all rotations; stays exactly orthogonal up
    // to rounding and becomes the singular vectors on the small side.
    let mut acc: Vec<Vec<f64>> = (0..q)
        .map(|j| (0..q).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for c1 in 0..q {
            for c2 in (c1 + 1)..q {
                let a = dot(&cols[c1], &cols[c1]);
                let b = dot(&cols[c2], &cols[c2]);
                let d = dot(&cols[c1], &cols[c2]);
                if d * d <= COS_TOL * COS_TOL * a * b || d * d <= f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * d);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    1.0 / (zeta - (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, c1, c2, c, s);
                rotate_pair(&mut acc, c1, c2, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NotConverged {
            what: "one-sided Jacobi SVD".to_string(),
            sweeps: MAX_SWEEPS,
        });
    }

    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let sigma_max = norms[order[0]];
    let tiny_threshold = p.max(q) as f64 * f64::EPSILON * sigma_max;

    // Build the retained triplets in rank order. The rotated columns give
    // the singular vectors on the long side once normalised; columns whose
    // norm is zero at working precision are replaced by an orthonormal
    // completion so the output always has `k` orthonormal columns per side.
    let mut singular_values = Vec::with_capacity(k);
    let mut small_side: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut long_side: Vec<Vec<f64>> = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let sigma = norms[idx];
        if sigma > tiny_threshold && sigma > 0.0 {
            singular_values.push(sigma);
            long_side.push(cols[idx].iter().map(|v| v / sigma).collect());
        } else {
            singular_values.push(0.0);
            let completion = complete_orthonormal(&long_side, p)?;
            long_side.push(completion);
        }
        small_side.push(acc[idx].clone());
    }

    // Fix signs so the largest-magnitude entry of each right vector is
    // non-negative; left and right flip together to preserve J v = sigma u.
    let (mut left_cols, mut right_cols) = if transposed {
        (small_side, long_side)
    } else {
        (long_side, small_side)
    };
    for i in 0..k {
        let pivot = argmax_abs(&right_cols[i]);
        if right_cols[i][pivot] < 0.0 {
            for v in right_cols[i].iter_mut() {
                *v = -*v;
            }
            for v in left_cols[i].iter_mut() {
                *v = -*v;
            }
        }
    }

    Ok(SvdResult {
        k,
        singular_values,
        left_vectors: columns_to_matrix(&left_cols, m),
        right_vectors: columns_to_matrix(&right_cols, n),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn rotate_pair(columns: &mut [Vec<f64>], c1: usize, c2: usize, c: f64, s: f64) {
    let len = columns[c1].len();
    for i in 0..len {
        let x1 = columns[c1][i];
        let x2 = columns[c2][i];
        columns[c1][i] = c * x1 - s * x2;
        columns[c2][i] = s * x1 + c * x2;
    }
}

/// Picks the coordinate vector farthest from the span of `built`, projects
/// the span out, and normalises. Used to stand in for singular vectors whose
/// singular value vanished.
fn complete_orthonormal(built: &[Vec<f64>], dim: usize) -> Result<Vec<f64>, LinalgError> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for coord in 0..dim {
        let mut candidate = vec![0.0; dim];
        candidate[coord] = 1.0;
        project_out(&mut candidate, built);
        let norm = dot(&candidate, &candidate).sqrt();
        if best.as_ref().is_none_or(|(b, _)| norm > *b) {
            best = Some((norm, candidate));
        }
    }
    let (norm, mut vector) = best.expect("dim > 0 by tensor invariants");
    if norm <= 1e-8 {
        return Err(LinalgError::InvalidArgument(
            "cannot complete orthonormal basis: span already covers all coordinates".to_string(),
        ));
    }
    // Re-orthogonalise once more for good measure, then normalise.
    project_out(&mut vector, built);
    let norm = dot(&vector, &vector).sqrt();
    for v in vector.iter_mut() {
        *v /= norm;
    }
    Ok(vector)
}

fn project_out(vector: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let coef = dot(b, vector);
        for (v, bv) in vector.iter_mut().zip(b.iter()) {
            *v -= coef * bv;
        }
    }
}

fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, value) in v.iter().enumerate() {
        if value.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

fn columns_to_matrix(columns: &[Vec<f64>], rows: usize) -> Tensor {
    let k = columns.len();
    let mut data = vec![0.0; rows * k];
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            data[i * k + j] = v;
        }
    }
    Tensor::from_parts(vec![rows, k], data)
}
