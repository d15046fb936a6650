//! Dense row-major tensors.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::LinalgError;

/// A dense numeric array with row-major storage.
///
/// Shapes may be arbitrary rank, but the toolkit almost exclusively uses
/// vectors (rank 1), matrices (rank 2), and image stacks (rank 3). All public
/// constructors reject non-finite entries and empty axes, so downstream code
/// may assume every tensor it receives is finite and non-empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor from a shape and row-major data.
    ///
    /// Fails if any extent is zero, if the extents do not multiply to the
    /// data length, or if any entry is NaN or infinite.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, LinalgError> {
        if shape.is_empty() || shape.iter().any(|&e| e == 0) {
            return Err(LinalgError::InvalidArgument(format!(
                "tensor shape must have positive extents, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(LinalgError::ShapeMismatch {
                context: "Tensor::new".to_string(),
                left: shape,
                right: vec![data.len()],
            });
        }
        check_finite(&data, "Tensor::new")?;
        Ok(Self { shape, data })
    }

    /// Builds a rank-1 tensor from raw entries.
    pub fn vector(data: Vec<f64>) -> Result<Self, LinalgError> {
        let len = data.len();
        Self::new(vec![len], data)
    }

    /// Builds a rank-2 tensor from row-major entries.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        Self::new(vec![rows, cols], data)
    }

    /// An all-zero tensor of the given shape (extents must be positive).
    pub fn zeros(shape: &[usize]) -> Self {
        assert!(
            !shape.is_empty() && shape.iter().all(|&e| e > 0),
            "Tensor::zeros requires positive extents, got {shape:?}"
        );
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    /// Builds a tensor by evaluating `f` at every flat index.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> f64) -> Result<Self, LinalgError> {
        let len: usize = shape.iter().product();
        let data: Vec<f64> = (0..len).map(|i| f(i)).collect();
        Self::new(shape.to_vec(), data)
    }

    /// Internal constructor for values already known to be finite and sized.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    /// The shape as a slice of extents.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Total number of entries.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// True when the tensor holds no entries (never true for valid tensors).
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of axes.
    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// The raw row-major entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access for internal routines that preserve the invariants.
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// True for rank-1 tensors.
    pub fn is_vector(&self) -> bool {
        self.rank() == 1
    }

    /// True for rank-2 tensors.
    pub fn is_matrix(&self) -> bool {
        self.rank() == 2
    }

    /// Row count of a matrix. Panics when called on a non-matrix.
    pub fn rows(&self) -> usize {
        assert!(self.is_matrix(), "rows() called on shape {:?}", self.shape);
        self.shape[0]
    }

    /// Column count of a matrix. Panics when called on a non-matrix.
    pub fn cols(&self) -> usize {
        assert!(self.is_matrix(), "cols() called on shape {:?}", self.shape);
        self.shape[1]
    }

    /// Entry at a flat row-major index.
    pub fn get(&self, index: usize) -> f64 {
        self.data[index]
    }

    /// Matrix entry at `(row, col)`.
    pub fn get2(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.shape[1] + col]
    }

    /// Reinterprets the entries under a new shape of equal length.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self, LinalgError> {
        let len: usize = shape.iter().product();
        if shape.is_empty() || shape.iter().any(|&e| e == 0) || len != self.len() {
            return Err(LinalgError::ShapeMismatch {
                context: "Tensor::reshape".to_string(),
                left: self.shape.clone(),
                right: shape.to_vec(),
            });
        }
        Ok(Self::from_parts(shape.to_vec(), self.data.clone()))
    }

    /// Matrix transpose.
    pub fn transpose(&self) -> Result<Self, LinalgError> {
        if !self.is_matrix() {
            return Err(LinalgError::ShapeMismatch {
                context: "Tensor::transpose".to_string(),
                left: self.shape.clone(),
                right: vec![],
            });
        }
        let (r, c) = (self.rows(), self.cols());
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(Self::from_parts(vec![c, r], data))
    }

    /// Matrix-matrix product.
    pub fn matmul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if !self.is_matrix() || !rhs.is_matrix() || self.cols() != rhs.rows() {
            return Err(LinalgError::ShapeMismatch {
                context: "Tensor::matmul".to_string(),
                left: self.shape.clone(),
                right: rhs.shape.clone(),
            });
        }
        let (m, k, n) = (self.rows(), self.cols(), rhs.cols());
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for l in 0..k {
                let a = self.data[i * k + l];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * rhs.data[l * n + j];
                }
            }
        }
        Ok(Self::from_parts(vec![m, n], data))
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &Self) -> Result<Self, LinalgError> {
        if !self.is_matrix() || !v.is_vector() || self.cols() != v.len() {
            return Err(LinalgError::ShapeMismatch {
                context: "Tensor::matvec".to_string(),
                left: self.shape.clone(),
                right: v.shape.clone(),
            });
        }
        let (m, n) = (self.rows(), self.cols());
        let mut data = vec![0.0; m];
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.data[i * n + j] * v.data[j];
            }
            data[i] = acc;
        }
        Ok(Self::from_parts(vec![m], data))
    }

    /// Column `j` of a matrix, as a vector.
    pub fn column(&self, j: usize) -> Result<Self, LinalgError> {
        if !self.is_matrix() || j >= self.cols() {
            return Err(LinalgError::InvalidArgument(format!(
                "column {j} out of range for shape {:?}",
                self.shape
            )));
        }
        let (m, n) = (self.rows(), self.cols());
        let data = (0..m).map(|i| self.data[i * n + j]).collect();
        Ok(Self::from_parts(vec![m], data))
    }

    /// Row `i` of a matrix, as a vector.
    pub fn row(&self, i: usize) -> Result<Self, LinalgError> {
        if !self.is_matrix() || i >= self.rows() {
            return Err(LinalgError::InvalidArgument(format!(
                "row {i} out of range for shape {:?}",
                self.shape
            )));
        }
        let n = self.cols();
        Ok(Self::from_parts(
            vec![n],
            self.data[i * n..(i + 1) * n].to_vec(),
        ))
    }

    /// Elementwise sum. Shapes must match exactly.
    pub fn add(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "Tensor::add", |a, b| a + b)
    }

    /// Elementwise difference. Shapes must match exactly.
    pub fn sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "Tensor::sub", |a, b| a - b)
    }

    /// `self + scale * rhs`, elementwise. Shapes must match exactly.
    pub fn add_scaled(&self, rhs: &Self, scale: f64) -> Result<Self, LinalgError> {
        self.zip_with(rhs, "Tensor::add_scaled", |a, b| a + scale * b)
    }

    /// Elementwise scalar multiple.
    pub fn scale(&self, factor: f64) -> Self {
        Self::from_parts(
            self.shape.clone(),
            self.data.iter().map(|&v| v * factor).collect(),
        )
    }

    /// Inner product. Lengths must match (shapes may differ in rank).
    pub fn dot(&self, rhs: &Self) -> Result<f64, LinalgError> {
        if self.len() != rhs.len() {
            return Err(LinalgError::ShapeMismatch {
                context: "Tensor::dot".to_string(),
                left: self.shape.clone(),
                right: rhs.shape.clone(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(rhs.data.iter())
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Euclidean norm over all entries.
    pub fn norm_l2(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Largest absolute elementwise difference. Lengths must match.
    pub fn max_abs_diff(&self, rhs: &Self) -> Result<f64, LinalgError> {
        if self.len() != rhs.len() {
            return Err(LinalgError::ShapeMismatch {
                context: "Tensor::max_abs_diff".to_string(),
                left: self.shape.clone(),
                right: rhs.shape.clone(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(rhs.data.iter())
            .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs())))
    }

    /// Every entry clamped into `[0, 1]`.
    pub fn clamp01(&self) -> Self {
        Self::from_parts(
            self.shape.clone(),
            self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        )
    }

    /// Elementwise sign with `sign(0) = 0`.
    pub fn sign(&self) -> Self {
        Self::from_parts(
            self.shape.clone(),
            self.data
                .iter()
                .map(|&v| {
                    if v > 0.0 {
                        1.0
                    } else if v < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
    }

    /// Unit-norm copy, or `None` when the norm is too small to divide by.
    pub fn unit(&self) -> Option<Self> {
        let norm = self.norm_l2();
        if norm <= f64::MIN_POSITIVE.sqrt() {
            None
        } else {
            Some(self.scale(1.0 / norm))
        }
    }

    fn zip_with(
        &self,
        rhs: &Self,
        context: &str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, LinalgError> {
        if self.shape != rhs.shape {
            return Err(LinalgError::ShapeMismatch {
                context: context.to_string(),
                left: self.shape.clone(),
                right: rhs.shape.clone(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(rhs.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_parts(self.shape.clone(), data))
    }
}

impl Index<usize> for Tensor {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.data[index]
    }
}

impl IndexMut<usize> for Tensor {
    fn index_mut(&mut self, index: usize) -> &mut f64 {
        &mut self.data[index]
    }
}

impl Index<(usize, usize)> for Tensor {
    type Output = f64;

    fn index(&self, (row, col): (usize, usize)) -> &f64 {
        &self.data[row * self.shape[1] + col]
    }
}

impl IndexMut<(usize, usize)> for Tensor {
    fn index_mut(&mut self, (row, col): (usize, usize)) -> &mut f64 {
        &mut self.data[row * self.shape[1] + col]
    }
}

fn check_finite(data: &[f64], context: &str) -> Result<(), LinalgError> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite {
            context: context.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_nan_and_bad_shapes() {
        assert!(Tensor::new(vec![2], vec![1.0, f64::NAN]).is_err());
        assert!(Tensor::new(vec![2], vec![1.0, f64::INFINITY]).is_err());
        assert!(Tensor::new(vec![3], vec![1.0, 2.0]).is_err());
        assert!(Tensor::new(vec![0], vec![]).is_err());
        assert!(Tensor::new(vec![], vec![]).is_err());
    }

    #[test]
    fn matmul_matches_hand_computation() {
        let a = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Tensor::matrix(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.shape(), &[2, 2]);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn matvec_and_transpose_agree() {
        let a = Tensor::matrix(2, 3, vec![1.0, -1.0, 2.0, 0.5, 3.0, -2.0]).unwrap();
        let v = Tensor::vector(vec![2.0, 1.0, -1.0]).unwrap();
        let direct = a.matvec(&v).unwrap();
        let via_matmul = a
            .matmul(&v.reshape(&[3, 1]).unwrap())
            .unwrap()
            .reshape(&[2])
            .unwrap();
        assert_eq!(direct, via_matmul);
        let att = a.transpose().unwrap().transpose().unwrap();
        assert_eq!(a, att);
    }

    #[test]
    fn elementwise_ops_enforce_shapes() {
        let a = Tensor::vector(vec![1.0, 2.0]).unwrap();
        let b = Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(a.add(&b).is_err());
        assert!(a.add(&a).is_ok());
        assert_eq!(a.add_scaled(&a, -1.0).unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn clamp_sign_and_unit_behave() {
        let t = Tensor::vector(vec![-0.5, 0.0, 0.25, 1.75]).unwrap();
        assert_eq!(t.clamp01().data(), &[0.0, 0.0, 0.25, 1.0]);
        assert_eq!(t.sign().data(), &[-1.0, 0.0, 1.0, 1.0]);
        let u = t.unit().unwrap();
        assert!((u.norm_l2() - 1.0).abs() < 1e-12);
        assert!(Tensor::zeros(&[3]).unit().is_none());
    }

    #[test]
    fn reshape_preserves_data_and_checks_length() {
        let t = Tensor::vector(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = t.reshape(&[2, 2]).unwrap();
        assert_eq!(m.get2(1, 0), 3.0);
        assert!(t.reshape(&[3, 2]).is_err());
    }
}
