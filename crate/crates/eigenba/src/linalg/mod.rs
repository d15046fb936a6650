//! Dense linear algebra for attack-direction computation.
//!
//! Everything here is exact-arithmetic f64 on small problems. The centrepiece
//! is [`truncated_svd`], a one-sided Jacobi SVD that works on the smaller of
//! the two Gram dimensions, plus [`eigen_directions`] which orders the right
//! singular vectors for use as attack directions. [`brute_force_problem5`]
//! and [`finite_difference_jacobian`] are deliberately independent reference
//! implementations used to cross-check the fast paths.

mod finite_diff;
mod problem;
mod svd;
mod tensor;

pub use finite_diff::finite_difference_jacobian;
pub use problem::{brute_force_problem5, eigen_directions};
pub use svd::{truncated_svd, SvdResult};
pub use tensor::Tensor;

use thiserror::Error;

/// Errors produced by the linear-algebra layer.
#[derive(Debug, Error)]
pub enum LinalgError {
    /// An input tensor contained NaN or infinite entries.
    #[error("non-finite value encountered in {context}")]
    NonFinite {
        /// Which operation or argument saw the bad value.
        context: String,
    },
    /// Two tensors had incompatible shapes for the requested operation.
    #[error("shape mismatch in {context}: {left:?} vs {right:?}")]
    ShapeMismatch {
        /// Which operation saw the mismatch.
        context: String,
        /// Shape of the left operand.
        left: Vec<usize>,
        /// Shape of the right operand.
        right: Vec<usize>,
    },
    /// A requested truncation rank was outside `1..=min(m, n)`.
    #[error("rank {requested} out of range for a {rows}x{cols} matrix")]
    RankOutOfRange {
        /// The rank that was asked for.
        requested: usize,
        /// Row count of the matrix.
        rows: usize,
        /// Column count of the matrix.
        cols: usize,
    },
    /// An iterative routine failed to converge within its sweep budget.
    #[error("{what} did not converge after {sweeps} sweeps")]
    NotConverged {
        /// Name of the routine.
        what: String,
        /// How many sweeps were attempted.
        sweeps: usize,
    },
    /// A brute-force reference solver was asked to run beyond its size cap.
    #[error("brute-force solver limited to {limit}x{limit}; got {rows}x{cols}")]
    OracleScale {
        /// Maximum supported extent.
        limit: usize,
        /// Row count of the offending matrix.
        rows: usize,
        /// Column count of the offending matrix.
        cols: usize,
    },
    /// A scalar or structural argument failed validation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
