//! Attack directions: the fast eigen path and its brute-force reference.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{truncated_svd, LinalgError, Tensor};

/// Largest matrix extent the brute-force reference solver accepts.
const ORACLE_LIMIT: usize = 8;

/// Random restarts used by the brute-force solver.
const ORACLE_STARTS: usize = 50;

/// Iteration cap per restart.
const ORACLE_MAX_ITERS: usize = 6000;

/// The top `k` attack directions for a representation Jacobian.
///
/// These are the right singular vectors of `jacobian`, ordered by decreasing
/// singular value: the unit input perturbations that move the representation
/// the most, each orthogonal to the ones before it. Fails when `k` is outside
/// `1..=min(m, n)`.
pub fn eigen_directions(jacobian: &Tensor, k: usize) -> Result<Vec<Tensor>, LinalgError> {
    let svd = truncated_svd(jacobian, k)?;
    (0..k).map(|i| svd.right_vector(i)).collect()
}

/// Brute-force reference for the sequential direction problem.
///
/// Solves, one direction at a time,
///
/// ```text
/// maximise  ||J d||^2   subject to  ||d|| = 1,  d^T J^T J d_j = 0  (j < i)
/// ```
///
/// by projected power iteration on the Gram matrix with multiple random
/// restarts. The orthogonality constraints are linear in `d` (orthogonality
/// to `J^T J d_j`), so each restart projects onto their complement, iterates,
/// and keeps the best objective seen. Deliberately slow and simple: the point
/// is to be an independent check on [`eigen_directions`], so the solver is
/// capped at 8x8 matrices.
pub fn brute_force_problem5(jacobian: &Tensor, k: usize) -> Result<Vec<Tensor>, LinalgError> {
    if !jacobian.is_matrix() {
        return Err(LinalgError::ShapeMismatch {
            context: "brute_force_problem5".to_string(),
            left: jacobian.shape().to_vec(),
            right: vec![],
        });
    }
    let (m, n) = (jacobian.rows(), jacobian.cols());
    if m > ORACLE_LIMIT || n > ORACLE_LIMIT {
        return Err(LinalgError::OracleScale {
            limit: ORACLE_LIMIT,
            rows: m,
            cols: n,
        });
    }
    if k == 0 || k > n {
        return Err(LinalgError::RankOutOfRange {
            requested: k,
            rows: m,
            cols: n,
        });
    }

    let gram = jacobian.transpose()?.matmul(jacobian)?;
    let scale = gram.norm_l2() + 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0EED_5EED);

    let mut directions: Vec<Tensor> = Vec::with_capacity(k);
    // Orthonormal basis of the span of { G d_j }; the feasible set for the
    // next direction is its orthogonal complement.
    let mut constraint_basis: Vec<Tensor> = Vec::new();

    for _ in 0..k {
        let mut best: Option<(f64, Tensor)> = None;
        for _ in 0..ORACLE_STARTS {
            let candidate = power_iterate(&gram, &constraint_basis, scale, n, &mut rng)?;
            let objective = quadratic_form(&gram, &candidate);
            if best.as_ref().is_none_or(|(b, _)| objective > *b) {
                best = Some((objective, candidate));
            }
        }
        let (_, direction) = best.expect("at least one restart ran");

        let constraint = gram.matvec(&direction)?;
        if let Some(unit) = orthogonal_residual(&constraint, &constraint_basis).unit() {
            constraint_basis.push(unit);
        }
        directions.push(direction);
    }
    Ok(directions)
}

/// One restart of projected power iteration on the Gram matrix.
fn power_iterate(
    gram: &Tensor,
    constraint_basis: &[Tensor],
    scale: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Tensor, LinalgError> {
    let mut direction = loop {
        let raw = Tensor::from_parts(
            vec![n],
            (0..n).map(|_| StandardNormal.sample(rng)).collect(),
        );
        if let Some(unit) = orthogonal_residual(&raw, constraint_basis).unit() {
            break unit;
        }
    };

    for _ in 0..ORACLE_MAX_ITERS {
        let pushed = orthogonal_residual(&gram.matvec(&direction)?, constraint_basis);
        let Some(next) = pushed.unit() else {
            // The Gram matrix is (numerically) zero on the feasible subspace:
            // the objective is flat at zero and the current unit vector is
            // already a maximiser.
            break;
        };
        if pushed.norm_l2() <= scale * 1e-14 {
            break;
        }
        let moved = next.max_abs_diff(&direction)?;
        direction = next;
        if moved < 1e-13 {
            break;
        }
    }
    Ok(direction)
}

/// `v` with the span of `basis` (assumed orthonormal) projected out.
fn orthogonal_residual(v: &Tensor, basis: &[Tensor]) -> Tensor {
    let mut residual = v.clone();
    for b in basis {
        let coefficient = residual.dot(b).expect("basis vectors match dimension");
        residual = residual
            .add_scaled(b, -coefficient)
            .expect("basis vectors match dimension");
    }
    residual
}

fn quadratic_form(gram: &Tensor, v: &Tensor) -> f64 {
    gram.matvec(v)
        .and_then(|gv| v.dot(&gv))
        .expect("dimensions already validated")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flip_free_distance(a: &Tensor, b: &Tensor) -> f64 {
        let same = a.max_abs_diff(b).unwrap();
        let flipped = a.max_abs_diff(&b.scale(-1.0)).unwrap();
        same.min(flipped)
    }

    #[test]
    fn eigen_directions_of_diagonal_matrix_are_coordinates() {
        let j = Tensor::matrix(3, 3, vec![2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 3.0]).unwrap();
        let dirs = eigen_directions(&j, 3).unwrap();
        assert_eq!(dirs[0].data(), &[0.0, 1.0, 0.0]);
        assert_eq!(dirs[1].data(), &[0.0, 0.0, 1.0]);
        assert_eq!(dirs[2].data(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn eigen_directions_propagate_rank_errors() {
        let j = Tensor::matrix(2, 3, vec![1.0; 6]).unwrap();
        assert!(matches!(
            eigen_directions(&j, 3),
            Err(LinalgError::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn brute_force_rejects_oversized_matrices() {
        let j = Tensor::matrix(9, 3, vec![0.5; 27]).unwrap();
        assert!(matches!(
            brute_force_problem5(&j, 1),
            Err(LinalgError::OracleScale { limit: 8, .. })
        ));
    }

    #[test]
    fn brute_force_matches_eigen_directions_on_gapped_matrix() {
        // Diagonal-dominant with well-separated singular values so both
        // solvers have a unique answer.
        let j = Tensor::matrix(
            4,
            4,
            vec![
                4.0, 0.3, -0.2, 0.1, //
                0.2, 2.5, 0.4, -0.3, //
                -0.1, 0.2, 1.5, 0.3, //
                0.3, -0.1, 0.2, 0.7,
            ],
        )
        .unwrap();
        let fast = eigen_directions(&j, 3).unwrap();
        let slow = brute_force_problem5(&j, 3).unwrap();
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert!(
                flip_free_distance(a, b) < 1e-6,
                "direction mismatch: {a:?} vs {b:?}"
            );
        }
    }

    #[test]
    fn brute_force_handles_rank_deficiency() {
        // Rank-1 outer product: only one direction moves the output.
        let j = Tensor::matrix(2, 3, vec![2.0, -1.0, 2.0, 4.0, -2.0, 4.0]).unwrap();
        let dirs = brute_force_problem5(&j, 3).unwrap();
        assert_eq!(dirs.len(), 3);
        for d in &dirs {
            assert!((d.norm_l2() - 1.0).abs() < 1e-9);
        }
        // First direction is the normalised row direction (up to sign).
        let top = Tensor::vector(vec![2.0, -1.0, 2.0]).unwrap().unit().unwrap();
        assert!(flip_free_distance(&dirs[0], &top) < 1e-6);
        // Later objectives collapse to (near) zero.
        let gram = j.transpose().unwrap().matmul(&j).unwrap();
        assert!(quadratic_form(&gram, &dirs[1]).abs() < 1e-8);
        assert!(quadratic_form(&gram, &dirs[2]).abs() < 1e-8);
    }

    #[test]
    fn brute_force_directions_satisfy_gram_orthogonality() {
        let j = Tensor::matrix(
            3,
            5,
            vec![
                1.2, -0.7, 0.4, 2.1, -0.3, //
                0.5, 1.8, -0.9, 0.2, 1.1, //
                -0.6, 0.3, 1.4, -0.8, 0.9,
            ],
        )
        .unwrap();
        let dirs = brute_force_problem5(&j, 3).unwrap();
        let gram = j.transpose().unwrap().matmul(&j).unwrap();
        for i in 0..dirs.len() {
            for l in (i + 1)..dirs.len() {
                let coupling = dirs[i].dot(&gram.matvec(&dirs[l]).unwrap()).unwrap();
                assert!(coupling.abs() < 1e-7, "coupling {i},{l} = {coupling}");
            }
        }
    }
}
