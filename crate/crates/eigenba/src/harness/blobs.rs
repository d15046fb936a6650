//! Synthetic Gaussian-blob classification data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Tensor;
use crate::net::{Dataset, NetError};

use super::HarnessError;

/// Generates a Gaussian-blob dataset in the `[0, 1]` input domain.
///
/// Each class draws a centre from `N(0, separation^2 I)` and its samples
/// from a unit-variance Gaussian around that centre, so `separation` is the
/// class spacing measured in within-class standard deviations; values of 4
/// and up give models something nearly separable to learn. Features are
/// min-max rescaled into `[0, 1]` per coordinate (an affine map, so class
/// geometry survives). Samples are laid out class by class; the same
/// arguments always produce the identical dataset.
pub fn make_blob_dataset(
    classes: usize,
    dim: usize,
    per_class: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset, HarnessError> {
    if classes < 2 {
        return Err(HarnessError::InvalidConfig(format!(
            "blob dataset needs at least 2 classes, got {classes}"
        )));
    }
    if dim == 0 {
        return Err(HarnessError::InvalidConfig(
            "blob dataset needs a positive dimension".to_string(),
        ));
    }
    if per_class == 0 {
        return Err(HarnessError::Net(NetError::EmptyDataset));
    }
    if !(separation.is_finite() && separation > 0.0) {
        return Err(HarnessError::InvalidConfig(format!(
            "separation must be positive and finite, got {separation}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = move || -> f64 { StandardNormal.sample(&mut rng) };
    let centres: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| separation * draw()).collect())
        .collect();

    let total = classes * per_class;
    let mut raw = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for (class, centre) in centres.iter().enumerate() {
        for _ in 0..per_class {
            let point: Vec<f64> = centre.iter().map(|&c| c + draw()).collect();
            raw.push(point);
            labels.push(class);
        }
    }

    // Per-feature min-max rescale into the attack domain [0, 1].
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for point in &raw {
        for (j, &v) in point.iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let samples = raw
        .into_iter()
        .map(|point| {
            let data = point
                .into_iter()
                .enumerate()
                .map(|(j, v)| {
                    let range = hi[j] - lo[j];
                    if range > 0.0 {
                        (v - lo[j]) / range
                    } else {
                        0.5
                    }
                })
                .collect();
            Tensor::from_parts(vec![dim], data)
        })
        .collect();

    Ok(Dataset::new(samples, labels, classes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_land_in_the_unit_box_and_are_deterministic() {
        let a = make_blob_dataset(4, 8, 25, 6.0, 17).unwrap();
        let b = make_blob_dataset(4, 8, 25, 6.0, 17).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        assert_eq!(a.class_count(), 4);
        for i in 0..a.len() {
            assert!(a.sample(i).data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        let c = make_blob_dataset(4, 8, 25, 6.0, 18).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn class_layout_is_contiguous() {
        let data = make_blob_dataset(3, 2, 5, 5.0, 1).unwrap();
        let expected: Vec<usize> = (0..3).flat_map(|c| std::iter::repeat_n(c, 5)).collect();
        assert_eq!(data.labels(), expected.as_slice());
    }

    #[test]
    fn degenerate_requests_are_rejected() {
        assert!(make_blob_dataset(1, 4, 10, 5.0, 0).is_err());
        assert!(make_blob_dataset(3, 0, 10, 5.0, 0).is_err());
        assert!(make_blob_dataset(3, 4, 10, 0.0, 0).is_err());
        assert!(make_blob_dataset(3, 4, 10, f64::NAN, 0).is_err());
        assert!(matches!(
            make_blob_dataset(3, 4, 0, 5.0, 0),
            Err(HarnessError::Net(NetError::EmptyDataset))
        ));
    }

    #[test]
    fn well_separated_blobs_are_nearly_linearly_separable() {
        // A nearest-centroid rule should classify almost everything when the
        // separation is many within-class standard deviations.
        let data = make_blob_dataset(3, 6, 50, 8.0, 5).unwrap();
        let dim = data.sample_shape()[0];
        let mut centroids = vec![vec![0.0; dim]; 3];
        let mut counts = [0usize; 3];
        for i in 0..data.len() {
            let c = data.label(i);
            counts[c] += 1;
            for j in 0..dim {
                centroids[c][j] += data.sample(i).get(j);
            }
        }
        for (c, centroid) in centroids.iter_mut().enumerate() {
            for v in centroid.iter_mut() {
                *v /= counts[c] as f64;
            }
        }
        let mut correct = 0;
        for i in 0..data.len() {
            let mut best = 0;
            let mut best_dist = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let dist: f64 = centroid
                    .iter()
                    .enumerate()
                    .map(|(j, &m)| (data.sample(i).get(j) - m).powi(2))
                    .sum();
                if dist < best_dist {
                    best_dist = dist;
                    best = c;
                }
            }
            if best == data.label(i) {
                correct += 1;
            }
        }
        assert!(correct as f64 / data.len() as f64 > 0.95);
    }
}
