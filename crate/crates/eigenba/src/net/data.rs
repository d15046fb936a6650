//! Labelled datasets: in-memory form, CSV files, and raw IDX ingestion.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::Tensor;

use super::NetError;

/// A labelled classification dataset.
///
/// All samples share one shape and live in the `[0, 1]` input domain the
/// attacks assume (file loaders rescale on the way in). Labels are class
/// indices below `class_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Tensor>,
    labels: Vec<usize>,
    class_count: usize,
}

impl Dataset {
    /// Validates and assembles a dataset.
    pub fn new(
        samples: Vec<Tensor>,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self, NetError> {
        if samples.is_empty() {
            return Err(NetError::EmptyDataset);
        }
        if samples.len() != labels.len() {
            return Err(NetError::InvalidArgument(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        if class_count < 2 {
            return Err(NetError::InvalidArgument(format!(
                "class count must be at least 2, got {class_count}"
            )));
        }
        let shape = samples[0].shape().to_vec();
        for (i, s) in samples.iter().enumerate() {
            if s.shape() != shape.as_slice() {
                return Err(NetError::ShapeMismatch {
                    context: format!("dataset sample {i}"),
                    expected: shape,
                    got: s.shape().to_vec(),
                });
            }
        }
        for &label in &labels {
            if label >= class_count {
                return Err(NetError::LabelOutOfRange { label, class_count });
            }
        }
        Ok(Self {
            samples,
            labels,
            class_count,
        })
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True when the dataset has no samples (never true once constructed).
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of classes the labels refer to.
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Sample `i`.
    pub fn sample(&self, i: usize) -> &Tensor {
        &self.samples[i]
    }

    /// Label of sample `i`.
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// The shape shared by every sample.
    pub fn sample_shape(&self) -> &[usize] {
        self.samples[0].shape()
    }

    /// All labels in order.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// A new dataset holding the given sample indices, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, NetError> {
        let mut samples = Vec::with_capacity(indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(NetError::InvalidArgument(format!(
                    "subset index {i} out of range for {} samples",
                    self.len()
                )));
            }
            samples.push(self.samples[i].clone());
            labels.push(self.labels[i]);
        }
        Self::new(samples, labels, self.class_count)
    }

    /// Splits into two disjoint parts after a seeded shuffle; the first gets
    /// `round(fraction * len)` samples. Both parts must end up non-empty.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Self, Self), NetError> {
        if !(fraction.is_finite() && 0.0 < fraction && fraction < 1.0) {
            return Err(NetError::InvalidArgument(format!(
                "split fraction must lie strictly between 0 and 1, got {fraction}"
            )));
        }
        let mut indices: Vec<usize> = (0..self.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        indices.shuffle(&mut rng);
        let cut = ((fraction * self.len() as f64).round() as usize).clamp(1, self.len() - 1);
        let first = self.subset(&indices[..cut])?;
        let second = self.subset(&indices[cut..])?;
        Ok((first, second))
    }

    /// Writes the dataset as CSV: a header row, then one row per sample with
    /// the label followed by the flattened features. Floats are printed in
    /// shortest round-trip form, so save/load is lossless.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), NetError> {
        let mut writer = csv::Writer::from_path(path.as_ref()).map_err(csv_error)?;
        let width = self.samples[0].len();
        let mut header = vec!["label".to_string()];
        header.extend((0..width).map(|i| format!("f{i}")));
        writer.write_record(&header).map_err(csv_error)?;
        for (sample, &label) in self.samples.iter().zip(self.labels.iter()) {
            let mut record = vec![label.to_string()];
            record.extend(sample.data().iter().map(|v| format!("{v}")));
            writer.write_record(&record).map_err(csv_error)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`Self::save_csv`] (or any file with the same
    /// layout). Samples come back flat; the class count is inferred as the
    /// largest label plus one.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, NetError> {
        let mut reader = csv::Reader::from_path(path.as_ref()).map_err(csv_error)?;
        let mut samples = Vec::new();
        let mut labels = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(csv_error)?;
            let mut fields = record.iter();
            let label_field = fields.next().ok_or_else(|| {
                NetError::DatasetFormat(format!("row {}: empty record", row + 1))
            })?;
            let label: usize = label_field.parse().map_err(|_| {
                NetError::DatasetFormat(format!("row {}: bad label {label_field:?}", row + 1))
            })?;
            let features: Vec<f64> = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| {
                        NetError::DatasetFormat(format!("row {}: bad feature {f:?}", row + 1))
                    })
                })
                .collect::<Result<_, _>>()?;
            samples.push(Tensor::vector(features)?);
            labels.push(label);
        }
        if samples.is_empty() {
            return Err(NetError::EmptyDataset);
        }
        let class_count = labels.iter().max().copied().unwrap_or(0) + 1;
        Self::new(samples, labels, class_count.max(2))
    }

    /// Builds a dataset from a raw IDX image file and its label file,
    /// rescaling bytes into `[0, 1]`.
    pub fn from_idx(
        images_path: impl AsRef<Path>,
        labels_path: impl AsRef<Path>,
    ) -> Result<Self, NetError> {
        let images = load_idx_images(images_path)?;
        let labels = load_idx_labels(labels_path)?;
        if images.len() != labels.len() {
            return Err(NetError::DatasetFormat(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        let class_count = labels.iter().max().copied().unwrap_or(0) + 1;
        Self::new(images, labels, class_count.max(2))
    }
}

fn csv_error(e: csv::Error) -> NetError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => NetError::Io(io),
        other => NetError::DatasetFormat(format!("{other:?}")),
    }
}

/// Reads an IDX file of unsigned bytes with dimensions `[count, h, w]` into
/// per-image `[h, w]` tensors scaled by `1/255`.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Vec<Tensor>, NetError> {
    let (dims, payload) = read_idx(path.as_ref(), 3)?;
    let (count, height, width) = (dims[0], dims[1], dims[2]);
    let stride = height * width;
    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        let bytes = &payload[i * stride..(i + 1) * stride];
        let data = bytes.iter().map(|&b| f64::from(b) / 255.0).collect();
        images.push(Tensor::from_parts(vec![height, width], data));
    }
    Ok(images)
}

/// Reads an IDX file of unsigned bytes with dimensions `[count]` as labels.
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>, NetError> {
    let (_, payload) = read_idx(path.as_ref(), 1)?;
    Ok(payload.into_iter().map(usize::from).collect())
}

/// Parses the IDX header (big-endian, element type `0x08` = unsigned byte)
/// and returns the dimension list plus the raw payload.
fn read_idx(path: &Path, expected_rank: usize) -> Result<(Vec<usize>, Vec<u8>), NetError> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 4 {
        return Err(NetError::DatasetFormat(
            "IDX file shorter than its magic number".to_string(),
        ));
    }
    let &[zero_a, zero_b, dtype, rank] = &bytes[..4] else {
        unreachable!("length checked above");
    };
    if zero_a != 0 || zero_b != 0 {
        return Err(NetError::DatasetFormat(
            "IDX magic number must start with two zero bytes".to_string(),
        ));
    }
    if dtype != 0x08 {
        return Err(NetError::DatasetFormat(format!(
            "unsupported IDX element type 0x{dtype:02x} (only 0x08 unsigned byte)"
        )));
    }
    let rank = rank as usize;
    if rank != expected_rank {
        return Err(NetError::DatasetFormat(format!(
            "expected rank {expected_rank} IDX data, found rank {rank}"
        )));
    }
    let header_len = 4 + 4 * rank;
    if bytes.len() < header_len {
        return Err(NetError::DatasetFormat(
            "IDX file truncated inside its dimension list".to_string(),
        ));
    }
    let mut dims = Vec::with_capacity(rank);
    for d in 0..rank {
        let offset = 4 + 4 * d;
        let ext = u32::from_be_bytes(bytes[offset..offset + 4].try_into().unwrap());
        dims.push(ext as usize);
    }
    let expected_payload: usize = dims.iter().product();
    let payload = &bytes[header_len..];
    if payload.len() != expected_payload {
        return Err(NetError::DatasetFormat(format!(
            "IDX payload holds {} bytes but dimensions {:?} require {}",
            payload.len(),
            dims,
            expected_payload
        )));
    }
    Ok((dims, payload.to_vec()))
}
