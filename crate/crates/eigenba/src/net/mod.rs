//! Minimal layered feed-forward networks with exact derivatives.
//!
//! Both the black-box target and the attacker's surrogate are
//! [`LayeredModel`]s: plain compositions of dense, ReLU, convolution,
//! flatten, and softmax layers over f64 tensors. The module provides exact
//! reverse-mode derivatives (full input-to-representation Jacobians, single
//! rows, and loss gradients), deterministic SGD training, the parameter
//! sparsification used by the reserve-rate ablation, and file formats for
//! models and datasets.

mod data;
mod io;
mod layers;
mod model;
mod train;

pub use data::Dataset;
pub use io::{
    load_model, model_from_str, model_to_string, save_model, ModelMetadata,
    MODEL_FORMAT_VERSION,
};
pub use layers::Layer;
pub use model::LayeredModel;
pub use train::{accuracy, sgd_train, zero_parameters, TrainConfig, TrainReport};

use thiserror::Error;

use crate::linalg::LinalgError;

/// Errors produced by the network layer.
#[derive(Debug, Error)]
pub enum NetError {
    /// The layer stack violates a structural rule.
    #[error("invalid model: {0}")]
    InvalidModel(String),
    /// An activation had the wrong shape for a layer.
    #[error("shape mismatch in {context}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        /// Which layer or operation saw the mismatch.
        context: String,
        /// What the layer needed.
        expected: Vec<usize>,
        /// What it was given.
        got: Vec<usize>,
    },
    /// A class index was outside `0..class_count`.
    #[error("class {class} out of range for {class_count} classes")]
    ClassOutOfRange {
        /// The offending index.
        class: usize,
        /// How many classes the model has.
        class_count: usize,
    },
    /// A dataset label was outside `0..class_count`.
    #[error("label {label} out of range for {class_count} classes")]
    LabelOutOfRange {
        /// The offending label.
        label: usize,
        /// How many classes the dataset declares.
        class_count: usize,
    },
    /// An operation that needs samples received none.
    #[error("dataset contains no samples")]
    EmptyDataset,
    /// A model file failed to parse.
    #[error("model file parse error at line {line}, column {column}: {message}")]
    ModelParse {
        /// 1-based line of the failure.
        line: usize,
        /// 1-based column of the failure.
        column: usize,
        /// What went wrong.
        message: String,
    },
    /// A model file declared an unsupported format version.
    #[error("unsupported model format version {found} (this build reads version {supported})")]
    FormatVersion {
        /// Version found in the file.
        found: u32,
        /// Version this build writes and reads.
        supported: u32,
    },
    /// A dataset file was malformed.
    #[error("dataset error: {0}")]
    DatasetFormat(String),
    /// A scalar argument failed validation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Underlying tensor arithmetic failed.
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    /// Filesystem failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
