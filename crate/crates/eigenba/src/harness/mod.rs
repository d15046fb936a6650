//! Experiment harness: synthetic data, attack campaigns, metrics, the
//! reserve-rate ablation, report files, and the command-line interface.

mod ablation;
mod blobs;
mod campaign;
pub mod cli;
mod metrics;
mod report;

pub use ablation::{run_ablation, AblationResult, AblationRow};
pub use blobs::make_blob_dataset;
pub use campaign::{
    per_image_seed, run_campaign, select_attack_set, AttackMethod, AttackTarget, CampaignConfig,
    CampaignResult, CaseRecord,
};
pub use metrics::{compute_metrics, CurvePoint, MetricsReport};
pub use report::{
    emit_ablation, emit_report, read_outcomes, reaggregate, ABLATION_CSV, ABLATION_JSON,
    CURVE_CSV, METRICS_CSV, METRICS_JSON, OUTCOMES_JSONL,
};

use thiserror::Error;

use crate::attacks::AttackError;
use crate::linalg::LinalgError;
use crate::net::NetError;
use crate::oracle::OracleError;

/// Errors produced while assembling or running experiments.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// A campaign parameter failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// The dataset had too few correctly classified samples to attack.
    #[error("only {available} correctly classified samples, need {requested}")]
    NotEnoughCorrectSamples {
        /// How many survived the correctness filter.
        available: usize,
        /// How many the campaign asked for.
        requested: usize,
    },
    /// The chosen method needs a surrogate model but none was supplied.
    #[error("method {method} requires a surrogate model")]
    MissingSurrogate {
        /// The method that was asked for.
        method: String,
    },
    /// A report or dataset file was malformed.
    #[error("report error: {0}")]
    Report(String),
    /// Network-layer failure.
    #[error(transparent)]
    Net(#[from] NetError),
    /// Attack-layer failure.
    #[error(transparent)]
    Attack(#[from] AttackError),
    /// Oracle-layer failure.
    #[error(transparent)]
    Oracle(#[from] OracleError),
    /// Linear-algebra failure.
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    /// Filesystem failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
