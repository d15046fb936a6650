//! The attack loop and its direction strategies.
//!
//! Every method here is the same greedy probe: walk a sequence of candidate
//! directions, try a step backwards then forwards along each, keep whatever
//! strictly lowers the objective, stop on success or an exhausted budget.
//! What distinguishes EigenBA from SimBA, SimBA-DCT, and the transfer
//! baselines is solely *which* directions get probed, captured by the
//! [`DirectionProvider`] trait.

mod dct;
mod providers;
mod run;

pub use dct::{dct_basis_image, low_frequency_band};
pub use providers::{
    CartesianProvider, DctProvider, EigenProvider, TransFgmProvider, TransFgsmProvider,
};
pub use run::{run_attack, white_box_descent_oracle, AttackOutcome, DescentReport, TracePoint};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Tensor};
use crate::net::NetError;
use crate::oracle::{AttackObjective, OracleError};

/// Errors produced by the attack layer.
#[derive(Debug, Error)]
pub enum AttackError {
    /// A configuration value failed validation.
    #[error("invalid attack configuration: {0}")]
    InvalidConfig(String),
    /// The starting input was not inside the `[0, 1]` domain.
    #[error("input entry {index} = {value} lies outside [0, 1]")]
    InputOutOfDomain {
        /// Flat index of the offending entry.
        index: usize,
        /// Its value.
        value: f64,
    },
    /// A provider emitted a direction whose length does not match the input.
    #[error("direction length {got} does not match input length {expected}")]
    DirectionShape {
        /// Input length.
        expected: usize,
        /// Direction length.
        got: usize,
    },
    /// Oracle failure other than budget exhaustion (which ends the attack
    /// normally instead of erroring).
    #[error(transparent)]
    Oracle(#[from] OracleError),
    /// Surrogate evaluation failure.
    #[error(transparent)]
    Net(#[from] NetError),
    /// Linear-algebra failure while computing directions.
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Parameters shared by every attack method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Step size along each probed direction; must be positive and finite.
    pub alpha: f64,
    /// Directions per eigen round (the SVD band width). Other methods
    /// ignore it but it must still be at least 1.
    pub k: usize,
    /// Query budget for the whole attack, `None` for unlimited.
    pub budget: Option<u64>,
    /// What the attack minimises and when it counts as successful.
    pub objective: AttackObjective,
    /// Optional hard ceiling on the perturbation norm: candidates beyond it
    /// are skipped without spending a query.
    pub l2_cap: Option<f64>,
    /// Seed for all randomness inside the attack (direction order,
    /// coordinate draws).
    pub seed: u64,
}

impl AttackConfig {
    /// Checks the scalar invariants.
    pub fn validate(&self) -> Result<(), AttackError> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(AttackError::InvalidConfig(format!(
                "alpha must be positive and finite, got {}",
                self.alpha
            )));
        }
        if self.k == 0 {
            return Err(AttackError::InvalidConfig(
                "k must be at least 1".to_string(),
            ));
        }
        if let Some(cap) = self.l2_cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(AttackError::InvalidConfig(format!(
                    "l2 cap must be positive and finite, got {cap}"
                )));
            }
        }
        Ok(())
    }
}

/// A source of candidate probe directions.
///
/// The attack loop calls [`next_directions`](Self::next_directions) once per
/// round, passing the *current* perturbed input, and probes the returned
/// directions in order. After the round it reports how many steps were
/// accepted via [`round_feedback`](Self::round_feedback), which lets
/// stateful strategies (the eigen provider's stall fallback) adapt.
/// Directions must match the input's flattened length; unit norm is the
/// convention for all built-in providers except the sign-valued one.
pub trait DirectionProvider {
    /// The next round of directions, computed at the current input.
    fn next_directions(
        &mut self,
        current: &Tensor,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Tensor>, AttackError>;

    /// Feedback after a round: how many of the round's directions were
    /// accepted as steps. Default: ignore it.
    fn round_feedback(&mut self, accepted: usize) {
        let _ = accepted;
    }
}
