//! The black-box query interface: probability evaluation, query counting,
//! budget enforcement, and the attack objectives.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Tensor;
use crate::net::{LayeredModel, NetError};

/// Errors produced by the oracle layer.
#[derive(Debug, Error)]
pub enum OracleError {
    /// The query budget is spent; no evaluation was performed.
    #[error("query budget of {budget} exhausted")]
    BudgetExhausted {
        /// The budget that ran out.
        budget: u64,
    },
    /// A class index was outside the evaluator's range.
    #[error("class {class} out of range for {class_count} classes")]
    ClassOutOfRange {
        /// The offending index.
        class: usize,
        /// How many classes the evaluator reports.
        class_count: usize,
    },
    /// The underlying evaluator failed.
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Anything that maps an input to class probabilities.
///
/// This is the entire surface the attacker sees of the target model: no
/// gradients, no internals, just probabilities. `Sync` so campaigns can
/// share one target across worker threads.
pub trait ProbabilityEvaluator: Sync {
    /// Number of classes in the output distribution.
    fn class_count(&self) -> usize;

    /// Class probabilities for one input.
    fn probabilities(&self, input: &Tensor) -> Result<Vec<f64>, OracleError>;
}

impl ProbabilityEvaluator for LayeredModel {
    fn class_count(&self) -> usize {
        self.class_count()
    }

    fn probabilities(&self, input: &Tensor) -> Result<Vec<f64>, OracleError> {
        Ok(self.forward(input)?.data().to_vec())
    }
}

/// Wraps an evaluator with a monotone query counter and an optional hard
/// budget.
///
/// Every successful evaluation costs exactly one query — including the
/// baseline evaluation an attack starts with. Once `queries_used` reaches
/// the budget, further queries fail with [`OracleError::BudgetExhausted`]
/// without touching the evaluator, and the counter never moves again.
pub struct QueryOracle<'a> {
    evaluator: &'a dyn ProbabilityEvaluator,
    queries_used: u64,
    budget: Option<u64>,
}

impl<'a> QueryOracle<'a> {
    /// A fresh oracle with zero queries used. `None` means unlimited.
    pub fn new(evaluator: &'a dyn ProbabilityEvaluator, budget: Option<u64>) -> Self {
        Self {
            evaluator,
            queries_used: 0,
            budget,
        }
    }

    /// Evaluates one input, counting the query.
    pub fn query(&mut self, input: &Tensor) -> Result<Vec<f64>, OracleError> {
        if let Some(budget) = self.budget {
            if self.queries_used >= budget {
                return Err(OracleError::BudgetExhausted { budget });
            }
        }
        let probabilities = self.evaluator.probabilities(input)?;
        self.queries_used += 1;
        Ok(probabilities)
    }

    /// Queries spent so far.
    pub fn queries_used(&self) -> u64 {
        self.queries_used
    }

    /// The configured budget, if any.
    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    /// Queries still available, if a budget is set.
    pub fn remaining(&self) -> Option<u64> {
        self.budget.map(|b| b - self.queries_used)
    }

    /// Number of classes reported by the wrapped evaluator.
    pub fn class_count(&self) -> usize {
        self.evaluator.class_count()
    }
}

/// What the attacker is trying to achieve, and therefore what it minimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AttackObjective {
    /// Push the probability of the true class down until some other class
    /// takes over.
    Untargeted {
        /// Class the input really belongs to.
        true_label: usize,
    },
    /// Pull the probability of a chosen class up until it wins.
    Targeted {
        /// Class the attacker wants predicted.
        target_class: usize,
    },
}

impl AttackObjective {
    /// Checks the referenced class exists.
    pub fn validate(&self, class_count: usize) -> Result<(), OracleError> {
        let class = match *self {
            AttackObjective::Untargeted { true_label } => true_label,
            AttackObjective::Targeted { target_class } => target_class,
        };
        if class >= class_count {
            Err(OracleError::ClassOutOfRange { class, class_count })
        } else {
            Ok(())
        }
    }
}

/// The scalar the attack greedily minimises: `p(true_label)` untargeted,
/// `-p(target_class)` targeted. Both attacks then share one loop that only
/// ever accepts strict decreases.
pub fn objective_value(objective: &AttackObjective, probabilities: &[f64]) -> f64 {
    match *objective {
        AttackObjective::Untargeted { true_label } => probabilities[true_label],
        AttackObjective::Targeted { target_class } => -probabilities[target_class],
    }
}

/// Whether the prediction already satisfies the attacker. The predicted
/// class is the argmax with exact ties broken towards the lowest index.
pub fn is_success(objective: &AttackObjective, probabilities: &[f64]) -> bool {
    let predicted = argmax(probabilities);
    match *objective {
        AttackObjective::Untargeted { true_label } => predicted != true_label,
        AttackObjective::Targeted { target_class } => predicted == target_class,
    }
}

/// Projects an input onto the valid domain `[0, 1]^n`.
pub fn clip(input: &Tensor) -> Tensor {
    input.clamp01()
}

/// Index of the largest entry; the lowest index wins exact ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
