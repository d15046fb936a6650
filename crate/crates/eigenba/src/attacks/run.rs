//! The greedy attack loop shared by every method, and a white-box reference.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Tensor;
use crate::net::{LayeredModel, NetError};
use crate::oracle::{clip, is_success, objective_value, AttackObjective, OracleError, QueryOracle};

use super::{AttackConfig, AttackError, DirectionProvider};

/// One point of an attack's objective history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Cumulative queries spent when this value was observed.
    pub query: u64,
    /// Objective value at that moment.
    pub objective: f64,
}

/// The result of one attack on one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    /// Whether the prediction was flipped (or captured, when targeted).
    pub success: bool,
    /// Total queries spent, including the baseline evaluation.
    pub queries_used: u64,
    /// Euclidean norm of the final perturbation.
    pub final_l2: f64,
    /// The final perturbation itself, shaped like the input.
    pub perturbation: Tensor,
    /// Objective value at the baseline and after each accepted step;
    /// strictly decreasing by construction.
    pub probability_trace: Vec<TracePoint>,
}

/// Runs one attack following the shared greedy recipe.
///
/// The loop: query the unmodified input once (the baseline); then fetch a
/// round of directions from the provider, and for each direction try the
/// negative step first and the positive step only if the negative one was
/// not accepted. Candidates are clipped into `[0, 1]` before querying, a
/// step is accepted only when it *strictly* lowers the objective, and the
/// success condition is re-checked after every direction. The loop ends on
/// success, on budget exhaustion (a normal failure outcome, not an error),
/// or when an `l2_cap` filters out an entire round without a single query —
/// the one situation in which no further progress is possible.
///
/// With `initial_check` set, an input that already satisfies the attacker
/// returns immediately as a success costing the one baseline query with a
/// zero perturbation. Without it the baseline still counts, but the loop
/// runs until the (trivially satisfied) per-step success check fires.
///
/// `config.budget` must agree with the oracle's budget; the oracle is the
/// enforcement point, the config the record.
pub fn run_attack(
    oracle: &mut QueryOracle<'_>,
    provider: &mut dyn DirectionProvider,
    config: &AttackConfig,
    input: &Tensor,
    initial_check: bool,
) -> Result<AttackOutcome, AttackError> {
    config.validate()?;
    config.objective.validate(oracle.class_count())?;
    if config.budget != oracle.budget() {
        return Err(AttackError::InvalidConfig(format!(
            "config budget {:?} disagrees with oracle budget {:?}",
            config.budget,
            oracle.budget()
        )));
    }
    for (index, &value) in input.data().iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(AttackError::InputOutOfDomain { index, value });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let baseline = match oracle.query(input) {
        Ok(p) => p,
        // A zero budget cannot even measure the baseline.
        Err(OracleError::BudgetExhausted { .. }) => {
            return Ok(AttackOutcome {
                success: false,
                queries_used: oracle.queries_used(),
                final_l2: 0.0,
                perturbation: Tensor::zeros(input.shape()),
                probability_trace: Vec::new(),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let mut best = objective_value(&config.objective, &baseline);
    let mut trace = vec![TracePoint {
        query: oracle.queries_used(),
        objective: best,
    }];
    if initial_check && is_success(&config.objective, &baseline) {
        return Ok(AttackOutcome {
            success: true,
            queries_used: oracle.queries_used(),
            final_l2: 0.0,
            perturbation: Tensor::zeros(input.shape()),
            probability_trace: trace,
        });
    }

    let mut current = input.clone();
    let mut probabilities = baseline;
    let mut success = false;

    'rounds: loop {
        let directions = provider.next_directions(&current, &mut rng)?;
        if directions.is_empty() {
            break;
        }
        let mut accepted = 0usize;
        let mut queried = 0usize;

        for raw in directions {
            if raw.len() != input.len() {
                return Err(AttackError::DirectionShape {
                    expected: input.len(),
                    got: raw.len(),
                });
            }
            let direction = raw.reshape(input.shape())?;

            // Negative step first; the positive step only on rejection.
            for sign in [-1.0, 1.0] {
                let candidate = clip(&current.add_scaled(&direction, sign * config.alpha)?);
                if let Some(cap) = config.l2_cap {
                    if candidate.sub(input)?.norm_l2() > cap {
                        continue; // skipped without spending a query
                    }
                }
                let probes = match oracle.query(&candidate) {
                    Ok(p) => p,
                    Err(OracleError::BudgetExhausted { .. }) => break 'rounds,
                    Err(e) => return Err(e.into()),
                };
                queried += 1;
                let value = objective_value(&config.objective, &probes);
                if value < best {
                    best = value;
                    probabilities = probes;
                    current = candidate;
                    accepted += 1;
                    trace.push(TracePoint {
                        query: oracle.queries_used(),
                        objective: value,
                    });
                    break;
                }
            }

            if is_success(&config.objective, &probabilities) {
                success = true;
                break 'rounds;
            }
        }

        provider.round_feedback(accepted);
        if queried == 0 && accepted == 0 {
            // The l2 cap filtered every candidate: no query will ever be
            // spent again, so the attack has stalled for good.
            break;
        }
    }

    let perturbation = current.sub(input)?;
    Ok(AttackOutcome {
        success,
        queries_used: oracle.queries_used(),
        final_l2: perturbation.norm_l2(),
        perturbation,
        probability_trace: trace,
    })
}

/// Result of the white-box reference descent.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentReport {
    /// Whether the prediction was flipped (or captured, when targeted).
    pub success: bool,
    /// Euclidean norm of the final perturbation.
    pub final_l2: f64,
    /// Gradient steps actually taken.
    pub steps: usize,
}

/// Reference attack with full gradient access to the *target* model.
///
/// Plain projected gradient descent on the same objective the black-box
/// loop minimises: step against the objective's input gradient, clip into
/// `[0, 1]`, stop on success or after `max_steps`. No queries are counted —
/// this is the upper bound the black-box methods are measured against, not
/// a black-box attack.
pub fn white_box_descent_oracle(
    target: &LayeredModel,
    input: &Tensor,
    objective: &AttackObjective,
    alpha: f64,
    max_steps: usize,
) -> Result<DescentReport, NetError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(NetError::InvalidArgument(format!(
            "descent step size must be positive and finite, got {alpha}"
        )));
    }
    let mut current = clip(input);
    let mut steps = 0;
    let mut success = is_success(objective, target.forward(&current)?.data());
    while !success && steps < max_steps {
        // Descend the objective: p(true) untargeted, -p(target) targeted.
        let gradient = match *objective {
            AttackObjective::Untargeted { true_label } => {
                target.input_gradient(&current, true_label)?
            }
            AttackObjective::Targeted { target_class } => target
                .input_gradient(&current, target_class)?
                .scale(-1.0),
        };
        let gradient = gradient.reshape(current.shape())?;
        current = clip(&current.add_scaled(&gradient, -alpha)?);
        steps += 1;
        success = is_success(objective, target.forward(&current)?.data());
    }
    Ok(DescentReport {
        success,
        final_l2: current.sub(&clip(input))?.norm_l2(),
        steps,
    })
}
