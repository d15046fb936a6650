//! The four efficiency metrics and the success-rate-vs-budget curve.

use serde::{Deserialize, Serialize};

use super::campaign::CaseRecord;
use super::HarnessError;

/// How many points the success curve samples (fewer when the budget is
/// smaller than this).
const CURVE_POINTS: u64 = 40;

/// One point of the success-rate-vs-budget curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// The hypothetical query limit.
    pub budget: u64,
    /// Fraction of images defeated within that limit.
    pub success_rate: f64,
}

/// Aggregate results of one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Number of attacked images.
    pub images: usize,
    /// The per-image query budget the campaign ran under.
    pub budget: u64,
    /// How many attacks succeeded.
    pub successes: usize,
    /// successes / images.
    pub success_rate: f64,
    /// Mean queries over successful attacks only; absent when none succeeded.
    pub avg_queries_success: Option<f64>,
    /// Mean queries over all attacks, counting each failure as the full
    /// budget.
    pub avg_queries_all: f64,
    /// Mean perturbation norm over successful attacks; absent when none
    /// succeeded.
    pub avg_l2_success: Option<f64>,
    /// Success rate as a function of a hypothetical smaller budget;
    /// monotone non-decreasing.
    pub success_curve: Vec<CurvePoint>,
}

/// Aggregates case records into the campaign metrics.
///
/// Failures contribute exactly `budget` queries to `avg_queries_all`; the
/// success-only averages are `None` rather than zero when nothing succeeded.
/// The curve reports, for a grid of limits up to the budget, the fraction of
/// images whose attack succeeded within that many queries.
pub fn compute_metrics(cases: &[CaseRecord], budget: u64) -> Result<MetricsReport, HarnessError> {
    if cases.is_empty() {
        return Err(HarnessError::InvalidConfig(
            "cannot aggregate an empty campaign".to_string(),
        ));
    }
    if budget == 0 {
        return Err(HarnessError::InvalidConfig(
            "budget must be positive".to_string(),
        ));
    }
    let images = cases.len();
    let mut successes = 0usize;
    let mut queries_success = 0.0;
    let mut queries_all = 0.0;
    let mut l2_success = 0.0;
    for case in cases {
        if case.outcome.success {
            successes += 1;
            queries_success += case.outcome.queries_used as f64;
            queries_all += case.outcome.queries_used as f64;
            l2_success += case.outcome.final_l2;
        } else {
            queries_all += budget as f64;
        }
    }

    let success_curve = curve_budgets(budget)
        .map(|limit| {
            let within = cases
                .iter()
                .filter(|c| c.outcome.success && c.outcome.queries_used <= limit)
                .count();
            CurvePoint {
                budget: limit,
                success_rate: within as f64 / images as f64,
            }
        })
        .collect();

    Ok(MetricsReport {
        images,
        budget,
        successes,
        success_rate: successes as f64 / images as f64,
        avg_queries_success: (successes > 0).then(|| queries_success / successes as f64),
        avg_queries_all: queries_all / images as f64,
        avg_l2_success: (successes > 0).then(|| l2_success / successes as f64),
        success_curve,
    })
}

/// An increasing grid of query limits ending exactly at `budget`.
fn curve_budgets(budget: u64) -> impl Iterator<Item = u64> {
    let points = budget.min(CURVE_POINTS);
    // Rounding up keeps every limit distinct and positive; i = points lands
    // exactly on the budget.
    (1..=points).map(move |i| budget - (points - i) * (budget / points))
}
