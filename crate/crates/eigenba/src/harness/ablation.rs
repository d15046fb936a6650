//! The reserve-rate ablation: how much surrogate knowledge the attack needs.

use serde::{Deserialize, Serialize};

use crate::net::{accuracy, zero_parameters, Dataset, LayeredModel};

use super::campaign::{run_campaign, CampaignConfig, CampaignResult};
use super::metrics::{compute_metrics, MetricsReport};
use super::HarnessError;

/// One ablation row: the campaign run with a degraded surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    /// Fraction of surrogate parameters kept (1.0 = intact attacked copy).
    pub reserve_rate: f64,
    /// Accuracy of the degraded surrogate on the dataset, for context.
    pub surrogate_accuracy: f64,
    /// The aggregated campaign metrics at this rate.
    pub metrics: MetricsReport,
}

/// A full ablation: one campaign result and metrics row per reserve rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationResult {
    /// Summary rows, in the order the rates were given.
    pub rows: Vec<AblationRow>,
    /// The full campaign behind each row, same order.
    pub campaigns: Vec<CampaignResult>,
}

/// Runs the reserve-rate ablation.
///
/// Each rate builds its surrogate by zeroing parameters of a copy of the
/// *attacked* model — rate 1.0 therefore attacks with a perfect surrogate,
/// and the attacked model itself is never modified. All rates share one
/// zeroing seed (the campaign seed), so the kept-parameter set at a higher
/// rate is a superset of the kept set at a lower one: rows differ only in
/// how much of the same knowledge survives. The method must be one that
/// reads the surrogate, or no rate could influence anything.
pub fn run_ablation(
    attacked: &LayeredModel,
    dataset: &Dataset,
    reserve_rates: &[f64],
    config: &CampaignConfig,
) -> Result<AblationResult, HarnessError> {
    config.validate()?;
    if !config.method.requires_surrogate() {
        return Err(HarnessError::InvalidConfig(format!(
            "the reserve-rate ablation needs a surrogate-driven method, got {}",
            config.method
        )));
    }
    if reserve_rates.is_empty() {
        return Err(HarnessError::InvalidConfig(
            "at least one reserve rate is required".to_string(),
        ));
    }
    for (i, &rate) in reserve_rates.iter().enumerate() {
        if !(rate.is_finite() && (0.0..=1.0).contains(&rate)) {
            return Err(HarnessError::InvalidConfig(format!(
                "reserve rate must lie in [0, 1], got {rate}"
            )));
        }
        if reserve_rates[..i].contains(&rate) {
            return Err(HarnessError::InvalidConfig(format!(
                "duplicate reserve rate {rate}"
            )));
        }
    }

    let mut rows = Vec::with_capacity(reserve_rates.len());
    let mut campaigns = Vec::with_capacity(reserve_rates.len());
    for &rate in reserve_rates {
        let surrogate = zero_parameters(attacked, rate, config.seed)?;
        let surrogate_accuracy = accuracy(&surrogate, dataset)?;
        let campaign = run_campaign(attacked, Some(&surrogate), dataset, config)?;
        let metrics = compute_metrics(&campaign.cases, config.budget)?;
        rows.push(AblationRow {
            reserve_rate: rate,
            surrogate_accuracy,
            metrics,
        });
        campaigns.push(campaign);
    }
    Ok(AblationResult { rows, campaigns })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::campaign::AttackMethod;
    use crate::harness::make_blob_dataset;
    use crate::net::{sgd_train, TrainConfig};

    fn trained_target() -> (LayeredModel, Dataset) {
        let data = make_blob_dataset(3, 9, 30, 6.0, 11).unwrap();
        let model = LayeredModel::mlp(9, &[16], 3, 1).unwrap();
        let config = TrainConfig {
            epochs: 10,
            ..TrainConfig::default()
        };
        let (model, _) = sgd_train(&model, &data, None, &config).unwrap();
        (model, data)
    }

    fn small_config() -> CampaignConfig {
        let mut config = CampaignConfig::new(AttackMethod::EigenBa);
        config.image_count = 6;
        config.budget = 250;
        config.k = 4;
        config.seed = 21;
        config
    }

    #[test]
    fn rate_one_matches_the_self_surrogate_campaign_exactly() {
        let (target, data) = trained_target();
        let config = small_config();
        let ablation = run_ablation(&target, &data, &[1.0], &config).unwrap();
        let direct = run_campaign(&target, Some(&target), &data, &config).unwrap();
        assert_eq!(ablation.campaigns[0], direct);
        assert_eq!(ablation.rows[0].reserve_rate, 1.0);
        assert_eq!(
            ablation.rows[0].surrogate_accuracy,
            accuracy(&target, &data).unwrap()
        );
    }

    #[test]
    fn rate_zero_runs_to_completion_on_a_blank_surrogate() {
        // An all-zero surrogate has a zero Jacobian everywhere; the eigen
        // directions degenerate to an arbitrary orthonormal set and the
        // stall fallback cycles bands, but nothing crashes.
        let (target, data) = trained_target();
        let mut config = small_config();
        config.image_count = 3;
        config.budget = 60;
        let ablation = run_ablation(&target, &data, &[0.0], &config).unwrap();
        let row = &ablation.rows[0];
        assert_eq!(row.metrics.images, 3);
        for case in &ablation.campaigns[0].cases {
            assert!(case.outcome.queries_used <= config.budget);
        }
    }

    #[test]
    fn rows_follow_the_requested_rate_order() {
        let (target, data) = trained_target();
        let mut config = small_config();
        config.image_count = 3;
        config.budget = 80;
        let ablation = run_ablation(&target, &data, &[0.5, 1.0], &config).unwrap();
        let rates: Vec<f64> = ablation.rows.iter().map(|r| r.reserve_rate).collect();
        assert_eq!(rates, vec![0.5, 1.0]);
        assert_eq!(ablation.campaigns.len(), 2);
    }

    #[test]
    fn invalid_ablation_requests_are_rejected() {
        let (target, data) = trained_target();
        let config = small_config();
        assert!(run_ablation(&target, &data, &[], &config).is_err());
        assert!(run_ablation(&target, &data, &[1.5], &config).is_err());
        assert!(run_ablation(&target, &data, &[0.5, 0.5], &config).is_err());
        let mut simba = config.clone();
        simba.method = AttackMethod::Simba;
        assert!(run_ablation(&target, &data, &[1.0], &simba).is_err());
    }
}
