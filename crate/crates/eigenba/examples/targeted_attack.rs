//! Targeted mode: forcing a *chosen* wrong answer.
//!
//! An untargeted attack only has to push the input off its class; a
//! targeted attack must march it into one specific other class, which is
//! the same greedy loop minimising -p(assigned class) instead of
//! p(true class). This example runs a targeted EigenBA campaign where each
//! victim gets a uniformly drawn wrong class, then puts the result in
//! context: a full-gradient descent on the attacked model itself (no query
//! limits, no black box) certifies which images are reachable at all, and
//! the campaign is scored against exactly those.
//!
//! Run with: `cargo run --release --example targeted_attack`

use eigenba::attacks::white_box_descent_oracle;
use eigenba::harness::{compute_metrics, run_campaign, AttackMethod, CampaignConfig};
use eigenba::net::{sgd_train, LayeredModel, TrainConfig};
use eigenba::oracle::AttackObjective;

fn main() {
    let data = eigenba::harness::make_blob_dataset(4, 64, 75, 6.0, 60).expect("dataset");
    let (half_a, half_b) = data.split(0.5, 61).expect("split");
    let train = TrainConfig {
        epochs: 12,
        ..TrainConfig::default()
    };
    let target = LayeredModel::mlp(64, &[16], 4, 1).expect("target");
    let (target, _) = sgd_train(&target, &half_a, None, &train).expect("target fit");
    let surrogate = LayeredModel::mlp(64, &[16], 4, 2).expect("surrogate");
    let (surrogate, _) = sgd_train(&surrogate, &half_b, None, &train).expect("surrogate fit");

    let mut config = CampaignConfig::new(AttackMethod::EigenBa);
    config.alpha = 0.2;
    config.k = 4;
    config.budget = 2_000;
    config.image_count = 100;
    config.seed = 7;
    config.targeted = true;

    let result = run_campaign(&target, Some(&surrogate), &data, &config).expect("campaign");
    let metrics = compute_metrics(&result.cases, config.budget).expect("metrics");
    println!(
        "targeted EigenBA over {} images: success rate {:.2}, avg queries (success) {}",
        metrics.images,
        metrics.success_rate,
        metrics
            .avg_queries_success
            .map(|v| format!("{v:.1}"))
            .unwrap_or_else(|| "-".to_string()),
    );

    // Certification: descend the true gradient of the attacked model with
    // generous steps. If even that cannot reach the assigned class, no
    // query-limited attack can be blamed for missing it.
    let mut attackable = 0;
    let mut reached = 0;
    let mut hopeless = 0;
    for case in &result.cases {
        let objective = AttackObjective::Targeted {
            target_class: case.target_class.expect("targeted campaign"),
        };
        let certificate =
            white_box_descent_oracle(&target, data.sample(case.image_index), &objective, 1.0, 400)
                .expect("descent oracle");
        if certificate.success {
            attackable += 1;
            if case.outcome.success {
                reached += 1;
            }
        } else {
            hopeless += 1;
        }
    }
    println!(
        "white-box certification: {attackable} reachable, {hopeless} hopeless even with gradients"
    );
    println!(
        "score on reachable images: {reached}/{attackable} ({:.1}%)",
        100.0 * reached as f64 / attackable.max(1) as f64
    );
}
