//! The headline experiment: all five attack methods on one benchmark.
//!
//! Every method gets the same attacked model, the same 100 victim images,
//! the same step size and the same 2,000-query budget; the surrogate-driven
//! methods share one surrogate trained on the other half of the data. What
//! varies is purely the direction strategy:
//!
//! - `eigenba`     — right singular vectors of the surrogate's
//!                   representation Jacobian, strongest first, recomputed
//!                   each round;
//! - `trans-fgm`   — the surrogate gradient of one random representation
//!                   coordinate, normalised;
//! - `trans-fgsm`  — the sign pattern of that gradient;
//! - `simba`       — random pixels;
//! - `simba-dct`   — low-frequency cosine basis images.
//!
//! The table mirrors how such results are usually reported: success rate,
//! mean queries over successes, mean queries overall (failures charged the
//! full budget), and the mean perturbation norm. The expected picture:
//! every method flips essentially everything on this easy task, but the
//! eigen directions need severalfold fewer queries than the transfer
//! baselines, which in turn beat blind pixel probing.
//!
//! Run with: `cargo run --release --example method_comparison`

use eigenba::harness::{compute_metrics, run_campaign, AttackMethod, CampaignConfig};
use eigenba::net::{accuracy, sgd_train, LayeredModel, TrainConfig};

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
    println!(
        "target accuracy {:.3}, surrogate accuracy {:.3} (whole set)\n",
        accuracy(&target, &data).expect("accuracy"),
        accuracy(&surrogate, &data).expect("accuracy"),
    );

    println!(
        "{:<10} {:>8} {:>14} {:>12} {:>10}",
        "method", "success", "avg q (succ)", "avg q (all)", "avg l2"
    );
    for method in AttackMethod::all() {
        let mut config = CampaignConfig::new(method);
        config.alpha = 0.2;
        config.k = 4;
        config.budget = 2_000;
        config.image_count = 100;
        config.seed = 7;
        // Flat 64-dimensional inputs have no natural image geometry; give
        // the DCT method an 8x8 grid to work on.
        config.dct_shape = Some((8, 8));

        let lent = method.requires_surrogate().then_some(&surrogate);
        let result = run_campaign(&target, lent, &data, &config).expect("campaign");
        let metrics = compute_metrics(&result.cases, config.budget).expect("metrics");
        println!(
            "{:<10} {:>8.2} {:>14} {:>12.1} {:>10}",
            method.name(),
            metrics.success_rate,
            metrics
                .avg_queries_success
                .map(|v| format!("{v:.1}"))
                .unwrap_or_else(|| "-".to_string()),
            metrics.avg_queries_all,
            metrics
                .avg_l2_success
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".to_string()),
        );
    }

    println!("\nsame experiment via the binary:");
    println!("  eigenba attack --method <name> --alpha 0.2 --k 4 --budget 2000 \\");
    println!("      --count 100 --seed 7 --model ... --surrogate ... --dataset ... --out ...");
}
