//! How much surrogate does the attack actually need?
//!
//! EigenBA's advantage comes entirely from the surrogate's Jacobian, so the
//! natural ablation is to degrade the surrogate and watch the advantage
//! fade. The sweep keeps a fraction (the *reserve rate*) of a copy of the
//! attacked model's own parameters and zeroes the rest — rate 1.0 is a
//! perfect surrogate, rate 0.0 knows nothing — then runs the identical
//! campaign at each rate. Because every rate shares one zeroing seed, the
//! kept set at a higher rate contains the kept set at a lower one: each row
//! differs from the previous only in how much knowledge survived.
//!
//! Expect average queries to climb (and, at the harshest rates, success to
//! dip) as the surrogate degrades, while rate 1.0 reproduces the
//! perfect-surrogate run exactly.
//!
//! Run with: `cargo run --release --example ablation_sweep`

use eigenba::harness::{run_ablation, AttackMethod, CampaignConfig};
use eigenba::net::{sgd_train, LayeredModel, TrainConfig};

fn main() {
    let data = eigenba::harness::make_blob_dataset(4, 64, 75, 6.0, 60).expect("dataset");
    let (half_a, _) = data.split(0.5, 61).expect("split");
    let train = TrainConfig {
        epochs: 12,
        ..TrainConfig::default()
    };
    let target = LayeredModel::mlp(64, &[16], 4, 1).expect("target");
    let (target, _) = sgd_train(&target, &half_a, None, &train).expect("target fit");

    let mut config = CampaignConfig::new(AttackMethod::EigenBa);
    config.alpha = 0.2;
    config.k = 4;
    config.budget = 2_000;
    config.image_count = 50;
    config.seed = 7;

    let rates = [1.0, 0.75, 0.5, 0.25, 0.1];
    let ablation = run_ablation(&target, &data, &rates, &config).expect("ablation");

    println!(
        "{:>12} {:>14} {:>8} {:>12}",
        "reserve rate", "surrogate acc", "success", "avg q (all)"
    );
    for row in &ablation.rows {
        println!(
            "{:>12} {:>14.3} {:>8.2} {:>12.1}",
            row.reserve_rate,
            row.surrogate_accuracy,
            row.metrics.success_rate,
            row.metrics.avg_queries_all
        );
    }

    println!("\nsame sweep via the binary:");
    println!("  eigenba ablate --rates 1.0,0.75,0.5,0.25,0.1 --alpha 0.2 --k 4 \\");
    println!("      --budget 2000 --count 50 --seed 7 --model ... --dataset ... --out ...");
}
