//! One attack, up close: EigenBA versus SimBA on a single image.
//!
//! The campaign runner hides the inner loop; this example runs it by hand
//! so the mechanics are visible. Both attacks share the same greedy recipe
//! — probe a direction backwards then forwards, keep whatever strictly
//! lowers p(true class), stop when the prediction flips — and differ only
//! in where directions come from: EigenBA reads them from the SVD of a
//! surrogate's representation Jacobian, SimBA walks random pixels. The
//! printed traces show why that matters: the eigen directions buy much
//! larger drops per query.
//!
//! Run with: `cargo run --example untargeted_attack`

use eigenba::attacks::{
    run_attack, AttackConfig, AttackOutcome, CartesianProvider, DirectionProvider, EigenProvider,
};
use eigenba::harness::make_blob_dataset;
use eigenba::net::{sgd_train, LayeredModel, TrainConfig};
use eigenba::oracle::{AttackObjective, QueryOracle};

fn main() {
    // The transfer pair: same architecture, disjoint training halves.
    let data = make_blob_dataset(4, 64, 75, 6.0, 60).expect("dataset");
    let (half_a, half_b) = data.split(0.5, 61).expect("split");
    let train = TrainConfig {
        epochs: 12,
        ..TrainConfig::default()
    };
    let target = LayeredModel::mlp(64, &[16], 4, 1).expect("target");
    let (target, _) = sgd_train(&target, &half_a, None, &train).expect("target fit");
    let surrogate = LayeredModel::mlp(64, &[16], 4, 2).expect("surrogate");
    let (surrogate, _) = sgd_train(&surrogate, &half_b, None, &train).expect("surrogate fit");

    // Pick the first image the target classifies correctly.
    let victim = (0..data.len())
        .find(|&i| {
            let probabilities = target.forward(data.sample(i)).expect("forward");
            argmax(probabilities.data()) == data.label(i)
        })
        .expect("a correctly classified image");
    let input = data.sample(victim);
    let label = data.label(victim);
    let baseline = target.forward(input).expect("forward");
    println!(
        "victim: sample {victim}, true class {label}, p(true) = {:.4}\n",
        baseline.data()[label]
    );

    let config = AttackConfig {
        alpha: 0.2,
        k: 4,
        budget: Some(2_000),
        objective: AttackObjective::Untargeted { true_label: label },
        l2_cap: None,
        seed: 7,
    };

    // The attacked model is reduced to a query oracle: probabilities in,
    // one counted query out, no gradients. Only the surrogate is white-box.
    let mut eigen = EigenProvider::new(&surrogate, config.k);
    let outcome = attack(&target, &mut eigen, &config, input);
    describe("EigenBA (surrogate SVD directions)", &outcome);

    let mut simba = CartesianProvider;
    let outcome = attack(&target, &mut simba, &config, input);
    describe("SimBA (random pixel directions)", &outcome);
}

fn attack(
    target: &LayeredModel,
    provider: &mut dyn DirectionProvider,
    config: &AttackConfig,
    input: &eigenba::linalg::Tensor,
) -> AttackOutcome {
    let mut oracle = QueryOracle::new(target, config.budget);
    run_attack(&mut oracle, provider, config, input, false).expect("attack run")
}

fn describe(name: &str, outcome: &AttackOutcome) {
    println!("{name}:");
    println!(
        "  flipped: {}, queries: {}, perturbation l2: {:.3}",
        outcome.success, outcome.queries_used, outcome.final_l2
    );
    println!("  objective after each accepted step (query #: p(true)):");
    let trace = &outcome.probability_trace;
    // The trace can be long for pixel probing; show its head and tail.
    let shown: Vec<usize> = if trace.len() <= 8 {
        (0..trace.len()).collect()
    } else {
        (0..4).chain(trace.len() - 4..trace.len()).collect()
    };
    let mut last = None;
    for &i in &shown {
        if let Some(previous) = last {
            if i != previous + 1 {
                println!("    ...");
            }
        }
        println!("    {:>5}: {:.4}", trace[i].query, trace[i].objective);
        last = Some(i);
    }
    println!();
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
