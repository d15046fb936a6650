//! Building and persisting a transfer pair: the attacked model and its
//! surrogate.
//!
//! The transfer setting needs two models that share a task but not
//! training data: the attacked (black-box) model and a surrogate the
//! attacker fully controls. This example synthesises a Gaussian-blob
//! dataset, splits it in half with a seeded shuffle, trains one model per
//! half, and saves everything under `demo/` — the same files the `eigenba`
//! binary's `train` subcommand produces, so the attack examples and the
//! CLI are interchangeable from here.
//!
//! Model files are JSON that round-trips every weight bit-for-bit; the
//! reload check at the end proves it.
//!
//! Run with: `cargo run --example train_models`

use eigenba::harness::make_blob_dataset;
use eigenba::net::{accuracy, load_model, save_model, sgd_train, LayeredModel, ModelMetadata, TrainConfig};

fn main() {
    let out = std::path::Path::new("demo");
    std::fs::create_dir_all(out).expect("demo directory");

    // 4 classes, 64 features, 75 samples per class, well separated: small
    // enough to train in milliseconds, rich enough for the attacks to
    // behave the way they do on real image models.
    let data = make_blob_dataset(4, 64, 75, 6.0, 60).expect("dataset");
    data.save_csv(out.join("blobs.csv")).expect("dataset save");
    let (half_a, half_b) = data.split(0.5, 61).expect("split");
    println!(
        "dataset: {} samples, {} classes; halves of {} and {}",
        data.len(),
        data.class_count(),
        half_a.len(),
        half_b.len()
    );

    let train = TrainConfig {
        epochs: 12,
        ..TrainConfig::default()
    };
    let pair = [
        ("target", 1u64, &half_a, "target.json"),
        ("surrogate", 2u64, &half_b, "surrogate.json"),
    ];
    for (role, seed, half, file) in pair {
        let model = LayeredModel::mlp(64, &[16], 4, seed).expect("model init");
        let (model, report) = sgd_train(&model, half, None, &train).expect("training");
        let whole = accuracy(&model, &data).expect("accuracy");
        let metadata = ModelMetadata {
            training_seed: seed,
            dataset_id: format!("blobs(4,64,75,6) half {role}"),
            accuracy: Some(whole),
        };
        let path = out.join(file);
        save_model(&path, &model, &metadata).expect("model save");
        println!(
            "{role:>9}: train accuracy {:.3}, whole-set accuracy {whole:.3} -> {}",
            report.train_accuracy,
            path.display()
        );

        // Reload and compare a forward pass: the file format preserves
        // every float exactly, so the probabilities agree to the last bit.
        let (reloaded, meta) = load_model(&path).expect("model load");
        let before = model.forward(data.sample(0)).expect("forward");
        let after = reloaded.forward(data.sample(0)).expect("forward");
        assert_eq!(before.data(), after.data(), "reload must be bit-exact");
        println!(
            "{:>9}  reload ok (metadata: seed {}, dataset {:?})",
            "", meta.training_seed, meta.dataset_id
        );
    }

    println!("\nfiles in demo/ are ready for the attack examples and for:");
    println!("  eigenba attack --method eigenba --model demo/target.json \\");
    println!("      --surrogate demo/surrogate.json --dataset demo/blobs.csv --out demo/run");
}
