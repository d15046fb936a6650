//! The linear-algebra core on its own: where probe directions come from.
//!
//! EigenBA probes the attacked model along the right singular vectors of
//! the surrogate's representation Jacobian J_h(x). This example builds a
//! small trained network, computes that Jacobian at a real input, and shows
//! what the decomposition buys:
//!
//! - the singular values rank directions by how strongly the representation
//!   reacts to a unit input step (the quantity the attack wants large);
//! - the directions' images under J are mutually orthogonal, so a round of
//!   steps pushes the representation along independent axes;
//! - a brute-force constrained optimiser, which knows nothing about SVD,
//!   recovers the same directions.
//!
//! Run with: `cargo run --example eigen_directions`

use eigenba::harness::make_blob_dataset;
use eigenba::linalg::{brute_force_problem5, eigen_directions, truncated_svd};
use eigenba::net::{sgd_train, LayeredModel, TrainConfig};

fn main() {
    // A small trained model gives the Jacobian real structure; random
    // weights would do for the algebra but not for the story.
    let data = make_blob_dataset(3, 8, 50, 5.0, 21).expect("dataset");
    let model = LayeredModel::mlp(8, &[6], 3, 0).expect("model");
    let train = TrainConfig {
        epochs: 15,
        ..TrainConfig::default()
    };
    let (model, report) = sgd_train(&model, &data, None, &train).expect("training");
    println!(
        "surrogate: 8 -> [6] -> 3 classes, train accuracy {:.3}",
        report.train_accuracy
    );

    let input = data.sample(0);
    let jacobian = model.jacobian_h(input).expect("jacobian");
    println!(
        "\nrepresentation Jacobian at sample 0: {} x {}",
        jacobian.rows(),
        jacobian.cols()
    );

    let k = 4;
    let svd = truncated_svd(&jacobian, k).expect("svd");
    let directions = eigen_directions(&jacobian, k).expect("eigen directions");

    println!("\ntop {k} probe directions, strongest first:");
    println!("{:>3}  {:>12}  {:>18}", "i", "sigma_i", "|J d_i| / |d_i|");
    for (i, direction) in directions.iter().enumerate() {
        let image = jacobian.matvec(direction).expect("image");
        println!(
            "{i:>3}  {:>12.6}  {:>18.6}",
            svd.singular_values[i],
            image.norm_l2() / direction.norm_l2()
        );
    }

    // The constraint that makes the set worth probing as a *round*: each
    // direction moves the representation orthogonally to the others.
    println!("\npairwise <J d_i, J d_j> (should vanish off the diagonal):");
    let images: Vec<_> = directions
        .iter()
        .map(|d| jacobian.matvec(d).expect("image"))
        .collect();
    for i in 0..k {
        let row: Vec<String> = (0..k)
            .map(|j| format!("{:>10.2e}", images[i].dot(&images[j]).expect("dot")))
            .collect();
        println!("  {}", row.join(" "));
    }

    // An independent check: a projected power method that solves the same
    // sequential maximisation by brute force lands on the same directions
    // (up to sign), without ever forming an SVD.
    let reference = brute_force_problem5(&jacobian, k).expect("brute force");
    println!("\nagreement with the brute-force optimiser:");
    for (i, (fast, slow)) in directions.iter().zip(&reference).enumerate() {
        println!(
            "  direction {i}: |cosine| = {:.9}",
            fast.dot(slow).expect("dot").abs()
        );
    }
}
