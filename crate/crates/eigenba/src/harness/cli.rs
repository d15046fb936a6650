//! The `eigenba` command-line front end.
//!
//! Four subcommands: `train` fits and saves a model, `attack` runs one
//! campaign, `ablate` sweeps surrogate reserve rates, and `report`
//! re-aggregates a stored outcome log. Campaign parameters may come from a
//! JSON config file (`--config`); explicit flags override it. A completed
//! campaign exits 0 regardless of its success rate — only configuration and
//! IO problems are process failures.

use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::harness::{
    compute_metrics, emit_ablation, emit_report, make_blob_dataset, reaggregate, run_ablation,
    run_campaign, AttackMethod, CampaignConfig, HarnessError, MetricsReport,
};
use crate::net::{
    load_model, save_model, sgd_train, Dataset, LayeredModel, ModelMetadata, TrainConfig,
};

/// Transfer-based black-box adversarial attacks at desk scale.
#[derive(Debug, Parser)]
#[command(name = "eigenba", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a small feed-forward classifier and save it as a model file.
    Train(TrainArgs),
    /// Run one attack campaign and write its report files.
    Attack(AttackArgs),
    /// Run the reserve-rate ablation (EigenBA with degraded self-surrogates).
    Ablate(AblateArgs),
    /// Re-aggregate the metrics files of a campaign directory from its
    /// outcome log.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training data as a label,f0,f1,... CSV file.
    #[arg(long, conflicts_with = "blobs", required_unless_present = "blobs")]
    dataset: Option<PathBuf>,
    /// Synthesize Gaussian-blob data instead: classes,dim,per-class,separation.
    #[arg(long, value_parser = parse_blobs)]
    blobs: Option<BlobSpec>,
    /// Write the synthesized dataset here (handy for the attack step).
    #[arg(long, requires = "blobs")]
    save_dataset: Option<PathBuf>,
    /// Hidden layer widths, comma separated; empty string for none.
    #[arg(long, default_value = "16", value_parser = parse_hidden)]
    hidden: Hidden,
    /// Training epochs.
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    /// SGD learning rate.
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    /// Minibatch size.
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    /// Seed for weights, shuffling, and the split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train on one half of a seeded split of this fraction; the other half
    /// is held out for accuracy. Use it twice (halves a and b) to build a
    /// disjoint target/surrogate pair.
    #[arg(long)]
    split: Option<f64>,
    /// Which side of the split to train on.
    #[arg(long, default_value = "a", value_parser = ["a", "b"], requires = "split")]
    half: String,
    /// Where to save the trained model.
    #[arg(long)]
    out: PathBuf,
}

/// Wrapper types so clap's derive can carry parsed lists.
#[derive(Debug, Clone)]
struct BlobSpec {
    classes: usize,
    dim: usize,
    per_class: usize,
    separation: f64,
}

#[derive(Debug, Clone)]
struct Hidden(Vec<usize>);

#[derive(Debug, Args)]
struct AttackArgs {
    /// Campaign config as JSON; explicit flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Attack method.
    #[arg(long)]
    method: Option<AttackMethod>,
    /// The attacked (black-box) model file.
    #[arg(long)]
    model: PathBuf,
    /// The white-box surrogate model file (eigenba, trans-fgm, trans-fgsm).
    #[arg(long)]
    surrogate: Option<PathBuf>,
    /// The dataset to draw attacked images from.
    #[arg(long)]
    dataset: PathBuf,
    /// Step size per probe.
    #[arg(long)]
    alpha: Option<f64>,
    /// Singular directions per round (eigenba).
    #[arg(long)]
    k: Option<usize>,
    /// Query budget per image.
    #[arg(long)]
    budget: Option<u64>,
    /// Attack towards an assigned class instead of away from the true one.
    #[arg(long, action = ArgAction::SetTrue)]
    targeted: bool,
    /// How many images to attack.
    #[arg(long)]
    count: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Optional hard cap on the perturbation norm.
    #[arg(long)]
    l2_cap: Option<f64>,
    /// Low-frequency fraction for simba-dct.
    #[arg(long)]
    dct_fraction: Option<f64>,
    /// Image geometry HxW for simba-dct on flat inputs.
    #[arg(long, value_parser = parse_shape)]
    dct_shape: Option<(usize, usize)>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for the report files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AblateArgs {
    /// Reserve rates to sweep, comma separated.
    #[arg(long, default_value = "1.0,0.5", value_parser = parse_rates)]
    rates: Rates,
    #[command(flatten)]
    attack: AttackArgs,
}

#[derive(Debug, Clone)]
struct Rates(Vec<f64>);

#[derive(Debug, Args)]
struct ReportArgs {
    /// Campaign directory holding an outcomes.jsonl to re-aggregate.
    #[arg(long)]
    out: PathBuf,
}

/// Entry point for the binary: parses `std::env::args`, runs, and returns
/// the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs the CLI against an explicit argument list; used by tests.
pub fn run_from<I, T>(args: I) -> Result<(), String>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| e.to_string())?;
    dispatch(cli).map_err(|e| e.to_string())
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Train(args) => train(args),
        Command::Attack(args) => {
            let (config, result, metrics) = attack(&args)?;
            emit_report(&args.out, &result, &metrics)?;
            print_summary(&config, &metrics, &args.out);
            Ok(())
        }
        Command::Ablate(args) => ablate(args),
        Command::Report(args) => {
            let metrics = reaggregate(&args.out)?;
            println!(
                "re-aggregated {}: {} images, success rate {}, avg queries (all) {}",
                args.out.display(),
                metrics.images,
                metrics.success_rate,
                metrics.avg_queries_all
            );
            Ok(())
        }
    }
}

fn train(args: TrainArgs) -> Result<(), HarnessError> {
    let (dataset, dataset_id) = match (&args.dataset, &args.blobs) {
        (Some(path), None) => {
            let data = Dataset::load_csv(path)?;
            (data, path.display().to_string())
        }
        (None, Some(spec)) => {
            let data = make_blob_dataset(
                spec.classes,
                spec.dim,
                spec.per_class,
                spec.separation,
                args.seed,
            )?;
            let id = format!(
                "blobs({},{},{},{})",
                spec.classes, spec.dim, spec.per_class, spec.separation
            );
            (data, id)
        }
        // clap enforces exactly one source; this is unreachable via the CLI.
        _ => {
            return Err(HarnessError::InvalidConfig(
                "exactly one of --dataset and --blobs is required".to_string(),
            ));
        }
    };
    if let Some(path) = &args.save_dataset {
        dataset.save_csv(path)?;
    }
    if dataset.sample_shape().len() != 1 {
        return Err(HarnessError::InvalidConfig(
            "train expects flat feature vectors".to_string(),
        ));
    }

    let (train_set, held_out, dataset_id) = match args.split {
        Some(fraction) => {
            let (a, b) = dataset.split(fraction, args.seed)?;
            let (train_set, held_out) = if args.half == "a" { (a, b) } else { (b, a) };
            let id = format!("{dataset_id}[split {fraction} half {}]", args.half);
            (train_set, Some(held_out), id)
        }
        None => (dataset, None, dataset_id),
    };

    let input_dim = train_set.sample_shape()[0];
    let model = LayeredModel::mlp(input_dim, &args.hidden.0, train_set.class_count(), args.seed)?;
    let train_config = TrainConfig {
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
    };
    let (model, report) = sgd_train(&model, &train_set, held_out.as_ref(), &train_config)?;

    let metadata = ModelMetadata {
        training_seed: args.seed,
        dataset_id,
        accuracy: report.test_accuracy.or(Some(report.train_accuracy)),
    };
    save_model(&args.out, &model, &metadata)?;
    match report.test_accuracy {
        Some(held) => println!(
            "trained on {} samples: train accuracy {}, held-out accuracy {held}; saved {}",
            train_set.len(),
            report.train_accuracy,
            args.out.display()
        ),
        None => println!(
            "trained on {} samples: train accuracy {}; saved {}",
            train_set.len(),
            report.train_accuracy,
            args.out.display()
        ),
    }
    Ok(())
}

/// Shared campaign assembly for `attack` and `ablate`: loads models and
/// data, merges config sources, and runs the campaign.
fn attack(
    args: &AttackArgs,
) -> Result<
    (
        CampaignConfig,
        crate::harness::CampaignResult,
        MetricsReport,
    ),
    HarnessError,
> {
    let config = merge_config(args)?;
    let (attacked, dataset) = load_campaign_inputs(args)?;
    let surrogate = args
        .surrogate
        .as_ref()
        .map(|path| load_model(path).map(|(model, _)| model))
        .transpose()?;
    let result = run_campaign(&attacked, surrogate.as_ref(), &dataset, &config)?;
    let metrics = compute_metrics(&result.cases, config.budget)?;
    Ok((config, result, metrics))
}

fn ablate(mut args: AblateArgs) -> Result<(), HarnessError> {
    if args.attack.surrogate.is_some() {
        return Err(HarnessError::InvalidConfig(
            "ablate builds its surrogates from the attacked model; --surrogate does not apply"
                .to_string(),
        ));
    }
    // The ablation is EigenBA's experiment; default the method accordingly.
    if args.attack.method.is_none() && args.attack.config.is_none() {
        args.attack.method = Some(AttackMethod::EigenBa);
    }
    let config = merge_config(&args.attack)?;
    let (attacked, dataset) = load_campaign_inputs(&args.attack)?;
    let ablation = run_ablation(&attacked, &dataset, &args.rates.0, &config)?;
    emit_ablation(&args.attack.out, &ablation)?;
    for row in &ablation.rows {
        println!(
            "reserve rate {}: surrogate accuracy {}, success rate {}, avg queries (all) {}",
            row.reserve_rate,
            row.surrogate_accuracy,
            row.metrics.success_rate,
            row.metrics.avg_queries_all
        );
    }
    println!("ablation report in {}", args.attack.out.display());
    Ok(())
}

/// Builds the campaign config from the JSON file (when given) and the
/// explicit flags (which win).
fn merge_config(args: &AttackArgs) -> Result<CampaignConfig, HarnessError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<CampaignConfig>(&text).map_err(|e| {
                HarnessError::InvalidConfig(format!("{}: {e}", path.display()))
            })?
        }
        None => {
            let method = args.method.ok_or_else(|| {
                HarnessError::InvalidConfig(
                    "--method is required unless a --config file provides one".to_string(),
                )
            })?;
            CampaignConfig::new(method)
        }
    };
    if let Some(method) = args.method {
        config.method = method;
    }
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(budget) = args.budget {
        config.budget = budget;
    }
    if args.targeted {
        config.targeted = true;
    }
    if let Some(count) = args.count {
        config.image_count = count;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(cap) = args.l2_cap {
        config.l2_cap = Some(cap);
    }
    if let Some(fraction) = args.dct_fraction {
        config.dct_fraction = fraction;
    }
    if let Some(shape) = args.dct_shape {
        config.dct_shape = Some(shape);
    }
    if let Some(workers) = args.workers {
        config.workers = Some(workers);
    }
    Ok(config)
}

fn load_campaign_inputs(args: &AttackArgs) -> Result<(LayeredModel, Dataset), HarnessError> {
    let (attacked, _) = load_model(&args.model)?;
    let dataset = Dataset::load_csv(&args.dataset)?;
    if attacked.class_count() != dataset.class_count() {
        return Err(HarnessError::InvalidConfig(format!(
            "model has {} classes but the dataset labels imply {}",
            attacked.class_count(),
            dataset.class_count()
        )));
    }
    Ok((attacked, dataset))
}

fn print_summary(config: &CampaignConfig, metrics: &MetricsReport, out: &Path) {
    let avg_success = metrics
        .avg_queries_success
        .map(|v| v.to_string())
        .unwrap_or_else(|| "-".to_string());
    println!(
        "{} ({}): {} images, success rate {}, avg queries success {avg_success}, \
         avg queries all {}; report in {}",
        config.method,
        if config.targeted { "targeted" } else { "untargeted" },
        metrics.images,
        metrics.success_rate,
        metrics.avg_queries_all,
        out.display()
    );
}

fn parse_blobs(raw: &str) -> Result<BlobSpec, String> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 4 {
        return Err("expected classes,dim,per-class,separation".to_string());
    }
    Ok(BlobSpec {
        classes: parts[0].trim().parse().map_err(|e| format!("classes: {e}"))?,
        dim: parts[1].trim().parse().map_err(|e| format!("dim: {e}"))?,
        per_class: parts[2].trim().parse().map_err(|e| format!("per-class: {e}"))?,
        separation: parts[3].trim().parse().map_err(|e| format!("separation: {e}"))?,
    })
}

fn parse_hidden(raw: &str) -> Result<Hidden, String> {
    if raw.trim().is_empty() {
        return Ok(Hidden(Vec::new()));
    }
    raw.split(',')
        .map(|part| part.trim().parse::<usize>().map_err(|e| format!("{part:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Hidden)
}

fn parse_rates(raw: &str) -> Result<Rates, String> {
    raw.split(',')
        .map(|part| part.trim().parse::<f64>().map_err(|e| format!("{part:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Rates)
}

fn parse_shape(raw: &str) -> Result<(usize, usize), String> {
    let (h, w) = raw
        .split_once(['x', 'X'])
        .ok_or_else(|| "expected HxW, e.g. 8x8".to_string())?;
    let h = h.trim().parse().map_err(|e| format!("height: {e}"))?;
    let w = w.trim().parse().map_err(|e| format!("width: {e}"))?;
    Ok((h, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_parsers_accept_the_documented_forms() {
        let blobs = parse_blobs("4,64,50,6.0").unwrap();
        assert_eq!(
            (blobs.classes, blobs.dim, blobs.per_class, blobs.separation),
            (4, 64, 50, 6.0)
        );
        assert!(parse_blobs("4,64,50").is_err());
        assert!(parse_blobs("4,sixty,50,6.0").is_err());

        assert_eq!(parse_hidden("16,8").unwrap().0, vec![16, 8]);
        assert_eq!(parse_hidden("").unwrap().0, Vec::<usize>::new());
        assert!(parse_hidden("16,-2").is_err());

        assert_eq!(parse_rates("1.0, 0.5").unwrap().0, vec![1.0, 0.5]);
        assert_eq!(parse_shape("8x8").unwrap(), (8, 8));
        assert_eq!(parse_shape("4X6").unwrap(), (4, 6));
        assert!(parse_shape("88").is_err());
    }

    #[test]
    fn config_file_fills_fields_and_flags_override() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = dir.path().join("config.json");
        std::fs::write(
            &config_path,
            r#"{"method": "simba", "alpha": 0.4, "budget": 500, "targeted": true}"#,
        )
        .unwrap();
        let args = AttackArgs {
            config: Some(config_path),
            method: Some(AttackMethod::EigenBa),
            model: PathBuf::from("unused"),
            surrogate: None,
            dataset: PathBuf::from("unused"),
            alpha: None,
            k: Some(3),
            budget: None,
            targeted: false,
            count: None,
            seed: Some(7),
            l2_cap: None,
            dct_fraction: None,
            dct_shape: None,
            workers: None,
            out: PathBuf::from("unused"),
        };
        let config = merge_config(&args).unwrap();
        assert_eq!(config.method, AttackMethod::EigenBa); // flag wins
        assert_eq!(config.alpha, 0.4); // file survives
        assert_eq!(config.budget, 500);
        assert!(config.targeted); // file's true survives an absent flag
        assert_eq!(config.k, 3);
        assert_eq!(config.seed, 7);
    }

    #[test]
    fn method_is_required_without_a_config_file() {
        let args = AttackArgs {
            config: None,
            method: None,
            model: PathBuf::from("unused"),
            surrogate: None,
            dataset: PathBuf::from("unused"),
            alpha: None,
            k: None,
            budget: None,
            targeted: false,
            count: None,
            seed: None,
            l2_cap: None,
            dct_fraction: None,
            dct_shape: None,
            workers: None,
            out: PathBuf::from("unused"),
        };
        assert!(matches!(
            merge_config(&args),
            Err(HarnessError::InvalidConfig(_))
        ));
    }

    #[test]
    fn cli_tree_parses_the_documented_invocations() {
        // try_parse_from exercises the clap derive without running anything.
        let ok = Cli::try_parse_from([
            "eigenba", "train", "--blobs", "4,64,50,6.0", "--hidden", "16",
            "--split", "0.5", "--half", "b", "--out", "m.json",
        ]);
        assert!(ok.is_ok(), "{:?}", ok.err().map(|e| e.to_string()));
        let ok = Cli::try_parse_from([
            "eigenba", "attack", "--method", "eigenba", "--model", "t.json",
            "--surrogate", "s.json", "--dataset", "d.csv", "--alpha", "0.2",
            "--k", "4", "--budget", "2000", "--seed", "1", "--out", "report",
        ]);
        assert!(ok.is_ok(), "{:?}", ok.err().map(|e| e.to_string()));
        let ok = Cli::try_parse_from([
            "eigenba", "ablate", "--rates", "1.0,0.5", "--model", "t.json",
            "--dataset", "d.csv", "--out", "report",
        ]);
        assert!(ok.is_ok(), "{:?}", ok.err().map(|e| e.to_string()));
        let ok = Cli::try_parse_from(["eigenba", "report", "--out", "report"]);
        assert!(ok.is_ok(), "{:?}", ok.err().map(|e| e.to_string()));

        // Unknown methods and malformed flags fail to parse.
        assert!(Cli::try_parse_from([
            "eigenba", "attack", "--method", "nope", "--model", "t.json",
            "--dataset", "d.csv", "--out", "report",
        ])
        .is_err());
        assert!(Cli::try_parse_from(["eigenba", "train", "--out", "m.json"]).is_err());
    }
}
