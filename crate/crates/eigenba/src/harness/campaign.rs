//! Campaign assembly: victim selection and the parallel per-image runner.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{
    run_attack, AttackConfig, AttackOutcome, CartesianProvider, DctProvider, DirectionProvider,
    EigenProvider, TransFgmProvider, TransFgsmProvider,
};
use crate::net::{Dataset, LayeredModel};
use crate::oracle::{AttackObjective, QueryOracle};

use super::HarnessError;

/// The attack methods the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackMethod {
    /// Right singular vectors of the surrogate's representation Jacobian.
    #[serde(rename = "eigenba")]
    EigenBa,
    /// SimBA with the coordinate basis in random order.
    #[serde(rename = "simba")]
    Simba,
    /// SimBA with a low-frequency DCT basis.
    #[serde(rename = "simba-dct")]
    SimbaDct,
    /// Normalised surrogate gradient of a random representation coordinate.
    #[serde(rename = "trans-fgm")]
    TransFgm,
    /// Sign of the surrogate gradient of a random representation coordinate.
    #[serde(rename = "trans-fgsm")]
    TransFgsm,
}

impl AttackMethod {
    /// The command-line spelling of this method.
    pub fn name(self) -> &'static str {
        match self {
            AttackMethod::EigenBa => "eigenba",
            AttackMethod::Simba => "simba",
            AttackMethod::SimbaDct => "simba-dct",
            AttackMethod::TransFgm => "trans-fgm",
            AttackMethod::TransFgsm => "trans-fgsm",
        }
    }

    /// Whether the method reads directions from a surrogate model.
    pub fn requires_surrogate(self) -> bool {
        matches!(
            self,
            AttackMethod::EigenBa | AttackMethod::TransFgm | AttackMethod::TransFgsm
        )
    }

    /// Every method, in presentation order.
    pub fn all() -> [AttackMethod; 5] {
        [
            AttackMethod::EigenBa,
            AttackMethod::Simba,
            AttackMethod::SimbaDct,
            AttackMethod::TransFgm,
            AttackMethod::TransFgsm,
        ]
    }
}

impl std::fmt::Display for AttackMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AttackMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttackMethod::all()
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown method {s:?}; expected one of {}",
                    AttackMethod::all().map(|m| m.name()).join(", ")
                )
            })
    }
}

/// Everything that defines one campaign. Serializable so a campaign can be
/// described by a JSON file and embedded in its own outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    /// The attack to run.
    pub method: AttackMethod,
    /// Step size per probe.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Directions per SVD round (EigenBA only).
    #[serde(default = "default_k")]
    pub k: usize,
    /// Query budget per image.
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Targeted mode: push towards an assigned class instead of away from
    /// the true one.
    #[serde(default)]
    pub targeted: bool,
    /// Master seed; everything else derives from it.
    #[serde(default)]
    pub seed: u64,
    /// How many images to attack.
    #[serde(default = "default_image_count")]
    pub image_count: usize,
    /// Optional hard cap on the perturbation norm.
    #[serde(default)]
    pub l2_cap: Option<f64>,
    /// Low-frequency fraction for SimBA-DCT.
    #[serde(default = "default_dct_fraction")]
    pub dct_fraction: f64,
    /// Image geometry for SimBA-DCT when inputs are flat vectors.
    #[serde(default)]
    pub dct_shape: Option<(usize, usize)>,
    /// Worker threads for per-image parallelism; `None` uses every core.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_alpha() -> f64 {
    0.2
}

fn default_k() -> usize {
    10
}

fn default_budget() -> u64 {
    2_000
}

fn default_image_count() -> usize {
    100
}

fn default_dct_fraction() -> f64 {
    0.125
}

impl CampaignConfig {
    /// A config for `method` with the documented defaults everywhere else.
    pub fn new(method: AttackMethod) -> Self {
        Self {
            method,
            alpha: default_alpha(),
            k: default_k(),
            budget: default_budget(),
            targeted: false,
            seed: 0,
            image_count: default_image_count(),
            l2_cap: None,
            dct_fraction: default_dct_fraction(),
            dct_shape: None,
            workers: None,
        }
    }

    /// Validates campaign-level parameters (per-attack parameters are
    /// re-validated by the attack loop itself).
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.budget == 0 {
            return Err(HarnessError::InvalidConfig(
                "budget must be at least 1 (the baseline query)".to_string(),
            ));
        }
        if self.image_count == 0 {
            return Err(HarnessError::InvalidConfig(
                "image_count must be positive".to_string(),
            ));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(HarnessError::InvalidConfig(format!(
                "alpha must be positive and finite, got {}",
                self.alpha
            )));
        }
        if self.k == 0 {
            return Err(HarnessError::InvalidConfig(
                "k must be at least 1".to_string(),
            ));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::InvalidConfig(
                "workers must be at least 1 when given".to_string(),
            ));
        }
        Ok(())
    }
}

/// One victim drawn for a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackTarget {
    /// Index of the image in its dataset.
    pub image_index: usize,
    /// The dataset label, verified correct under the attacked model.
    pub true_label: usize,
    /// The assigned class in targeted mode.
    pub target_class: Option<usize>,
}

/// The outcome of one campaign image, with everything needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    /// Index of the image in the dataset.
    pub image_index: usize,
    /// The attack seed derived for this image.
    pub per_image_seed: u64,
    /// The (verified) dataset label.
    pub true_label: usize,
    /// The assigned class in targeted mode.
    pub target_class: Option<usize>,
    /// What the attack did.
    pub outcome: AttackOutcome,
}

/// A finished campaign: its config and one record per attacked image,
/// ordered by position in the attack set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    /// The configuration the campaign ran under.
    pub config: CampaignConfig,
    /// Per-image records, in attack-set order.
    pub cases: Vec<CaseRecord>,
}

/// Draws the set of images to attack.
///
/// Only images the attacked model currently classifies correctly enter the
/// pool (attacking an already-wrong prediction would inflate the success
/// rate); `count` of them are then sampled without replacement, seeded. In
/// targeted mode each victim is also assigned a class drawn uniformly from
/// the non-true classes. The returned set is sorted by dataset index.
pub fn select_attack_set(
    model: &LayeredModel,
    dataset: &Dataset,
    count: usize,
    targeted: bool,
    seed: u64,
) -> Result<Vec<AttackTarget>, HarnessError> {
    if count == 0 {
        return Err(HarnessError::InvalidConfig(
            "attack set size must be positive".to_string(),
        ));
    }
    let mut correct = Vec::new();
    for i in 0..dataset.len() {
        let probabilities = model.forward(dataset.sample(i))?;
        if argmax(probabilities.data()) == dataset.label(i) {
            correct.push(i);
        }
    }
    if correct.len() < count {
        return Err(HarnessError::NotEnoughCorrectSamples {
            available: correct.len(),
            requested: count,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    correct.shuffle(&mut rng);
    let mut chosen: Vec<usize> = correct.into_iter().take(count).collect();
    chosen.sort_unstable();
    chosen
        .into_iter()
        .map(|image_index| {
            let true_label = dataset.label(image_index);
            let target_class = if targeted {
                // Uniform over the other classes: draw from a range one
                // short and skip past the true label.
                let drawn = rng.random_range(0..dataset.class_count() - 1);
                Some(if drawn >= true_label { drawn + 1 } else { drawn })
            } else {
                None
            };
            Ok(AttackTarget {
                image_index,
                true_label,
                target_class,
            })
        })
        .collect()
}

/// Derives the attack seed for the image at `position` in the attack set.
///
/// SplitMix64-style finalizer over (campaign seed, position): statistically
/// independent streams per image, reproducible from the config alone.
pub fn per_image_seed(campaign_seed: u64, position: u64) -> u64 {
    let mut z = campaign_seed ^ (position.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs one campaign: selects victims, attacks each, returns the records.
///
/// Images are attacked in parallel (bounded by `config.workers` when set);
/// each image gets an isolated oracle, provider and rng, and records are
/// collected in attack-set order, so the result is identical regardless of
/// scheduling. The surrogate is required exactly for the methods that read
/// directions from one.
pub fn run_campaign(
    attacked: &LayeredModel,
    surrogate: Option<&LayeredModel>,
    dataset: &Dataset,
    config: &CampaignConfig,
) -> Result<CampaignResult, HarnessError> {
    config.validate()?;
    if config.method.requires_surrogate() && surrogate.is_none() {
        return Err(HarnessError::MissingSurrogate {
            method: config.method.name().to_string(),
        });
    }
    let targets = select_attack_set(
        attacked,
        dataset,
        config.image_count,
        config.targeted,
        config.seed,
    )?;

    let attack_one = |(position, target): (usize, &AttackTarget)| -> Result<CaseRecord, HarnessError> {
        let seed = per_image_seed(config.seed, position as u64);
        let objective = match target.target_class {
            Some(target_class) => AttackObjective::Targeted { target_class },
            None => AttackObjective::Untargeted {
                true_label: target.true_label,
            },
        };
        let attack_config = AttackConfig {
            alpha: config.alpha,
            k: config.k,
            budget: Some(config.budget),
            objective,
            l2_cap: config.l2_cap,
            seed,
        };
        let mut provider = make_provider(config, surrogate)?;
        let mut oracle = QueryOracle::new(attacked, Some(config.budget));
        let outcome = run_attack(
            &mut oracle,
            provider.as_mut(),
            &attack_config,
            dataset.sample(target.image_index),
            true,
        )?;
        Ok(CaseRecord {
            image_index: target.image_index,
            per_image_seed: seed,
            true_label: target.true_label,
            target_class: target.target_class,
            outcome,
        })
    };

    // collect() keeps input order no matter which worker finishes first.
    let indexed: Vec<(usize, &AttackTarget)> = targets.iter().enumerate().collect();
    let cases: Result<Vec<CaseRecord>, HarnessError> = match config.workers {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| HarnessError::InvalidConfig(format!("worker pool: {e}")))?
            .install(|| indexed.par_iter().map(|&t| attack_one(t)).collect()),
        None => indexed.par_iter().map(|&t| attack_one(t)).collect(),
    };

    Ok(CampaignResult {
        config: config.clone(),
        cases: cases?,
    })
}

/// Builds the direction provider for a campaign's method.
fn make_provider<'a>(
    config: &CampaignConfig,
    surrogate: Option<&'a LayeredModel>,
) -> Result<Box<dyn DirectionProvider + 'a>, HarnessError> {
    let need_surrogate = || {
        surrogate.ok_or_else(|| HarnessError::MissingSurrogate {
            method: config.method.name().to_string(),
        })
    };
    Ok(match config.method {
        AttackMethod::EigenBa => Box::new(EigenProvider::new(need_surrogate()?, config.k)),
        AttackMethod::Simba => Box::new(CartesianProvider),
        AttackMethod::SimbaDct => {
            Box::new(DctProvider::new(config.dct_fraction, config.dct_shape)?)
        }
        AttackMethod::TransFgm => Box::new(TransFgmProvider::new(need_surrogate()?)),
        AttackMethod::TransFgsm => Box::new(TransFgsmProvider::new(need_surrogate()?)),
    })
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
