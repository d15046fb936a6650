//! Report files: aggregate metrics, curve points, and replayable outcomes.
//!
//! A campaign directory holds four files:
//!
//! * `metrics.json` — the [`MetricsReport`], pretty-printed.
//! * `metrics.csv` — one row with the documented header
//!   `method,targeted,images,budget,alpha,k,seed,successes,success_rate,avg_queries_success,avg_queries_all,avg_l2_success`
//!   (the success-only averages are empty fields when nothing succeeded).
//! * `success_curve.csv` — `budget,success_rate` rows, ready to plot.
//! * `outcomes.jsonl` — line 1 carries the full campaign config, each later
//!   line one per-image case record (seed, labels, outcome, perturbation),
//!   enough to re-aggregate or replay without the original invocation.
//!
//! All floats are written in shortest round-trip form, so equal campaigns
//! produce byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ablation::AblationResult;
use super::campaign::{CampaignConfig, CampaignResult, CaseRecord};
use super::metrics::{compute_metrics, MetricsReport};
use super::HarnessError;

/// File name of the JSON metrics report.
pub const METRICS_JSON: &str = "metrics.json";
/// File name of the one-row CSV metrics report.
pub const METRICS_CSV: &str = "metrics.csv";
/// File name of the success-curve CSV.
pub const CURVE_CSV: &str = "success_curve.csv";
/// File name of the per-image outcome log.
pub const OUTCOMES_JSONL: &str = "outcomes.jsonl";
/// File name of the ablation summary table (JSON).
pub const ABLATION_JSON: &str = "ablation.json";
/// File name of the ablation summary table (CSV).
pub const ABLATION_CSV: &str = "ablation.csv";

const METRICS_HEADER: [&str; 12] = [
    "method",
    "targeted",
    "images",
    "budget",
    "alpha",
    "k",
    "seed",
    "successes",
    "success_rate",
    "avg_queries_success",
    "avg_queries_all",
    "avg_l2_success",
];

/// One line of `outcomes.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum OutcomeLine {
    /// The campaign configuration (always the first line).
    Config {
        /// The configuration itself.
        config: CampaignConfig,
    },
    /// One attacked image.
    Case {
        /// The record itself.
        case: CaseRecord,
    },
}

/// Writes the campaign file set into `dir` (created if missing).
pub fn emit_report(
    dir: impl AsRef<Path>,
    result: &CampaignResult,
    metrics: &MetricsReport,
) -> Result<(), HarnessError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_metrics_files(dir, &result.config, metrics)?;

    let mut lines = String::new();
    let config_line = OutcomeLine::Config {
        config: result.config.clone(),
    };
    lines.push_str(&to_json_line(&config_line));
    for case in &result.cases {
        let line = OutcomeLine::Case { case: case.clone() };
        lines.push_str(&to_json_line(&line));
    }
    fs::write(dir.join(OUTCOMES_JSONL), lines)?;
    Ok(())
}

/// Re-reads `outcomes.jsonl` from a campaign directory.
pub fn read_outcomes(
    dir: impl AsRef<Path>,
) -> Result<(CampaignConfig, Vec<CaseRecord>), HarnessError> {
    let path = dir.as_ref().join(OUTCOMES_JSONL);
    let text = fs::read_to_string(&path)?;
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| {
        HarnessError::Report(format!("{}: empty outcome log", path.display()))
    })?;
    let config = match parse_line(&path, 1, first)? {
        OutcomeLine::Config { config } => config,
        OutcomeLine::Case { .. } => {
            return Err(HarnessError::Report(format!(
                "{}: first line must be the config record",
                path.display()
            )));
        }
    };
    let mut cases = Vec::new();
    for (index, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&path, index + 1, line)? {
            OutcomeLine::Case { case } => cases.push(case),
            OutcomeLine::Config { .. } => {
                return Err(HarnessError::Report(format!(
                    "{}: duplicate config record on line {}",
                    path.display(),
                    index + 1
                )));
            }
        }
    }
    Ok((config, cases))
}

/// Recomputes the aggregate files of a campaign directory from its outcome
/// log, returning the freshly computed metrics.
pub fn reaggregate(dir: impl AsRef<Path>) -> Result<MetricsReport, HarnessError> {
    let dir = dir.as_ref();
    let (config, cases) = read_outcomes(dir)?;
    if cases.is_empty() {
        return Err(HarnessError::Report(format!(
            "{}: outcome log holds no cases",
            dir.join(OUTCOMES_JSONL).display()
        )));
    }
    let metrics = compute_metrics(&cases, config.budget)?;
    write_metrics_files(dir, &config, &metrics)?;
    Ok(metrics)
}

/// Writes the ablation file set: a summary table plus one full campaign
/// directory (`rate-<value>/`) per row.
pub fn emit_ablation(dir: impl AsRef<Path>, ablation: &AblationResult) -> Result<(), HarnessError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let mut json = serde_json::to_string_pretty(&ablation.rows)
        .expect("ablation rows contain only plain data");
    json.push('\n');
    fs::write(dir.join(ABLATION_JSON), json)?;

    let mut csv = csv_line(&[
        "reserve_rate",
        "surrogate_accuracy",
        "images",
        "budget",
        "successes",
        "success_rate",
        "avg_queries_success",
        "avg_queries_all",
        "avg_l2_success",
    ]);
    for row in &ablation.rows {
        let m = &row.metrics;
        csv.push_str(&csv_line(&[
            &format!("{}", row.reserve_rate),
            &format!("{}", row.surrogate_accuracy),
            &m.images.to_string(),
            &m.budget.to_string(),
            &m.successes.to_string(),
            &format!("{}", m.success_rate),
            &optional(m.avg_queries_success),
            &format!("{}", m.avg_queries_all),
            &optional(m.avg_l2_success),
        ]));
    }
    fs::write(dir.join(ABLATION_CSV), csv)?;

    for (row, campaign) in ablation.rows.iter().zip(&ablation.campaigns) {
        let sub = dir.join(format!("rate-{}", row.reserve_rate));
        emit_report(&sub, campaign, &row.metrics)?;
    }
    Ok(())
}

fn write_metrics_files(
    dir: &Path,
    config: &CampaignConfig,
    metrics: &MetricsReport,
) -> Result<(), HarnessError> {
    let mut json =
        serde_json::to_string_pretty(metrics).expect("metrics contain only plain finite data");
    json.push('\n');
    fs::write(dir.join(METRICS_JSON), json)?;

    let mut csv = csv_line(&METRICS_HEADER);
    csv.push_str(&csv_line(&[
        config.method.name(),
        &config.targeted.to_string(),
        &metrics.images.to_string(),
        &metrics.budget.to_string(),
        &format!("{}", config.alpha),
        &config.k.to_string(),
        &config.seed.to_string(),
        &metrics.successes.to_string(),
        &format!("{}", metrics.success_rate),
        &optional(metrics.avg_queries_success),
        &format!("{}", metrics.avg_queries_all),
        &optional(metrics.avg_l2_success),
    ]));
    fs::write(dir.join(METRICS_CSV), csv)?;

    let mut curve = csv_line(&["budget", "success_rate"]);
    for point in &metrics.success_curve {
        curve.push_str(&csv_line(&[
            &point.budget.to_string(),
            &format!("{}", point.success_rate),
        ]));
    }
    fs::write(dir.join(CURVE_CSV), curve)?;
    Ok(())
}

fn parse_line(path: &Path, number: usize, line: &str) -> Result<OutcomeLine, HarnessError> {
    serde_json::from_str(line).map_err(|e| {
        HarnessError::Report(format!("{}: line {number}: {e}", path.display()))
    })
}

fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut line = serde_json::to_string(value).expect("outcome records are plain data");
    line.push('\n');
    line
}

/// A success-only average: empty field when nothing succeeded.
fn optional(value: Option<f64>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_default()
}

/// One CSV record. None of the schema's fields can contain commas, quotes
/// or newlines, so plain joining is already valid CSV.
fn csv_line(fields: &[&str]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}
