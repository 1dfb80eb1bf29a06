//! `cad`: generate synthetic data, fit metrics, score cases and run the
//! leave-one-out evaluation grid.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "cad",
    version,
    about = "Conditional anomaly detection on binary tabular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic database and its ground-truth file.
    Gen(GenArgs),
    /// Fit a distance metric on a database and save its transform.
    FitMetric(FitMetricArgs),
    /// Leave-one-out scoring of database cases with one detector.
    Score(ScoreArgs),
    /// Select a cohort and evaluate a grid of detectors on it.
    Eval(EvalArgs),
    /// Re-render the report from stored evaluation scores.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenArgs {
    /// Number of cases.
    #[arg(long, default_value_t = 2300)]
    pub n: usize,
    /// Fraction of cases whose target is flipped.
    #[arg(long, default_value_t = 0.1)]
    pub anomaly_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Database CSV to write; the ground truth goes to `<stem>.truth.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest whose `config` overrides the flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Where the database comes from and which column is the target.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DbArgs {
    #[arg(long)]
    pub db: Option<PathBuf>,
    #[arg(long, default_value = "hospitalization")]
    pub target: String,
    /// `key = value` schema file (target, context); overrides --target.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MetricArgs {
    /// Ridge added to covariances; defaults to 1e-6 · trace / d.
    #[arg(long)]
    pub ridge: Option<f64>,
    /// RCA pooling: class-size or unweighted.
    #[arg(long, default_value = "class-size")]
    pub rca_weighting: String,
    #[arg(long, default_value_t = 200)]
    pub nca_max_iterations: usize,
    /// Frobenius penalty on the NCA transform, per case.
    #[arg(long, default_value_t = 0.01)]
    pub nca_regularization: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub nca_tolerance: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitMetricArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub db: DbArgs,
    #[arg(long, default_value = "nca")]
    pub metric: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub metric_args: MetricArgs,
    /// Metric file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScoreArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub db: DbArgs,
    #[arg(long, default_value = "euclidean")]
    pub metric: String,
    /// global, local, local(k) or local:k.
    #[arg(long, default_value = "global")]
    pub scope: String,
    /// softmax or naive_bayes.
    #[arg(long, default_value = "softmax")]
    pub model: String,
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    /// Case ids to score (comma separated); all cases when omitted.
    #[arg(long, value_delimiter = ',')]
    pub cases: Option<Vec<String>>,
    /// Use this fitted metric for every case instead of refitting without it.
    #[arg(long)]
    pub metric_file: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub metric_args: MetricArgs,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Score CSV to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub db: DbArgs,
    /// Ground-truth CSV written by `gen`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// `table1` for the 16-configuration grid, `single` for --metric/--scope/--model.
    #[arg(long, default_value = "table1")]
    pub grid: String,
    #[arg(long, default_value = "nca")]
    pub metric: String,
    #[arg(long, default_value = "local")]
    pub scope: String,
    #[arg(long, default_value = "softmax")]
    pub model: String,
    /// Neighborhood size of the local configurations in the table1 grid.
    #[arg(long, default_value_t = 40)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    #[arg(long, default_value_t = 21)]
    pub n_flagged: usize,
    #[arg(long, default_value_t = 79)]
    pub n_random: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// per-case, once or cohort.
    #[arg(long, default_value = "per-case")]
    pub metric_training: String,
    #[arg(long, default_value_t = 0.95)]
    pub min_specificity: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub metric_args: MetricArgs,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// scores.csv written by `eval`.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    pub min_specificity: f64,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("cad: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Gen(args) => commands::gen(args),
        Command::FitMetric(args) => commands::fit_metric(args),
        Command::Score(args) => commands::score(args),
        Command::Eval(args) => commands::eval(args),
        Command::Report(args) => commands::report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cad: {e:#}");
            ExitCode::FAILURE
        }
    }
}
