use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Decompose group disparities into the part an intervention on a mediator
/// would remove and the part that would remain.
#[derive(Debug, Parser)]
#[command(name = "causal-decomp", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the disparity reduction and remaining disparity on a CSV file.
    Decompose(DecomposeArgs),
    /// Run a Monte Carlo study from a scenario file.
    Simulate(SimulateArgs),
    /// Plot a metrics CSV written by `simulate`.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Binary group indicator: 1 = comparison group, 0 = reference group.
    #[arg(long)]
    pub exposure: String,
    /// Outcome column as `name[:kind]`, kind `continuous` (default) or `binary`.
    #[arg(long)]
    pub outcome: String,
    /// Mediator as `name:kind`. Repeat for several mediators.
    #[arg(long = "mediator", required = true)]
    pub mediators: Vec<String>,
    /// Intermediate confounders, comma separated `name[:kind]`.
    #[arg(long, value_delimiter = ',')]
    pub confounders: Vec<String>,
    /// Baseline covariates, comma separated `name[:kind]`; kind may be `categorical`.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Estimators by name or number (`product-of-coeffs`, `2`, ...). Defaults to every available one.
    #[arg(long = "estimator", value_delimiter = ',')]
    pub estimators: Vec<String>,
    /// Interaction term `A:B`. Repeatable.
    #[arg(long = "interaction")]
    pub interactions: Vec<String>,
    /// Bootstrap replicates; 0 skips the intervals.
    #[arg(long, default_value_t = 1000)]
    pub boot: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Remaining-disparity formula for the product-of-coefficients estimator: `original` or `alternative`.
    #[arg(long)]
    pub remaining: Option<String>,
    /// Confidence level of the percentile intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Covariate value `name=value` to condition on. Repeatable; defaults to sample means.
    #[arg(long = "reference")]
    pub reference: Vec<String>,
    /// Average the single-mediator imputation estimator over the covariate distribution.
    #[arg(long)]
    pub marginal: bool,
    /// Resample from the whole sample instead of within each group.
    #[arg(long)]
    pub unstratified: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file: a manifest, a single scenario or a list of scenarios (JSON).
    #[arg(long)]
    pub scenarios: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Replicate datasets per scenario (overrides the file).
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Bootstrap resamples per replicate (overrides the file).
    #[arg(long)]
    pub boot: Option<usize>,
    /// Master seed (overrides the file).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metrics CSV from `simulate`.
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}
