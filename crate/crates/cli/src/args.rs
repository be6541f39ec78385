//! Command-line flags. Every flag is optional so that values can also come
//! from a JSON config file; flags take precedence.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "robscatter", version, about = "Robust multivariate location and scatter estimation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for simulation and calibration; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// JSON file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate location and scatter of a CSV dataset and flag outliers.
    Estimate(EstimateArgs),
    /// Ordered squared distances against chi-square quantiles.
    Qq(QqArgs),
    /// Run a contamination sweep and print the summary tables.
    Simulate(SimulateArgs),
    /// Sample weight functions on a grid.
    Weights(WeightsArgs),
    /// Find the tuning constant for a target normal efficiency.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// CSV file, with or without a header row.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Keep rows whose column COL equals VALUE and drop that column (COL is a
    /// 1-based index or a header name).
    #[arg(long, value_name = "COL=VALUE")]
    pub subset: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EstimatorArgs {
    /// Estimator label such as mm-opt+ksd, tau-bis+mve, rocke+ksd, s-bis+ksd,
    /// sd+ksd, sd+subs or classical.
    #[arg(long, short)]
    pub estimator: Option<String>,
    /// Tuning constant (c, or alpha for Rocke); the 90% efficiency
    /// approximation when omitted.
    #[arg(long)]
    pub tuning: Option<f64>,
    /// M-scale right-hand side; (1 - p/n)/2 when omitted.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Random subsets tried by the MVE start.
    #[arg(long)]
    pub mve_subsamples: Option<usize>,
    /// Random specific directions of the KSD start.
    #[arg(long)]
    pub ksd_directions: Option<usize>,
    /// Fixed outlyingness cutoff of the KSD start.
    #[arg(long)]
    pub ksd_cutoff: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Chi-square probability of the outlier cutoff.
    #[arg(long)]
    pub cutoff_quantile: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct QqArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Use the location and scatter of a JSON estimate report instead of
    /// estimating.
    #[arg(long)]
    pub estimate: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    /// Named scenario grid (tabresumen-lite, tabresumen-full).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Contamination rate.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Scatter factor of the shifted coordinate.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Comma-separated outlier sizes.
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<f64>>,
    /// Comma-separated estimator labels.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// Also run on clean samples and report efficiencies.
    #[arg(long)]
    pub clean: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct WeightsArgs {
    /// Comma-separated weight families: bisquare, optimal, rocke.
    #[arg(long, value_delimiter = ',')]
    pub family: Option<Vec<String>>,
    /// Divisor of the argument: W(t/c).
    #[arg(long)]
    pub c: Option<f64>,
    /// Band half-width of the Rocke weight.
    #[arg(long)]
    pub rocke_gamma: Option<f64>,
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    /// Number of grid intervals.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Target normal efficiency.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
}
