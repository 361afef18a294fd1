//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Environment variable consulted for `--seed` when the flag is absent.
pub const SEED_ENV: &str = "TAILQ_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "tailq",
    version,
    about = "Confidence intervals for extreme quantiles of noisy unit-level estimates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Confidence intervals over a quantile grid.
    Ci(CiArgs),
    /// Extreme-value index estimate.
    Gamma(GammaArgs),
    /// Test of an upper bound on the support.
    TestSupport(SupportArgs),
    /// Point estimates over a quantile grid; optionally writes first-stage estimates.
    Estimate(EstimateArgs),
    /// Monte Carlo coverage study on simulated panels.
    Simulate(SimulateArgs),
    /// Size of the rate conditions for given N, T and tail assumptions.
    Diagnose(DiagnoseArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ci(_) => "ci",
            Command::Gamma(_) => "gamma",
            Command::TestSupport(_) => "test-support",
            Command::Estimate(_) => "estimate",
            Command::Simulate(_) => "simulate",
            Command::Diagnose(_) => "diagnose",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    /// One estimate per row: `theta_hat`, optional `unit_id` and `sigma2`.
    Estimates,
    /// Long panel: `unit,time,y,z` plus optional `x1..xk`.
    Panel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Options shared by every command.
#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CommonArgs {
    /// Output file; JSON to stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Output format; inferred from the output extension by default.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Master seed.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// INI-style `key = value` file, or an earlier JSON report; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Worker threads. Does not change results.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

/// Data input shared by the commands that read a sample.
#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct InputArgs {
    /// CSV file with the estimates or the panel
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputMode::Estimates)]
    pub mode: InputMode,
    /// Work on the left tail (data are negated internally, results mapped back).
    #[arg(long)]
    pub left_tail: bool,
    /// Standardize to mean 0 and variance 1 (population convention) first.
    #[arg(long)]
    pub standardize: bool,
    /// Number of periods behind each estimate (estimates mode).
    #[arg(long)]
    pub t: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiMethodArg {
    /// Ratio statistic, subsampled critical values.
    Extreme,
    /// Ratio statistic, critical values simulated from the limit law.
    ExtremeSimulated,
    IntermediateNormal,
    IntermediateSubsampled,
    /// Binomial order-statistic interval.
    CentralBinomial,
    /// Bias-corrected quantile, bootstrap interval.
    CentralCorrected,
}

/// Grid and tuning for interval and point-estimate sweeps.
#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = CiMethodArg::Extreme)]
    pub method: CiMethodArg,
    /// Quantile probabilities, comma separated (left-tail probabilities with --left-tail).
    #[arg(long, value_delimiter = ',', conflicts_with = "l")]
    pub quantile: Vec<f64>,
    /// Tail offsets l (target is the 1 - l/N quantile), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub l: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Rank of the centring order statistic; floor(l) when absent.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    /// Intermediate rank; round(l) when absent.
    #[arg(long)]
    pub k: Option<usize>,
    /// Subsample size exponent m, b = floor(N^m).
    #[arg(long, default_value_t = 0.7)]
    pub b_exponent: f64,
    #[arg(long, default_value_t = 1000)]
    pub subsamples: usize,
    /// Extreme-value index for simulated critical values; PWM estimate when absent.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Draws from the limit law for simulated critical values.
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    /// Kernel bandwidth for the bias correction; normal-reference rule when absent.
    #[arg(long)]
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct CiArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub sweep: SweepArgs,
    /// Writes `unit_id,theta_hat,sigma2` for the sample actually used.
    #[arg(long)]
    #[serde(rename = "estimates-out")]
    pub estimates_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    Hill,
    Pwm,
    Average,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct GammaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Average)]
    pub estimator: EstimatorArg,
    /// Number of top order statistics; floor(N^0.6) when absent.
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SupportArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Hypothesized upper bound of the support.
    #[arg(long, allow_negative_numbers = true)]
    pub c: f64,
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.7)]
    pub b_exponent: f64,
    #[arg(long, default_value_t = 1000)]
    pub subsamples: usize,
    /// Negative extreme-value index for simulated critical values; subsampling when absent.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub t: usize,
    #[arg(long, default_value_t = 4.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 8.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_x: f64,
    /// No outcome noise.
    #[arg(long)]
    pub noiseless: bool,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Method codes 1a, 1b, 1c, 2a, 2b, 3a, 3b; all when absent.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.85, 0.9, 0.95, 0.99, 0.995, 0.999])]
    pub quantile: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    #[arg(long, default_value_t = 0.7)]
    pub b_exponent: f64,
    #[arg(long, default_value_t = 1000)]
    pub subsamples: usize,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 20_000)]
    pub draws: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeArg {
    Extreme,
    Intermediate,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct DiagnoseArgs {
    /// Number of units; read from --input when absent.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sample whose size gives N.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub t: u32,
    /// First-stage rate exponent.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Noise moment index; sub-Gaussian noise when absent.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub gamma_prime: f64,
    #[arg(long, value_enum, default_value_t = RegimeArg::Extreme)]
    pub regime: RegimeArg,
    /// Rank exponent, k = N^delta (intermediate regime).
    #[arg(long)]
    pub delta: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}
