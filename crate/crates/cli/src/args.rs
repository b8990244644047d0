use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use gibbs_mcid::calibration::IntervalMethod;
use gibbs_mcid::experiments::{Method, OmegaPolicy, DEFAULT_PILOT_DATASETS};
use gibbs_mcid::{Prior, SamplerKind};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Parser, Debug)]
#[command(
    name = "gibbs-mcid",
    version,
    about = "Gibbs posterior inference for the minimum clinically important difference"
)]
pub struct Cli {
    /// Worker threads for replications [default: all cores]
    #[arg(long, global = true, env = "GIBBS_MCID_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a dataset from a scenario
    Generate(GenerateArgs),
    /// Empirical risk minimizer and its percentile-bootstrap interval
    Estimate(EstimateArgs),
    /// Gibbs posterior summary (mean and equal-tailed credible interval)
    Posterior(PosteriorArgs),
    /// Calibrate the loss scale so credible intervals reach nominal coverage
    Calibrate(CalibrateArgs),
    /// Monte Carlo bias/SD and coverage/length study
    Study(StudyArgs),
    /// Empirical convergence rate over a grid of sample sizes
    RateCheck(RateCheckArgs),
    /// Misspecified logistic-model posterior against the Gibbs posterior
    CompareLogistic(CompareArgs),
    /// Re-run the command recorded in an output file's header
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Estimate(_) => "estimate",
            Command::Posterior(_) => "posterior",
            Command::Calibrate(_) => "calibrate",
            Command::Study(_) => "study",
            Command::RateCheck(_) => "rate-check",
            Command::CompareLogistic(_) => "compare-logistic",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Built-in scenario name or path to a TOML scenario file
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output CSV [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Either a simulated dataset or one read from CSV.
#[derive(Args, Debug)]
pub struct DataArgs {
    /// Built-in scenario name or path to a TOML scenario file
    #[arg(long, required_unless_present = "data")]
    pub scenario: Option<String>,
    #[arg(long, required_unless_present = "data")]
    pub n: Option<usize>,
    /// CSV with columns `x,y` (y in {-1, 1}) instead of simulated data
    #[arg(long, conflicts_with_all = ["scenario", "n"])]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output CSV [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.90)]
    pub level: f64,
    /// Bootstrap resamples
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
}

#[derive(Args, Debug)]
pub struct PosteriorArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.90)]
    pub level: f64,
    /// Loss scale, or `auto` to calibrate it
    #[arg(long, default_value = "auto")]
    pub omega: OmegaArg,
    /// `flat` or `normal:mu,sigma`
    #[arg(long, default_value = "flat")]
    pub prior: Prior,
    #[arg(long, default_value = "exact")]
    pub sampler: SamplerKind,
    /// Posterior draws
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    /// Also write the raw draws to this CSV
    #[arg(long)]
    pub draws_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.90)]
    pub level: f64,
    #[arg(long, default_value = "flat")]
    pub prior: Prior,
    /// Bootstrap resamples per coverage estimate
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    /// Initial gain of the stochastic approximation
    #[arg(long, default_value_t = 10.0)]
    pub kappa0: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
    /// Credible intervals on resamples: `exact` or `draws:M`
    #[arg(long, default_value = "draws:4000")]
    pub interval: IntervalArg,
}

/// Shared options of the Monte Carlo subcommands.
#[derive(Args, Debug)]
pub struct McArgs {
    /// Built-in scenario name or path to a TOML scenario file
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// `auto` to calibrate, or the constant c in omega = c * n^(-2/5)
    #[arg(long, default_value = "auto")]
    pub omega: OmegaArg,
    /// With `--omega auto`: `per-dataset`, or `pilot[:K]` to calibrate on K
    /// pilot datasets and use the median scale throughout
    #[arg(long, default_value = "per-dataset")]
    pub omega_policy: PolicyArg,
    #[arg(long, default_value_t = 0.90)]
    pub level: f64,
    #[arg(long, default_value = "flat")]
    pub prior: Prior,
}

impl McArgs {
    pub fn policy(&self) -> OmegaPolicy {
        match self.omega {
            OmegaArg::Value(c) => OmegaPolicy::Fixed { c },
            OmegaArg::Auto => match self.omega_policy {
                PolicyArg::PerDataset => OmegaPolicy::Calibrate,
                PolicyArg::Pilot(k) => OmegaPolicy::CalibratePilot { datasets: k },
            },
        }
    }
}

#[derive(Args, Debug)]
pub struct StudyArgs {
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    /// Comma-separated subset of m-estimator,posterior-mean,bootstrap-ci,gibbs-ci
    #[arg(long, value_delimiter = ',', default_value = "m-estimator,posterior-mean,bootstrap-ci,gibbs-ci")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    /// Posterior draws per replication; 0 uses exact posterior quantiles
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    /// Output prefix: writes `<out>.table1.csv` and `<out>.table2.csv`
    /// [default: both tables to stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RateCheckArgs {
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long, value_delimiter = ',', default_value = "250,1000,4000,16000")]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 300)]
    pub reps: usize,
    /// m-estimator or posterior-mean
    #[arg(long, default_value = "m-estimator")]
    pub estimator: Method,
    /// Output CSV [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// logit-demo-a, logit-demo-b, or any scenario
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// With more than one replication, report interval coverage instead of draws
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.90)]
    pub level: f64,
    /// Draws from each posterior
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    /// Output CSV [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Output file carrying a `# argv:` header line
    pub from: PathBuf,
    /// Where to write the re-run output [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OmegaArg {
    Auto,
    Value(f64),
}

impl FromStr for OmegaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(OmegaArg::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(OmegaArg::Value(v)),
            _ => Err(format!("expected `auto` or a finite number >= 0, got `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicyArg {
    PerDataset,
    Pilot(usize),
}

impl FromStr for PolicyArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "per-dataset" => Ok(PolicyArg::PerDataset),
            None if s == "pilot" => Ok(PolicyArg::Pilot(DEFAULT_PILOT_DATASETS)),
            Some(("pilot", k)) => match k.parse::<usize>() {
                Ok(k) if k > 0 => Ok(PolicyArg::Pilot(k)),
                _ => Err(format!("pilot dataset count must be a positive integer, got `{k}`")),
            },
            _ => Err(format!("expected `per-dataset` or `pilot[:K]`, got `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalArg(pub IntervalMethod);

impl FromStr for IntervalArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "exact" {
            return Ok(IntervalArg(IntervalMethod::Exact));
        }
        match s.strip_prefix("draws:").map(str::parse::<usize>) {
            Some(Ok(m)) if m > 0 => Ok(IntervalArg(IntervalMethod::Draws(m))),
            _ => Err(format!("expected `exact` or `draws:M`, got `{s}`")),
        }
    }
}
