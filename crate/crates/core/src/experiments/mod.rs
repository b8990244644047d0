//! Monte Carlo harness: bias/SD and coverage/length studies, empirical
//! convergence rates, and the misspecified logistic-model comparison.

mod logistic;
mod rate;
mod study;

use std::fmt;
use std::str::FromStr;

use crate::calibration::{calibrate_omega, reference_omega, CalibrationConfig, IntervalMethod};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gibbs::Prior;

pub use logistic::{
    fit_logistic, run_logistic_comparison, run_logistic_coverage, LogisticComparison, LogisticConfig, LogisticCoverage,
    LogisticFit,
};
pub use rate::{run_rate_check, RateReport};
pub use study::{
    informative_prior_demo, run_study, ExperimentReport, MethodRow, PriorComparison, ReplicationRecord, StudyConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    MEstimator,
    PosteriorMean,
    BootstrapCi,
    GibbsCi,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::MEstimator, Method::PosteriorMean, Method::BootstrapCi, Method::GibbsCi];

    pub fn is_interval(self) -> bool {
        matches!(self, Method::BootstrapCi | Method::GibbsCi)
    }

    fn needs_posterior(self) -> bool {
        matches!(self, Method::PosteriorMean | Method::GibbsCi)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::MEstimator => "m-estimator",
            Method::PosteriorMean => "posterior-mean",
            Method::BootstrapCi => "bootstrap-ci",
            Method::GibbsCi => "gibbs-ci",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| {
                Error::validation(
                    "method",
                    format!("unknown method `{s}`; expected m-estimator|posterior-mean|bootstrap-ci|gibbs-ci"),
                )
            })
    }
}

/// Pilot datasets used by [`OmegaPolicy::CalibratePilot`] unless stated otherwise.
pub const DEFAULT_PILOT_DATASETS: usize = 200;

/// How the loss scale is chosen for each dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OmegaPolicy {
    /// Run the calibration recursion on every dataset.
    Calibrate,
    /// `omega = c * n^(-2/5)`.
    Fixed { c: f64 },
    /// Calibrate on `datasets` independent pilot datasets from the same
    /// scenario, then use the median `omega / n^(-2/5)` for every replication.
    CalibratePilot { datasets: usize },
}

impl fmt::Display for OmegaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmegaPolicy::Calibrate => write!(f, "calibrate-per-dataset"),
            OmegaPolicy::Fixed { c } => write!(f, "fixed({c}*n^-0.4)"),
            OmegaPolicy::CalibratePilot { datasets } => write!(f, "calibrate-pilot({datasets})"),
        }
    }
}

/// Calibration settings used by the Monte Carlo harness: exact quantiles on
/// each resample.
pub fn study_calibration(level: f64, prior: Prior) -> CalibrationConfig {
    CalibrationConfig {
        level,
        prior,
        interval: IntervalMethod::Exact,
        ..Default::default()
    }
}

/// Resolves the loss scale for one dataset: `(omega, converged)`.
pub(crate) fn resolve_omega(
    policy: OmegaPolicy,
    data: &Dataset,
    calibration: &CalibrationConfig,
    seed: u64,
) -> Result<(f64, bool)> {
    match policy {
        OmegaPolicy::Fixed { c } => {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::validation("omega", format!("scale constant must be > 0, got {c}")));
            }
            Ok((c * reference_omega(data.len()), true))
        }
        OmegaPolicy::Calibrate => {
            let r = calibrate_omega(data, calibration, seed)?;
            Ok((r.omega, r.converged))
        }
        OmegaPolicy::CalibratePilot { .. } => Err(Error::Invariant(
            "pilot calibration must be resolved to a fixed scale before replications run".into(),
        )),
    }
}

/// Runs `f` over `0..reps` and returns results in index order.
pub(crate) fn map_reps<T, F>(reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..reps).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..reps).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("median".parse::<Method>().is_err());
    }
}
