//! Gibbs posterior inference for the minimum clinically important
//! difference (MCID) under the 0-1 classification loss.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod gibbs;
pub mod mestimator;
pub mod numerics;
pub mod risk;
pub mod scenarios;

pub use data::{derive_seed, replication_seed, Dataset, Label, OrderedSample, Sample};
pub use error::{Error, Result};
pub use gibbs::{
    log_kernel, sample_exact, sample_metropolis, summarize, ExactPosterior, MetropolisConfig, PosteriorDraws,
    PosteriorSummary, Prior, SamplerKind, StepSize,
};
pub use mestimator::{bootstrap_ci, candidate_set, m_estimate, BootstrapInterval, EstimateResult};
pub use risk::{empirical_risk, loss, population_risk};
pub use scenarios::{Eta, Marginal, Scenario};
