//! Data-driven choice of the loss scale `omega`.
//!
//! Coverage of the Gibbs credible interval is estimated by the bootstrap,
//! with the original-data M-estimate standing in for the unknown MCID, and
//! `log omega` is moved by a Robbins-Monro recursion until that coverage
//! matches the nominal level.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::data::{derive_seed, rng_from_seed, Dataset, OrderedSample};
use crate::error::{Error, Result};
use crate::gibbs::{sample_exact, summarize, ExactPosterior, Prior};
use crate::mestimator::m_estimate_ordered;

/// Stream tag separating posterior-draw seeds from resampling seeds.
const DRAW_STREAM: u64 = 0x6472_6177;

/// How the credible interval is computed on each bootstrap resample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntervalMethod {
    /// Quantiles of `m` exact-sampler draws.
    Draws(usize),
    /// Exact quantiles of the piecewise posterior (the `m -> inf` limit).
    Exact,
}

impl Default for IntervalMethod {
    fn default() -> Self {
        IntervalMethod::Draws(4000)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationConfig {
    pub level: f64,
    pub prior: Prior,
    pub max_iter: usize,
    pub tol: f64,
    pub bootstrap: usize,
    pub interval: IntervalMethod,
    /// Gain `kappa_t = kappa0 / t^gain_exponent`.
    pub kappa0: f64,
    pub gain_exponent: f64,
    /// Starting value; `n^(-2/5)` when unset.
    pub omega0: Option<f64>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            level: 0.90,
            prior: Prior::Flat,
            max_iter: 100,
            tol: 0.02,
            bootstrap: 200,
            interval: IntervalMethod::default(),
            kappa0: 10.0,
            gain_exponent: 0.51,
            omega0: None,
        }
    }
}

impl CalibrationConfig {
    fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::validation("level", format!("must lie in (0, 1), got {}", self.level)));
        }
        if self.max_iter == 0 {
            return Err(Error::validation("max_iter", "must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::validation("tol", format!("must be > 0, got {}", self.tol)));
        }
        if self.bootstrap < 50 {
            return Err(Error::validation("B", format!("need at least 50 bootstrap resamples, got {}", self.bootstrap)));
        }
        if let IntervalMethod::Draws(m) = self.interval {
            if m < 100 {
                return Err(Error::validation("draws", format!("need at least 100 draws, got {m}")));
            }
        }
        if !(self.kappa0 > 0.0 && self.kappa0.is_finite()) {
            return Err(Error::validation("kappa0", format!("must be > 0, got {}", self.kappa0)));
        }
        if let Some(w) = self.omega0 {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::validation("omega0", format!("must be > 0, got {w}")));
            }
        }
        self.prior.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub omega: f64,
    pub coverage: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationResult {
    pub omega: f64,
    pub trace: Vec<TraceRow>,
    pub target: f64,
    pub converged: bool,
    /// `omega / n^(-2/5)`.
    pub ratio: f64,
}

impl CalibrationResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,omega,coverage\n");
        for r in &self.trace {
            out.push_str(&format!("{},{},{}\n", r.iter, r.omega, r.coverage));
        }
        out
    }
}

/// Reference scale `n^(-2/5)`.
pub fn reference_omega(n: usize) -> f64 {
    (n as f64).powf(-0.4)
}

/// Bootstrap resamples shared across evaluations of the coverage estimate.
struct Resamples {
    theta_hat: f64,
    sets: Vec<OrderedSample>,
    draw_seeds: Vec<u64>,
}

impl Resamples {
    fn new(data: &Dataset, b: usize, seed: u64) -> Self {
        let ordered = OrderedSample::new(data);
        let theta_hat = m_estimate_ordered(&ordered).theta_hat;
        let sets = (0..b)
            .map(|i| ordered.resample(&mut rng_from_seed(derive_seed(seed, i as u64))))
            .collect();
        let draw_seeds = (0..b).map(|i| derive_seed(seed ^ DRAW_STREAM, i as u64)).collect();
        Self {
            theta_hat,
            sets,
            draw_seeds,
        }
    }

    fn coverage(&self, omega: f64, prior: &Prior, level: f64, interval: IntervalMethod) -> Result<f64> {
        let covers = |i: usize| -> Result<bool> {
            let post = ExactPosterior::from_ordered(&self.sets[i], omega, prior)?;
            let (lo, hi) = match interval {
                IntervalMethod::Exact => post.credible_interval(level),
                IntervalMethod::Draws(m) => {
                    let s = summarize(&sample_exact(&post, m, self.draw_seeds[i])?, level)?;
                    (s.ci_lo, s.ci_hi)
                }
            };
            Ok(lo <= self.theta_hat && self.theta_hat <= hi)
        };
        #[cfg(feature = "parallel")]
        let hits: Vec<bool> = (0..self.sets.len()).into_par_iter().map(covers).collect::<Result<_>>()?;
        #[cfg(not(feature = "parallel"))]
        let hits: Vec<bool> = (0..self.sets.len()).map(covers).collect::<Result<_>>()?;
        Ok(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
    }
}

/// Fraction of `b` bootstrap-resample credible intervals that contain the
/// original-data M-estimate.
pub fn estimate_coverage(
    data: &Dataset,
    omega: f64,
    prior: &Prior,
    level: f64,
    b: usize,
    interval: IntervalMethod,
    seed: u64,
) -> Result<f64> {
    let cfg = CalibrationConfig {
        level,
        prior: *prior,
        bootstrap: b,
        interval,
        ..Default::default()
    };
    cfg.validate()?;
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::validation("omega", format!("must be finite and >= 0, got {omega}")));
    }
    Resamples::new(data, b, seed).coverage(omega, prior, level, interval)
}

/// Robbins-Monro on `log omega`: `log w <- log w + kappa_t (c(w) - level)`.
/// Stops when `|c - level| <= tol` on two consecutive iterations.
pub fn calibrate_omega(data: &Dataset, config: &CalibrationConfig, seed: u64) -> Result<CalibrationResult> {
    config.validate()?;
    let resamples = Resamples::new(data, config.bootstrap, seed);
    calibrate_with(
        |omega| resamples.coverage(omega, &config.prior, config.level, config.interval),
        data.len(),
        config,
    )
}

fn calibrate_with<F: FnMut(f64) -> Result<f64>>(
    mut coverage: F,
    n: usize,
    config: &CalibrationConfig,
) -> Result<CalibrationResult> {
    let reference = reference_omega(n);
    let mut log_omega = config.omega0.unwrap_or(reference).ln();
    let mut trace = Vec::new();
    let mut streak = 0;
    let mut converged = false;
    for t in 1..=config.max_iter {
        let omega = log_omega.exp();
        let c = coverage(omega)?;
        trace.push(TraceRow {
            iter: t,
            omega,
            coverage: c,
        });
        let miss = c - config.level;
        if miss.abs() <= config.tol {
            streak += 1;
            if streak == 2 {
                converged = true;
                break;
            }
        } else {
            streak = 0;
        }
        let gain = config.kappa0 / (t as f64).powf(config.gain_exponent);
        log_omega += gain * miss;
        if !log_omega.is_finite() {
            return Err(Error::Numerical(format!("log omega diverged at iteration {t}")));
        }
    }
    let omega = trace.last().expect("max_iter >= 1").omega;
    Ok(CalibrationResult {
        omega,
        trace,
        target: config.level,
        converged,
        ratio: omega / reference,
    })
}
