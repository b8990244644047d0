//! Browser demo: empirical risk curves, Gibbs posterior densities and loss
//! scale calibration on simulated data. Every operation returns JSON.
//!
//! The plain functions are usable natively; the `wasm_*` wrappers are the
//! JavaScript entry points.

use gibbs_mcid::calibration::{calibrate_omega, reference_omega, CalibrationConfig};
use gibbs_mcid::risk::{empirical_risk, population_risk};
use gibbs_mcid::{m_estimate, Dataset, Error, ExactPosterior, Prior, Result, Scenario};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_N: usize = 20_000;
const MAX_POINTS: usize = 2_000;

fn setup(scenario: &str, n: usize, seed: u64) -> Result<(Scenario, Dataset)> {
    if !(2..=MAX_N).contains(&n) {
        return Err(Error::Validation {
            field: "n".into(),
            message: format!("must lie in [2, {MAX_N}], got {n}"),
        });
    }
    let s = Scenario::builtin(scenario)?;
    let data = s.generate(n, seed)?;
    Ok((s, data))
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Validation {
            field: "level".into(),
            message: format!("must lie in (0, 1), got {level}"),
        })
    }
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let m = points.clamp(2, MAX_POINTS);
    (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect()
}

fn prior_from(prior_mean: f64, prior_sd: f64) -> Result<Prior> {
    if prior_sd > 0.0 {
        Prior::normal(prior_mean, prior_sd)
    } else {
        Ok(Prior::Flat)
    }
}

#[derive(Serialize)]
pub struct RiskCurve {
    pub thetas: Vec<f64>,
    pub empirical: Vec<f64>,
    pub population: Vec<f64>,
    pub theta_hat: f64,
    pub theta_star: f64,
    pub min_risk: f64,
    pub data_range: (f64, f64),
}

/// Empirical and population risk over the data range.
pub fn risk_curve(scenario: &str, n: usize, seed: u64, points: usize) -> Result<RiskCurve> {
    let (s, data) = setup(scenario, n, seed)?;
    let (lo, hi) = data.range();
    let thetas = grid(lo, hi, points);
    let empirical = thetas.iter().map(|&t| empirical_risk(t, &data)).collect();
    let population = thetas
        .iter()
        .map(|&t| population_risk(&s, t))
        .collect::<Result<Vec<_>>>()?;
    let est = m_estimate(&data);
    Ok(RiskCurve {
        thetas,
        empirical,
        population,
        theta_hat: est.theta_hat,
        theta_star: s.true_mcid()?,
        min_risk: est.risk_at_min,
        data_range: (lo, hi),
    })
}

#[derive(Serialize)]
pub struct PosteriorView {
    pub thetas: Vec<f64>,
    pub density: Vec<f64>,
    pub mean: f64,
    pub ci: (f64, f64),
    pub level: f64,
    pub omega: f64,
    pub omega_ratio: f64,
    pub calibrated: bool,
    pub theta_hat: f64,
    pub theta_star: f64,
    pub prior: String,
}

/// Gibbs posterior density and credible interval. A negative or non-finite
/// `omega` calibrates it; `prior_sd <= 0` means a flat prior.
#[allow(clippy::too_many_arguments)]
pub fn gibbs_posterior(
    scenario: &str,
    n: usize,
    seed: u64,
    omega: f64,
    prior_mean: f64,
    prior_sd: f64,
    level: f64,
    points: usize,
) -> Result<PosteriorView> {
    check_level(level)?;
    let (s, data) = setup(scenario, n, seed)?;
    let prior = prior_from(prior_mean, prior_sd)?;
    let calibrated = !(omega.is_finite() && omega >= 0.0);
    let omega = if calibrated {
        let cfg = CalibrationConfig {
            level,
            prior,
            ..Default::default()
        };
        calibrate_omega(&data, &cfg, seed ^ 0x5eed)?.omega
    } else {
        omega
    };
    let post = ExactPosterior::new(&data, omega, &prior)?;
    let (lo, hi) = data.range();
    let thetas = grid(lo, hi, points);
    let density = thetas.iter().map(|&t| post.density(t)).collect();
    let summary = post.summary(level);
    Ok(PosteriorView {
        thetas,
        density,
        mean: summary.mean,
        ci: (summary.ci_lo, summary.ci_hi),
        level,
        omega,
        omega_ratio: omega / reference_omega(data.len()),
        calibrated,
        theta_hat: m_estimate(&data).theta_hat,
        theta_star: s.true_mcid()?,
        prior: prior.to_string(),
    })
}

#[derive(Serialize)]
pub struct CalibrationView {
    pub iterations: Vec<usize>,
    pub omegas: Vec<f64>,
    pub coverages: Vec<f64>,
    pub omega: f64,
    pub omega_ratio: f64,
    pub target: f64,
    pub converged: bool,
}

/// Trace of the calibration recursion.
pub fn calibrate(scenario: &str, n: usize, seed: u64, level: f64, bootstrap: usize) -> Result<CalibrationView> {
    let (_, data) = setup(scenario, n, seed)?;
    let cfg = CalibrationConfig {
        level,
        bootstrap,
        ..Default::default()
    };
    let r = calibrate_omega(&data, &cfg, seed ^ 0x5eed)?;
    Ok(CalibrationView {
        iterations: r.trace.iter().map(|t| t.iter).collect(),
        omegas: r.trace.iter().map(|t| t.omega).collect(),
        coverages: r.trace.iter().map(|t| t.coverage).collect(),
        omega: r.omega,
        omega_ratio: r.ratio,
        target: r.target,
        converged: r.converged,
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsValue> {
    match r {
        Ok(v) => serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string())),
        Err(e) => Err(JsValue::from_str(&format!("{}: {e}", e.kind()))),
    }
}

#[wasm_bindgen(js_name = riskCurve)]
pub fn wasm_risk_curve(scenario: &str, n: usize, seed: u32, points: usize) -> std::result::Result<String, JsValue> {
    to_js(risk_curve(scenario, n, u64::from(seed), points))
}

#[wasm_bindgen(js_name = gibbsPosterior)]
#[allow(clippy::too_many_arguments)]
pub fn wasm_gibbs_posterior(
    scenario: &str,
    n: usize,
    seed: u32,
    omega: f64,
    prior_mean: f64,
    prior_sd: f64,
    level: f64,
    points: usize,
) -> std::result::Result<String, JsValue> {
    to_js(gibbs_posterior(
        scenario,
        n,
        u64::from(seed),
        omega,
        prior_mean,
        prior_sd,
        level,
        points,
    ))
}

#[wasm_bindgen(js_name = calibrate)]
pub fn wasm_calibrate(
    scenario: &str,
    n: usize,
    seed: u32,
    level: f64,
    bootstrap: usize,
) -> std::result::Result<String, JsValue> {
    to_js(calibrate(scenario, n, u64::from(seed), level, bootstrap))
}

#[wasm_bindgen(js_name = scenarios)]
pub fn wasm_scenarios() -> String {
    serde_json::to_string(&gibbs_mcid::scenarios::BUILTIN_NAMES).expect("names serialize")
}
