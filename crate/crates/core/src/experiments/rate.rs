use crate::error::{Error, Result};
use crate::numerics::ols;
use crate::scenarios::Scenario;

use super::{run_study, Method, OmegaPolicy, StudyConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub scenario: String,
    pub estimator: Method,
    pub reps: usize,
    pub seed: u64,
    pub n_grid: Vec<usize>,
    pub rmse: Vec<f64>,
    /// Negated slope of `log rmse` against `log n`.
    pub slope: f64,
    /// `(1 + 2 gamma_1)^(-1)` when the scenario's smoothness is known.
    pub theory: Option<f64>,
}

impl RateReport {
    pub const CSV_HEADER: &'static str = "scenario,n,rmse";

    pub fn csv_rows(&self) -> Vec<String> {
        self.n_grid
            .iter()
            .zip(&self.rmse)
            .map(|(n, r)| format!("{},{n},{r}", self.scenario))
            .collect()
    }

    /// One-line JSON summary.
    pub fn summary_json(&self) -> String {
        let theory = self.theory.map_or("null".to_string(), |t| t.to_string());
        format!(
            "{{\"scenario\": \"{}\", \"estimator\": \"{}\", \"reps\": {}, \"r_hat\": {}, \"r_theory\": {}}}",
            self.scenario, self.estimator, self.reps, self.slope, theory
        )
    }
}

/// Theoretical rate exponent for the built-in smoothness classes.
pub(crate) fn theoretical_rate(scenario: &Scenario) -> Option<f64> {
    use crate::scenarios::Eta;
    let gamma1 = match scenario.eta() {
        Eta::CdfLink => 1.0,
        Eta::Cusp { alpha1, .. } => *alpha1,
        Eta::Jump { .. } => 0.0,
        Eta::Table { .. } => return None,
    };
    Some(1.0 / (1.0 + 2.0 * gamma1))
}

/// Root-mean-square error of the estimator over `reps` datasets at each
/// `n`, and the fitted log-log decay rate.
pub fn run_rate_check(
    scenario: &Scenario,
    n_grid: &[usize],
    reps: usize,
    estimator: Method,
    omega: OmegaPolicy,
    seed: u64,
) -> Result<RateReport> {
    if estimator.is_interval() {
        return Err(Error::validation("estimator", "expected m-estimator or posterior-mean"));
    }
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.len() < 3 {
        return Err(Error::validation("n_grid", "need at least 3 distinct sample sizes"));
    }
    if grid[grid.len() - 1] < 16 * grid[0] {
        return Err(Error::validation("n_grid", "sample sizes must span at least a factor of 16"));
    }
    let theta_star = scenario.true_mcid()?;
    let mut rmse = Vec::with_capacity(grid.len());
    for &n in &grid {
        let mut cfg = StudyConfig::new(n, reps, seed);
        cfg.methods = vec![estimator];
        cfg.omega = omega;
        let report = run_study(scenario, &cfg)?;
        let errors: Vec<f64> = report
            .replications
            .iter()
            .filter_map(|r| match estimator {
                Method::MEstimator => r.m_estimate,
                _ => r.posterior.map(|p| p.mean),
            })
            .map(|e| e - theta_star)
            .collect();
        let mse = errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64;
        if mse <= 0.0 {
            return Err(Error::Numerical(format!(
                "zero RMSE at n = {n}; the rate cannot be fitted"
            )));
        }
        rmse.push(mse.sqrt());
    }
    let log_n: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let log_r: Vec<f64> = rmse.iter().map(|r| r.ln()).collect();
    let (_, slope) = ols(&log_n, &log_r);
    Ok(RateReport {
        scenario: scenario.name().to_string(),
        estimator,
        reps,
        seed,
        n_grid: grid,
        rmse,
        slope: -slope,
        theory: theoretical_rate(scenario),
    })
}
