//! Bayesian logistic regression fitted to MCID data, whose median lethal
//! dose `-b0/b1` is compared with the Gibbs posterior for the MCID.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::calibration::calibrate_omega;
use crate::data::{derive_seed, replication_seed, rng_from_seed, Dataset, Label};
use crate::error::{Error, Result};
use crate::gibbs::{sample_exact, summarize_values, ExactPosterior, PosteriorSummary, Prior};
use crate::numerics::quantile_sorted;
use crate::scenarios::Scenario;

use super::{map_reps, study_calibration};

/// Per replication: (logistic covers, gibbs covers, |logistic - theta*|, |gibbs - theta*|).
type Row = (bool, bool, f64, f64);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogisticConfig {
    /// Standard deviation of the independent normal priors on `(b0, b1)`.
    pub prior_sd: f64,
    pub draws: usize,
    pub burn_in: usize,
    /// Gibbs posterior draws.
    pub gibbs_draws: usize,
    pub level: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            prior_sd: 10.0,
            draws: 10_000,
            burn_in: 2_000,
            gibbs_draws: 10_000,
            level: 0.90,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticFit {
    pub beta0: Vec<f64>,
    pub beta1: Vec<f64>,
    pub acceptance_rate: f64,
}

impl LogisticFit {
    /// Draws of the median lethal dose `-b0 / b1`.
    pub fn theta_draws(&self) -> Vec<f64> {
        self.beta0.iter().zip(&self.beta1).map(|(b0, b1)| -b0 / b1).collect()
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Model {
    xs: Vec<f64>,
    ys: Vec<f64>,
    prior_var: f64,
}

impl Model {
    fn new(data: &Dataset, prior_sd: f64) -> Self {
        Self {
            xs: data.samples().iter().map(|s| s.x).collect(),
            ys: data
                .samples()
                .iter()
                .map(|s| if s.y == Label::Pos { 1.0 } else { 0.0 })
                .collect(),
            prior_var: prior_sd * prior_sd,
        }
    }

    fn log_post(&self, b: [f64; 2]) -> f64 {
        let ll: f64 = self
            .xs
            .iter()
            .zip(&self.ys)
            .map(|(x, y)| {
                let z = b[0] + b[1] * x;
                y * z - softplus(z)
            })
            .sum();
        ll - 0.5 * (b[0] * b[0] + b[1] * b[1]) / self.prior_var
    }

    /// Posterior mode by Newton's method; returns the mode and the inverse
    /// negative Hessian there.
    fn mode(&self) -> Result<([f64; 2], [[f64; 2]; 2])> {
        let mut b = [0.0, 0.0];
        for _ in 0..100 {
            let (mut g0, mut g1) = (-b[0] / self.prior_var, -b[1] / self.prior_var);
            let (mut h00, mut h01, mut h11) = (1.0 / self.prior_var, 0.0, 1.0 / self.prior_var);
            for (x, y) in self.xs.iter().zip(&self.ys) {
                let p = sigmoid(b[0] + b[1] * x);
                g0 += y - p;
                g1 += (y - p) * x;
                let w = p * (1.0 - p);
                h00 += w;
                h01 += w * x;
                h11 += w * x * x;
            }
            let det = h00 * h11 - h01 * h01;
            if !(det > 0.0) {
                return Err(Error::Numerical("logistic Hessian is singular".into()));
            }
            let cov = [[h11 / det, -h01 / det], [-h01 / det, h00 / det]];
            let step = [cov[0][0] * g0 + cov[0][1] * g1, cov[1][0] * g0 + cov[1][1] * g1];
            b = [b[0] + step[0], b[1] + step[1]];
            if step[0].abs() + step[1].abs() < 1e-10 {
                return Ok((b, cov));
            }
        }
        Err(Error::Numerical("Newton iteration for the logistic mode did not converge".into()))
    }
}

/// Random-walk Metropolis on `(b0, b1)` with a Gaussian proposal shaped by
/// the Laplace covariance at the mode; the scale is tuned during burn-in.
pub fn fit_logistic(data: &Dataset, cfg: &LogisticConfig, seed: u64) -> Result<LogisticFit> {
    if !(cfg.prior_sd > 0.0) {
        return Err(Error::validation("prior_sd", "must be > 0"));
    }
    if cfg.draws == 0 {
        return Err(Error::validation("draws", "need at least one draw"));
    }
    let model = Model::new(data, cfg.prior_sd);
    let (mode, cov) = model.mode()?;
    // Cholesky factor of the proposal covariance.
    let l00 = cov[0][0].sqrt();
    let l10 = cov[1][0] / l00;
    let l11 = (cov[1][1] - l10 * l10).max(0.0).sqrt();
    let mut scale = 2.38 / 2f64.sqrt();
    let mut rng = rng_from_seed(seed);
    let mut b = mode;
    let mut current = model.log_post(b);
    let step = |b: &mut [f64; 2], current: &mut f64, scale: f64, rng: &mut rand_chacha::ChaCha8Rng| -> bool {
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        let prop = [b[0] + scale * l00 * z0, b[1] + scale * (l10 * z0 + l11 * z1)];
        let lp = model.log_post(prop);
        if lp >= *current || rng.random::<f64>().ln() < lp - *current {
            *b = prop;
            *current = lp;
            true
        } else {
            false
        }
    };
    let batch = 100;
    let mut accepted = 0;
    for i in 0..cfg.burn_in {
        if step(&mut b, &mut current, scale, &mut rng) {
            accepted += 1;
        }
        if (i + 1) % batch == 0 {
            let rate = accepted as f64 / batch as f64;
            scale *= ((rate - 0.3) * 2.0).exp();
            accepted = 0;
        }
    }
    let (mut beta0, mut beta1) = (Vec::with_capacity(cfg.draws), Vec::with_capacity(cfg.draws));
    let mut accepted = 0;
    for _ in 0..cfg.draws {
        if step(&mut b, &mut current, scale, &mut rng) {
            accepted += 1;
        }
        beta0.push(b[0]);
        beta1.push(b[1]);
    }
    let acceptance_rate = accepted as f64 / cfg.draws as f64;
    if !(0.05..=0.8).contains(&acceptance_rate) {
        return Err(Error::Mixing(format!(
            "logistic chain acceptance {acceptance_rate:.3} outside [0.05, 0.8] after adaptation (scale {scale:.3})"
        )));
    }
    Ok(LogisticFit {
        beta0,
        beta1,
        acceptance_rate,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticComparison {
    pub scenario: String,
    pub n: usize,
    pub theta_star: f64,
    pub logistic: LogisticFit,
    pub logistic_theta: Vec<f64>,
    pub gibbs_theta: Vec<f64>,
    pub omega: f64,
}

impl LogisticComparison {
    pub fn logistic_summary(&self, level: f64) -> Result<PosteriorSummary> {
        summarize_values(&self.logistic_theta, level)
    }

    pub fn gibbs_summary(&self, level: f64) -> Result<PosteriorSummary> {
        summarize_values(&self.gibbs_theta, level)
    }

    pub fn logistic_median(&self) -> f64 {
        median(&self.logistic_theta)
    }

    pub fn gibbs_median(&self) -> f64 {
        median(&self.gibbs_theta)
    }

    /// Two-column CSV of paired draws for plotting.
    pub fn draws_csv(&self) -> String {
        let mut out = String::from("logistic_theta,gibbs_theta\n");
        for (a, b) in self.logistic_theta.iter().zip(&self.gibbs_theta) {
            out.push_str(&format!("{a},{b}\n"));
        }
        out
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, 0.5)
}

fn compare_on(scenario: &Scenario, data: &Dataset, theta_star: f64, cfg: &LogisticConfig, seed: u64) -> Result<LogisticComparison> {
    let logistic = fit_logistic(data, cfg, derive_seed(seed, 1))?;
    let calibration = calibrate_omega(data, &study_calibration(cfg.level, Prior::Flat), derive_seed(seed, 2))?;
    let post = ExactPosterior::new(data, calibration.omega, &Prior::Flat)?;
    let gibbs = sample_exact(&post, cfg.gibbs_draws, derive_seed(seed, 3))?;
    Ok(LogisticComparison {
        scenario: scenario.name().to_string(),
        n: data.len(),
        theta_star,
        logistic_theta: logistic.theta_draws(),
        logistic,
        gibbs_theta: gibbs.draws,
        omega: calibration.omega,
    })
}

/// One simulated dataset, both posteriors.
pub fn run_logistic_comparison(scenario: &Scenario, n: usize, cfg: &LogisticConfig, seed: u64) -> Result<LogisticComparison> {
    if n < 50 {
        return Err(Error::validation("n", format!("need n >= 50, got {n}")));
    }
    let theta_star = scenario.true_mcid()?;
    let data = scenario.generate(n, seed)?;
    compare_on(scenario, &data, theta_star, cfg, seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticCoverage {
    pub scenario: String,
    pub n: usize,
    pub reps: usize,
    pub theta_star: f64,
    pub logistic_coverage: f64,
    pub gibbs_coverage: f64,
    /// Median over replications of `|posterior median - theta*|`.
    pub logistic_median_error: f64,
    pub gibbs_median_error: f64,
}

impl LogisticCoverage {
    pub const CSV_HEADER: &'static str = "scenario,n,method,coverage,median_abs_error";

    pub fn csv_rows(&self) -> Vec<String> {
        vec![
            format!(
                "{},{},logistic,{},{}",
                self.scenario, self.n, self.logistic_coverage, self.logistic_median_error
            ),
            format!("{},{},gibbs,{},{}", self.scenario, self.n, self.gibbs_coverage, self.gibbs_median_error),
        ]
    }
}

/// Coverage of `theta*` by both interval estimates over `reps` datasets.
pub fn run_logistic_coverage(
    scenario: &Scenario,
    n: usize,
    reps: usize,
    cfg: &LogisticConfig,
    seed: u64,
) -> Result<LogisticCoverage> {
    if n < 50 {
        return Err(Error::validation("n", format!("need n >= 50, got {n}")));
    }
    if reps == 0 {
        return Err(Error::validation("reps", "must be >= 1"));
    }
    let theta_star = scenario.true_mcid()?;
    let rows = map_reps(reps, |rep| {
        let s = replication_seed(seed, scenario.name(), n, rep);
        let run = || -> Result<(bool, bool, f64, f64)> {
            let data = scenario.generate(n, s)?;
            let c = compare_on(scenario, &data, theta_star, cfg, s)?;
            let l = c.logistic_summary(cfg.level)?;
            let g = c.gibbs_summary(cfg.level)?;
            Ok((
                l.covers(theta_star),
                g.covers(theta_star),
                (c.logistic_median() - theta_star).abs(),
                (c.gibbs_median() - theta_star).abs(),
            ))
        };
        run().map_err(|e| Error::Replication {
            rep,
            seed: s,
            source: Box::new(e),
        })
    })?;
    let frac = |f: &dyn Fn(&Row) -> bool| rows.iter().filter(|r| f(r)).count() as f64 / reps as f64;
    let le: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let ge: Vec<f64> = rows.iter().map(|r| r.3).collect();
    Ok(LogisticCoverage {
        scenario: scenario.name().to_string(),
        n,
        reps,
        theta_star,
        logistic_coverage: frac(&|r| r.0),
        gibbs_coverage: frac(&|r| r.1),
        logistic_median_error: median(&le),
        gibbs_median_error: median(&ge),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_matches_gradient_zero() {
        let data = Scenario::builtin("logit-demo-a").unwrap().generate(300, 5).unwrap();
        let model = Model::new(&data, 10.0);
        let (b, _) = model.mode().unwrap();
        let h = 1e-5;
        for i in 0..2 {
            let mut up = b;
            let mut dn = b;
            up[i] += h;
            dn[i] -= h;
            let g = (model.log_post(up) - model.log_post(dn)) / (2.0 * h);
            assert!(g.abs() < 1e-4, "gradient {g}");
        }
    }

    #[test]
    fn chain_targets_the_laplace_region() {
        let data = Scenario::builtin("logit-demo-a").unwrap().generate(500, 9).unwrap();
        let fit = fit_logistic(&data, &LogisticConfig::default(), 3).unwrap();
        assert!((0.05..=0.8).contains(&fit.acceptance_rate));
        let model = Model::new(&data, 10.0);
        let (mode, cov) = model.mode().unwrap();
        let m0 = fit.beta0.iter().sum::<f64>() / fit.beta0.len() as f64;
        let m1 = fit.beta1.iter().sum::<f64>() / fit.beta1.len() as f64;
        assert!((m0 - mode[0]).abs() < 0.5 * cov[0][0].sqrt());
        assert!((m1 - mode[1]).abs() < 0.5 * cov[1][1].sqrt());
    }

    #[test]
    fn demo_a_slopes_positive_and_medians_close() {
        let sc = Scenario::builtin("logit-demo-a").unwrap();
        let c = run_logistic_comparison(&sc, 500, &LogisticConfig::default(), 21).unwrap();
        assert!(c.logistic.beta1.iter().all(|&b| b > 0.0));
        assert!((c.logistic_median() - c.theta_star).abs() < 0.15, "{}", c.logistic_median());
        assert!((c.gibbs_median() - c.theta_star).abs() < 0.15, "{}", c.gibbs_median());
        let csv = c.draws_csv();
        assert!(csv.starts_with("logistic_theta,gibbs_theta\n"));
        assert_eq!(csv.lines().count(), 10_001);
    }

    #[test]
    fn demo_b_logistic_is_biased() {
        let sc = Scenario::builtin("logit-demo-b").unwrap();
        let c = run_logistic_comparison(&sc, 500, &LogisticConfig::default(), 4).unwrap();
        assert!((c.logistic_median() - c.theta_star).abs() > (c.gibbs_median() - c.theta_star).abs());
    }

    #[test]
    fn small_n_rejected() {
        let sc = Scenario::builtin("logit-demo-a").unwrap();
        assert!(run_logistic_comparison(&sc, 20, &LogisticConfig::default(), 1).unwrap_err().is_validation());
    }
}
