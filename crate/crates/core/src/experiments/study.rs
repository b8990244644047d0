use crate::calibration::{reference_omega, CalibrationConfig};
use crate::data::{derive_seed, replication_seed, OrderedSample};
use crate::error::{Error, Result};
use crate::gibbs::{sample_exact, summarize, ExactPosterior, PosteriorSummary, Prior};
use crate::mestimator::{bootstrap_ci_ordered, m_estimate_ordered};
use crate::numerics::{mean, quantile_sorted, std_dev};
use crate::scenarios::Scenario;

use super::{map_reps, resolve_omega, study_calibration, Method, OmegaPolicy};

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub n: usize,
    pub reps: usize,
    pub methods: Vec<Method>,
    pub omega: OmegaPolicy,
    pub level: f64,
    pub prior: Prior,
    /// Resamples for the percentile bootstrap interval.
    pub bootstrap: usize,
    /// Exact-sampler draws for the posterior summaries; `None` uses exact
    /// quantiles and mean.
    pub posterior_draws: Option<usize>,
    /// Calibration settings; `level` and `prior` are taken from this config.
    pub calibration: CalibrationConfig,
    pub seed: u64,
}

impl StudyConfig {
    pub fn new(n: usize, reps: usize, seed: u64) -> Self {
        Self {
            n,
            reps,
            methods: Method::ALL.to_vec(),
            omega: OmegaPolicy::Calibrate,
            level: 0.90,
            prior: Prior::Flat,
            bootstrap: 1000,
            posterior_draws: Some(10_000),
            calibration: study_calibration(0.90, Prior::Flat),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("n", "must be >= 1"));
        }
        if self.reps == 0 {
            return Err(Error::validation("reps", "must be >= 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::validation("methods", "at least one method is required"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::validation("level", format!("must lie in (0, 1), got {}", self.level)));
        }
        if self.bootstrap == 0 {
            return Err(Error::validation("B", "need at least one bootstrap replicate"));
        }
        self.prior.validate()
    }

    fn uses(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }
}

/// Everything computed on one simulated dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub seed: u64,
    pub m_estimate: Option<f64>,
    pub posterior: Option<PosteriorSummary>,
    pub bootstrap: Option<(f64, f64)>,
    pub omega: Option<f64>,
    pub calibration_converged: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodRow {
    pub method: Method,
    /// `|mean(estimate - theta*)|` (point methods).
    pub abs_bias: Option<f64>,
    pub sd: Option<f64>,
    /// Interval methods.
    pub coverage: Option<f64>,
    pub coverage_se: Option<f64>,
    pub mean_length: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub scenario: String,
    pub n: usize,
    pub reps: usize,
    pub theta_star: f64,
    pub seed: u64,
    pub omega_policy: OmegaPolicy,
    pub level: f64,
    pub prior: Prior,
    pub rows: Vec<MethodRow>,
    pub replications: Vec<ReplicationRecord>,
    /// Scale constant chosen by pilot calibration, when that policy is used.
    pub pilot_ratio: Option<f64>,
}

impl ExperimentReport {
    pub fn row(&self, method: Method) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// Per-replication loss scales, in replication order.
    pub fn omegas(&self) -> Vec<f64> {
        self.replications.iter().filter_map(|r| r.omega).collect()
    }

    /// Median of `omega / n^(-2/5)` over replications.
    pub fn median_omega_ratio(&self) -> Option<f64> {
        let mut r: Vec<f64> = self.omegas().iter().map(|w| w / reference_omega(self.n)).collect();
        if r.is_empty() {
            return None;
        }
        r.sort_by(f64::total_cmp);
        Some(quantile_sorted(&r, 0.5))
    }

    pub fn calibration_failures(&self) -> usize {
        self.replications
            .iter()
            .filter(|r| r.calibration_converged == Some(false))
            .count()
    }

    pub const TABLE1_HEADER: &'static str = "scenario,n,method,abs_bias,sd";
    pub const TABLE2_HEADER: &'static str = "scenario,n,method,coverage,mean_length,coverage_se";

    /// Rows of the bias/SD table (no header).
    pub fn table1_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| !r.method.is_interval())
            .map(|r| {
                format!(
                    "{},{},{},{},{}",
                    self.scenario,
                    self.n,
                    r.method,
                    r.abs_bias.unwrap_or(f64::NAN),
                    r.sd.unwrap_or(f64::NAN)
                )
            })
            .collect()
    }

    /// Rows of the coverage/length table (no header).
    pub fn table2_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| r.method.is_interval())
            .map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    self.scenario,
                    self.n,
                    r.method,
                    r.coverage.unwrap_or(f64::NAN),
                    r.mean_length.unwrap_or(f64::NAN),
                    r.coverage_se.unwrap_or(f64::NAN)
                )
            })
            .collect()
    }

    /// `key: value` provenance lines.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("scenario".into(), self.scenario.clone()),
            ("n".into(), self.n.to_string()),
            ("reps".into(), self.reps.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("theta_star".into(), self.theta_star.to_string()),
            ("omega_policy".into(), self.omega_policy.to_string()),
            ("prior".into(), self.prior.to_string()),
            ("level".into(), self.level.to_string()),
            ("abs_bias".into(), "absolute value of the mean signed error".into()),
        ];
        if let Some(c) = self.pilot_ratio {
            out.push(("pilot_omega_ratio".into(), c.to_string()));
        }
        if let Some(r) = self.median_omega_ratio() {
            out.push(("median_omega_ratio".into(), r.to_string()));
            out.push(("calibration_unconverged".into(), self.calibration_failures().to_string()));
        }
        out
    }
}

fn replicate(scenario: &Scenario, cfg: &StudyConfig, rep: usize) -> Result<ReplicationRecord> {
    let seed = replication_seed(cfg.seed, scenario.name(), cfg.n, rep);
    let data = scenario.generate(cfg.n, seed)?;
    let ordered = OrderedSample::new(&data);
    let m_estimate = (cfg.uses(Method::MEstimator)).then(|| m_estimate_ordered(&ordered).theta_hat);
    let bootstrap = if cfg.uses(Method::BootstrapCi) {
        let b = bootstrap_ci_ordered(&ordered, cfg.bootstrap, 1.0 - cfg.level, derive_seed(seed, 1))?;
        Some((b.lo, b.hi))
    } else {
        None
    };
    let (mut posterior, mut omega, mut converged) = (None, None, None);
    if cfg.methods.iter().any(|m| m.needs_posterior()) {
        let calibration = CalibrationConfig {
            level: cfg.level,
            prior: cfg.prior,
            ..cfg.calibration.clone()
        };
        let (w, ok) = resolve_omega(cfg.omega, &data, &calibration, derive_seed(seed, 2))?;
        let post = ExactPosterior::from_ordered(&ordered, w, &cfg.prior)?;
        posterior = Some(match cfg.posterior_draws {
            Some(m) => summarize(&sample_exact(&post, m, derive_seed(seed, 3))?, cfg.level)?,
            None => post.summary(cfg.level),
        });
        omega = Some(w);
        converged = Some(ok);
    }
    Ok(ReplicationRecord {
        rep,
        seed,
        m_estimate,
        posterior,
        bootstrap,
        omega,
        calibration_converged: converged,
    })
}

fn point_row(method: Method, estimates: &[f64], truth: f64) -> MethodRow {
    let errors: Vec<f64> = estimates.iter().map(|e| e - truth).collect();
    MethodRow {
        method,
        abs_bias: Some(mean(&errors).abs()),
        sd: Some(std_dev(estimates)),
        coverage: None,
        coverage_se: None,
        mean_length: None,
    }
}

fn interval_row(method: Method, intervals: &[(f64, f64)], truth: f64) -> MethodRow {
    let reps = intervals.len() as f64;
    let hits = intervals.iter().filter(|(lo, hi)| *lo <= truth && truth <= *hi).count() as f64;
    let p = hits / reps;
    let lengths: Vec<f64> = intervals.iter().map(|(lo, hi)| hi - lo).collect();
    MethodRow {
        method,
        abs_bias: None,
        sd: None,
        coverage: Some(p),
        coverage_se: Some((p * (1.0 - p) / reps).sqrt()),
        mean_length: Some(mean(&lengths)),
    }
}

/// Simulates `reps` datasets and evaluates every requested method on each.
/// Replication `i` uses the seed `replication_seed(seed, scenario, n, i)`, so
/// any single replication can be re-run on its own.
pub fn run_study(scenario: &Scenario, cfg: &StudyConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let theta_star = scenario.true_mcid()?;
    let pilot_ratio = match cfg.omega {
        OmegaPolicy::CalibratePilot { datasets } if cfg.methods.iter().any(|m| m.needs_posterior()) => {
            Some(pilot_scale(scenario, cfg, datasets)?)
        }
        _ => None,
    };
    let resolved = StudyConfig {
        omega: pilot_ratio.map_or(cfg.omega, |c| OmegaPolicy::Fixed { c }),
        ..cfg.clone()
    };
    let replications = map_reps(cfg.reps, |rep| {
        replicate(scenario, &resolved, rep).map_err(|e| Error::Replication {
            rep,
            seed: replication_seed(cfg.seed, scenario.name(), cfg.n, rep),
            source: Box::new(e),
        })
    })?;
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    let rows = methods
        .into_iter()
        .map(|m| match m {
            Method::MEstimator => {
                let v: Vec<f64> = replications.iter().filter_map(|r| r.m_estimate).collect();
                point_row(m, &v, theta_star)
            }
            Method::PosteriorMean => {
                let v: Vec<f64> = replications.iter().filter_map(|r| r.posterior.map(|p| p.mean)).collect();
                point_row(m, &v, theta_star)
            }
            Method::BootstrapCi => {
                let v: Vec<(f64, f64)> = replications.iter().filter_map(|r| r.bootstrap).collect();
                interval_row(m, &v, theta_star)
            }
            Method::GibbsCi => {
                let v: Vec<(f64, f64)> = replications
                    .iter()
                    .filter_map(|r| r.posterior.map(|p| (p.ci_lo, p.ci_hi)))
                    .collect();
                interval_row(m, &v, theta_star)
            }
        })
        .collect();
    Ok(ExperimentReport {
        scenario: scenario.name().to_string(),
        n: cfg.n,
        reps: cfg.reps,
        theta_star,
        seed: cfg.seed,
        omega_policy: cfg.omega,
        level: cfg.level,
        prior: cfg.prior,
        rows,
        replications,
        pilot_ratio,
    })
}

/// Median calibrated `omega / n^(-2/5)` over pilot datasets whose seeds are
/// disjoint from the study's.
fn pilot_scale(scenario: &Scenario, cfg: &StudyConfig, datasets: usize) -> Result<f64> {
    if datasets == 0 {
        return Err(Error::validation("pilot", "need at least one pilot dataset"));
    }
    let label = format!("{}#pilot", scenario.name());
    let calibration = CalibrationConfig {
        level: cfg.level,
        prior: cfg.prior,
        ..cfg.calibration.clone()
    };
    let mut ratios = map_reps(datasets, |k| {
        let seed = replication_seed(cfg.seed, &label, cfg.n, k);
        let data = scenario.generate(cfg.n, seed)?;
        let (w, _) = resolve_omega(OmegaPolicy::Calibrate, &data, &calibration, derive_seed(seed, 2))?;
        Ok(w / reference_omega(cfg.n))
    })?;
    ratios.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&ratios, 0.5))
}

/// Informative versus flat prior on the same simulated datasets.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorComparison {
    pub informative: ExperimentReport,
    pub flat: ExperimentReport,
}

impl PriorComparison {
    fn gibbs(r: &ExperimentReport) -> (f64, f64, f64) {
        let pm = r.row(Method::PosteriorMean).expect("posterior-mean row");
        let ci = r.row(Method::GibbsCi).expect("gibbs-ci row");
        (
            pm.abs_bias.unwrap_or(f64::NAN),
            ci.coverage.unwrap_or(f64::NAN),
            ci.mean_length.unwrap_or(f64::NAN),
        )
    }

    /// `(abs_bias, coverage, mean_length)` under the informative prior.
    pub fn informative_summary(&self) -> (f64, f64, f64) {
        Self::gibbs(&self.informative)
    }

    /// `(abs_bias, coverage, mean_length)` under the flat prior.
    pub fn flat_summary(&self) -> (f64, f64, f64) {
        Self::gibbs(&self.flat)
    }

    pub const CSV_HEADER: &'static str = "prior,abs_bias,coverage,mean_length";

    pub fn csv_rows(&self) -> Vec<String> {
        [(&self.informative, self.informative_summary()), (&self.flat, self.flat_summary())]
            .iter()
            .map(|(r, (b, c, l))| format!("{},{b},{c},{l}", r.prior))
            .collect()
    }
}

/// Example 1 at `n = 250` with a `normal(-0.5, 1)` prior, against the flat
/// prior on identical datasets. Each prior gets its own calibration.
pub fn informative_prior_demo(reps: usize, omega: OmegaPolicy, seed: u64) -> Result<PriorComparison> {
    let scenario = Scenario::builtin("example1")?;
    let mut cfg = StudyConfig::new(250, reps, seed);
    cfg.methods = vec![Method::PosteriorMean, Method::GibbsCi];
    cfg.omega = omega;
    cfg.prior = Prior::normal(-0.5, 1.0)?;
    let informative = run_study(&scenario, &cfg)?;
    cfg.prior = Prior::Flat;
    let flat = run_study(&scenario, &cfg)?;
    Ok(PriorComparison { informative, flat })
}
