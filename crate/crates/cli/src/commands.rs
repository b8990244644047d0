use std::path::Path;

use gibbs_mcid::calibration::{calibrate_omega, reference_omega, CalibrationConfig};
use gibbs_mcid::config::resolve_scenario;
use gibbs_mcid::experiments::{
    run_logistic_comparison, run_logistic_coverage, run_rate_check, run_study, study_calibration, ExperimentReport,
    LogisticConfig, LogisticCoverage, Method, RateReport, StudyConfig,
};
use gibbs_mcid::{
    bootstrap_ci, derive_seed, m_estimate, sample_exact, sample_metropolis, summarize, Dataset, Error, ExactPosterior,
    MetropolisConfig, PosteriorSummary, Result, SamplerKind, Scenario,
};

use crate::args::{
    CalibrateArgs, CompareArgs, DataArgs, EstimateArgs, GenerateArgs, OmegaArg, PosteriorArgs, RateCheckArgs,
    StudyArgs,
};
use crate::output::{emit, io_error, with_suffix, Header};

fn describe_scenario(h: &mut Header, s: &Scenario) {
    h.push("scenario", s.describe());
    if let Ok(t) = s.true_mcid() {
        h.push("theta_star", t);
    }
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

/// Reads `x,y` columns from a CSV file; `#` lines are comments.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_error(path, None, e.to_string()))?;
    let headers = reader.headers().map_err(|e| data_error(path, None, e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_error(path, Some(1), format!("missing column `{name}`")))
    };
    let (ix, iy) = (col("x")?, col("y")?);
    let mut pairs = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| data_error(path, None, e.to_string()))?;
        let line = rec.position().map(|p| p.line() as usize);
        let x: f64 = rec
            .get(ix)
            .and_then(|v| v.parse().ok())
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| data_error(path, line, "x must be a finite number".into()))?;
        let y: i8 = match rec.get(iy) {
            Some("1") | Some("+1") => 1,
            Some("-1") => -1,
            _ => return Err(data_error(path, line, "y must be -1 or 1".into())),
        };
        pairs.push((x, y));
    }
    Dataset::from_pairs(pairs)
}

fn data_error(path: &Path, line: Option<usize>, message: String) -> Error {
    Error::Config {
        line,
        key: None,
        message: format!("{}: {message}", path.display()),
    }
}

/// The dataset and a header describing where it came from.
fn load_data(args: &DataArgs, h: &mut Header) -> Result<Dataset> {
    let data = match (&args.data, &args.scenario, args.n) {
        (Some(path), _, _) => {
            if !path.is_file() {
                return Err(io_error(path, std::io::ErrorKind::NotFound.into()));
            }
            h.push("data", path.display());
            read_dataset(path)?
        }
        (None, Some(name), Some(n)) => {
            let s = resolve_scenario(name)?;
            describe_scenario(h, &s);
            s.generate(n, args.seed)?
        }
        _ => unreachable!("clap requires --data or --scenario with --n"),
    };
    h.push("n", data.len());
    h.push("seed", args.seed);
    Ok(data)
}

pub fn generate(a: &GenerateArgs, mut h: Header) -> Result<()> {
    let s = resolve_scenario(&a.scenario)?;
    describe_scenario(&mut h, &s);
    h.push("n", a.n);
    h.push("seed", a.seed);
    let data = s.generate(a.n, a.seed)?;
    let mut body = String::from("x,y\n");
    for p in data.samples() {
        body.push_str(&format!("{},{}\n", p.x, p.y.sign()));
    }
    emit(a.out.as_deref(), &h.document(&body))
}

pub fn estimate(a: &EstimateArgs, mut h: Header) -> Result<()> {
    check_level(a.level)?;
    let data = load_data(&a.data, &mut h)?;
    let est = m_estimate(&data);
    let ci = bootstrap_ci(&data, a.bootstrap, 1.0 - a.level, derive_seed(a.data.seed, 1))?;
    let (lo, _) = data.range();
    let run = est.argmin_intervals[0];
    h.push("bootstrap", a.bootstrap);
    h.push("argmin", "leftmost minimizing run (argmin_lo, argmin_hi], clipped to the data range");
    let body = format!(
        "n,theta_hat,risk,argmin_lo,argmin_hi,ci_lo,ci_hi,level\n{},{},{},{},{},{},{},{}\n",
        data.len(),
        est.theta_hat,
        est.risk_at_min,
        run.lo.max(lo),
        run.hi,
        ci.lo,
        ci.hi,
        a.level
    );
    emit(a.data.out.as_deref(), &h.document(&body))
}

pub fn posterior(a: &PosteriorArgs, mut h: Header) -> Result<()> {
    check_level(a.level)?;
    let data = load_data(&a.data, &mut h)?;
    let seed = a.data.seed;
    let omega = match a.omega {
        OmegaArg::Value(w) => {
            h.push("omega_source", "fixed");
            w
        }
        OmegaArg::Auto => {
            let cfg = CalibrationConfig {
                level: a.level,
                prior: a.prior,
                ..Default::default()
            };
            let r = calibrate_omega(&data, &cfg, derive_seed(seed, 2))?;
            h.push("omega_source", "calibrated");
            h.push("calibration_converged", r.converged);
            h.push("calibration_iterations", r.trace.len());
            r.omega
        }
    };
    h.push("omega", omega);
    h.push("omega_ratio", omega / reference_omega(data.len()));
    h.push("prior", a.prior);
    h.push("sampler", a.sampler);
    let draws = match a.sampler {
        SamplerKind::Exact => {
            let post = ExactPosterior::new(&data, omega, &a.prior)?;
            sample_exact(&post, a.draws, derive_seed(seed, 3))?
        }
        SamplerKind::Metropolis => {
            let cfg = MetropolisConfig {
                draws: a.draws,
                ..Default::default()
            };
            sample_metropolis(&data, omega, &a.prior, &cfg, derive_seed(seed, 3))?
        }
    };
    h.push("draws", draws.draws.len());
    if let Some(acc) = draws.acceptance_rate {
        h.push("acceptance_rate", acc);
    }
    if let Some(step) = draws.step {
        h.push("step", step);
    }
    h.push("effective_draws", draws.effective_draws);
    let (lo, hi) = data.range();
    h.push("data_min", lo);
    h.push("data_max", hi);
    let summary = summarize(&draws, a.level)?;
    let body = format!(
        "{}\n{}\n",
        PosteriorSummary::CSV_HEADER,
        summary.csv_row(&format!("gibbs-{}", a.sampler), omega)
    );
    if let Some(path) = &a.draws_out {
        emit(Some(path), &h.document(&draws.to_csv()))?;
    }
    emit(a.data.out.as_deref(), &h.document(&body))
}

pub fn calibrate(a: &CalibrateArgs, mut h: Header) -> Result<()> {
    let data = load_data(&a.data, &mut h)?;
    let cfg = CalibrationConfig {
        level: a.level,
        prior: a.prior,
        max_iter: a.max_iter,
        tol: a.tol,
        bootstrap: a.bootstrap,
        interval: a.interval.0,
        kappa0: a.kappa0,
        ..Default::default()
    };
    let r = calibrate_omega(&data, &cfg, derive_seed(a.data.seed, 2))?;
    h.push("level", a.level);
    h.push("prior", a.prior);
    h.push("bootstrap", a.bootstrap);
    h.push("interval", format!("{:?}", cfg.interval).to_lowercase());
    h.push("omega", r.omega);
    h.push("omega_ratio", r.ratio);
    h.push("converged", r.converged);
    emit(a.data.out.as_deref(), &h.document(&r.to_csv()))
}

pub fn study(a: &StudyArgs, mut h: Header) -> Result<()> {
    let s = resolve_scenario(&a.mc.scenario)?;
    describe_scenario(&mut h, &s);
    let mut cfg = StudyConfig::new(a.n, a.reps, a.mc.seed);
    cfg.methods = a.methods.clone();
    cfg.omega = a.mc.policy();
    cfg.level = a.mc.level;
    cfg.prior = a.mc.prior;
    cfg.bootstrap = a.bootstrap;
    cfg.posterior_draws = (a.draws > 0).then_some(a.draws);
    cfg.calibration = study_calibration(a.mc.level, a.mc.prior);
    let report = run_study(&s, &cfg)?;
    h.extend(
        report
            .metadata()
            .into_iter()
            .filter(|(k, _)| k != "scenario" && k != "theta_star"),
    );
    h.push("bootstrap", a.bootstrap);
    h.push("posterior_draws", a.draws);
    let table = |header: &str, rows: Vec<String>| {
        let mut t = format!("{header}\n");
        for r in rows {
            t.push_str(&r);
            t.push('\n');
        }
        t
    };
    let t1 = h.document(&table(ExperimentReport::TABLE1_HEADER, report.table1_rows()));
    let t2 = h.document(&table(ExperimentReport::TABLE2_HEADER, report.table2_rows()));
    match &a.out {
        Some(prefix) => {
            emit(Some(&with_suffix(prefix, "table1.csv")), &t1)?;
            emit(Some(&with_suffix(prefix, "table2.csv")), &t2)
        }
        None => emit(None, &format!("{t1}\n{t2}")),
    }
}

pub fn rate_check(a: &RateCheckArgs, mut h: Header) -> Result<()> {
    let s = resolve_scenario(&a.mc.scenario)?;
    describe_scenario(&mut h, &s);
    let policy = a.mc.policy();
    let report: RateReport = run_rate_check(&s, &a.n_grid, a.reps, a.estimator, policy, a.mc.seed)?;
    h.push("estimator", a.estimator);
    h.push("reps", a.reps);
    h.push("seed", a.mc.seed);
    if a.estimator == Method::PosteriorMean {
        h.push("omega_policy", policy);
    }
    h.push("summary", report.summary_json());
    let mut body = format!("{}\n", RateReport::CSV_HEADER);
    for r in report.csv_rows() {
        body.push_str(&r);
        body.push('\n');
    }
    emit(a.out.as_deref(), &h.document(&body))
}

pub fn compare_logistic(a: &CompareArgs, mut h: Header) -> Result<()> {
    check_level(a.level)?;
    let s = resolve_scenario(&a.scenario)?;
    describe_scenario(&mut h, &s);
    let cfg = LogisticConfig {
        draws: a.draws,
        gibbs_draws: a.draws,
        level: a.level,
        ..Default::default()
    };
    h.push("n", a.n);
    h.push("seed", a.seed);
    h.push("level", a.level);
    h.push(
        "logistic_prior",
        format!(
            "independent normal(0, {}^2) on intercept and slope (weakly informative substitute for a data-driven default)",
            cfg.prior_sd
        ),
    );
    h.push("gibbs_omega", "calibrated per dataset, flat prior");
    let body = if a.reps > 1 {
        let c = run_logistic_coverage(&s, a.n, a.reps, &cfg, a.seed)?;
        h.push("reps", a.reps);
        let mut body = format!("{}\n", LogisticCoverage::CSV_HEADER);
        for r in c.csv_rows() {
            body.push_str(&r);
            body.push('\n');
        }
        body
    } else {
        let c = run_logistic_comparison(&s, a.n, &cfg, a.seed)?;
        let l = c.logistic_summary(a.level)?;
        let g = c.gibbs_summary(a.level)?;
        h.push("gibbs_omega_value", c.omega);
        h.push("logistic_acceptance_rate", c.logistic.acceptance_rate);
        h.push("logistic_median", c.logistic_median());
        h.push("gibbs_median", c.gibbs_median());
        h.push("logistic_interval", format!("[{}, {}]", l.ci_lo, l.ci_hi));
        h.push("gibbs_interval", format!("[{}, {}]", g.ci_lo, g.ci_hi));
        c.draws_csv()
    };
    emit(a.out.as_deref(), &h.document(&body))
}
