use gibbs_mcid::data::replication_seed;
use gibbs_mcid::experiments::{run_rate_check, run_study, Method, OmegaPolicy, StudyConfig};
use gibbs_mcid::{Error, Eta, Marginal, Scenario};

fn noiseless_jump() -> Scenario {
    Scenario::new(
        "jump01",
        Marginal::Uniform { a: -1.0, b: 1.0 },
        Eta::Jump { lo: 0.0, hi: 1.0, theta0: 0.0 },
        (-1.0, 1.0),
    )
    .unwrap()
}

#[test]
fn noiseless_jump_is_pinned_by_order_statistics() {
    let scenario = noiseless_jump();
    for n in [10, 40, 200] {
        let mut cfg = StudyConfig::new(n, 30, 5);
        cfg.methods = vec![Method::MEstimator, Method::BootstrapCi];
        cfg.bootstrap = 200;
        let report = run_study(&scenario, &cfg).unwrap();
        for rec in &report.replications {
            let data = scenario.generate(n, rec.seed).unwrap();
            let below = data.xs().filter(|&x| x <= 0.0).fold(f64::NEG_INFINITY, f64::max);
            let above = data.xs().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min);
            let spacing = above - below;
            let est = rec.m_estimate.unwrap();
            assert!(est.abs() <= spacing, "n={n}: {est} vs spacing {spacing}");
        }
        let row = report.row(Method::MEstimator).unwrap();
        let max_err = report
            .replications
            .iter()
            .map(|r| r.m_estimate.unwrap().abs())
            .fold(0.0, f64::max);
        assert!(row.abs_bias.unwrap() <= max_err);
        assert!(row.sd.unwrap() <= 2.0 * max_err);
        // coverage counts exactly the intervals containing the boundary
        let hits = report
            .replications
            .iter()
            .filter(|r| {
                let (lo, hi) = r.bootstrap.unwrap();
                lo <= 0.0 && 0.0 <= hi
            })
            .count();
        let cov = report.row(Method::BootstrapCi).unwrap().coverage.unwrap();
        assert_eq!(cov, hits as f64 / 30.0);
    }
}

#[test]
fn studies_are_deterministic_and_replications_rerunnable() {
    let scenario = Scenario::builtin("example2").unwrap();
    let mut cfg = StudyConfig::new(120, 6, 99);
    cfg.bootstrap = 100;
    cfg.posterior_draws = Some(500);
    let a = run_study(&scenario, &cfg).unwrap();
    let b = run_study(&scenario, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.table1_rows(), b.table1_rows());

    let mut seeds: Vec<u64> = a.replications.iter().map(|r| r.seed).collect();
    for (i, s) in seeds.iter().enumerate() {
        assert_eq!(*s, replication_seed(99, "example2", 120, i));
    }
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), 6);

    // one replication on its own matches the full run
    let single = StudyConfig { reps: 4, ..cfg.clone() };
    let part = run_study(&scenario, &single).unwrap();
    assert_eq!(part.replications[3], a.replications[3]);
}

#[test]
fn point_methods_share_datasets() {
    let scenario = Scenario::builtin("example1").unwrap();
    let mut cfg = StudyConfig::new(100, 5, 3);
    cfg.omega = OmegaPolicy::Fixed { c: 3.5 };
    cfg.methods = vec![Method::MEstimator, Method::PosteriorMean];
    cfg.posterior_draws = None;
    let report = run_study(&scenario, &cfg).unwrap();
    for rec in &report.replications {
        let data = scenario.generate(100, rec.seed).unwrap();
        assert_eq!(rec.m_estimate.unwrap(), gibbs_mcid::m_estimate(&data).theta_hat);
        let w = rec.omega.unwrap();
        assert!((w - 3.5 * 100f64.powf(-0.4)).abs() < 1e-15);
    }
}

#[test]
fn table_headers_and_rows() {
    let scenario = Scenario::builtin("example4").unwrap();
    let mut cfg = StudyConfig::new(60, 3, 1);
    cfg.omega = OmegaPolicy::Fixed { c: 3.5 };
    cfg.bootstrap = 50;
    cfg.posterior_draws = None;
    let report = run_study(&scenario, &cfg).unwrap();
    let t1 = report.table1_rows();
    let t2 = report.table2_rows();
    assert_eq!(t1.len(), 2);
    assert_eq!(t2.len(), 2);
    assert!(t1[0].starts_with("example4,60,m-estimator,"));
    assert!(t2[1].starts_with("example4,60,gibbs-ci,"));
    assert_eq!(t2[0].split(',').count(), 6);
    assert!(report.metadata().iter().any(|(k, _)| k == "abs_bias"));
}

#[test]
fn bad_study_configs_are_rejected() {
    let scenario = Scenario::builtin("example1").unwrap();
    let mut cfg = StudyConfig::new(50, 0, 1);
    assert!(run_study(&scenario, &cfg).unwrap_err().is_validation());
    cfg.reps = 2;
    cfg.methods.clear();
    assert!(run_study(&scenario, &cfg).unwrap_err().is_validation());
    cfg.methods = vec![Method::PosteriorMean];
    cfg.omega = OmegaPolicy::Fixed { c: -1.0 };
    match run_study(&scenario, &cfg).unwrap_err() {
        Error::Replication { rep, source, .. } => {
            assert_eq!(rep, 0);
            assert!(source.is_validation());
        }
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn bootstrap_interval_on_example2_at_n1000() {
    let scenario = Scenario::builtin("example2").unwrap();
    let mut cfg = StudyConfig::new(1000, 500, 20_240);
    cfg.methods = vec![Method::BootstrapCi];
    let report = run_study(&scenario, &cfg).unwrap();
    let row = report.row(Method::BootstrapCi).unwrap();
    let (cov, len) = (row.coverage.unwrap(), row.mean_length.unwrap());
    assert!((cov - 0.92).abs() <= 0.04, "coverage {cov}");
    assert!((len - 0.38).abs() <= 0.06, "length {len}");
}

#[test]
fn posterior_mean_on_example4_at_n250() {
    let scenario = Scenario::builtin("example4").unwrap();
    let mut cfg = StudyConfig::new(250, 300, 4);
    cfg.methods = vec![Method::PosteriorMean];
    cfg.posterior_draws = None;
    let report = run_study(&scenario, &cfg).unwrap();
    let row = report.row(Method::PosteriorMean).unwrap();
    let (bias, sd) = (row.abs_bias.unwrap(), row.sd.unwrap());
    assert!(bias <= 0.06, "bias {bias}");
    assert!((sd - 0.10).abs() <= 0.04, "sd {sd}");
}

#[test]
fn rate_check_validates_grid_and_estimator() {
    let s = Scenario::builtin("example2").unwrap();
    let policy = OmegaPolicy::Fixed { c: 3.5 };
    assert!(run_rate_check(&s, &[100, 200], 5, Method::MEstimator, policy, 1)
        .unwrap_err()
        .is_validation());
    assert!(run_rate_check(&s, &[100, 200, 400], 5, Method::MEstimator, policy, 1)
        .unwrap_err()
        .is_validation());
    assert!(run_rate_check(&s, &[100, 400, 1600], 5, Method::GibbsCi, policy, 1)
        .unwrap_err()
        .is_validation());
}

#[test]
fn rmse_shrinks_with_n_on_example2() {
    let s = Scenario::builtin("example2").unwrap();
    let r = run_rate_check(&s, &[250, 1000, 4000], 100, Method::MEstimator, OmegaPolicy::Fixed { c: 3.5 }, 8)
        .unwrap();
    assert!(r.rmse.windows(2).all(|w| w[1] < w[0]), "{:?}", r.rmse);
    assert!(r.slope > 0.15 && r.slope < 0.55, "slope {}", r.slope);
    assert_eq!(r.theory, Some(1.0 / 3.0));
    assert_eq!(r.csv_rows().len(), 3);
    assert!(r.summary_json().contains("\"r_theory\": 0.333"));
}
