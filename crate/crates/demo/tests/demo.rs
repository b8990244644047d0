use gibbs_mcid_demo::{calibrate, gibbs_posterior, risk_curve};

#[test]
fn risk_curve_brackets_the_estimate() {
    let c = risk_curve("example2", 300, 4, 200).unwrap();
    assert_eq!(c.thetas.len(), 200);
    assert_eq!(c.empirical.len(), 200);
    let min = c.empirical.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min >= c.min_risk - 1e-12);
    assert!(c.data_range.0 <= c.theta_hat && c.theta_hat <= c.data_range.1);
    assert!(c.population.iter().all(|r| (0.0..=1.0).contains(r)));
    assert_eq!(c.theta_star, 1.0);
}

#[test]
fn posterior_density_integrates_to_one() {
    let p = gibbs_posterior("example1", 250, 2, 0.4, 0.0, 0.0, 0.9, 2000).unwrap();
    let h = p.thetas[1] - p.thetas[0];
    let mass: f64 = p.density.iter().sum::<f64>() * h;
    assert!((mass - 1.0).abs() < 0.02, "{mass}");
    assert!(p.ci.0 <= p.mean && p.mean <= p.ci.1);
    assert!(!p.calibrated);
    assert_eq!(p.prior, "flat");
}

#[test]
fn auto_omega_and_informative_prior() {
    let p = gibbs_posterior("example1", 200, 3, f64::NAN, -0.5, 1.0, 0.9, 100).unwrap();
    assert!(p.calibrated);
    assert!(p.omega > 0.0);
    assert_eq!(p.prior, "normal:-0.5,1");
}

#[test]
fn calibration_trace() {
    let c = calibrate("example4", 200, 9, 0.9, 100).unwrap();
    assert_eq!(c.iterations.len(), c.omegas.len());
    assert_eq!(*c.omegas.last().unwrap(), c.omega);
    assert_eq!(c.target, 0.9);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(risk_curve("nope", 100, 1, 10).is_err());
    assert!(risk_curve("example1", 1, 1, 10).is_err());
    assert!(gibbs_posterior("example1", 100, 1, 0.5, 0.0, 0.0, 1.5, 10).is_err());
}
