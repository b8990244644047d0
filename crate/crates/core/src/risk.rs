//! The 0-1 classification loss, empirical and population risk, and the
//! smoothed surrogate.

use std::fmt::Write as _;

use crate::data::{Dataset, Label, OrderedSample};
use crate::error::{Error, Result};
use crate::numerics::{integrate_pieces, log_space, ols};
use crate::scenarios::Scenario;

/// Absolute tolerance of [`population_risk`] quadrature.
pub const POPULATION_RISK_TOL: f64 = 1e-10;

#[inline]
fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

#[inline]
pub(crate) fn loss_label(theta: f64, x: f64, y: Label) -> u8 {
    u8::from(y.sign() != sign(x - theta))
}

/// `(1 - y sign(x - theta)) / 2` with `sign(0) = 1`.
pub fn loss(theta: f64, x: f64, y: i8) -> Result<u8> {
    let y = Label::from_sign(y)?;
    if !(theta.is_finite() && x.is_finite()) {
        return Err(Error::validation("theta", "loss inputs must be finite"));
    }
    Ok(loss_label(theta, x, y))
}

/// Number of misclassified samples at `theta`.
pub fn loss_count(theta: f64, data: &Dataset) -> usize {
    data.samples()
        .iter()
        .map(|s| usize::from(loss_label(theta, s.x, s.y)))
        .sum()
}

/// Mean 0-1 loss; always `k / n` for an integer `k`.
pub fn empirical_risk(theta: f64, data: &Dataset) -> f64 {
    loss_count(theta, data) as f64 / data.len() as f64
}

/// Form of the smoothed loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SmoothedForm {
    /// `min{1, [1 - y (x - theta) / tau]+}`.
    #[default]
    Ramp,
    /// `min{1, [1 - y sign(x - theta) / tau]+}`, kept for comparison only.
    Literal,
}

pub fn smoothed_empirical_risk(theta: f64, tau: f64, data: &Dataset, form: SmoothedForm) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::validation("tau", format!("smoothing parameter must be > 0, got {tau}")));
    }
    let total: f64 = data
        .samples()
        .iter()
        .map(|s| {
            let y = f64::from(s.y.sign());
            let margin = match form {
                SmoothedForm::Ramp => y * (s.x - theta),
                SmoothedForm::Literal => y * f64::from(sign(s.x - theta)),
            };
            (1.0 - margin / tau).clamp(0.0, 1.0)
        })
        .sum();
    Ok(total / data.len() as f64)
}

/// `R(theta) = int_{x < theta} eta p + int_{x >= theta} (1 - eta) p`.
pub fn population_risk(scenario: &Scenario, theta: f64) -> Result<f64> {
    let (lo, hi) = scenario.marginal().integration_bounds();
    let t = theta.clamp(lo, hi);
    let m = scenario.marginal();
    let mut breaks = scenario.breakpoints();
    breaks.push(t);
    let below = integrate_pieces(
        |x| scenario.eta_unchecked(x) * m.pdf(x),
        lo,
        t,
        &breaks,
        POPULATION_RISK_TOL / 2.0,
    )?;
    let above = integrate_pieces(
        |x| (1.0 - scenario.eta_unchecked(x)) * m.pdf(x),
        t,
        hi,
        &breaks,
        POPULATION_RISK_TOL / 2.0,
    )?;
    Ok((below + above).clamp(0.0, 1.0))
}

/// `R(theta) - R(theta*) = 2 int_{theta*}^{theta} (eta - 1/2) p`.
pub fn risk_excess(scenario: &Scenario, theta: f64) -> Result<f64> {
    let star = scenario.true_mcid()?;
    let (lo, hi) = scenario.marginal().integration_bounds();
    let m = scenario.marginal();
    let a = star.clamp(lo, hi);
    let b = theta.clamp(lo, hi);
    let mut breaks = scenario.breakpoints();
    breaks.push(star);
    let v = integrate_pieces(
        |x| (scenario.eta_unchecked(x) - 0.5) * m.pdf(x),
        a,
        b,
        &breaks,
        POPULATION_RISK_TOL / 4.0,
    )?;
    Ok(2.0 * v)
}

/// Population risk through the excess-risk representation,
/// `R(theta*) + 2 int_{theta*}^{theta} (eta - 1/2) p`.
pub fn population_risk_via_excess(scenario: &Scenario, theta: f64) -> Result<f64> {
    let star = scenario.true_mcid()?;
    Ok(population_risk(scenario, star)? + risk_excess(scenario, theta)?)
}

#[derive(Clone, Debug)]
pub struct GapExponentFit {
    pub deltas: Vec<f64>,
    pub gaps: Vec<f64>,
    /// Least-squares slope of `log gap` on `log delta`; about `1 + gamma1`.
    pub slope: f64,
    pub intercept: f64,
    /// Largest disagreement between the excess integral and a difference of
    /// two direct population-risk evaluations.
    pub max_crosscheck_error: f64,
}

/// Default grid: 8 log-spaced points in `[1e-3, 1e-1]`.
pub fn default_gap_deltas() -> Vec<f64> {
    log_space(1e-3, 1e-1, 8)
}

/// Fits the local exponent of `R(theta* + delta) - R(theta*)`.
pub fn risk_gap_exponent_check(scenario: &Scenario, deltas: &[f64]) -> Result<GapExponentFit> {
    if deltas.len() < 5 {
        return Err(Error::validation("deltas", "need at least 5 grid points"));
    }
    if let Some(d) = deltas.iter().find(|&&d| !(d > 0.0 && d <= 0.2)) {
        return Err(Error::validation("deltas", format!("grid values must lie in (0, 0.2], got {d}")));
    }
    let star = scenario.true_mcid()?;
    let r_star = population_risk(scenario, star)?;
    let mut gaps = Vec::with_capacity(deltas.len());
    let mut max_err: f64 = 0.0;
    for &d in deltas {
        let gap = risk_excess(scenario, star + d)?;
        if gap <= 0.0 {
            return Err(Error::Invariant(format!(
                "non-positive risk gap {gap:e} at delta = {d}; theta* would not minimize the risk"
            )));
        }
        let direct = population_risk(scenario, star + d)? - r_star;
        max_err = max_err.max((direct - gap).abs());
        gaps.push(gap);
    }
    if max_err > 1e-6 {
        return Err(Error::Invariant(format!(
            "risk representations disagree by {max_err:e}"
        )));
    }
    let lx: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let (intercept, slope) = ols(&lx, &ly);
    Ok(GapExponentFit {
        deltas: deltas.to_vec(),
        gaps,
        slope,
        intercept,
        max_crosscheck_error: max_err,
    })
}

/// Risk values on a strictly increasing grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskCurve {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
}

impl RiskCurve {
    fn check_grid(thetas: &[f64]) -> Result<()> {
        if thetas.is_empty() || !thetas.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::validation("thetas", "grid must be nonempty and strictly increasing"));
        }
        Ok(())
    }

    pub fn empirical(data: &Dataset, thetas: &[f64]) -> Result<Self> {
        Self::check_grid(thetas)?;
        let ordered = OrderedSample::new(data);
        let losses = ordered.interval_losses();
        let n = data.len() as f64;
        let values = thetas
            .iter()
            .map(|&t| {
                // Index of the interval (x[j-1], x[j]] containing t.
                let j = ordered.xs().partition_point(|&x| x < t);
                f64::from(losses[j]) / n
            })
            .collect();
        Ok(Self {
            thetas: thetas.to_vec(),
            values,
        })
    }

    pub fn population(scenario: &Scenario, thetas: &[f64]) -> Result<Self> {
        Self::check_grid(thetas)?;
        let values = thetas
            .iter()
            .map(|&t| population_risk(scenario, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            thetas: thetas.to_vec(),
            values,
        })
    }

    /// Two-column CSV, `theta,risk`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,risk\n");
        for (t, v) in self.thetas.iter().zip(&self.values) {
            let _ = writeln!(out, "{t},{v}");
        }
        out
    }
}
