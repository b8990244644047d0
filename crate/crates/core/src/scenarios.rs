//! Synthetic data-generating models: a marginal law for the diagnostic
//! measure `X` and a conditional probability `eta(x) = P(Y = 1 | X = x)`.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::data::{rng_from_seed, Dataset, Label, Sample};
use crate::error::{Error, Result};
use crate::numerics::bisect_threshold;

/// Tail mass left outside [`Marginal::integration_bounds`], per side.
pub const TAIL_MASS: f64 = 1e-11;

/// Absolute tolerance of [`Scenario::true_mcid`].
pub const MCID_TOL: f64 = 1e-12;

pub const BUILTIN_NAMES: [&str; 8] = [
    "example1",
    "example2",
    "example3",
    "example4",
    "cusp",
    "jump",
    "logit-demo-a",
    "logit-demo-b",
];

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Marginal distribution of `X`.
#[derive(Clone, Debug, PartialEq)]
pub enum Marginal {
    Normal { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    /// Shape/rate parameterization: mean `shape / rate`.
    Gamma { shape: f64, rate: f64 },
    /// `weight * N(mu1, sigma1) + (1 - weight) * N(mu2, sigma2)`.
    NormalMixture {
        weight: f64,
        mu1: f64,
        sigma1: f64,
        mu2: f64,
        sigma2: f64,
    },
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        fn finite(field: &str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(field, format!("must be finite, got {v}")))
            }
        }
        fn positive(field: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::validation(field, format!("must be > 0, got {v}")))
            }
        }
        match *self {
            Marginal::Normal { mu, sigma } => {
                finite("marginal.params.mu", mu)?;
                positive("marginal.params.sigma", sigma)
            }
            Marginal::Uniform { a, b } => {
                finite("marginal.params.a", a)?;
                finite("marginal.params.b", b)?;
                if a < b {
                    Ok(())
                } else {
                    Err(Error::validation("marginal.params.b", format!("need a < b, got a = {a}, b = {b}")))
                }
            }
            Marginal::Gamma { shape, rate } => {
                positive("marginal.params.shape", shape)?;
                positive("marginal.params.rate", rate)
            }
            Marginal::NormalMixture {
                weight,
                mu1,
                sigma1,
                mu2,
                sigma2,
            } => {
                if !(weight > 0.0 && weight < 1.0) {
                    return Err(Error::validation(
                        "marginal.params.weight",
                        format!("must lie in (0, 1), got {weight}"),
                    ));
                }
                finite("marginal.params.mu1", mu1)?;
                finite("marginal.params.mu2", mu2)?;
                positive("marginal.params.sigma1", sigma1)?;
                positive("marginal.params.sigma2", sigma2)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mu, sigma } => std_normal_pdf((x - mu) / sigma) / sigma,
            Marginal::Uniform { a, b } => {
                if (a..=b).contains(&x) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Marginal::Gamma { shape, rate } => {
                if x < 0.0 {
                    0.0
                } else if x == 0.0 {
                    match shape.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Greater) => 0.0,
                        Some(std::cmp::Ordering::Equal) => rate,
                        _ => f64::INFINITY,
                    }
                } else {
                    (shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(shape)).exp()
                }
            }
            Marginal::NormalMixture {
                weight,
                mu1,
                sigma1,
                mu2,
                sigma2,
            } => {
                weight * std_normal_pdf((x - mu1) / sigma1) / sigma1
                    + (1.0 - weight) * std_normal_pdf((x - mu2) / sigma2) / sigma2
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mu, sigma } => std_normal_cdf((x - mu) / sigma),
            Marginal::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Marginal::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, rate * x)
                }
            }
            Marginal::NormalMixture {
                weight,
                mu1,
                sigma1,
                mu2,
                sigma2,
            } => {
                weight * std_normal_cdf((x - mu1) / sigma1)
                    + (1.0 - weight) * std_normal_cdf((x - mu2) / sigma2)
            }
        }
    }

    /// An interval carrying all but at most [`TAIL_MASS`] on each side.
    pub fn integration_bounds(&self) -> (f64, f64) {
        // P(Z > 7) is about 1.3e-12.
        const Z: f64 = 7.0;
        match *self {
            Marginal::Normal { mu, sigma } => (mu - Z * sigma, mu + Z * sigma),
            Marginal::Uniform { a, b } => (a, b),
            Marginal::Gamma { shape, rate } => {
                let mut hi = (shape + 1.0) / rate;
                while gamma_ur(shape, rate * hi) > TAIL_MASS {
                    hi *= 2.0;
                }
                (0.0, hi)
            }
            Marginal::NormalMixture {
                mu1,
                sigma1,
                mu2,
                sigma2,
                ..
            } => (
                (mu1 - Z * sigma1).min(mu2 - Z * sigma2),
                (mu1 + Z * sigma1).max(mu2 + Z * sigma2),
            ),
        }
    }

    /// Points where the density is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            Marginal::Uniform { a, b } => vec![a, b],
            Marginal::Gamma { .. } => vec![0.0],
            _ => Vec::new(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Normal { mu, sigma } => Normal::new(mu, sigma).expect("validated").sample(rng),
            Marginal::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Marginal::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate).expect("validated").sample(rng),
            Marginal::NormalMixture {
                weight,
                mu1,
                sigma1,
                mu2,
                sigma2,
            } => {
                let (mu, sigma) = if rng.random::<f64>() < weight {
                    (mu1, sigma1)
                } else {
                    (mu2, sigma2)
                };
                Normal::new(mu, sigma).expect("validated").sample(rng)
            }
        }
    }
}

impl fmt::Display for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Marginal::Normal { mu, sigma } => write!(f, "normal(mu={mu}, sigma={sigma})"),
            Marginal::Uniform { a, b } => write!(f, "uniform(a={a}, b={b})"),
            Marginal::Gamma { shape, rate } => write!(f, "gamma(shape={shape}, rate={rate})"),
            Marginal::NormalMixture {
                weight,
                mu1,
                sigma1,
                mu2,
                sigma2,
            } => write!(
                f,
                "normal-mixture(weight={weight}, mu1={mu1}, sigma1={sigma1}, mu2={mu2}, sigma2={sigma2})"
            ),
        }
    }
}

/// Conditional probability `eta(x) = P(Y = 1 | X = x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Eta {
    /// `eta = F`, the marginal CDF.
    CdfLink,
    /// `(1 - |x|^alpha1) / 2` on `[-1, 0)` and `(1 + x^alpha2) / 2` on `[0, 1]`.
    Cusp { alpha1: f64, alpha2: f64 },
    /// `lo` below `theta0`, `hi` from `theta0` on.
    Jump { lo: f64, hi: f64, theta0: f64 },
    /// Linear interpolation between knots, constant outside.
    Table { xs: Vec<f64>, values: Vec<f64> },
}

impl Eta {
    pub fn validate(&self) -> Result<()> {
        match self {
            Eta::CdfLink => Ok(()),
            &Eta::Cusp { alpha1, alpha2 } => {
                for (field, a) in [("eta.params.alpha1", alpha1), ("eta.params.alpha2", alpha2)] {
                    if !(a > 0.0 && a < 1.0) {
                        return Err(Error::validation(field, format!("must lie in (0, 1), got {a}")));
                    }
                }
                if alpha1 < alpha2 {
                    return Err(Error::validation(
                        "eta.params.alpha1",
                        format!("need alpha1 >= alpha2, got {alpha1} < {alpha2}"),
                    ));
                }
                Ok(())
            }
            &Eta::Jump { lo, hi, theta0 } => {
                if !theta0.is_finite() {
                    return Err(Error::validation("eta.params.theta0", "must be finite"));
                }
                if !(0.0..0.5).contains(&lo) {
                    return Err(Error::validation("eta.params.lo", format!("need 0 <= lo < 1/2, got {lo}")));
                }
                if !(hi > 0.5 && hi <= 1.0) {
                    return Err(Error::validation("eta.params.hi", format!("need 1/2 < hi <= 1, got {hi}")));
                }
                Ok(())
            }
            Eta::Table { xs, values } => {
                if xs.len() < 2 || xs.len() != values.len() {
                    return Err(Error::validation(
                        "eta.params.x",
                        "table needs at least two knots and one value per knot",
                    ));
                }
                if !xs.iter().all(|x| x.is_finite()) || !xs.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::validation("eta.params.x", "knots must be finite and strictly increasing"));
                }
                if !values.iter().all(|v| (0.0..=1.0).contains(v)) {
                    return Err(Error::validation("eta.params.eta", "values must lie in [0, 1]"));
                }
                Ok(())
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Eta::CdfLink => Vec::new(),
            Eta::Cusp { .. } => vec![-1.0, 0.0, 1.0],
            Eta::Jump { theta0, .. } => vec![*theta0],
            Eta::Table { xs, .. } => xs.clone(),
        }
    }
}

impl fmt::Display for Eta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Eta::CdfLink => write!(f, "cdf-link"),
            Eta::Cusp { alpha1, alpha2 } => write!(f, "cusp(alpha1={alpha1}, alpha2={alpha2})"),
            Eta::Jump { lo, hi, theta0 } => write!(f, "jump(lo={lo}, hi={hi}, theta0={theta0})"),
            Eta::Table { xs, .. } => write!(f, "table({} knots)", xs.len()),
        }
    }
}

/// A validated data-generating model. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    name: String,
    marginal: Marginal,
    eta: Eta,
    support_hint: (f64, f64),
}

impl Scenario {
    pub fn new(name: impl Into<String>, marginal: Marginal, eta: Eta, support_hint: (f64, f64)) -> Result<Self> {
        marginal.validate()?;
        eta.validate()?;
        let (lo, hi) = support_hint;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::validation(
                "support_hint",
                format!("need finite lo < hi, got [{lo}, {hi}]"),
            ));
        }
        if matches!(eta, Eta::Cusp { .. }) {
            let (a, b) = marginal.integration_bounds();
            if a < -1.0 || b > 1.0 {
                return Err(Error::validation(
                    "marginal",
                    "the cusp eta is defined on [-1, 1]; the marginal must be supported there",
                ));
            }
        }
        Ok(Self {
            name: name.into(),
            marginal,
            eta,
            support_hint,
        })
    }

    /// Looks up one of [`BUILTIN_NAMES`].
    pub fn builtin(name: &str) -> Result<Self> {
        let mixture = |mu2: f64| Marginal::NormalMixture {
            weight: 0.7,
            mu1: -1.0,
            sigma1: 1.0,
            mu2,
            sigma2: 1.0,
        };
        let (marginal, eta, hint) = match name {
            "example1" | "logit-demo-a" => (mixture(1.0), Eta::CdfLink, (-5.0, 5.0)),
            "example2" => (Marginal::Normal { mu: 1.0, sigma: 1.0 }, Eta::CdfLink, (-5.0, 7.0)),
            "example3" => (Marginal::Uniform { a: -2.0, b: 4.0 }, Eta::CdfLink, (-2.0, 4.0)),
            "example4" => (Marginal::Gamma { shape: 2.0, rate: 2.0 }, Eta::CdfLink, (0.0, 8.0)),
            "cusp" => (
                Marginal::Uniform { a: -1.0, b: 1.0 },
                Eta::Cusp {
                    alpha1: 0.5,
                    alpha2: 0.5,
                },
                (-1.0, 1.0),
            ),
            "jump" => (
                Marginal::Uniform { a: -1.0, b: 1.0 },
                Eta::Jump {
                    lo: 0.2,
                    hi: 0.8,
                    theta0: 0.0,
                },
                (-1.0, 1.0),
            ),
            "logit-demo-b" => (mixture(5.0), Eta::CdfLink, (-5.0, 9.0)),
            other => {
                return Err(Error::validation(
                    "scenario",
                    format!("unknown scenario `{other}`; built-ins: {}", BUILTIN_NAMES.join(", ")),
                ))
            }
        };
        Scenario::new(name, marginal, eta, hint)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn marginal(&self) -> &Marginal {
        &self.marginal
    }

    pub fn eta(&self) -> &Eta {
        &self.eta
    }

    pub fn support_hint(&self) -> (f64, f64) {
        self.support_hint
    }

    /// Self-describing one-line summary, including the gamma parameterization.
    pub fn describe(&self) -> String {
        format!(
            "{}: marginal={}, eta={}, support_hint=[{}, {}]",
            self.name, self.marginal, self.eta, self.support_hint.0, self.support_hint.1
        )
    }

    /// `eta(x)`; the cusp form is only defined on `[-1, 1]`.
    pub fn eta_value(&self, x: f64) -> Result<f64> {
        match self.eta {
            Eta::Cusp { .. } if !(-1.0..=1.0).contains(&x) => Err(Error::Domain { x, lo: -1.0, hi: 1.0 }),
            _ => Ok(self.eta_unchecked(x)),
        }
    }

    pub(crate) fn eta_unchecked(&self, x: f64) -> f64 {
        match &self.eta {
            Eta::CdfLink => self.marginal.cdf(x),
            &Eta::Cusp { alpha1, alpha2 } => {
                let x = x.clamp(-1.0, 1.0);
                if x < 0.0 {
                    0.5 * (1.0 - (-x).powf(alpha1))
                } else {
                    0.5 * (1.0 + x.powf(alpha2))
                }
            }
            &Eta::Jump { lo, hi, theta0 } => {
                if x < theta0 {
                    lo
                } else {
                    hi
                }
            }
            Eta::Table { xs, values } => {
                let k = xs.len();
                if x <= xs[0] {
                    return values[0];
                }
                if x >= xs[k - 1] {
                    return values[k - 1];
                }
                let j = xs.partition_point(|&t| t <= x);
                let t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
                values[j - 1] + t * (values[j] - values[j - 1])
            }
        }
    }

    /// Breakpoints of `eta * p` relevant to quadrature.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.eta.breakpoints();
        b.extend(self.marginal.kinks());
        b
    }

    /// `theta* = inf { x : eta(x) >= 1/2 }`, by bisection on the support hint.
    pub fn true_mcid(&self) -> Result<f64> {
        if let Eta::Jump { theta0, .. } = self.eta {
            return Ok(theta0);
        }
        let (lo, hi) = self.support_hint;
        let eta_lo = self.eta_unchecked(lo);
        let eta_hi = self.eta_unchecked(hi);
        if eta_lo >= 0.5 || eta_hi < 0.5 {
            return Err(Error::NoRoot { lo, hi, eta_lo, eta_hi });
        }
        Ok(bisect_threshold(|x| self.eta_unchecked(x) >= 0.5, lo, hi, MCID_TOL))
    }

    /// `n` i.i.d. pairs; bit-identical for identical `(scenario, n, seed)`.
    pub fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::validation("n", "sample size must be at least 1"));
        }
        let mut rng = rng_from_seed(seed);
        let samples = (0..n)
            .map(|_| {
                let x = self.marginal.sample(&mut rng);
                let y = if rng.random::<f64>() < self.eta_unchecked(x) {
                    Label::Pos
                } else {
                    Label::Neg
                };
                Sample { x, y }
            })
            .collect();
        Dataset::new(samples)
    }

    /// `(|eta(theta* - eps) - eta(theta*)|, |eta(theta* + eps) - eta(theta*)|)`.
    pub fn eta_gaps(&self, eps: f64) -> Result<(f64, f64)> {
        let t = self.true_mcid()?;
        let mid = self.eta_unchecked(t);
        Ok((
            (self.eta_unchecked(t - eps) - mid).abs(),
            (self.eta_unchecked(t + eps) - mid).abs(),
        ))
    }
}
