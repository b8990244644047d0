//! Gibbs posterior for the MCID.
//!
//! The posterior density is proportional to `exp(-omega * n * R_n(theta))`
//! times the prior, restricted to the observed range `[min x, max x]`.
//! Because `R_n` is a step function with jumps only at sample points, the
//! posterior is a finite mixture of the prior restricted to the intervals
//! between consecutive order statistics. [`ExactPosterior`] holds that
//! mixture; [`sample_metropolis`] targets the same law through the kernel
//! alone and serves as an independent check.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::data::{rng_from_seed, Dataset, OrderedSample};
use crate::error::{Error, Result};
use crate::mestimator::m_estimate;
use crate::numerics::{log_sum_exp, mean, quantile_sorted};
use crate::risk::loss_count;

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Upper tail `1 - Phi(z)`, accurate for large `z`.
fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prior {
    /// Uniform over the observed data range.
    Flat,
    Normal { mu: f64, sigma: f64 },
}

impl Prior {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        let p = Prior::Normal { mu, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Prior::Flat => Ok(()),
            Prior::Normal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::validation("prior.mu", "must be finite"));
                }
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::validation("prior.sigma", format!("must be > 0, got {sigma}")));
                }
                Ok(())
            }
        }
    }

    /// Log density at `theta`, given the data range `(lo, hi)` the flat prior lives on.
    pub fn log_density(&self, theta: f64, range: (f64, f64)) -> f64 {
        match *self {
            Prior::Flat => {
                if theta < range.0 || theta > range.1 {
                    f64::NEG_INFINITY
                } else {
                    -(range.1 - range.0).ln()
                }
            }
            Prior::Normal { mu, sigma } => {
                let z = (theta - mu) / sigma;
                -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
        }
    }

    /// Unnormalized prior mass of `[a, b]`: length for the flat prior.
    fn mass(&self, a: f64, b: f64) -> f64 {
        match *self {
            Prior::Flat => b - a,
            Prior::Normal { mu, sigma } => {
                let (za, zb) = ((a - mu) / sigma, (b - mu) / sigma);
                if za > 0.0 {
                    normal_sf(za) - normal_sf(zb)
                } else {
                    normal_sf(-zb) - normal_sf(-za)
                }
            }
        }
    }

    /// Quantile `u` of the prior restricted to `[a, b]`.
    fn quantile_within(&self, a: f64, b: f64, u: f64) -> f64 {
        match *self {
            Prior::Flat => a + u * (b - a),
            Prior::Normal { mu, sigma } => {
                let total = self.mass(a, b);
                if total <= 0.0 || !total.is_finite() {
                    return a + u * (b - a);
                }
                let target = u * total;
                // Bisection on the restricted CDF; 1e-10 absolute in theta.
                let (mut lo, mut hi) = (a, b);
                while hi - lo > 1e-10 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.mass(a, mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let _ = (mu, sigma);
                0.5 * (lo + hi)
            }
        }
    }

    /// Mean of the prior restricted to `[a, b]`.
    fn mean_within(&self, a: f64, b: f64) -> f64 {
        match *self {
            Prior::Flat => 0.5 * (a + b),
            Prior::Normal { mu, sigma } => {
                let total = self.mass(a, b);
                if total < 1e-300 {
                    return 0.5 * (a + b);
                }
                let (za, zb) = ((a - mu) / sigma, (b - mu) / sigma);
                (mu + sigma * (phi(za) - phi(zb)) / total).clamp(a, b)
            }
        }
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Prior::Flat => write!(f, "flat"),
            Prior::Normal { mu, sigma } => write!(f, "normal:{mu},{sigma}"),
        }
    }
}

impl FromStr for Prior {
    type Err = Error;

    /// `flat` or `normal:mu,sigma`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "flat" {
            return Ok(Prior::Flat);
        }
        let bad = || Error::validation("prior", format!("expected `flat` or `normal:mu,sigma`, got `{s}`"));
        let rest = s.strip_prefix("normal:").ok_or_else(bad)?;
        let (mu, sigma) = rest.split_once(',').ok_or_else(bad)?;
        let mu: f64 = mu.trim().parse().map_err(|_| bad())?;
        let sigma: f64 = sigma.trim().parse().map_err(|_| bad())?;
        Prior::normal(mu, sigma)
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega >= 0.0 {
        Ok(())
    } else {
        Err(Error::validation("omega", format!("loss scale must be finite and >= 0, got {omega}")))
    }
}

/// `-omega * n * R_n(theta) + log prior(theta)`, and `-inf` outside the data range.
pub fn log_kernel(theta: f64, data: &Dataset, omega: f64, prior: &Prior) -> f64 {
    let range = data.range();
    if !(theta >= range.0 && theta <= range.1) {
        return f64::NEG_INFINITY;
    }
    let lp = prior.log_density(theta, range);
    if omega == 0.0 {
        return lp;
    }
    -omega * loss_count(theta, data) as f64 + lp
}

/// The Gibbs posterior as a normalized piecewise law over
/// `(x[j-1], x[j]]`, `j = 1..k`, for the distinct sorted observations `x`.
#[derive(Clone, Debug)]
pub struct ExactPosterior {
    edges: Vec<f64>,
    losses: Vec<u32>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    omega: f64,
    n: usize,
    prior: Prior,
}

impl ExactPosterior {
    pub fn new(data: &Dataset, omega: f64, prior: &Prior) -> Result<Self> {
        Self::from_ordered(&OrderedSample::new(data), omega, prior)
    }

    pub fn from_ordered(ordered: &OrderedSample, omega: f64, prior: &Prior) -> Result<Self> {
        check_omega(omega)?;
        prior.validate()?;
        let edges = ordered.xs().to_vec();
        let k = edges.len();
        let all = ordered.interval_losses();
        let losses: Vec<u32> = all[1..k].to_vec();
        let log_w: Vec<f64> = (1..k)
            .map(|j| {
                let m = prior.mass(edges[j - 1], edges[j]);
                let lm = if m > 0.0 { m.ln() } else { f64::NEG_INFINITY };
                -omega * f64::from(losses[j - 1]) + lm
            })
            .collect();
        let (weights, cumulative) = if k == 1 {
            (Vec::new(), Vec::new())
        } else {
            let total = log_sum_exp(&log_w);
            if !total.is_finite() {
                return Err(Error::Numerical(
                    "posterior mass underflowed on every interval; the prior puts no mass on the data range".into(),
                ));
            }
            let weights: Vec<f64> = log_w.iter().map(|l| (l - total).exp()).collect();
            let mut acc = 0.0;
            let cumulative = weights
                .iter()
                .map(|w| {
                    acc += w;
                    acc
                })
                .collect();
            (weights, cumulative)
        };
        Ok(Self {
            edges,
            losses,
            weights,
            cumulative,
            omega,
            n: ordered.n(),
            prior: *prior,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    /// Data range the posterior lives on.
    pub fn range(&self) -> (f64, f64) {
        (self.edges[0], self.edges[self.edges.len() - 1])
    }

    /// `(lo, hi, mass)` for each interval, left to right.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.edges
            .windows(2)
            .zip(&self.weights)
            .map(|(w, &m)| (w[0], w[1], m))
    }

    /// Empirical risk on each interval.
    pub fn interval_risks(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n as f64;
        self.losses.iter().map(move |&l| f64::from(l) / n)
    }

    /// Total mass of the intervals attaining the minimum empirical risk.
    pub fn argmin_mass(&self) -> f64 {
        match self.losses.iter().min() {
            None => 1.0,
            Some(&best) => self
                .losses
                .iter()
                .zip(&self.weights)
                .filter(|(&l, _)| l == best)
                .map(|(_, w)| w)
                .sum(),
        }
    }

    /// Density at `theta` (zero outside the data range).
    pub fn density(&self, theta: f64) -> f64 {
        let (lo, hi) = self.range();
        if self.weights.is_empty() || theta <= lo || theta > hi {
            return 0.0;
        }
        let j = self.edges.partition_point(|&x| x < theta);
        let (a, b) = (self.edges[j - 1], self.edges[j]);
        let pm = self.prior.mass(a, b);
        if pm <= 0.0 {
            return 0.0;
        }
        let range = self.range();
        self.weights[j - 1] * self.prior.log_density(theta, range).exp() / pm
            * match self.prior {
                // The flat log density is normalized over the range; undo that.
                Prior::Flat => range.1 - range.0,
                Prior::Normal { .. } => 1.0,
            }
    }

    fn locate(&self, u: f64) -> usize {
        self.cumulative
            .partition_point(|&c| c < u)
            .min(self.weights.len() - 1)
    }

    /// Exact posterior quantile.
    pub fn quantile(&self, p: f64) -> f64 {
        if self.weights.is_empty() {
            return self.edges[0];
        }
        let p = p.clamp(0.0, 1.0);
        let j = self.locate(p);
        let before = if j == 0 { 0.0 } else { self.cumulative[j - 1] };
        let w = self.weights[j];
        let u = if w > 0.0 { ((p - before) / w).clamp(0.0, 1.0) } else { 0.5 };
        self.prior.quantile_within(self.edges[j], self.edges[j + 1], u)
    }

    /// Exact posterior mean.
    pub fn mean(&self) -> f64 {
        if self.weights.is_empty() {
            return self.edges[0];
        }
        self.intervals()
            .map(|(a, b, w)| w * self.prior.mean_within(a, b))
            .sum()
    }

    /// Equal-tailed interval from exact quantiles.
    pub fn credible_interval(&self, level: f64) -> (f64, f64) {
        let tail = 0.5 * (1.0 - level);
        (self.quantile(tail), self.quantile(1.0 - tail))
    }

    /// Summary from exact quantiles, without sampling.
    pub fn summary(&self, level: f64) -> PosteriorSummary {
        let (ci_lo, ci_hi) = self.credible_interval(level);
        PosteriorSummary {
            mean: self.mean(),
            ci_lo,
            ci_hi,
            level,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.weights.is_empty() {
            return self.edges[0];
        }
        let j = self.locate(rng.random::<f64>());
        let u: f64 = rng.random();
        self.prior.quantile_within(self.edges[j], self.edges[j + 1], u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerKind {
    Exact,
    Metropolis,
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerKind::Exact => "exact",
            SamplerKind::Metropolis => "metropolis",
        })
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SamplerKind::Exact),
            "metropolis" => Ok(SamplerKind::Metropolis),
            other => Err(Error::validation("sampler", format!("expected exact|metropolis, got `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorDraws {
    pub draws: Vec<f64>,
    pub omega: f64,
    pub sampler: SamplerKind,
    /// Metropolis only.
    pub acceptance_rate: Option<f64>,
    /// Metropolis only: the frozen proposal scale.
    pub step: Option<f64>,
    pub effective_draws: f64,
}

impl PosteriorDraws {
    /// Single-column CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.draws.len() * 20 + 8);
        out.push_str("theta\n");
        for d in &self.draws {
            out.push_str(&d.to_string());
            out.push('\n');
        }
        out
    }
}

/// `m` i.i.d. draws by inverse CDF: interval by weight, then the prior
/// restricted to that interval.
pub fn sample_exact(posterior: &ExactPosterior, m: usize, seed: u64) -> Result<PosteriorDraws> {
    if m == 0 {
        return Err(Error::validation("draws", "need at least one draw"));
    }
    let mut rng = rng_from_seed(seed);
    let draws = (0..m).map(|_| posterior.draw(&mut rng)).collect();
    Ok(PosteriorDraws {
        draws,
        omega: posterior.omega,
        sampler: SamplerKind::Exact,
        acceptance_rate: None,
        step: None,
        effective_draws: m as f64,
    })
}

/// Proposal scale for [`sample_metropolis`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    /// Tuned during burn-in toward 35% acceptance, then frozen.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetropolisConfig {
    pub draws: usize,
    pub burn_in: usize,
    pub step: StepSize,
    /// Keep every `thin`-th state.
    pub thin: usize,
}

impl Default for MetropolisConfig {
    fn default() -> Self {
        Self {
            draws: 10_000,
            burn_in: 2_000,
            step: StepSize::Auto,
            thin: 1,
        }
    }
}

const TARGET_ACCEPTANCE: f64 = 0.35;
const ADAPT_BATCH: usize = 50;

/// Random-walk Metropolis on the Gibbs kernel, started at the M-estimate.
pub fn sample_metropolis(
    data: &Dataset,
    omega: f64,
    prior: &Prior,
    config: &MetropolisConfig,
    seed: u64,
) -> Result<PosteriorDraws> {
    check_omega(omega)?;
    prior.validate()?;
    if config.draws == 0 {
        return Err(Error::validation("draws", "need at least one draw"));
    }
    if config.thin == 0 {
        return Err(Error::validation("thin", "thinning interval must be >= 1"));
    }
    let (lo, hi) = data.range();
    let mut step = match config.step {
        StepSize::Fixed(s) if s > 0.0 && s.is_finite() => s,
        StepSize::Fixed(s) => return Err(Error::validation("step", format!("must be > 0, got {s}"))),
        StepSize::Auto => {
            if hi > lo {
                0.1 * (hi - lo)
            } else {
                1.0
            }
        }
    };
    let mut rng = rng_from_seed(seed);
    let mut theta = m_estimate(data).theta_hat;
    let mut current = log_kernel(theta, data, omega, prior);

    let advance = |theta: &mut f64, current: &mut f64, step: f64, rng: &mut rand_chacha::ChaCha8Rng| -> bool {
        let z: f64 = rng.sample(StandardNormal);
        let proposal = *theta + step * z;
        let lk = log_kernel(proposal, data, omega, prior);
        if lk == f64::NEG_INFINITY {
            return false;
        }
        let accept = lk >= *current || rng.random::<f64>().ln() < lk - *current;
        if accept {
            *theta = proposal;
            *current = lk;
        }
        accept
    };

    let mut batch_accepts = 0usize;
    for i in 0..config.burn_in {
        if advance(&mut theta, &mut current, step, &mut rng) {
            batch_accepts += 1;
        }
        if config.step == StepSize::Auto && (i + 1) % ADAPT_BATCH == 0 {
            let rate = batch_accepts as f64 / ADAPT_BATCH as f64;
            let batch = ((i + 1) / ADAPT_BATCH) as f64;
            step *= ((rate - TARGET_ACCEPTANCE) * 3.0 / batch.sqrt()).exp();
            batch_accepts = 0;
        }
    }

    let mut draws = Vec::with_capacity(config.draws);
    let mut accepted = 0usize;
    let total = config.draws * config.thin;
    for i in 0..total {
        if advance(&mut theta, &mut current, step, &mut rng) {
            accepted += 1;
        }
        if (i + 1) % config.thin == 0 {
            draws.push(theta);
        }
    }
    if accepted == 0 && hi > lo {
        return Err(Error::Mixing(format!(
            "no proposals accepted in {total} retained iterations (step {step:e}, omega {omega})"
        )));
    }
    let effective = effective_sample_size(&draws);
    Ok(PosteriorDraws {
        draws,
        omega,
        sampler: SamplerKind::Metropolis,
        acceptance_rate: Some(accepted as f64 / total as f64),
        step: Some(step),
        effective_draws: effective,
    })
}

/// Effective sample size from the initial positive sequence of
/// autocorrelation pairs.
pub fn effective_sample_size(chain: &[f64]) -> f64 {
    let n = chain.len();
    if n < 4 {
        return n as f64;
    }
    let m = mean(chain);
    let var: f64 = chain.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return n as f64;
    }
    let acf = |lag: usize| -> f64 {
        chain[..n - lag]
            .iter()
            .zip(&chain[lag..])
            .map(|(a, b)| (a - m) * (b - m))
            .sum::<f64>()
            / (n as f64 * var)
    };
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = acf(lag) + acf(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    (n as f64 / tau.max(1.0)).min(n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub level: f64,
}

impl PosteriorSummary {
    pub fn length(&self) -> f64 {
        self.ci_hi - self.ci_lo
    }

    pub fn covers(&self, theta: f64) -> bool {
        self.ci_lo <= theta && theta <= self.ci_hi
    }

    pub const CSV_HEADER: &'static str = "method,mean,lo,hi,level,omega";

    pub fn csv_row(&self, method: &str, omega: f64) -> String {
        format!("{method},{},{},{},{},{omega}", self.mean, self.ci_lo, self.ci_hi, self.level)
    }
}

/// Draw mean and equal-tailed empirical quantile interval.
pub fn summarize(draws: &PosteriorDraws, level: f64) -> Result<PosteriorSummary> {
    summarize_values(&draws.draws, level)
}

pub fn summarize_values(draws: &[f64], level: f64) -> Result<PosteriorSummary> {
    if draws.len() < 100 {
        return Err(Error::validation("draws", format!("need at least 100 draws, got {}", draws.len())));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::validation("level", format!("must lie in (0, 1), got {level}")));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    Ok(PosteriorSummary {
        mean: mean(draws),
        ci_lo: quantile_sorted(&sorted, tail),
        ci_hi: quantile_sorted(&sorted, 1.0 - tail),
        level,
    })
}
