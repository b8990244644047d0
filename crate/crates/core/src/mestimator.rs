//! Empirical risk minimization over the order statistics, and the
//! percentile-bootstrap interval built on it.

use crate::data::{derive_seed, rng_from_seed, Dataset, OrderedSample};
use crate::error::{Error, Result};
use crate::numerics::quantile_sorted;

/// Half-open interval `(lo, hi]`; `lo` may be `-inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ThetaInterval {
    pub fn contains(&self, theta: f64) -> bool {
        theta > self.lo && theta <= self.hi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateResult {
    pub theta_hat: f64,
    pub risk_at_min: f64,
    /// Maximal runs of minimizing intervals, left to right.
    pub argmin_intervals: Vec<ThetaInterval>,
}

/// Sentinel gap below the smallest observation: the interquartile range
/// divided by `n`, falling back to the range, then to 1.
fn sentinel_gap(data: &Dataset, ordered: &OrderedSample) -> f64 {
    let mut xs: Vec<f64> = data.xs().collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let iqr = quantile_sorted(&xs, 0.75) - quantile_sorted(&xs, 0.25);
    let (lo, hi) = ordered.range();
    if iqr > 0.0 {
        iqr / n
    } else if hi > lo {
        (hi - lo) / n
    } else {
        1.0
    }
}

/// Distinct sorted `x` values preceded by one point below the minimum.
pub fn candidate_set(data: &Dataset) -> Vec<f64> {
    let ordered = OrderedSample::new(data);
    let g = sentinel_gap(data, &ordered);
    let mut out = Vec::with_capacity(ordered.xs().len() + 1);
    out.push(ordered.xs()[0] - g);
    out.extend_from_slice(ordered.xs());
    out
}

/// Minimizes the empirical risk over the observed range.
///
/// Ties go to the leftmost minimizing run; the estimate is the midpoint of
/// that run after clipping it to `[min x, max x]`.
pub fn m_estimate(data: &Dataset) -> EstimateResult {
    m_estimate_ordered(&OrderedSample::new(data))
}

pub(crate) fn m_estimate_ordered(ordered: &OrderedSample) -> EstimateResult {
    let xs = ordered.xs();
    let k = xs.len();
    // Interval j is (-inf, x[0]] for j = 0 and (x[j-1], x[j]] otherwise; the
    // interval above max x lies outside the data range.
    let losses = &ordered.interval_losses()[..k];
    let best = *losses.iter().min().expect("nonempty");
    let lower = |j: usize| if j == 0 { f64::NEG_INFINITY } else { xs[j - 1] };

    let mut runs = Vec::new();
    let mut j = 0;
    while j < k {
        if losses[j] == best {
            let start = j;
            while j + 1 < k && losses[j + 1] == best {
                j += 1;
            }
            runs.push(ThetaInterval {
                lo: lower(start),
                hi: xs[j],
            });
        }
        j += 1;
    }
    let first = runs[0];
    let theta_hat = if first.lo == f64::NEG_INFINITY {
        0.5 * (xs[0] + first.hi)
    } else {
        0.5 * (first.lo + first.hi)
    };
    EstimateResult {
        theta_hat,
        risk_at_min: f64::from(best) / ordered.n() as f64,
        argmin_intervals: runs,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    /// Sorted bootstrap replicates of the M-estimate.
    pub replicates: Vec<f64>,
}

/// Percentile bootstrap: case resampling, `(alpha/2, 1 - alpha/2)` quantiles.
/// Replicate `b` draws from a seed derived from `(seed, b)`.
pub fn bootstrap_ci(data: &Dataset, b: usize, alpha: f64, seed: u64) -> Result<BootstrapInterval> {
    bootstrap_ci_ordered(&OrderedSample::new(data), b, alpha, seed)
}

pub(crate) fn bootstrap_ci_ordered(
    ordered: &OrderedSample,
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<BootstrapInterval> {
    if b == 0 {
        return Err(Error::validation("B", "need at least one bootstrap replicate"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::validation("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let mut reps: Vec<f64> = (0..b)
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            m_estimate_ordered(&ordered.resample(&mut rng)).theta_hat
        })
        .collect();
    reps.sort_by(f64::total_cmp);
    Ok(BootstrapInterval {
        lo: quantile_sorted(&reps, alpha / 2.0),
        hi: quantile_sorted(&reps, 1.0 - alpha / 2.0),
        level: 1.0 - alpha,
        replicates: reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Label, Sample};
    use crate::risk::empirical_risk;
    use crate::scenarios::Scenario;
    use proptest::prelude::*;

    fn ds(pairs: &[(f64, i8)]) -> Dataset {
        Dataset::from_pairs(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn candidate_examples() {
        let c = candidate_set(&ds(&[(3.0, 1), (1.0, -1), (2.0, 1)]));
        assert_eq!(&c[1..], &[1.0, 2.0, 3.0]);
        assert!(c[0] < 1.0);
        let c = candidate_set(&ds(&[(1.0, 1), (1.0, -1), (2.0, 1)]));
        assert_eq!(&c[1..], &[1.0, 2.0]);
        assert!(c[0] < 1.0);
        let c = candidate_set(&ds(&[(0.0, 1)]));
        assert_eq!(c.len(), 2);
        assert!(c[0] < 0.0 && c[1] == 0.0);
    }

    #[test]
    fn separable_data() {
        let r = m_estimate(&ds(&[(-1.0, -1), (1.0, 1)]));
        assert_eq!(r.theta_hat, 0.0);
        assert_eq!(r.risk_at_min, 0.0);
        assert_eq!(r.argmin_intervals, vec![ThetaInterval { lo: -1.0, hi: 1.0 }]);
    }

    #[test]
    fn single_positive_point() {
        let r = m_estimate(&ds(&[(0.0, 1)]));
        assert_eq!(r.theta_hat, 0.0);
        assert_eq!(r.risk_at_min, 0.0);
    }

    /// Exhaustive grid minimization; the oracle for the candidate search.
    fn grid_oracle(data: &Dataset, step: f64) -> (f64, Vec<f64>, Vec<f64>) {
        let (lo, hi) = data.range();
        let k = ((hi - lo) / step).ceil() as usize;
        let grid: Vec<f64> = (0..=k).map(|i| (lo + i as f64 * step).min(hi)).collect();
        let risks: Vec<f64> = grid.iter().map(|&t| empirical_risk(t, data)).collect();
        let best = risks.iter().copied().fold(f64::INFINITY, f64::min);
        (best, grid, risks)
    }

    #[test]
    fn example2_twenty_points_match_grid_oracle() {
        let data = Scenario::builtin("example2").unwrap().generate(20, 77).unwrap();
        let est = m_estimate(&data);
        let (best, grid, risks) = grid_oracle(&data, 1e-4);
        assert_eq!(est.risk_at_min, best);
        assert_eq!(empirical_risk(est.theta_hat, &data), best);
        // The first grid minimizer and theta_hat sit in one minimizing run.
        let g = grid[risks.iter().position(|&r| r == best).unwrap()];
        let (a, b) = if g < est.theta_hat { (g, est.theta_hat) } else { (est.theta_hat, g) };
        for (t, r) in grid.iter().zip(&risks) {
            if *t >= a && *t <= b {
                assert_eq!(*r, best);
            }
        }
    }

    #[test]
    fn bootstrap_is_deterministic_and_ordered() {
        let data = Scenario::builtin("example2").unwrap().generate(200, 5).unwrap();
        let a = bootstrap_ci(&data, 200, 0.1, 9).unwrap();
        let b = bootstrap_ci(&data, 200, 0.1, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.lo <= a.hi);
        assert!(bootstrap_ci(&data, 0, 0.1, 9).is_err());
        assert!(bootstrap_ci(&data, 10, 1.0, 9).is_err());
    }

    #[test]
    fn bootstrap_on_wide_margin_stays_in_gap() {
        let mut pairs = Vec::new();
        for i in 0..30 {
            pairs.push((-10.0 - i as f64 * 0.1, -1));
            pairs.push((10.0 + i as f64 * 0.1, 1));
        }
        let data = ds(&pairs);
        let ci = bootstrap_ci(&data, 300, 0.1, 1).unwrap();
        assert!(ci.replicates.iter().all(|&t| t > -10.0 && t <= 10.0));
    }

    proptest! {
        #[test]
        fn argmin_invariants(pts in prop::collection::vec((-20i32..20, prop::bool::ANY), 1..50)) {
            let data = Dataset::from_pairs(pts.iter().map(|&(x, p)| (x as f64 * 0.25, if p { 1 } else { -1 }))).unwrap();
            let est = m_estimate(&data);
            prop_assert_eq!(empirical_risk(est.theta_hat, &data), est.risk_at_min);
            prop_assert!(est.argmin_intervals.iter().any(|i| i.contains(est.theta_hat)));
            let (lo, hi) = data.range();
            prop_assert!(est.theta_hat >= lo && est.theta_hat <= hi);
            let min_cand = candidate_set(&data)
                .iter()
                .map(|&t| empirical_risk(t, &data))
                .fold(f64::INFINITY, f64::min);
            prop_assert_eq!(min_cand, est.risk_at_min);
        }

        #[test]
        fn reflection(xs in prop::collection::btree_set(-500i32..500, 2..40), labels in prop::collection::vec(prop::bool::ANY, 40)) {
            let samples: Vec<Sample> = xs
                .iter()
                .zip(&labels)
                .map(|(&x, &p)| Sample { x: x as f64 / 10.0, y: if p { Label::Pos } else { Label::Neg } })
                .collect();
            let data = Dataset::new(samples.clone()).unwrap();
            let est = m_estimate(&data);
            prop_assume!(data.xs().all(|x| x != est.theta_hat));
            let mirrored = Dataset::new(
                samples
                    .iter()
                    .map(|s| Sample { x: -s.x, y: if s.y == Label::Pos { Label::Neg } else { Label::Pos } })
                    .collect(),
            )
            .unwrap();
            prop_assert_eq!(empirical_risk(-est.theta_hat, &mirrored), est.risk_at_min);
        }
    }
}
