//! Labeled samples and the sorted, count-compressed form used by every
//! risk-based computation.

use rand::Rng;

use crate::error::{Error, Result};

/// Patient-reported outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn from_sign(y: i8) -> Result<Self> {
        match y {
            1 => Ok(Label::Pos),
            -1 => Ok(Label::Neg),
            other => Err(Error::validation("y", format!("label must be -1 or +1, got {other}"))),
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub y: Label,
}

/// A nonempty list of `(x, y)` pairs with finite `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::validation("data", "dataset must contain at least one sample"));
        }
        if let Some(i) = samples.iter().position(|s| !s.x.is_finite()) {
            return Err(Error::validation("x", format!("sample {i} has non-finite x")));
        }
        Ok(Self { samples })
    }

    /// Builds a dataset from raw pairs, validating every label.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, i8)>,
    {
        let samples = pairs
            .into_iter()
            .map(|(x, y)| Label::from_sign(y).map(|y| Sample { x, y }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.x)
    }

    /// `[min x, max x]`.
    pub fn range(&self) -> (f64, f64) {
        self.xs()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    }

    /// Case resample: `n` pairs drawn jointly with replacement.
    pub fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> Dataset {
        let n = self.samples.len();
        let samples = (0..n).map(|_| self.samples[rng.random_range(0..n)]).collect();
        Dataset { samples }
    }
}

/// The dataset sorted by `x` with tied points merged: for each distinct `x`
/// the number of positive and negative labels observed there.
///
/// The empirical risk is constant on each half-open interval
/// `(x[j-1], x[j]]`, so everything risk-related can be computed from this
/// form in linear time.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedSample {
    xs: Vec<f64>,
    pos: Vec<u32>,
    neg: Vec<u32>,
    n: u32,
}

impl OrderedSample {
    pub fn new(data: &Dataset) -> Self {
        let mut sorted: Vec<Sample> = data.samples().to_vec();
        sorted.sort_by(|a, b| a.x.total_cmp(&b.x));
        let mut xs = Vec::new();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for s in &sorted {
            if xs.last() != Some(&s.x) {
                xs.push(s.x);
                pos.push(0);
                neg.push(0);
            }
            let j = xs.len() - 1;
            match s.y {
                Label::Pos => pos[j] += 1,
                Label::Neg => neg[j] += 1,
            }
        }
        Self {
            xs,
            pos,
            neg,
            n: data.len() as u32,
        }
    }

    /// Resamples `n` points with replacement from this sample's underlying
    /// points. The result stays sorted, so no re-sort is needed.
    pub fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> OrderedSample {
        let n = self.n as usize;
        // Points are enumerated group by group: positives first, then negatives.
        let mut hits = vec![0u32; n];
        for _ in 0..n {
            hits[rng.random_range(0..n)] += 1;
        }
        let mut xs = Vec::with_capacity(self.xs.len());
        let mut pos = Vec::with_capacity(self.xs.len());
        let mut neg = Vec::with_capacity(self.xs.len());
        let mut point = 0usize;
        for j in 0..self.xs.len() {
            let mut p = 0u32;
            let mut q = 0u32;
            for _ in 0..self.pos[j] {
                p += hits[point];
                point += 1;
            }
            for _ in 0..self.neg[j] {
                q += hits[point];
                point += 1;
            }
            if p + q > 0 {
                xs.push(self.xs[j]);
                pos.push(p);
                neg.push(q);
            }
        }
        OrderedSample {
            xs,
            pos,
            neg,
            n: self.n,
        }
    }

    /// Distinct sorted x values.
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Misclassification counts on the intervals `(-inf, x[0]]`,
    /// `(x[0], x[1]]`, ..., `(x[k-2], x[k-1]]`, `(x[k-1], inf)`; `k + 1` entries.
    ///
    /// On `(x[j-1], x[j]]` every point with `x >= x[j]` is predicted
    /// positive (sign(0) = 1) and every point below is predicted negative.
    pub fn interval_losses(&self) -> Vec<u32> {
        let k = self.xs.len();
        let mut out = Vec::with_capacity(k + 1);
        let mut loss: u32 = self.neg.iter().sum();
        out.push(loss);
        for j in 0..k {
            loss = loss + self.pos[j] - self.neg[j];
            out.push(loss);
        }
        out
    }
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable seed derivation from a parent seed and a stream index.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Stable hash of `(master, label, n, rep)`; independent of platform and
/// of the order in which replications are executed.
pub fn replication_seed(master: u64, label: &str, n: usize, rep: usize) -> u64 {
    // FNV-1a over the label bytes.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let s = derive_seed(master, h);
    let s = derive_seed(s, n as u64);
    derive_seed(s, rep as u64)
}

pub(crate) fn rng_from_seed(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(pairs: &[(f64, i8)]) -> Dataset {
        Dataset::from_pairs(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn rejects_bad_labels_and_empty() {
        assert!(Dataset::from_pairs([(0.0, 0)]).is_err());
        assert!(Dataset::from_pairs([(0.0, 2)]).is_err());
        assert!(Dataset::from_pairs(Vec::<(f64, i8)>::new()).is_err());
        assert!(Dataset::from_pairs([(f64::NAN, 1)]).is_err());
    }

    #[test]
    fn ordered_merges_ties() {
        let o = OrderedSample::new(&ds(&[(1.0, 1), (1.0, -1), (2.0, 1), (0.5, -1)]));
        assert_eq!(o.xs(), &[0.5, 1.0, 2.0]);
        assert_eq!(o.n(), 4);
        // (-inf,0.5]: all predicted +1 -> 2 negatives wrong.
        // (0.5,1]: 0.5 predicted -1 (correct) -> 1 wrong.
        // (1,2]: the two at 1.0 predicted -1 -> the positive wrong.
        // (2,inf): everything predicted -1 -> 2 positives wrong.
        assert_eq!(o.interval_losses(), vec![2, 1, 1, 2]);
    }

    #[test]
    fn ordered_resample_keeps_total_and_order() {
        let data = ds(&[(3.0, 1), (1.0, -1), (2.0, 1), (2.0, -1), (5.0, 1)]);
        let o = OrderedSample::new(&data);
        let mut rng = rng_from_seed(9);
        for _ in 0..50 {
            let r = o.resample(&mut rng);
            assert_eq!(r.n(), 5);
            assert!(r.xs().windows(2).all(|w| w[0] < w[1]));
            let total: u32 = r.pos.iter().chain(r.neg.iter()).sum();
            assert_eq!(total, 5);
        }
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(replication_seed(1, "a", 10, 0), replication_seed(1, "a", 10, 0));
        assert_ne!(replication_seed(1, "a", 10, 0), replication_seed(1, "a", 10, 1));
        assert_ne!(replication_seed(1, "a", 10, 0), replication_seed(1, "b", 10, 0));
        assert_ne!(replication_seed(1, "a", 10, 0), replication_seed(1, "a", 11, 0));
    }
}
