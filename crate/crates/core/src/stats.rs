//! Replication bookkeeping: running moments, confidence intervals and the
//! batched parallel driver shared by every Monte Carlo estimator.

use std::fmt;

use rayon::prelude::*;

use crate::error::Result;
use crate::stream::RandomStream;

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Replications per parallel work item. Fixed so that the merge order, and
/// hence every floating-point result, is independent of the thread count.
const BATCH: u64 = 1024;

/// Partial results that can be combined. Merging must be associative.
pub trait Merge {
    fn merge(&mut self, other: Self);
}

/// Welford running mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (0 for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.count > 1 {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        } else {
            0.0
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

impl Merge for Moments {
    fn merge(&mut self, other: Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other;
            return;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let n = n1 + n2;
        let delta = other.mean - self.mean;
        self.mean += delta * n2 / n;
        self.m2 += other.m2 + delta * delta * n1 * n2 / n;
        self.count += other.count;
    }
}

impl Merge for Vec<Moments> {
    fn merge(&mut self, other: Self) {
        if self.is_empty() {
            *self = other;
            return;
        }
        for (a, b) in self.iter_mut().zip(other) {
            a.merge(b);
        }
    }
}

/// Moments of a pair `(y, z)` for ratio estimators `E y / E z`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairMoments {
    count: u64,
    mean_y: f64,
    mean_z: f64,
    m2_y: f64,
    m2_z: f64,
    c_yz: f64,
}

impl PairMoments {
    pub fn push(&mut self, y: f64, z: f64) {
        self.count += 1;
        let n = self.count as f64;
        let dy = y - self.mean_y;
        let dz = z - self.mean_z;
        self.mean_y += dy / n;
        self.mean_z += dz / n;
        self.m2_y += dy * (y - self.mean_y);
        self.m2_z += dz * (z - self.mean_z);
        self.c_yz += dy * (z - self.mean_z);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn ratio(&self) -> f64 {
        self.mean_y / self.mean_z
    }

    /// Delta-method standard error of `mean_y / mean_z`.
    pub fn ratio_std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let r = self.ratio();
        let var = (self.m2_y - 2.0 * r * self.c_yz + r * r * self.m2_z) / (n - 1.0);
        (var.max(0.0) / n).sqrt() / self.mean_z.abs()
    }
}

impl Merge for PairMoments {
    fn merge(&mut self, other: Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other;
            return;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let n = n1 + n2;
        let dy = other.mean_y - self.mean_y;
        let dz = other.mean_z - self.mean_z;
        let w = n1 * n2 / n;
        self.m2_y += other.m2_y + dy * dy * w;
        self.m2_z += other.m2_z + dz * dz * w;
        self.c_yz += other.c_yz + dy * dz * w;
        self.mean_y += dy * n2 / n;
        self.mean_z += dz * n2 / n;
        self.count += other.count;
    }
}

/// Run `reps` replications, replication `i` drawing from substream
/// `(seed, i)`, and merge the per-batch accumulators in index order.
pub fn replicate<A, I, F>(reps: u64, seed: u64, init: I, body: F) -> Result<A>
where
    A: Merge + Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut RandomStream, &mut A) -> Result<()> + Sync,
{
    let batches = reps.div_ceil(BATCH);
    let parts: Vec<Result<A>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut acc = init();
            let end = ((b + 1) * BATCH).min(reps);
            for i in b * BATCH..end {
                let mut stream = RandomStream::substream(seed, i);
                body(&mut stream, &mut acc)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = init();
    for part in parts {
        total.merge(part?);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Crude,
    ImportanceSampling,
    Conditional,
    Ladder,
    Lindley,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Crude => "crude",
            Method::ImportanceSampling => "is",
            Method::Conditional => "cond",
            Method::Ladder => "ladder",
            Method::Lindley => "lindley",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A Monte Carlo point estimate with its uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub reps: u64,
    pub seed: u64,
    pub method: Method,
    /// Per-replication sample variance of the estimator.
    pub sample_variance: f64,
    /// Set when the estimate is known to be biased low (finite horizon).
    pub biased_low: bool,
    pub warnings: Vec<String>,
}

impl EstimateResult {
    /// Mean estimate with a normal-approximation 95% interval.
    pub fn from_moments(m: &Moments, seed: u64, method: Method) -> Self {
        let se = m.std_error();
        Self {
            estimate: m.mean(),
            std_error: se,
            ci_lo: m.mean() - Z95 * se,
            ci_hi: m.mean() + Z95 * se,
            reps: m.count(),
            seed,
            method,
            sample_variance: m.variance(),
            biased_low: false,
            warnings: Vec::new(),
        }
    }

    /// Indicator-mean estimate with binomial standard error and a Wilson
    /// 95% interval.
    pub fn from_indicator(m: &Moments, seed: u64, method: Method) -> Self {
        let n = m.count() as f64;
        let p = m.mean();
        let se = if n > 0.0 {
            (p * (1.0 - p) / n).max(0.0).sqrt()
        } else {
            0.0
        };
        let (lo, hi) = wilson_interval(p, n, Z95);
        Self {
            estimate: p,
            std_error: se,
            ci_lo: lo.min(p),
            ci_hi: hi.max(p),
            reps: m.count(),
            seed,
            method,
            sample_variance: m.variance(),
            biased_low: false,
            warnings: Vec::new(),
        }
    }

    /// `std_error / estimate`, infinite for a zero estimate.
    pub fn relative_error(&self) -> f64 {
        if self.estimate == 0.0 {
            f64::INFINITY
        } else {
            self.std_error / self.estimate.abs()
        }
    }

    /// True when the two 95% intervals intersect.
    pub fn overlaps(&self, other: &EstimateResult) -> bool {
        self.ci_lo <= other.ci_hi && other.ci_lo <= self.ci_hi
    }
}

pub fn wilson_interval(p: f64, n: f64, z: f64) -> (f64, f64) {
    if n <= 0.0 {
        return (0.0, 1.0);
    }
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).max(0.0).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}
