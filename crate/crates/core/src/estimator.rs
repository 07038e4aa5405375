//! Hutchinson estimators.
//!
//! The n-sample estimate is reduced over a binary tree whose shape depends
//! only on `n` (every node splits its index range at the midpoint). Each
//! node merges mean, M2, min and max, so the result is bit-identical no
//! matter how many threads evaluate the leaves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::operator::{check_len, SymmetricOperator};
use crate::sampler::SampleStream;

/// Ranges at or below this many samples are evaluated on one thread.
const SEQUENTIAL_GRAIN: u64 = 128;

/// One-shot estimate `zᵀ(Az)` for a sign vector `z`.
pub fn quadratic_form(op: &dyn SymmetricOperator, z: &[f64]) -> Result<f64> {
    check_len(op.dim(), z.len())?;
    if let Some(j) = z.iter().position(|&x| x != 1.0 && x != -1.0) {
        return Err(Error::domain(format!("probe entry {j} is {}, expected ±1", z[j])));
    }
    let mut az = vec![0.0; z.len()];
    op.apply_into(z, &mut az);
    Ok(numeric::dot(z, &az))
}

/// Streaming first and second moments with extrema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    /// Sum of squared deviations from the mean.
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for Moments {
    fn default() -> Self {
        Self { count: 0, mean: 0.0, m2: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY }
    }
}

impl Moments {
    pub fn single(x: f64) -> Self {
        Self { count: 1, mean: x, m2: 0.0, min: x, max: x }
    }

    /// Welford update.
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    /// Chan et al. combination of two disjoint batches.
    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * (nb / n),
            m2: self.m2 + other.m2 + delta * delta * (na * nb / n),
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    /// Unbiased sample variance, 0 below two observations.
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// Reduces a slice with the midpoint-split tree.
    pub fn from_slice(xs: &[f64]) -> Moments {
        match xs.len() {
            0 => Moments::default(),
            1 => Moments::single(xs[0]),
            len => {
                let (lo, hi) = xs.split_at(len / 2);
                Moments::from_slice(lo).merge(&Moments::from_slice(hi))
            }
        }
    }
}

/// Result of the n-sample estimator. Field order fixes the JSON layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub n: u64,
    #[serde(rename = "estimate")]
    pub mean: f64,
    pub sample_variance: f64,
    pub seed: u64,
    pub min_q: f64,
    pub max_q: f64,
}

impl TraceEstimate {
    pub fn standard_error(&self) -> f64 {
        (self.sample_variance / self.n as f64).sqrt()
    }
}

/// Average of `zᵢᵀAzᵢ` over probes `i = 0..n` drawn under `seed`.
pub fn estimate_trace(op: &dyn SymmetricOperator, n: u64, seed: u64) -> Result<TraceEstimate> {
    if n == 0 {
        return Err(Error::domain("sample count n must be at least 1"));
    }
    if op.dim() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let moments = reduce(op, seed, 0, n);
    debug_assert_eq!(moments.count, n);
    Ok(TraceEstimate {
        n,
        mean: moments.mean,
        sample_variance: moments.sample_variance(),
        seed,
        min_q: moments.min,
        max_q: moments.max,
    })
}

fn reduce(op: &dyn SymmetricOperator, seed: u64, lo: u64, hi: u64) -> Moments {
    let len = hi - lo;
    if len <= SEQUENTIAL_GRAIN {
        let m = op.dim();
        let (mut z, mut az) = (vec![0.0; m], vec![0.0; m]);
        let qs: Vec<f64> = (lo..hi)
            .map(|index| {
                SampleStream::new(seed, index).fill(&mut z);
                op.apply_into(&z, &mut az);
                numeric::dot(&z, &az)
            })
            .collect();
        return Moments::from_slice(&qs);
    }
    let mid = lo + len / 2;
    let (a, b) = rayon::join(|| reduce(op, seed, lo, mid), || reduce(op, seed, mid, hi));
    a.merge(&b)
}

/// `estimate / true_trace − 1`.
pub fn relative_error(estimate: f64, true_trace: f64) -> Result<f64> {
    if true_trace > 0.0 {
        Ok(estimate / true_trace - 1.0)
    } else {
        Err(Error::NonPositiveTrace(true_trace))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMeasurement {
    pub estimate: f64,
    pub true_trace: f64,
    pub relative_error: f64,
}

impl ErrorMeasurement {
    pub fn new(estimate: f64, true_trace: f64) -> Result<Self> {
        Ok(Self { estimate, true_trace, relative_error: relative_error(estimate, true_trace)? })
    }

    /// Uses the operator's trace hint; refuses operators without one.
    pub fn for_operator(op: &dyn SymmetricOperator, estimate: f64) -> Result<Self> {
        let trace = op.trace_hint().ok_or(Error::UnknownTrace)?;
        Self::new(estimate, trace)
    }
}
