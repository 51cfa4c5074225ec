//! One-dimensional binned counts with exact merge semantics.

use serde::{Deserialize, Serialize};

use crate::error::{Result, StatsError};

/// Bins are `[e_k, e_{k+1})`, except the last which is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
    /// Non-finite samples.
    invalid: u64,
    total: u64,
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 || edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(StatsError::InvalidEdges);
    }
    Ok(())
}

/// Index of the bin holding `x`; `Err(false)` below range, `Err(true)` above.
pub(crate) fn locate(edges: &[f64], x: f64) -> std::result::Result<usize, bool> {
    let last = edges.len() - 1;
    if x < edges[0] {
        return Err(false);
    }
    if x > edges[last] {
        return Err(true);
    }
    if x == edges[last] {
        return Ok(last - 1);
    }
    // first edge strictly greater than x
    Ok(edges.partition_point(|&e| e <= x) - 1)
}

pub(crate) fn validate_edges(edges: &[f64]) -> Result<()> {
    check_edges(edges)
}

impl Histogram {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        check_edges(&edges)?;
        let bins = edges.len() - 1;
        Ok(Self {
            edges,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
            invalid: 0,
            total: 0,
        })
    }

    /// `bins` equal-width bins over `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        Self::new(uniform_edges(lo, hi, bins)?)
    }

    pub fn add(&mut self, x: f64) {
        self.total += 1;
        if !x.is_finite() {
            self.invalid += 1;
            return;
        }
        match locate(&self.edges, x) {
            Ok(k) => self.counts[k] += 1,
            Err(false) => self.underflow += 1,
            Err(true) => self.overflow += 1,
        }
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, samples: I) {
        for x in samples {
            self.add(x);
        }
    }

    /// Count-wise addition; edges must match exactly.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.edges != other.edges {
            return Err(StatsError::EdgeMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        self.invalid += other.invalid;
        self.total += other.total;
        Ok(())
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    pub fn invalid(&self) -> u64 {
        self.invalid
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Samples that landed in a bin.
    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Probability density over the in-range samples; integrates to 1.
    pub fn density(&self) -> Vec<f64> {
        let n = self.in_range();
        if n == 0 {
            return vec![0.0; self.bins()];
        }
        self.counts
            .iter()
            .zip(self.widths())
            .map(|(&c, w)| c as f64 / (n as f64 * w))
            .collect()
    }

    /// Rows `(bin_lo, bin_hi, count, density)`.
    pub fn rows(&self) -> Vec<(f64, f64, u64, f64)> {
        self.edges
            .windows(2)
            .zip(&self.counts)
            .zip(self.density())
            .map(|((w, &c), d)| (w[0], w[1], c, d))
            .collect()
    }

    /// Same counts with every edge multiplied by `factor > 0`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(StatsError::Degenerate(format!("scale factor {factor}")));
        }
        let mut out = self.clone();
        out.edges.iter_mut().for_each(|e| *e *= factor);
        Ok(out)
    }
}

/// Bins all samples at once.
pub fn accumulate_histogram(samples: &[f64], edges: Vec<f64>) -> Result<Histogram> {
    let mut h = Histogram::new(edges)?;
    h.extend(samples.iter().copied());
    Ok(h)
}

pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(StatsError::InvalidEdges);
    }
    let w = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|k| lo + w * k as f64).collect();
    edges[bins] = hi;
    Ok(edges)
}

/// Default number of bins.
pub const DEFAULT_BINS: usize = 201;
/// Tail mass cut on each side when choosing the default range.
pub const DEFAULT_TAIL: f64 = 0.0005;

/// Empirical quantile by linear interpolation of the sorted sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < n {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[n - 1]
    }
}

/// 201 uniform bins over the 0.05 %–99.95 % quantile range. With `symmetric`
/// the range is `[−m, m]`, `m` the larger quantile magnitude, so that an odd
/// bin count puts zero at the center of the middle bin.
pub fn default_edges(samples: &[f64], symmetric: bool) -> Result<Vec<f64>> {
    let mut sorted: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    if sorted.is_empty() {
        return Err(StatsError::Degenerate("no finite samples".into()));
    }
    sorted.sort_by(f64::total_cmp);
    let lo = quantile(&sorted, DEFAULT_TAIL);
    let hi = quantile(&sorted, 1.0 - DEFAULT_TAIL);
    let (lo, hi) = if symmetric {
        let m = lo.abs().max(hi.abs());
        (-m, m)
    } else {
        (lo, hi)
    };
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1e-12 } else { lo.abs() * 1e-6 };
        (lo - pad, hi + pad)
    };
    uniform_edges(lo, hi, DEFAULT_BINS)
}
