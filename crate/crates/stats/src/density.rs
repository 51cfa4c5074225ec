//! Two-dimensional binned counts, e.g. entropy change against occupation.

use serde::{Deserialize, Serialize};

use crate::error::{Result, StatsError};
use crate::histogram::{locate, validate_edges};

/// How a [`DensityMap`] is scaled for display.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Divide by the largest cell.
    #[default]
    GlobalMax,
    /// Divide each x column by its own largest cell.
    PerColumn,
    /// Divide by the number of binned samples.
    Probability,
}

/// Counts `counts[ix][iy]` with the same edge conventions as [`crate::Histogram`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMap {
    x_edges: Vec<f64>,
    y_edges: Vec<f64>,
    counts: Vec<Vec<u64>>,
    outside: u64,
    total: u64,
}

impl DensityMap {
    pub fn new(x_edges: Vec<f64>, y_edges: Vec<f64>) -> Result<Self> {
        validate_edges(&x_edges)?;
        validate_edges(&y_edges)?;
        let counts = vec![vec![0; y_edges.len() - 1]; x_edges.len() - 1];
        Ok(Self {
            x_edges,
            y_edges,
            counts,
            outside: 0,
            total: 0,
        })
    }

    pub fn add(&mut self, x: f64, y: f64) {
        self.total += 1;
        if !(x.is_finite() && y.is_finite()) {
            self.outside += 1;
            return;
        }
        match (locate(&self.x_edges, x), locate(&self.y_edges, y)) {
            (Ok(i), Ok(j)) => self.counts[i][j] += 1,
            _ => self.outside += 1,
        }
    }

    pub fn merge(&mut self, other: &DensityMap) -> Result<()> {
        if self.x_edges != other.x_edges || self.y_edges != other.y_edges {
            return Err(StatsError::EdgeMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.outside += other.outside;
        self.total += other.total;
        Ok(())
    }

    pub fn x_edges(&self) -> &[f64] {
        &self.x_edges
    }

    pub fn y_edges(&self) -> &[f64] {
        &self.y_edges
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn outside(&self) -> u64 {
        self.outside
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Scaled copy of the counts; all zero when the map is empty.
    pub fn normalized(&self, mode: Normalization) -> Vec<Vec<f64>> {
        let scale = |col: &[u64], denom: u64| -> Vec<f64> {
            col.iter()
                .map(|&c| if denom == 0 { 0.0 } else { c as f64 / denom as f64 })
                .collect()
        };
        match mode {
            Normalization::GlobalMax => {
                let max = self.counts.iter().flatten().copied().max().unwrap_or(0);
                self.counts.iter().map(|c| scale(c, max)).collect()
            }
            Normalization::PerColumn => self
                .counts
                .iter()
                .map(|c| scale(c, c.iter().copied().max().unwrap_or(0)))
                .collect(),
            Normalization::Probability => {
                let n: u64 = self.counts.iter().flatten().sum();
                self.counts.iter().map(|c| scale(c, n)).collect()
            }
        }
    }
}

/// Bins all pairs at once.
pub fn density_map(pairs: &[(f64, f64)], x_edges: Vec<f64>, y_edges: Vec<f64>) -> Result<DensityMap> {
    let mut m = DensityMap::new(x_edges, y_edges)?;
    for &(x, y) in pairs {
        m.add(x, y);
    }
    Ok(m)
}
