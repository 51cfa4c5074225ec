//! Ensemble observables built from trajectory records.

use serde::{Deserialize, Serialize};

use fermitraj::{mutual_information, CorrelationMatrix, Region};

use crate::error::{Result, StatsError};
use crate::histogram::Histogram;
use crate::resample::{jackknife, Estimate};

const LOG_CLAMP: f64 = 1e-12;

/// Largest entropy drop a single jump on a site with occupation `n` can cause.
///
/// `−ln 2` for `n < 1/2`, otherwise `n ln n + (1 − n) ln(1 − n)`.
pub fn toy_envelope(n: f64) -> f64 {
    let n = n.clamp(0.0, 1.0);
    if n < 0.5 {
        return -std::f64::consts::LN_2;
    }
    let xlnx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.max(LOG_CLAMP).ln() };
    xlnx(n) + xlnx(1.0 - n)
}

/// Per-trajectory sums feeding [`balance_statistics`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BalancePartial {
    /// Window events.
    pub events: u64,
    /// `Σ ΔS_meas`.
    pub meas_sum: f64,
    /// `Σ τ`.
    pub tau_sum: f64,
    /// `Σ δS_between` over events whose rate is defined.
    pub rate_sum: f64,
    pub rate_count: u64,
}

impl BalancePartial {
    pub fn add(&mut self, meas: f64, tau: f64, rate: Option<f64>) {
        self.events += 1;
        self.meas_sum += meas;
        self.tau_sum += tau;
        if let Some(r) = rate {
            self.rate_sum += r;
            self.rate_count += 1;
        }
    }

    pub fn merge(&mut self, o: &BalancePartial) {
        self.events += o.events;
        self.meas_sum += o.meas_sum;
        self.tau_sum += o.tau_sum;
        self.rate_sum += o.rate_sum;
        self.rate_count += o.rate_count;
    }

    fn to_vec(self) -> Vec<f64> {
        vec![
            self.events as f64,
            self.meas_sum,
            self.tau_sum,
            self.rate_sum,
            self.rate_count as f64,
        ]
    }
}

/// `⟨δS_between⟩` against `⟨ΔS_meas⟩ / τ̄` with jackknife errors over trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Balance {
    pub events: u64,
    pub mean_between_rate: Estimate,
    pub mean_meas: Estimate,
    pub mean_tau: Estimate,
    /// `⟨ΔS_meas⟩ / τ̄`.
    pub meas_rate: Estimate,
    /// `⟨δS_between⟩ + ⟨ΔS_meas⟩ / τ̄`, with the jackknife error of the difference itself.
    pub residual: Estimate,
    /// `sqrt(se_between² + se_meas_rate²)`.
    pub combined_std_error: f64,
}

/// Fewest window events for a balance estimate.
pub const MIN_BALANCE_EVENTS: u64 = 100;

pub fn balance_statistics(partials: &[BalancePartial]) -> Result<Balance> {
    let events: u64 = partials.iter().map(|p| p.events).sum();
    if events < MIN_BALANCE_EVENTS {
        return Err(StatsError::TooFewEvents {
            needed: MIN_BALANCE_EVENTS as usize,
            have: events as usize,
        });
    }
    let v: Vec<Vec<f64>> = partials.iter().map(|p| p.to_vec()).collect();
    let between = |t: &[f64]| t[3] / t[4];
    let meas_rate = |t: &[f64]| t[1] / t[2];
    let mean_between_rate = jackknife(&v, between);
    let meas_rate_e = jackknife(&v, meas_rate);
    Ok(Balance {
        events,
        mean_between_rate,
        mean_meas: jackknife(&v, |t| t[1] / t[0]),
        mean_tau: jackknife(&v, |t| t[2] / t[0]),
        meas_rate: meas_rate_e,
        residual: jackknife(&v, |t| between(t) + meas_rate(t)),
        combined_std_error: mean_between_rate.std_error.hypot(meas_rate_e.std_error),
    })
}

/// Trajectory-averaged `S_A(t)` on a common time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationCurve {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub trajectories: usize,
}

/// Fewest trajectories for a saturation curve.
pub const MIN_SATURATION_TRAJECTORIES: usize = 10;

fn common_grid(series: &[Vec<(f64, f64)>]) -> Result<Vec<f64>> {
    if series.len() < MIN_SATURATION_TRAJECTORIES {
        return Err(StatsError::TooFewTrajectories {
            needed: MIN_SATURATION_TRAJECTORIES,
            have: series.len(),
        });
    }
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    let times: Vec<f64> = series[0][..len].iter().map(|p| p.0).collect();
    for s in series {
        if s[..len].iter().zip(&times).any(|(p, t)| (p.0 - t).abs() > 1e-9 * (1.0 + t.abs())) {
            return Err(StatsError::Degenerate("trajectories sampled on different time grids".into()));
        }
    }
    Ok(times)
}

/// Mean and standard error of `S_A(t)` over trajectories, each given as `(t, S)` samples.
pub fn saturation_curve(series: &[Vec<(f64, f64)>]) -> Result<SaturationCurve> {
    let times = common_grid(series)?;
    let n = series.len() as f64;
    let mut mean = vec![0.0; times.len()];
    let mut sq = vec![0.0; times.len()];
    for s in series {
        for (k, &(_, v)) in s[..times.len()].iter().enumerate() {
            mean[k] += v;
            sq[k] += v * v;
        }
    }
    let std_error = mean
        .iter_mut()
        .zip(&sq)
        .map(|(m, q)| {
            *m /= n;
            ((q / n - *m * *m).max(0.0) * n / (n - 1.0) / n).sqrt()
        })
        .collect();
    Ok(SaturationCurve {
        times,
        mean,
        std_error,
        trajectories: series.len(),
    })
}

/// Least-squares slope of the mean `S_A(t)` over `[lo, hi]`, jackknifed over trajectories.
pub fn window_slope(series: &[Vec<(f64, f64)>], window: (f64, f64)) -> Result<Estimate> {
    let times = common_grid(series)?;
    let idx: Vec<usize> = (0..times.len())
        .filter(|&k| times[k] >= window.0 - 1e-9 && times[k] <= window.1 + 1e-9)
        .collect();
    if idx.len() < 3 {
        return Err(StatsError::TooFewPoints {
            needed: 3,
            have: idx.len(),
        });
    }
    let ts: Vec<f64> = idx.iter().map(|&k| times[k]).collect();
    let t_mean = ts.iter().sum::<f64>() / ts.len() as f64;
    let sxx: f64 = ts.iter().map(|t| (t - t_mean).powi(2)).sum();
    // the slope is linear in the pooled means, so per-trajectory sums suffice
    let partials: Vec<Vec<f64>> = series
        .iter()
        .map(|s| {
            let mut v: Vec<f64> = idx.iter().map(|&k| s[k].1).collect();
            v.push(1.0);
            v
        })
        .collect();
    let m = idx.len();
    Ok(jackknife(&partials, |t| {
        let n = t[m];
        (0..m).map(|k| (ts[k] - t_mean) * t[k] / n).sum::<f64>() / sxx
    }))
}

/// Window samples of `S` divided by their overall window mean, binned into `hist`.
/// Returns the window mean used.
pub fn rescaled_distribution(series: &[Vec<(f64, f64)>], window: (f64, f64), hist: &mut Histogram) -> Result<f64> {
    let samples: Vec<f64> = series
        .iter()
        .flatten()
        .filter(|p| p.0 >= window.0 - 1e-9 && p.0 <= window.1 + 1e-9)
        .map(|p| p.1)
        .collect();
    if samples.is_empty() {
        return Err(StatsError::TooFewPoints { needed: 1, have: 0 });
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    if !(mean > 0.0) {
        return Err(StatsError::Degenerate("window mean entropy is zero".into()));
    }
    hist.extend(samples.iter().map(|s| s / mean));
    Ok(mean)
}

/// `I(d_r)` averaged over trajectories at one distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub distance: usize,
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Per-trajectory sums of `I` by distance; index = distance.
pub fn mutual_information_sums(
    snapshots: &[CorrelationMatrix<f64>],
    region: &Region,
    sites: &[usize],
) -> Result<Vec<(f64, u64)>> {
    let mut sums: Vec<(f64, u64)> = Vec::new();
    for d in snapshots {
        for &r in sites {
            let mi = mutual_information(d, region, r)?;
            if sums.len() <= mi.distance {
                sums.resize(mi.distance + 1, (0.0, 0));
            }
            sums[mi.distance].0 += mi.value;
            sums[mi.distance].1 += 1;
        }
    }
    Ok(sums)
}

/// Trajectory-averaged profile from per-trajectory distance sums.
pub fn profile_from_sums(per_trajectory: &[Vec<(f64, u64)>]) -> Vec<ProfilePoint> {
    let max = per_trajectory.iter().map(Vec::len).max().unwrap_or(0);
    (0..max)
        .filter_map(|dist| {
            let groups: Vec<Vec<f64>> = per_trajectory
                .iter()
                .map(|s| s.get(dist).map_or(vec![0.0, 0.0], |&(v, n)| vec![v, n as f64]))
                .filter(|g| g[1] > 0.0)
                .collect();
            if groups.is_empty() {
                return None;
            }
            let samples = groups.iter().map(|g| g[1]).sum::<f64>() as u64;
            let e = jackknife(&groups, |t| t[0] / t[1]);
            Some(ProfilePoint {
                distance: dist,
                mean: e.value,
                std_error: e.std_error,
                samples,
            })
        })
        .collect()
}

/// `I(d_r)` against distance from stationary snapshots, one list per trajectory.
pub fn mutual_information_profile(
    snapshots: &[Vec<CorrelationMatrix<f64>>],
    region: &Region,
    sites: &[usize],
) -> Result<Vec<ProfilePoint>> {
    let sums = snapshots
        .iter()
        .map(|s| mutual_information_sums(s, region, sites))
        .collect::<Result<Vec<_>>>()?;
    Ok(profile_from_sums(&sums))
}
