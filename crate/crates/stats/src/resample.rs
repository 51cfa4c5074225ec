//! Leave-one-trajectory-out jackknife.

use serde::{Deserialize, Serialize};

/// A value with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    /// Number of resampling units (trajectories).
    pub groups: usize,
}

/// Jackknife for estimators that depend on per-group sums only.
///
/// `partials[g]` holds group `g`'s additive sums; `estimator` maps the pooled
/// sums to the statistic. Runs in `O(G · K)` by subtracting one group at a time.
pub fn jackknife<F>(partials: &[Vec<f64>], estimator: F) -> Estimate
where
    F: Fn(&[f64]) -> f64,
{
    let g = partials.len();
    let k = partials.first().map_or(0, Vec::len);
    let mut total = vec![0.0; k];
    for p in partials {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    let value = estimator(&total);
    if g < 2 {
        return Estimate {
            value,
            std_error: f64::NAN,
            groups: g,
        };
    }
    let mut scratch = vec![0.0; k];
    let leave_out: Vec<f64> = partials
        .iter()
        .map(|p| {
            for ((s, t), x) in scratch.iter_mut().zip(&total).zip(p) {
                *s = t - x;
            }
            estimator(&scratch)
        })
        .collect();
    let mean = leave_out.iter().sum::<f64>() / g as f64;
    let var = leave_out.iter().map(|x| (x - mean).powi(2)).sum::<f64>() * (g - 1) as f64 / g as f64;
    Estimate {
        value,
        std_error: var.sqrt(),
        groups: g,
    }
}

/// Pooled mean `Σ sum / Σ count` over groups given as `(sum, count)`.
pub fn jackknife_mean(groups: &[(f64, f64)]) -> Estimate {
    let partials: Vec<Vec<f64>> = groups.iter().map(|&(s, n)| vec![s, n]).collect();
    jackknife(&partials, |t| t[0] / t[1])
}
