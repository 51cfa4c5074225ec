//! Least-squares fits of histogram shapes and of decay profiles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StatsError};
use crate::histogram::Histogram;

/// Distribution shapes fitted to a histogram's log-density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionModel {
    /// `c · exp(−(x − μ)² / 2σ²)`.
    Gaussian,
    /// `c · exp(−x² / (a|x| + b))`, `a ≥ 0`, `b > 0`: Gaussian core, exponential tails.
    GaussExpInterp,
    /// `c · exp(−|x| / s)`.
    ExponentialTail,
}

/// Decay laws fitted to a profile `y(d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `y = A · d^p`, fitted in log–log space.
    PowerLaw,
    /// `y = A · e^{−d/ξ}`, fitted in lin–log space.
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    /// Root of the (weighted) mean squared residual of the log values.
    pub residual: f64,
    /// Samples behind the fitted points.
    pub samples: u64,
    pub points: usize,
    /// Points dropped because they were not positive.
    pub excluded: usize,
    pub iterations: usize,
}

impl FitResult {
    pub fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or(f64::NAN)
    }
}

/// Fewest populated bins a distribution fit accepts.
pub const MIN_BINS: usize = 10;
/// Fewest positive points a decay fit accepts.
pub const MIN_DECAY_POINTS: usize = 5;
const MAX_ITERATIONS: usize = 500;

struct LogPoints {
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    samples: u64,
}

fn log_points(hist: &Histogram) -> Result<LogPoints> {
    let mut p = LogPoints {
        x: Vec::new(),
        y: Vec::new(),
        w: Vec::new(),
        samples: 0,
    };
    for ((x, d), &c) in hist.centers().into_iter().zip(hist.density()).zip(hist.counts()) {
        if c > 0 {
            p.x.push(x);
            p.y.push(d.ln());
            p.w.push(c as f64);
            p.samples += c;
        }
    }
    if p.x.len() < MIN_BINS {
        return Err(StatsError::TooFewBins {
            needed: MIN_BINS,
            have: p.x.len(),
        });
    }
    Ok(p)
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Weighted linear least squares on the given basis functions.
fn linear_fit(basis: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let k = basis.len();
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for i in 0..y.len() {
        for r in 0..k {
            b[r] += w[i] * basis[r][i] * y[i];
            for c in 0..k {
                a[r][c] += w[i] * basis[r][i] * basis[c][i];
            }
        }
    }
    solve(a, b)
}

fn weighted_rms(residuals: impl Iterator<Item = f64>, w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    (residuals.zip(w).map(|(r, w)| w * r * r).sum::<f64>() / total).sqrt()
}

/// Weighted mean and standard deviation of the bin centers.
fn center_scale(p: &LogPoints) -> (f64, f64) {
    let total: f64 = p.w.iter().sum();
    let mean = p.x.iter().zip(&p.w).map(|(x, w)| x * w).sum::<f64>() / total;
    let var = p.x.iter().zip(&p.w).map(|(x, w)| w * (x - mean).powi(2)).sum::<f64>() / total;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    (mean, scale)
}

/// Fits `model` to the log-density of the populated bins, weighting each bin
/// by its count.
pub fn fit_distribution(hist: &Histogram, model: DistributionModel) -> Result<FitResult> {
    let p = log_points(hist)?;
    match model {
        DistributionModel::Gaussian => fit_gaussian(&p),
        DistributionModel::GaussExpInterp => fit_gauss_exp(&p),
        DistributionModel::ExponentialTail => fit_exponential_tail(&p),
    }
}

fn fit_gaussian(p: &LogPoints) -> Result<FitResult> {
    // quadratic in standardized coordinates, seeded by the sample moments
    let (m, s) = center_scale(p);
    let u: Vec<f64> = p.x.iter().map(|x| (x - m) / s).collect();
    let basis = vec![vec![1.0; u.len()], u.clone(), u.iter().map(|v| v * v).collect()];
    let c = linear_fit(&basis, &p.y, &p.w).ok_or_else(|| StatsError::Degenerate("singular normal equations".into()))?;
    if !(c[2] < 0.0) {
        return Err(StatsError::Degenerate("log-density is not concave".into()));
    }
    let mu_u = -c[1] / (2.0 * c[2]);
    let sigma_u = (-0.5 / c[2]).sqrt();
    let log_peak = c[0] - c[1] * c[1] / (4.0 * c[2]);
    let residual = weighted_rms(
        u.iter().zip(&p.y).map(|(v, y)| y - (c[0] + c[1] * v + c[2] * v * v)),
        &p.w,
    );
    let mut params = BTreeMap::new();
    params.insert("mu".into(), m + s * mu_u);
    params.insert("sigma".into(), s * sigma_u);
    params.insert("amplitude".into(), log_peak.exp());
    Ok(FitResult {
        model: "gaussian".into(),
        params,
        residual,
        samples: p.samples,
        points: p.x.len(),
        excluded: 0,
        iterations: 1,
    })
}

fn fit_exponential_tail(p: &LogPoints) -> Result<FitResult> {
    let ax: Vec<f64> = p.x.iter().map(|x| x.abs()).collect();
    let basis = vec![vec![1.0; ax.len()], ax.clone()];
    let c = linear_fit(&basis, &p.y, &p.w).ok_or_else(|| StatsError::Degenerate("singular normal equations".into()))?;
    if !(c[1] < 0.0) {
        return Err(StatsError::Degenerate("log-density does not decay with |x|".into()));
    }
    let residual = weighted_rms(ax.iter().zip(&p.y).map(|(x, y)| y - (c[0] + c[1] * x)), &p.w);
    let mut params = BTreeMap::new();
    params.insert("amplitude".into(), c[0].exp());
    params.insert("scale".into(), -1.0 / c[1]);
    Ok(FitResult {
        model: "exponential_tail".into(),
        params,
        residual,
        samples: p.samples,
        points: p.x.len(),
        excluded: 0,
        iterations: 1,
    })
}

/// Weighted cost and, optionally, normal equations of `y ≈ lc − u²/(a|u| + b)`.
fn gei_cost(u: &[f64], y: &[f64], w: &[f64], t: &[f64; 3]) -> f64 {
    let [lc, a, b] = *t;
    u.iter()
        .zip(y)
        .zip(w)
        .map(|((u, y), w)| {
            let r = y - lc + u * u / (a * u.abs() + b);
            w * r * r
        })
        .sum()
}

fn gei_normal(u: &[f64], y: &[f64], w: &[f64], t: &[f64; 3]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let [lc, a, b] = *t;
    let mut jtj = vec![vec![0.0; 3]; 3];
    let mut jtr = vec![0.0; 3];
    for i in 0..u.len() {
        let au = u[i].abs();
        let den = a * au + b;
        let r = y[i] - lc + u[i] * u[i] / den;
        let g = [-1.0, -u[i] * u[i] * au / (den * den), -u[i] * u[i] / (den * den)];
        for k in 0..3 {
            jtr[k] += w[i] * g[k] * r;
            for l in 0..3 {
                jtj[k][l] += w[i] * g[k] * g[l];
            }
        }
    }
    (jtj, jtr)
}

/// Projected Levenberg-Marquardt from one start; returns parameters, cost and iterations.
fn gei_descend(u: &[f64], y: &[f64], w: &[f64], mut t: [f64; 3]) -> Option<([f64; 3], f64, usize)> {
    const B_FLOOR: f64 = 1e-12;
    let mut cost = gei_cost(u, y, w, &t);
    let mut lambda = 1e-3;
    for it in 1..=MAX_ITERATIONS {
        let (jtj, jtr) = gei_normal(u, y, w, &t);
        // `a` sits on its bound and the gradient pushes it further out: hold it fixed
        let pinned = t[1] <= 0.0 && jtr[1] > 0.0;
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            let mut rhs: Vec<f64> = jtr.iter().map(|g| -g).collect();
            for k in 0..3 {
                a[k][k] += lambda * jtj[k][k].max(1e-12);
            }
            if pinned {
                for k in 0..3 {
                    a[1][k] = 0.0;
                    a[k][1] = 0.0;
                }
                a[1][1] = 1.0;
                rhs[1] = 0.0;
            }
            let step = solve(a, rhs)?;
            let trial = [t[0] + step[0], (t[1] + step[1]).max(0.0), (t[2] + step[2]).max(B_FLOOR)];
            let c = gei_cost(u, y, w, &trial);
            if c <= cost {
                // compare the projected move, not the raw step, so that a bound stops the search
                let small = (cost - c) <= 1e-12 * cost.max(1e-300)
                    || trial.iter().zip(&t).all(|(n, v)| (n - v).abs() <= 1e-10 * (1.0 + v.abs()));
                t = trial;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if small {
                    return Some((t, cost, it));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no downhill step at any damping: stationary point under the bounds
            return Some((t, cost, it));
        }
    }
    None
}

fn fit_gauss_exp(p: &LogPoints) -> Result<FitResult> {
    let (_, s) = center_scale(p);
    let u: Vec<f64> = p.x.iter().map(|x| x / s).collect();
    let lc0 = p.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<([f64; 3], f64, usize)> = None;
    for a0 in [0.0, 0.1, 1.0] {
        match gei_descend(&u, &p.y, &p.w, [lc0, a0, 2.0]) {
            Some(r) => {
                if best.as_ref().is_none_or(|b| r.1 < b.1) {
                    best = Some(r);
                }
            }
            None => {}
        }
    }
    let Some((t, cost, iterations)) = best else {
        return Err(StatsError::NoConvergence(MAX_ITERATIONS));
    };
    let total: f64 = p.w.iter().sum();
    let mut params = BTreeMap::new();
    params.insert("amplitude".into(), t[0].exp());
    params.insert("a".into(), t[1] * s);
    params.insert("b".into(), t[2] * s * s);
    Ok(FitResult {
        model: "gauss_exp_interp".into(),
        params,
        residual: (cost / total).sqrt(),
        samples: p.samples,
        points: p.x.len(),
        excluded: 0,
        iterations,
    })
}

/// Straight-line fit of `ln y` against `ln d` (power law) or `d` (exponential).
/// Nonpositive values are excluded and counted.
pub fn fit_decay(points: &[(f64, f64)], model: DecayModel) -> Result<FitResult> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(d, y)| y > 0.0 && y.is_finite() && d.is_finite() && (model == DecayModel::Exponential || d > 0.0))
        .collect();
    let excluded = points.len() - usable.len();
    if usable.len() < MIN_DECAY_POINTS {
        return Err(StatsError::TooFewPoints {
            needed: MIN_DECAY_POINTS,
            have: usable.len(),
        });
    }
    let xs: Vec<f64> = usable
        .iter()
        .map(|&(d, _)| if model == DecayModel::PowerLaw { d.ln() } else { d })
        .collect();
    let ys: Vec<f64> = usable.iter().map(|&(_, y)| y.ln()).collect();
    let w = vec![1.0; xs.len()];
    let c = linear_fit(&[vec![1.0; xs.len()], xs.clone()], &ys, &w)
        .ok_or_else(|| StatsError::Degenerate("all points at one abscissa".into()))?;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - c[0] - c[1] * x).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut params = BTreeMap::new();
    params.insert("amplitude".into(), c[0].exp());
    let name = match model {
        DecayModel::PowerLaw => {
            params.insert("exponent".into(), c[1]);
            "power_law"
        }
        DecayModel::Exponential => {
            params.insert("rate".into(), -c[1]);
            params.insert("length".into(), -1.0 / c[1]);
            "exponential"
        }
    };
    Ok(FitResult {
        model: name.into(),
        params,
        residual,
        samples: usable.len() as u64,
        points: usable.len(),
        excluded,
        iterations: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::uniform_edges;

    /// Histogram whose counts follow `f` exactly (rounded), on `[lo, hi]`.
    fn shaped(f: impl Fn(f64) -> f64, lo: f64, hi: f64, bins: usize) -> Histogram {
        let edges = uniform_edges(lo, hi, bins).unwrap();
        let mut h = Histogram::new(edges).unwrap();
        for x in h.centers() {
            let n = (f(x) * 1e6).round() as usize;
            for _ in 0..n {
                h.add(x);
            }
        }
        h
    }

    #[test]
    fn decay_fits_are_exact_on_noiseless_data() {
        let pts: Vec<(f64, f64)> = (1..=20).map(|d| (d as f64, (d as f64).powi(-2))).collect();
        let f = fit_decay(&pts, DecayModel::PowerLaw).unwrap();
        assert!((f.param("exponent") + 2.0).abs() < 1e-6);
        assert!(f.residual < 1e-9);
        let pts: Vec<(f64, f64)> = (0..20).map(|d| (d as f64, (-(d as f64) / 3.0).exp())).collect();
        let f = fit_decay(&pts, DecayModel::Exponential).unwrap();
        assert!((f.param("rate") - 1.0 / 3.0).abs() < 1e-6);
        assert!(f.residual < 1e-9);
    }

    #[test]
    fn decay_fit_excludes_nonpositive_points() {
        let mut pts: Vec<(f64, f64)> = (1..=6).map(|d| (d as f64, (d as f64).powi(-1))).collect();
        pts.push((7.0, 0.0));
        pts.push((8.0, -1e-3));
        let f = fit_decay(&pts, DecayModel::PowerLaw).unwrap();
        assert_eq!(f.excluded, 2);
        assert!(fit_decay(&pts[..4], DecayModel::PowerLaw).is_err());
    }

    #[test]
    fn gaussian_shape_recovered() {
        let h = shaped(|x| (-(x - 0.3) * (x - 0.3) / (2.0 * 0.04)).exp(), -0.5, 1.1, 81);
        let f = fit_distribution(&h, DistributionModel::Gaussian).unwrap();
        assert!((f.param("mu") - 0.3).abs() < 1e-4, "{f:?}");
        assert!((f.param("sigma") - 0.2).abs() < 1e-4, "{f:?}");
    }

    #[test]
    fn interpolating_model_recovers_its_parameters() {
        let (a, b) = (0.5, 0.2);
        let h = shaped(|x| (-x * x / (a * x.abs() + b)).exp(), -2.0, 2.0, 101);
        let f = fit_distribution(&h, DistributionModel::GaussExpInterp).unwrap();
        assert!((f.param("a") - a).abs() < 1e-3, "{f:?}");
        assert!((f.param("b") - b).abs() < 1e-3, "{f:?}");
        let g = fit_distribution(&h, DistributionModel::Gaussian).unwrap();
        assert!(f.residual < g.residual);
    }

    #[test]
    fn exponential_tail_scale() {
        let h = shaped(|x| (-x.abs() / 0.25).exp(), -1.0, 1.0, 41);
        let f = fit_distribution(&h, DistributionModel::ExponentialTail).unwrap();
        assert!((f.param("scale") - 0.25).abs() < 1e-3, "{f:?}");
    }

    #[test]
    fn too_few_bins_rejected() {
        let h = shaped(|x| (-x * x).exp(), -1.0, 1.0, 5);
        assert!(matches!(
            fit_distribution(&h, DistributionModel::Gaussian),
            Err(StatsError::TooFewBins { .. })
        ));
    }
}
