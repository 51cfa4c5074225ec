//! Summary report: histograms, density maps, fits and ensemble statistics.
//!
//! The report is a pure function of the configuration and the trajectory
//! outputs taken in `(seed, traj)` order, so a merged set of runs produces the
//! same report as one run over the same trajectories.

use std::collections::BTreeMap;

use fermitraj_stats::{
    balance_statistics, default_edges, fit_decay, fit_distribution, saturation_curve, uniform_edges,
    window_slope, Balance, BalancePartial, DecayModel, DensityMap, DistributionModel, Estimate, FitResult,
    Histogram, Moments, SaturationCurve, SiteGroups,
};
use fermitraj_stats::observables::{profile_from_sums, toy_envelope, ProfilePoint};
use serde::{Deserialize, Serialize};

use crate::config::{DensityNorm, Protocol, RunConfig};
use crate::record::{AuditRecord, EventRecord, TrajectoryOutput};

pub const VERSION: &str = concat!("fermitraj ", env!("CARGO_PKG_VERSION"));
/// Largest failed-trajectory fraction of a valid report.
pub const FAILURE_THRESHOLD: f64 = 0.01;
/// `|ΔS|` below this counts as "no change".
pub const SMALL_CHANGE: f64 = 1e-6;
/// Slack below the toy-model envelope before an event counts as a violation.
pub const ENVELOPE_TOLERANCE: f64 = 1e-6;
/// The Gaussian is adequate when the interpolating model lowers the residual by less than this fraction.
pub const GAUSSIAN_IMPROVEMENT_THRESHOLD: f64 = 0.10;
/// Mutual-information profile points below this are left out of the decay fits.
pub const MI_FIT_FLOOR: f64 = 1e-9;
/// Levels `x` at which `P(ΔS_meas > x)` is reported.
pub const EXCEEDANCE_LEVELS: [f64; 4] = [0.0, 1e-6, 1e-3, 1e-2];
const OCCUPATION_BINS: usize = 50;

/// A contiguous block of trajectory indices under one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub seed: u64,
    pub first: u64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub version: String,
    pub config: RunConfig,
    pub sources: Vec<Source>,
    /// False when more than 1 % of trajectories failed.
    pub valid: bool,
    pub trajectories: TrajectoryCounts,
    pub failures: Vec<Failure>,
    pub counters: Counters,
    pub histograms: BTreeMap<String, HistogramBlock>,
    pub density_maps: BTreeMap<String, DensityBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measurements: Option<MeasurementStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balance: Option<BalanceBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaussianity: Option<GaussianityBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutual_information: Option<MutualInformationBlock>,
    /// Statistics that could not be computed, with the reason.
    pub unavailable: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryCounts {
    pub requested: u64,
    pub completed: u64,
    pub failed: u64,
    pub failure_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub seed: u64,
    pub traj: u64,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Counters {
    /// QSD steps, or measurement events for QJ and PM.
    pub steps: u64,
    pub window_records: u64,
    pub short_segments: u64,
    pub snapshots: u64,
    pub audit: AuditRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FitOutcome {
    Ok(FitResult),
    Failed { error: String },
}

impl FitOutcome {
    pub fn ok(&self) -> Option<&FitResult> {
        match self {
            FitOutcome::Ok(f) => Some(f),
            FitOutcome::Failed { .. } => None,
        }
    }
}

pub fn distribution_fit(hist: &Histogram, model: DistributionModel) -> FitOutcome {
    match fit_distribution(hist, model) {
        Ok(f) => FitOutcome::Ok(f),
        Err(e) => FitOutcome::Failed { error: e.to_string() },
    }
}

pub fn model_name(model: DistributionModel) -> &'static str {
    match model {
        DistributionModel::Gaussian => "gaussian",
        DistributionModel::GaussExpInterp => "gauss_exp_interp",
        DistributionModel::ExponentialTail => "exponential_tail",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentsBlock {
    pub samples: u64,
    pub mean: f64,
    pub std_dev: f64,
    pub std_error: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl From<&Moments> for MomentsBlock {
    fn from(m: &Moments) -> Self {
        Self {
            samples: m.count,
            mean: m.mean(),
            std_dev: m.std_dev(),
            std_error: m.std_error(),
            skewness: m.skewness(),
            excess_kurtosis: m.excess_kurtosis(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBlock {
    pub samples: u64,
    pub histogram: Histogram,
    pub density: Vec<f64>,
    pub moments: MomentsBlock,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub fits: BTreeMap<String, FitOutcome>,
}

impl HistogramBlock {
    pub fn new(samples: &[f64], edges: Vec<f64>, models: &[DistributionModel]) -> fermitraj_stats::Result<Self> {
        let mut histogram = Histogram::new(edges)?;
        histogram.extend(samples.iter().copied());
        let moments = Moments::from_samples(samples);
        let fits = models
            .iter()
            .map(|&m| (model_name(m).to_string(), distribution_fit(&histogram, m)))
            .collect();
        Ok(Self {
            samples: samples.len() as u64,
            density: histogram.density(),
            moments: (&moments).into(),
            histogram,
            fits,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityBlock {
    pub samples: u64,
    pub normalization: DensityNorm,
    pub map: DensityMap,
    pub normalized: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exceedance {
    pub level: f64,
    pub samples: u64,
    pub count: u64,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeStats {
    pub samples: u64,
    pub tolerance: f64,
    pub violations: u64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub name: String,
    pub sites: Vec<usize>,
    pub samples: u64,
    /// Events with `|ΔS_meas| < 1e-6`.
    pub small_changes: u64,
    pub small_fraction: f64,
    pub mean_ds_meas: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeStats {
    pub samples: u64,
    pub occupied: u64,
    pub empty: u64,
    /// Mean Born probability of the occupied outcome.
    pub mean_n_before: f64,
    /// `(occupied − Σ n_before) / sqrt(Σ n(1 − n))`.
    pub z: f64,
}

/// Window statistics of `ΔS_meas` for QJ and PM.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementStats {
    pub samples: u64,
    pub positive: u64,
    pub negative: u64,
    pub zero: u64,
    pub min: f64,
    pub max: f64,
    pub exceedance: Vec<Exceedance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeStats>,
    pub groups: Vec<GroupStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<OutcomeStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceBlock {
    #[serde(flatten)]
    pub balance: Balance,
    /// Residual over its combined standard error.
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianityBlock {
    pub samples: u64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub gaussian_residual: f64,
    pub gauss_exp_interp_residual: f64,
    /// `(r_gaussian − r_interp) / r_gaussian`.
    pub relative_improvement: f64,
    pub threshold: f64,
    pub gaussian_adequate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyBlock {
    pub trajectories: usize,
    pub window_samples: u64,
    pub window_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturation: Option<SaturationCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_slope: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MutualInformationBlock {
    pub snapshots: u64,
    pub profile: Vec<ProfilePoint>,
    pub fit_floor: f64,
    pub fits: BTreeMap<String, FitOutcome>,
    /// Model with the smaller residual, when both fits succeeded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preferred: Option<String>,
}

/// Coalesces sorted `(seed, traj)` pairs into contiguous blocks.
pub fn sources(keys: impl IntoIterator<Item = (u64, u64)>) -> Vec<Source> {
    let mut out: Vec<Source> = Vec::new();
    for (seed, traj) in keys {
        match out.last_mut() {
            Some(s) if s.seed == seed && s.first + s.count == traj => s.count += 1,
            _ => out.push(Source {
                seed,
                first: traj,
                count: 1,
            }),
        }
    }
    out
}

/// Builds the report. `outputs` is sorted by `(seed, traj)` first.
pub fn build_summary(config: &RunConfig, outputs: &[TrajectoryOutput]) -> Summary {
    let mut sorted: Vec<&TrajectoryOutput> = outputs.iter().collect();
    sorted.sort_by_key(|o| (o.record.seed, o.record.traj));
    let srcs = sources(sorted.iter().map(|o| (o.record.seed, o.record.traj)));
    let mut config = config.clone();
    if let Some(first) = srcs.first() {
        config.seed = first.seed;
        config.first_trajectory = first.first;
    }
    config.trajectories = sorted.len() as u64;

    let ok: Vec<&TrajectoryOutput> = sorted.iter().copied().filter(|o| !o.record.failed()).collect();
    let failures: Vec<Failure> = sorted
        .iter()
        .filter_map(|o| {
            o.record.error.as_ref().map(|e| Failure {
                seed: o.record.seed,
                traj: o.record.traj,
                error: e.clone(),
            })
        })
        .collect();
    let requested = sorted.len() as u64;
    let failed = failures.len() as u64;
    let failure_fraction = if requested > 0 { failed as f64 / requested as f64 } else { 0.0 };

    let mut counters = Counters {
        steps: 0,
        window_records: 0,
        short_segments: 0,
        snapshots: 0,
        audit: AuditRecord::default(),
    };
    for o in &ok {
        let r = &o.record;
        counters.steps += r.steps;
        counters.window_records += r.window_records;
        counters.short_segments += r.short_segments;
        counters.snapshots += r.snapshots;
        counters.audit.merge(&r.audit);
    }

    let mut summary = Summary {
        version: VERSION.to_string(),
        config: config.clone(),
        sources: srcs,
        valid: failure_fraction <= FAILURE_THRESHOLD,
        trajectories: TrajectoryCounts {
            requested,
            completed: requested - failed,
            failed,
            failure_fraction,
        },
        failures,
        counters,
        histograms: BTreeMap::new(),
        density_maps: BTreeMap::new(),
        measurements: None,
        balance: None,
        gaussianity: None,
        entropy: None,
        mutual_information: None,
        unavailable: BTreeMap::new(),
    };
    match config.protocol {
        Protocol::Qsd => qsd_statistics(&mut summary, &ok),
        Protocol::Qj | Protocol::Pm => measurement_statistics(&mut summary, &ok),
    }
    entropy_statistics(&mut summary, &ok);
    mutual_information_statistics(&mut summary, &ok);
    summary
}

fn window_events<'a>(ok: &'a [&'a TrajectoryOutput]) -> impl Iterator<Item = &'a EventRecord> + 'a {
    ok.iter().flat_map(|o| o.events.iter()).filter(|e| e.in_window)
}

impl Summary {
    fn note(&mut self, name: &str, reason: impl ToString) {
        self.unavailable.insert(name.to_string(), reason.to_string());
    }

    fn add_histogram(&mut self, name: &str, samples: &[f64], edges: fermitraj_stats::Result<Vec<f64>>, models: &[DistributionModel]) {
        match edges.and_then(|e| HistogramBlock::new(samples, e, models)) {
            Ok(b) => {
                self.histograms.insert(name.to_string(), b);
            }
            Err(e) => self.note(name, e),
        }
    }

    fn add_map(&mut self, name: &str, pairs: &[(f64, f64)], x: Vec<f64>, y: Option<Vec<f64>>) {
        let Some(y) = y else {
            self.note(name, "no samples");
            return;
        };
        match DensityMap::new(x, y) {
            Ok(mut map) => {
                for &(a, b) in pairs {
                    map.add(a, b);
                }
                let norm = self.config.density_norm;
                self.density_maps.insert(
                    name.to_string(),
                    DensityBlock {
                        samples: pairs.len() as u64,
                        normalization: norm,
                        normalized: map.normalized(norm.into()),
                        map,
                    },
                );
            }
            Err(e) => self.note(name, e),
        }
    }

    /// Histogram of `samples` with the default symmetric binning, plus its copy rescaled by `L`.
    fn add_with_scaled(&mut self, name: &str, samples: &[f64], models: &[DistributionModel]) -> Option<Vec<f64>> {
        let edges = default_edges(samples, true);
        self.add_histogram(name, samples, edges.clone(), models);
        let l = self.config.size as f64;
        let scaled: Vec<f64> = samples.iter().map(|x| x * l).collect();
        let scaled_edges = edges.clone().map(|e| e.iter().map(|x| x * l).collect());
        self.add_histogram(&format!("{name}_xL"), &scaled, scaled_edges, models);
        edges.ok()
    }
}

fn qsd_statistics(summary: &mut Summary, ok: &[&TrajectoryOutput]) {
    let rates: Vec<f64> = window_events(ok).filter_map(|e| e.ds_rate).collect();
    let models = [
        DistributionModel::Gaussian,
        DistributionModel::GaussExpInterp,
        DistributionModel::ExponentialTail,
    ];
    summary.add_with_scaled("dS_rate", &rates, &models);
    let Some(block) = summary.histograms.get("dS_rate") else {
        summary.note("gaussianity", "no dS_rate histogram");
        return;
    };
    let g = block.fits.get("gaussian").and_then(FitOutcome::ok).map(|f| f.residual);
    let i = block.fits.get("gauss_exp_interp").and_then(FitOutcome::ok).map(|f| f.residual);
    match (g, i) {
        (Some(g), Some(i)) => {
            let relative_improvement = if g > 0.0 { (g - i) / g } else { 0.0 };
            summary.gaussianity = Some(GaussianityBlock {
                samples: block.samples,
                skewness: block.moments.skewness,
                excess_kurtosis: block.moments.excess_kurtosis,
                gaussian_residual: g,
                gauss_exp_interp_residual: i,
                relative_improvement,
                threshold: GAUSSIAN_IMPROVEMENT_THRESHOLD,
                gaussian_adequate: relative_improvement < GAUSSIAN_IMPROVEMENT_THRESHOLD,
            });
        }
        _ => summary.note("gaussianity", "distribution fits failed"),
    }
}

fn measurement_statistics(summary: &mut Summary, ok: &[&TrajectoryOutput]) {
    let size = summary.config.size;
    let protocol = summary.config.protocol;
    let events: Vec<&EventRecord> = window_events(ok).filter(|e| e.ds_meas.is_some()).collect();
    let meas: Vec<f64> = events.iter().filter_map(|e| e.ds_meas).collect();
    let rates: Vec<f64> = window_events(ok).filter_map(|e| e.ds_between_rate).collect();
    let occ: Vec<f64> = events.iter().filter_map(|e| e.n_before).collect();
    let taus: Vec<f64> = window_events(ok).filter_map(|e| e.tau).collect();

    let meas_edges = summary.add_with_scaled("dS_meas", &meas, &[]);
    let rate_edges = summary.add_with_scaled(
        "dS_between_rate",
        &rates,
        &[DistributionModel::Gaussian, DistributionModel::GaussExpInterp],
    );
    summary.add_histogram("n_before", &occ, uniform_edges(0.0, 1.0, OCCUPATION_BINS), &[]);
    summary.add_histogram("tau", &taus, default_edges(&taus, false), &[]);

    let groups = SiteGroups::new(size);
    for g in &groups.groups {
        let in_group = |e: &&&EventRecord| e.site.is_some_and(|s| g.sites.contains(&s));
        let m: Vec<f64> = events.iter().filter(in_group).filter_map(|e| e.ds_meas).collect();
        if let Some(edges) = &meas_edges {
            summary.add_histogram(&format!("dS_meas/{}", g.name), &m, Ok(edges.clone()), &[]);
        }
        let all: Vec<&EventRecord> = window_events(ok).collect();
        let r: Vec<f64> = all.iter().filter(in_group).filter_map(|e| e.ds_between_rate).collect();
        if let Some(edges) = &rate_edges {
            summary.add_histogram(&format!("dS_between_rate/{}", g.name), &r, Ok(edges.clone()), &[]);
        }
    }
    if protocol == Protocol::Pm {
        for outcome in [0u8, 1] {
            let m: Vec<f64> = events
                .iter()
                .filter(|e| e.outcome == Some(outcome))
                .filter_map(|e| e.ds_meas)
                .collect();
            if let Some(edges) = &meas_edges {
                summary.add_histogram(&format!("dS_meas/outcome{outcome}"), &m, Ok(edges.clone()), &[]);
            }
        }
    }

    let site_edges = uniform_edges(-0.5, size as f64 - 0.5, size).expect("valid site edges");
    let pairs: Vec<(f64, f64)> = events
        .iter()
        .filter_map(|e| Some((e.n_before?, e.ds_meas?)))
        .collect();
    let occ_edges = uniform_edges(0.0, 1.0, OCCUPATION_BINS).expect("valid occupation edges");
    summary.add_map("dS_meas_vs_n_before", &pairs, occ_edges, meas_edges.clone());
    let pairs: Vec<(f64, f64)> = events
        .iter()
        .filter_map(|e| Some((e.site? as f64, e.ds_meas?)))
        .collect();
    summary.add_map("dS_meas_vs_site", &pairs, site_edges.clone(), meas_edges);
    let pairs: Vec<(f64, f64)> = window_events(ok)
        .filter_map(|e| Some((e.site? as f64, e.ds_between_rate?)))
        .collect();
    summary.add_map("dS_between_rate_vs_site", &pairs, site_edges, rate_edges);

    if meas.is_empty() {
        summary.note("measurements", "no window events");
    } else {
        summary.measurements = Some(measurement_block(protocol, &events, &groups));
    }

    let partials: Vec<BalancePartial> = ok
        .iter()
        .map(|o| {
            let mut p = BalancePartial::default();
            for e in o.events.iter().filter(|e| e.in_window) {
                if let (Some(m), Some(t)) = (e.ds_meas, e.tau) {
                    p.add(m, t, e.ds_between_rate);
                }
            }
            p
        })
        .collect();
    match balance_statistics(&partials) {
        Ok(balance) => {
            summary.balance = Some(BalanceBlock {
                z: balance.residual.value / balance.combined_std_error,
                balance,
            })
        }
        Err(e) => summary.note("balance", e),
    }
}

fn measurement_block(protocol: Protocol, events: &[&EventRecord], groups: &SiteGroups) -> MeasurementStats {
    let meas: Vec<f64> = events.iter().filter_map(|e| e.ds_meas).collect();
    let n = meas.len() as u64;
    let exceedance = EXCEEDANCE_LEVELS
        .iter()
        .map(|&level| {
            let count = meas.iter().filter(|&&x| x > level).count() as u64;
            Exceedance {
                level,
                samples: n,
                count,
                probability: count as f64 / n as f64,
            }
        })
        .collect();
    let envelope = (protocol == Protocol::Qj).then(|| {
        let violations = events
            .iter()
            .filter(|e| match (e.ds_meas, e.n_before) {
                (Some(ds), Some(nb)) => ds < toy_envelope(nb) - ENVELOPE_TOLERANCE,
                _ => false,
            })
            .count() as u64;
        EnvelopeStats {
            samples: n,
            tolerance: ENVELOPE_TOLERANCE,
            violations,
            fraction: violations as f64 / n as f64,
        }
    });
    let group_stats = groups
        .groups
        .iter()
        .map(|g| {
            let m: Vec<f64> = events
                .iter()
                .filter(|e| e.site.is_some_and(|s| g.sites.contains(&s)))
                .filter_map(|e| e.ds_meas)
                .collect();
            let small = m.iter().filter(|x| x.abs() < SMALL_CHANGE).count() as u64;
            GroupStats {
                name: g.name.clone(),
                sites: g.sites.clone(),
                samples: m.len() as u64,
                small_changes: small,
                small_fraction: small as f64 / m.len() as f64,
                mean_ds_meas: m.iter().sum::<f64>() / m.len() as f64,
            }
        })
        .collect();
    let outcomes = (protocol == Protocol::Pm).then(|| {
        let occupied = events.iter().filter(|e| e.outcome == Some(1)).count() as u64;
        let p: Vec<f64> = events.iter().filter_map(|e| e.n_before).collect();
        let expected: f64 = p.iter().sum();
        let var: f64 = p.iter().map(|x| x * (1.0 - x)).sum();
        OutcomeStats {
            samples: n,
            occupied,
            empty: n - occupied,
            mean_n_before: expected / n as f64,
            z: (occupied as f64 - expected) / var.sqrt(),
        }
    });
    MeasurementStats {
        samples: n,
        positive: meas.iter().filter(|&&x| x > 0.0).count() as u64,
        negative: meas.iter().filter(|&&x| x < 0.0).count() as u64,
        zero: meas.iter().filter(|&&x| x == 0.0).count() as u64,
        min: meas.iter().copied().fold(f64::INFINITY, f64::min),
        max: meas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        exceedance,
        envelope,
        groups: group_stats,
        outcomes,
    }
}

fn entropy_statistics(summary: &mut Summary, ok: &[&TrajectoryOutput]) {
    if summary.config.ee_stride == 0 {
        return;
    }
    let window = (summary.config.window[0], summary.config.window[1]);
    let in_window = |t: f64| t >= window.0 - 1e-9 && t <= window.1 + 1e-9;
    let series: Vec<Vec<(f64, f64)>> = ok.iter().map(|o| o.record.ee.clone()).collect();
    let samples: Vec<f64> = series.iter().flatten().filter(|p| in_window(p.0)).map(|p| p.1).collect();
    if samples.is_empty() {
        summary.note("entropy", "no entropy samples in the window");
        return;
    }
    let window_mean = samples.iter().sum::<f64>() / samples.len() as f64;
    summary.add_histogram("entropy", &samples, default_edges(&samples, false), &[]);
    if window_mean > 0.0 {
        let rescaled: Vec<f64> = samples.iter().map(|s| s / window_mean).collect();
        summary.add_histogram("entropy_rescaled", &rescaled, default_edges(&rescaled, false), &[]);
    }
    let saturation = saturation_curve(&series).map_err(|e| summary.note("saturation", e)).ok();
    let slope = window_slope(&series, window).map_err(|e| summary.note("window_slope", e)).ok();
    summary.entropy = Some(EntropyBlock {
        trajectories: series.len(),
        window_samples: samples.len() as u64,
        window_mean,
        saturation,
        slope_z: slope.map(|s| s.value / s.std_error),
        window_slope: slope,
    });
}

fn mutual_information_statistics(summary: &mut Summary, ok: &[&TrajectoryOutput]) {
    let snapshots: u64 = ok.iter().map(|o| o.record.snapshots).sum();
    if snapshots == 0 {
        return;
    }
    let sums: Vec<Vec<(f64, u64)>> = ok.iter().map(|o| o.record.mi.clone()).collect();
    let profile = profile_from_sums(&sums);
    let points: Vec<(f64, f64)> = profile
        .iter()
        .filter(|p| p.distance > 0 && p.mean > MI_FIT_FLOOR)
        .map(|p| (p.distance as f64, p.mean))
        .collect();
    let mut fits = BTreeMap::new();
    for (name, model) in [("power_law", DecayModel::PowerLaw), ("exponential", DecayModel::Exponential)] {
        let outcome = match fit_decay(&points, model) {
            Ok(f) => FitOutcome::Ok(f),
            Err(e) => FitOutcome::Failed { error: e.to_string() },
        };
        fits.insert(name.to_string(), outcome);
    }
    let residual = |k: &str| fits.get(k).and_then(FitOutcome::ok).map(|f| f.residual);
    let preferred = match (residual("power_law"), residual("exponential")) {
        (Some(p), Some(e)) if e < p => Some("exponential".to_string()),
        (Some(p), Some(e)) if p < e => Some("power_law".to_string()),
        _ => None,
    };
    summary.mutual_information = Some(MutualInformationBlock {
        snapshots,
        profile,
        fit_floor: MI_FIT_FLOOR,
        fits,
        preferred,
    });
}
