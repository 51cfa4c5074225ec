//! Run configuration: built-in defaults, then a TOML file, then command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fermitraj::protocol::WaitingTimes;
use fermitraj::{Params, Propagator, Restoration};
use fermitraj_stats::Normalization;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Quantum state diffusion (continuous weak monitoring).
    Qsd,
    /// Quantum jumps.
    Qj,
    /// Projective measurements at random sites.
    Pm,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Qsd => "qsd",
            Protocol::Qj => "qj",
            Protocol::Pm => "pm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PropagatorKind {
    Spectral,
    Rk4,
    Exact,
}

impl From<PropagatorKind> for Propagator {
    fn from(p: PropagatorKind) -> Self {
        match p {
            PropagatorKind::Spectral => Propagator::Spectral,
            PropagatorKind::Rk4 => Propagator::Rk4,
            PropagatorKind::Exact => Propagator::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RestorationKind {
    Orbital,
    Correlation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WaitingKind {
    Exponential,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DensityNorm {
    GlobalMax,
    PerColumn,
    Probability,
}

impl From<DensityNorm> for Normalization {
    fn from(d: DensityNorm) -> Self {
        match d {
            DensityNorm::GlobalMax => Normalization::GlobalMax,
            DensityNorm::PerColumn => Normalization::PerColumn,
            DensityNorm::Probability => Normalization::Probability,
        }
    }
}

/// Fully resolved run configuration. Echoed verbatim into the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub size: usize,
    pub gamma: f64,
    pub hopping: f64,
    pub dt: f64,
    pub t_final: f64,
    pub window: [f64; 2],
    pub trajectories: u64,
    pub first_trajectory: u64,
    pub seed: u64,
    pub subsystem: usize,
    pub ee_stride: usize,
    pub snapshot_stride: usize,
    pub qsd_cuts: usize,
    pub propagator: PropagatorKind,
    pub qsd_integrator: PropagatorKind,
    pub restoration: RestorationKind,
    pub waiting_times: WaitingKind,
    pub density_norm: DensityNorm,
    pub record_all: bool,
    pub full_audit: bool,
    pub write_events: bool,
}

/// Settings that do not affect the numbers: where to write and how many workers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Partial configuration as read from a file or collected from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigPatch {
    pub protocol: Option<Protocol>,
    pub size: Option<usize>,
    pub gamma: Option<f64>,
    pub hopping: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub trajectories: Option<u64>,
    pub first_trajectory: Option<u64>,
    pub seed: Option<u64>,
    pub subsystem: Option<usize>,
    pub ee_stride: Option<usize>,
    pub snapshot_stride: Option<usize>,
    pub qsd_cuts: Option<usize>,
    pub propagator: Option<PropagatorKind>,
    pub qsd_integrator: Option<PropagatorKind>,
    pub restoration: Option<RestorationKind>,
    pub waiting_times: Option<WaitingKind>,
    pub density_norm: Option<DensityNorm>,
    pub record_all: Option<bool>,
    pub full_audit: Option<bool>,
    pub write_events: Option<bool>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl ConfigPatch {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: &ConfigPatch) -> Self {
        let s = &mut self;
        overlay!(s, other; protocol, size, gamma, hopping, dt, t_final, window, trajectories,
            first_trajectory, seed, subsystem, ee_stride, snapshot_stride, qsd_cuts, propagator,
            qsd_integrator, restoration, waiting_times, density_norm, record_all, full_audit,
            write_events, out, threads);
        self
    }

    /// Fills defaults and validates.
    pub fn resolve(&self) -> Result<(RunConfig, RunOptions)> {
        let missing = |name: &str| CliError::Usage(format!("missing required setting `{name}`"));
        let protocol = self.protocol.ok_or_else(|| missing("protocol"))?;
        let size = self.size.ok_or_else(|| missing("size"))?;
        let gamma = self.gamma.ok_or_else(|| missing("gamma"))?;
        let l = size as f64;
        let config = RunConfig {
            protocol,
            size,
            gamma,
            hopping: self.hopping.unwrap_or(1.0),
            dt: self.dt.unwrap_or(fermitraj::protocol::DEFAULT_DT),
            t_final: self.t_final.unwrap_or(0.7 * l),
            window: self.window.unwrap_or([0.6 * l, 0.7 * l]),
            trajectories: self.trajectories.unwrap_or(1),
            first_trajectory: self.first_trajectory.unwrap_or(0),
            seed: self.seed.unwrap_or(0),
            subsystem: self.subsystem.unwrap_or(size / 2),
            ee_stride: self.ee_stride.unwrap_or(10),
            snapshot_stride: self.snapshot_stride.unwrap_or(0),
            qsd_cuts: self.qsd_cuts.unwrap_or(1),
            propagator: self.propagator.unwrap_or(PropagatorKind::Spectral),
            qsd_integrator: self.qsd_integrator.unwrap_or(PropagatorKind::Rk4),
            restoration: self.restoration.unwrap_or(RestorationKind::Orbital),
            waiting_times: self.waiting_times.unwrap_or(WaitingKind::Exponential),
            density_norm: self.density_norm.unwrap_or(DensityNorm::GlobalMax),
            record_all: self.record_all.unwrap_or(false),
            full_audit: self.full_audit.unwrap_or(false),
            write_events: self.write_events.unwrap_or(true),
        };
        config.validate()?;
        if self.threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        Ok((
            config,
            RunOptions {
                out: self.out.clone(),
                threads: self.threads,
            },
        ))
    }
}

impl RunConfig {
    /// Defaults for `protocol`, `size` and `gamma`.
    pub fn new(protocol: Protocol, size: usize, gamma: f64) -> Result<Self> {
        let patch = ConfigPatch {
            protocol: Some(protocol),
            size: Some(size),
            gamma: Some(gamma),
            ..Default::default()
        };
        Ok(patch.resolve()?.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trajectories == 0 {
            return Err(CliError::Usage("at least one trajectory is required".into()));
        }
        if !self.gamma.is_finite() || !self.hopping.is_finite() || !self.t_final.is_finite() {
            return Err(CliError::Usage("gamma, hopping and t_final must be finite".into()));
        }
        if self.protocol != Protocol::Qsd && !(self.gamma > 0.0) {
            return Err(CliError::Usage(format!(
                "protocol {} needs gamma > 0",
                self.protocol.name()
            )));
        }
        if self.protocol != Protocol::Pm && self.waiting_times == WaitingKind::Fixed {
            return Err(CliError::Usage("fixed waiting times apply to the pm protocol only".into()));
        }
        if self.protocol != Protocol::Qsd && self.qsd_cuts != 1 {
            return Err(CliError::Usage("qsd_cuts applies to the qsd protocol only".into()));
        }
        self.first_trajectory
            .checked_add(self.trajectories)
            .ok_or_else(|| CliError::Usage("trajectory index range overflows".into()))?;
        self.params()
            .validate()
            .map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))
    }

    pub fn params(&self) -> Params {
        let mut p = Params::new(self.size, self.gamma);
        p.hopping = self.hopping;
        p.dt = self.dt;
        p.t_final = self.t_final;
        p.window = (self.window[0], self.window[1]);
        p.subsystem = self.subsystem;
        p.qsd_cuts = self.qsd_cuts;
        p.ee_stride = self.ee_stride;
        p.snapshot_stride = self.snapshot_stride;
        p.propagator = self.propagator.into();
        p.qsd_integrator = self.qsd_integrator.into();
        p.waiting_times = match self.waiting_times {
            WaitingKind::Exponential => WaitingTimes::Exponential,
            WaitingKind::Fixed => WaitingTimes::Fixed,
        };
        p.restoration = match self.restoration {
            RestorationKind::Orbital => Restoration::Orbital,
            RestorationKind::Correlation => Restoration::Correlation,
        };
        p.record_all = self.record_all;
        p.full_audit = self.full_audit;
        p
    }

    /// Trajectory indices covered by this run.
    pub fn indices(&self) -> std::ops::Range<u64> {
        self.first_trajectory..self.first_trajectory + self.trajectories
    }

    /// True when two runs may be pooled: equal in everything except the seed and
    /// the trajectory range.
    pub fn compatible(&self, other: &RunConfig) -> bool {
        let mut a = self.clone();
        a.seed = other.seed;
        a.trajectories = other.trajectories;
        a.first_trajectory = other.first_trajectory;
        a == *other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_size() {
        let c = RunConfig::new(Protocol::Qj, 64, 0.5).unwrap();
        assert_eq!(c.t_final, 0.7 * 64.0);
        assert_eq!(c.window, [0.6 * 64.0, 0.7 * 64.0]);
        assert_eq!(c.subsystem, 32);
        assert_eq!(c.dt, 0.05);
    }

    #[test]
    fn flags_override_file() {
        let file: ConfigPatch = toml::from_str("protocol = \"pm\"\nsize = 16\ngamma = 1.0\nseed = 3").unwrap();
        let flags = ConfigPatch {
            seed: Some(9),
            ..Default::default()
        };
        let (c, _) = file.overlay(&flags).resolve().unwrap();
        assert_eq!(c.protocol, Protocol::Pm);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn invalid_combinations_rejected() {
        let base = ConfigPatch {
            protocol: Some(Protocol::Qj),
            size: Some(16),
            gamma: Some(0.0),
            ..Default::default()
        };
        assert!(base.resolve().is_err());
        let odd = ConfigPatch {
            size: Some(15),
            gamma: Some(1.0),
            ..base.clone()
        };
        assert!(odd.resolve().is_err());
        let window = ConfigPatch {
            gamma: Some(1.0),
            window: Some([5.0, 4.0]),
            ..base.clone()
        };
        assert!(window.resolve().is_err());
        assert!(toml::from_str::<ConfigPatch>("sizee = 3").is_err());
    }

    #[test]
    fn compatibility_ignores_seed_and_range() {
        let a = RunConfig::new(Protocol::Qsd, 16, 0.5).unwrap();
        let mut b = a.clone();
        b.seed = 4;
        b.first_trajectory = 10;
        assert!(a.compatible(&b));
        b.gamma = 0.6;
        assert!(!a.compatible(&b));
    }
}
