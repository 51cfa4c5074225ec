//! Per-event and per-trajectory records as persisted in NDJSON files.

use fermitraj::Audit;
use serde::{Deserialize, Serialize};

use crate::config::Protocol;

/// One line of `events.ndjson`.
///
/// QJ and PM lines describe a measurement event; QSD lines describe one time
/// step for one subsystem cut and carry `cut` and `dS_rate` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub protocol: Protocol,
    pub seed: u64,
    pub traj: u64,
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_before: Option<f64>,
    #[serde(rename = "dS_meas", default, skip_serializing_if = "Option::is_none")]
    pub ds_meas: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(rename = "dS_between_rate", default, skip_serializing_if = "Option::is_none")]
    pub ds_between_rate: Option<f64>,
    #[serde(rename = "dS_rate", default, skip_serializing_if = "Option::is_none")]
    pub ds_rate: Option<f64>,
    pub in_window: bool,
}

/// Serializable copy of [`fermitraj::Audit`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub updates: u64,
    pub max_orthonormality: f64,
    pub max_projector: f64,
    pub max_trace: f64,
    pub violations: u64,
}

impl From<Audit> for AuditRecord {
    fn from(a: Audit) -> Self {
        Self {
            updates: a.updates,
            max_orthonormality: a.max_orthonormality,
            max_projector: a.max_projector,
            max_trace: a.max_trace,
            violations: a.violations,
        }
    }
}

impl AuditRecord {
    pub fn merge(&mut self, o: &AuditRecord) {
        self.updates += o.updates;
        self.max_orthonormality = self.max_orthonormality.max(o.max_orthonormality);
        self.max_projector = self.max_projector.max(o.max_projector);
        self.max_trace = self.max_trace.max(o.max_trace);
        self.violations += o.violations;
    }
}

/// One line of `trajectories.ndjson`: everything about a trajectory except its events.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub traj: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// QSD steps, or measurement events for QJ and PM.
    pub steps: u64,
    pub window_records: u64,
    pub short_segments: u64,
    pub audit: AuditRecord,
    /// `(t, S_A(t))` samples.
    pub ee: Vec<(f64, f64)>,
    /// Stationary snapshots taken.
    pub snapshots: u64,
    /// Per distance `d`: sum of `I(A : r)` over snapshots and sites at distance `d`, and the count.
    pub mi: Vec<(f64, u64)>,
}

impl TrajectoryRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// A trajectory's record and its persisted events.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutput {
    pub record: TrajectoryRecord,
    pub events: Vec<EventRecord>,
}
