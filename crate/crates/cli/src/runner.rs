//! Deterministic parallel execution of trajectory ensembles.

use std::time::Instant;

use fermitraj::{
    hopping_matrix, run_pm_trajectory, run_qj_trajectory, run_qsd_trajectory, EeSample, Ham, HamiltonianSpec,
    Params, Snapshot,
};
use fermitraj_stats::observables::mutual_information_sums;
use rayon::prelude::*;

use crate::config::{Protocol, RunConfig};
use crate::error::{CliError, Result};
use crate::record::{EventRecord, TrajectoryOutput, TrajectoryRecord};
use crate::stream::derive_stream;

/// Every trajectory of a run, ordered by `(seed, traj)`.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub config: RunConfig,
    pub outputs: Vec<TrajectoryOutput>,
    pub wall_seconds: f64,
    pub threads: usize,
}

/// Runs `config.trajectories` trajectories on `threads` workers (default: all cores).
///
/// Results are collected in index order, so the ensemble does not depend on
/// scheduling or the worker count.
pub fn run_ensemble(config: &RunConfig, threads: Option<usize>) -> Result<Ensemble> {
    config.validate()?;
    let params = config.params();
    let ham = hopping_matrix(HamiltonianSpec::new(config.size, config.hopping)?)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let outputs: Vec<TrajectoryOutput> = pool.install(|| {
        config
            .indices()
            .into_par_iter()
            .map(|idx| run_trajectory(config, &params, &ham, idx))
            .collect()
    });
    Ok(Ensemble {
        config: config.clone(),
        outputs,
        wall_seconds: start.elapsed().as_secs_f64(),
        threads: pool.current_num_threads(),
    })
}

/// Runs trajectory `index` alone; numerical failures end up in `record.error`.
pub fn run_trajectory(config: &RunConfig, params: &Params, ham: &Ham, index: u64) -> TrajectoryOutput {
    let mut rng = derive_stream(config.seed, index);
    let mut record = TrajectoryRecord {
        seed: config.seed,
        traj: index,
        ..Default::default()
    };
    let base = EventRecord {
        protocol: config.protocol,
        seed: config.seed,
        traj: index,
        t: 0.0,
        site: None,
        cut: None,
        outcome: None,
        n_before: None,
        ds_meas: None,
        tau: None,
        ds_between_rate: None,
        ds_rate: None,
        in_window: false,
    };
    let mut events = Vec::new();
    let result: fermitraj::Result<()> = (|| {
        let (ee, snapshots) = match config.protocol {
            Protocol::Qsd => {
                let run = run_qsd_trajectory(params, ham, &mut rng)?;
                record.steps = run.step_count;
                record.audit = run.audit.into();
                for s in &run.steps {
                    events.push(EventRecord {
                        t: s.t,
                        cut: Some(s.cut),
                        ds_rate: Some(s.ds_rate),
                        in_window: true,
                        ..base.clone()
                    });
                }
                (run.ee, run.snapshots)
            }
            Protocol::Qj => {
                let run = run_qj_trajectory(params, ham, &mut rng)?;
                record.steps = run.events.len() as u64;
                record.audit = run.audit.into();
                record.short_segments = run.short_segments;
                for e in run.events.iter().filter(|e| e.in_window || config.record_all) {
                    events.push(EventRecord {
                        t: e.t,
                        site: Some(e.site),
                        n_before: Some(e.n_before),
                        ds_meas: e.ds_jump,
                        tau: Some(e.tau),
                        ds_between_rate: e.ds_nh_rate,
                        in_window: e.in_window,
                        ..base.clone()
                    });
                }
                (run.ee, run.snapshots)
            }
            Protocol::Pm => {
                let run = run_pm_trajectory(params, ham, &mut rng)?;
                record.steps = run.events.len() as u64;
                record.audit = run.audit.into();
                record.short_segments = run.short_segments;
                for e in run.events.iter().filter(|e| e.in_window || config.record_all) {
                    events.push(EventRecord {
                        t: e.t,
                        site: Some(e.site),
                        outcome: Some(e.outcome.as_u8()),
                        n_before: Some(e.n_before),
                        ds_meas: e.ds_meas,
                        tau: Some(e.tau),
                        ds_between_rate: e.ds_unitary_rate,
                        in_window: e.in_window,
                        ..base.clone()
                    });
                }
                (run.ee, run.snapshots)
            }
        };
        record.window_records = events.iter().filter(|e| e.in_window).count() as u64;
        record.ee = ee.iter().map(|s: &EeSample<f64>| (s.t, s.entropy)).collect();
        record.snapshots = snapshots.len() as u64;
        if !snapshots.is_empty() {
            record.mi = snapshot_mutual_information(params, &snapshots)?;
        }
        Ok(())
    })();
    if let Err(e) = result {
        return TrajectoryOutput {
            record: TrajectoryRecord {
                seed: config.seed,
                traj: index,
                error: Some(e.to_string()),
                ..Default::default()
            },
            events: Vec::new(),
        };
    }
    TrajectoryOutput { record, events }
}

/// Sums of `I(A : r)` by distance over every site `r` outside `A`.
fn snapshot_mutual_information(params: &Params, snapshots: &[Snapshot<f64>]) -> fermitraj::Result<Vec<(f64, u64)>> {
    let region = params.region();
    let sites: Vec<usize> = (0..params.size).filter(|&s| !region.contains(s)).collect();
    let corr: Vec<_> = snapshots.iter().map(|s| s.correlation.clone()).collect();
    mutual_information_sums(&corr, &region, &sites).map_err(|e| match e {
        fermitraj_stats::StatsError::Core(c) => c,
        other => fermitraj::Error::InvalidParameter(other.to_string()),
    })
}
