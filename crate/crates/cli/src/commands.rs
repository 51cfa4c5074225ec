//! The `run`, `merge`, `fit` and `oracle-check` operations behind the CLI.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use fermitraj::fock::{oracle_check_pm, oracle_check_qj, oracle_check_qsd, OracleReport, OracleRun};
use fermitraj::Propagator;
use fermitraj_stats::{DistributionModel, Histogram};
use serde::Serialize;

use crate::config::{RunConfig, RunOptions};
use crate::error::{CliError, Result};
use crate::output::{self, read_summary, run_dir, write_json, write_run_dir, Timing};
use crate::record::TrajectoryOutput;
use crate::runner::run_ensemble;
use crate::stream::derive_stream;
use crate::summary::{build_summary, distribution_fit, model_name, FitOutcome, Summary};

/// Runs the ensemble, writes the run directory if one is configured and
/// returns the report with the trajectory outputs.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<(Summary, Vec<TrajectoryOutput>)> {
    let ensemble = run_ensemble(config, options.threads)?;
    let summary = build_summary(config, &ensemble.outputs);
    if let Some(dir) = &options.out {
        let n = ensemble.outputs.len();
        let timing = Timing {
            wall_seconds: ensemble.wall_seconds,
            threads: ensemble.threads,
            trajectories: n,
            trajectories_per_second: n as f64 / ensemble.wall_seconds.max(1e-12),
        };
        write_run_dir(dir, &summary, &ensemble.outputs, Some(&timing))?;
    }
    Ok((summary, ensemble.outputs))
}

/// Pools stored runs with compatible configurations into one report.
///
/// The event logs are re-read, so the merged report is the one a single run
/// over the union of trajectories would produce.
pub fn merge(inputs: &[PathBuf], out: Option<&Path>) -> Result<Summary> {
    if inputs.len() < 2 {
        return Err(CliError::Usage("merge needs at least two runs".into()));
    }
    let mut config: Option<RunConfig> = None;
    let mut outputs = Vec::new();
    let mut seen = BTreeSet::new();
    for path in inputs {
        let (c, outs) = output::load_run(path)?;
        match &config {
            None => config = Some(c),
            Some(base) if base.compatible(&c) => {}
            Some(_) => {
                return Err(CliError::Incompatible(format!(
                    "{} differs from the first run in more than seed and trajectory range",
                    run_dir(path).display()
                )))
            }
        }
        for o in outs {
            if !seen.insert((o.record.seed, o.record.traj)) {
                return Err(CliError::Incompatible(format!(
                    "trajectory {} (seed {}) appears in more than one run",
                    o.record.traj, o.record.seed
                )));
            }
            outputs.push(o);
        }
    }
    let config = config.expect("at least two inputs");
    let summary = build_summary(&config, &outputs);
    if let Some(dir) = out {
        write_run_dir(dir, &summary, &outputs, None)?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct Refit {
    pub histogram: String,
    pub samples: u64,
    pub fits: BTreeMap<String, FitOutcome>,
}

/// Re-fits histograms stored in a summary. `names` empty means all of them.
pub fn refit(path: &Path, names: &[String], models: &[DistributionModel], out: Option<&Path>) -> Result<Vec<Refit>> {
    let summary = read_summary(path)?;
    let file = if path.is_dir() { path.join(output::SUMMARY_FILE) } else { path.to_path_buf() };
    let hists = summary["histograms"]
        .as_object()
        .ok_or_else(|| CliError::format(&file, "no histograms"))?;
    for n in names {
        if !hists.contains_key(n) {
            return Err(CliError::Usage(format!("no histogram named `{n}`")));
        }
    }
    let mut result = Vec::new();
    for (name, block) in hists {
        if !names.is_empty() && !names.contains(name) {
            continue;
        }
        let hist: Histogram = serde_json::from_value(block["histogram"].clone())
            .map_err(|e| CliError::format(&file, format!("{name}: {e}")))?;
        let fits = models
            .iter()
            .map(|&m| (model_name(m).to_string(), distribution_fit(&hist, m)))
            .collect();
        result.push(Refit {
            histogram: name.clone(),
            samples: hist.total(),
            fits,
        });
    }
    if let Some(o) = out {
        write_json(o, &result)?;
    }
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct OracleRow {
    pub protocol: &'static str,
    pub report: OracleReport,
    pub passed: bool,
}

/// Lockstep Gaussian-versus-Fock comparison of all three protocols.
///
/// QSD uses the dense exponential integrator so both sides take identical steps.
pub fn oracle_suite(size: usize, gamma: f64, events: usize, dt: f64, seed: u64, tolerance: f64) -> Result<Vec<OracleRow>> {
    let run = OracleRun::new(size, gamma, events);
    let row = |protocol, report: OracleReport| OracleRow {
        protocol,
        passed: report.passed(tolerance),
        report,
    };
    Ok(vec![
        row("qj", oracle_check_qj(&run, &mut derive_stream(seed, 0))?),
        row("pm", oracle_check_pm(&run, &mut derive_stream(seed, 1))?),
        row(
            "qsd",
            oracle_check_qsd(&run, dt, Propagator::Exact, &mut derive_stream(seed, 2))?,
        ),
    ])
}
