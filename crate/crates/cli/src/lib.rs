//! Ensemble runner for monitored free-fermion trajectories: configuration,
//! deterministic parallel execution, event logs, summary reports and the
//! operations behind the `fermitraj` command.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod record;
pub mod runner;
pub mod stream;
pub mod summary;

pub use config::{ConfigPatch, Protocol, RunConfig, RunOptions};
pub use error::{CliError, Result};
pub use record::{EventRecord, TrajectoryOutput, TrajectoryRecord};
pub use runner::{run_ensemble, run_trajectory, Ensemble};
pub use stream::derive_stream;
pub use summary::{build_summary, Summary};
