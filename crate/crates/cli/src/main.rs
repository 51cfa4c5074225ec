use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fermitraj_cli::commands;
use fermitraj_cli::config::{DensityNorm, PropagatorKind, RestorationKind, WaitingKind};
use fermitraj_cli::output::summary_json;
use fermitraj_cli::{CliError, ConfigPatch, Protocol};
use fermitraj_stats::DistributionModel;

/// Quantum trajectories of monitored free fermions on a ring.
///
/// Times are in units of 1/J (J the hopping), rates in units of J.
#[derive(Parser)]
#[command(name = "fermitraj", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trajectory ensemble and write summary, event log and histogram tables.
    Run(RunArgs),
    /// Pool stored runs that differ only in seed or trajectory range.
    Merge(MergeArgs),
    /// Compare Gaussian-state trajectories against exact diagonalization.
    OracleCheck(OracleArgs),
    /// Re-fit distribution models to histograms stored in a summary.
    Fit(FitArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with run settings; flags given on the command line win.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Monitoring protocol.
    #[arg(long, value_enum)]
    protocol: Option<Protocol>,
    /// Number of lattice sites L (even, at least 4); half filling N = L/2.
    #[arg(long, value_name = "L")]
    size: Option<usize>,
    /// Measurement rate gamma, in units of J.
    #[arg(long, value_name = "RATE")]
    gamma: Option<f64>,
    /// Hopping amplitude J [default: 1].
    #[arg(long, value_name = "J")]
    hopping: Option<f64>,
    /// QSD time step, in 1/J; also the unit of the sampling strides [default: 0.05].
    #[arg(long, value_name = "TIME")]
    dt: Option<f64>,
    /// Final time, in 1/J [default: 0.7 L].
    #[arg(long, value_name = "TIME")]
    t_final: Option<f64>,
    /// Collection window "t_lo,t_hi", in 1/J [default: 0.6 L,0.7 L].
    #[arg(long, value_name = "T_LO,T_HI", value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<[f64; 2]>,
    /// Number of trajectories [default: 1].
    #[arg(long, value_name = "COUNT")]
    trajectories: Option<u64>,
    /// Index of the first trajectory, for splitting one ensemble over several runs [default: 0].
    #[arg(long, value_name = "INDEX")]
    first_trajectory: Option<u64>,
    /// 64-bit seed; trajectory k draws from a stream derived from (seed, k) [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Subsystem size ell, sites 0..ell-1 [default: L/2].
    #[arg(long, value_name = "ELL")]
    subsystem: Option<usize>,
    /// Entropy series every this many dt; 0 disables [default: 10].
    #[arg(long, value_name = "STEPS")]
    ee_stride: Option<usize>,
    /// Correlation snapshots in the window every this many dt, for mutual information; 0 disables [default: 0].
    #[arg(long, value_name = "STEPS")]
    snapshot_stride: Option<usize>,
    /// QSD: number of translated subsystem cuts sampled per step [default: 1].
    #[arg(long, value_name = "COUNT")]
    qsd_cuts: Option<usize>,
    /// Unitary propagator between QJ/PM events [default: spectral].
    #[arg(long, value_enum)]
    propagator: Option<PropagatorKind>,
    /// QSD step integrator [default: rk4].
    #[arg(long, value_enum)]
    qsd_integrator: Option<PropagatorKind>,
    /// State update after a measurement [default: orbital].
    #[arg(long, value_enum)]
    restoration: Option<RestorationKind>,
    /// PM waiting times [default: exponential].
    #[arg(long, value_enum)]
    waiting_times: Option<WaitingKind>,
    /// Normalization of density maps [default: global-max].
    #[arg(long, value_enum)]
    density_norm: Option<DensityNorm>,
    /// Compute entropy changes for events outside the window too.
    #[arg(long)]
    record_all: bool,
    /// Check orthonormality and the projector property after every update.
    #[arg(long)]
    full_audit: bool,
    /// Do not write events.ndjson (the run can then not be merged).
    #[arg(long)]
    no_events: bool,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long, value_name = "COUNT")]
    threads: Option<usize>,
}

impl RunArgs {
    fn patch(&self) -> ConfigPatch {
        ConfigPatch {
            protocol: self.protocol,
            size: self.size,
            gamma: self.gamma,
            hopping: self.hopping,
            dt: self.dt,
            t_final: self.t_final,
            window: self.window,
            trajectories: self.trajectories,
            first_trajectory: self.first_trajectory,
            seed: self.seed,
            subsystem: self.subsystem,
            ee_stride: self.ee_stride,
            snapshot_stride: self.snapshot_stride,
            qsd_cuts: self.qsd_cuts,
            propagator: self.propagator,
            qsd_integrator: self.qsd_integrator,
            restoration: self.restoration,
            waiting_times: self.waiting_times,
            density_norm: self.density_norm,
            record_all: self.record_all.then_some(true),
            full_audit: self.full_audit.then_some(true),
            write_events: self.no_events.then_some(false),
            out: self.out.clone(),
            threads: self.threads,
        }
    }
}

fn parse_window(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected two comma-separated times, e.g. 38.4,44.8".into());
    }
    let mut w = [0.0; 2];
    for (slot, p) in w.iter_mut().zip(parts) {
        *slot = p.trim().parse().map_err(|e| format!("`{p}`: {e}"))?;
    }
    Ok(w)
}

#[derive(Args)]
struct MergeArgs {
    /// Run directories or their summary.json files.
    #[arg(required = true, num_args = 2.., value_name = "RUN")]
    inputs: Vec<PathBuf>,
    /// Directory for the merged run; without it the summary goes to stdout.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Number of lattice sites (even, 4 to 10).
    #[arg(long, default_value_t = 6, value_name = "L")]
    size: usize,
    /// Measurement rate, in units of J.
    #[arg(long, default_value_t = 1.0, value_name = "RATE")]
    gamma: f64,
    /// Measurement events (QJ, PM) or time steps (QSD) per protocol.
    #[arg(long, default_value_t = 200, value_name = "COUNT")]
    events: usize,
    /// QSD time step, in 1/J.
    #[arg(long, default_value_t = 0.05, value_name = "TIME")]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest accepted deviation in D, S and Born probabilities.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Gaussian,
    GaussExpInterp,
    ExponentialTail,
}

impl From<ModelArg> for DistributionModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Gaussian => DistributionModel::Gaussian,
            ModelArg::GaussExpInterp => DistributionModel::GaussExpInterp,
            ModelArg::ExponentialTail => DistributionModel::ExponentialTail,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Run directory or summary.json.
    #[arg(value_name = "SUMMARY")]
    summary: PathBuf,
    /// Histogram to fit, e.g. dS_rate; repeatable [default: all].
    #[arg(long = "histogram", value_name = "NAME")]
    histograms: Vec<String>,
    /// Model to fit; repeatable [default: all three].
    #[arg(long = "model", value_enum)]
    models: Vec<ModelArg>,
    /// Write the fits as JSON here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("fermitraj: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Run(args) => {
            let file = match &args.config {
                Some(p) => ConfigPatch::from_toml_file(p)?,
                None => ConfigPatch::default(),
            };
            let (config, options) = file.overlay(&args.patch()).resolve()?;
            let (summary, _) = commands::run(&config, &options)?;
            let t = &summary.trajectories;
            eprintln!(
                "{} {} trajectories ({} failed), {} window records",
                config.protocol.name(),
                t.requested,
                t.failed,
                summary.counters.window_records
            );
            if options.out.is_none() {
                print!("{}", summary_json(&summary));
            }
            if !summary.valid {
                eprintln!(
                    "fermitraj: {:.2}% of trajectories failed; report marked invalid",
                    100.0 * t.failure_fraction
                );
                return Ok(1);
            }
            Ok(0)
        }
        Command::Merge(args) => {
            let summary = commands::merge(&args.inputs, args.out.as_deref())?;
            if args.out.is_none() {
                print!("{}", summary_json(&summary));
            }
            Ok(if summary.valid { 0 } else { 1 })
        }
        Command::OracleCheck(args) => {
            let rows = commands::oracle_suite(args.size, args.gamma, args.events, args.dt, args.seed, args.tolerance)?;
            println!(
                "{:<8} {:>7} {:>12} {:>12} {:>12}  result",
                "protocol", "events", "max|dD|", "max|dS|", "max|dp|"
            );
            for r in &rows {
                println!(
                    "{:<8} {:>7} {:>12.3e} {:>12.3e} {:>12.3e}  {}",
                    r.protocol,
                    r.report.events,
                    r.report.max_correlation_diff,
                    r.report.max_entropy_diff,
                    r.report.max_probability_diff,
                    if r.passed { "PASS" } else { "FAIL" }
                );
            }
            Ok(if rows.iter().all(|r| r.passed) { 0 } else { 1 })
        }
        Command::Fit(args) => {
            let models: Vec<DistributionModel> = if args.models.is_empty() {
                vec![
                    DistributionModel::Gaussian,
                    DistributionModel::GaussExpInterp,
                    DistributionModel::ExponentialTail,
                ]
            } else {
                args.models.iter().map(|&m| m.into()).collect()
            };
            let fits = commands::refit(&args.summary, &args.histograms, &models, args.out.as_deref())?;
            for r in &fits {
                for (model, f) in &r.fits {
                    match f.ok() {
                        Some(f) => {
                            let params: Vec<String> = f.params.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
                            println!(
                                "{} {model}: residual {:.4e} ({} samples) {}",
                                r.histogram,
                                f.residual,
                                r.samples,
                                params.join(" ")
                            );
                        }
                        None => println!("{} {model}: failed", r.histogram),
                    }
                }
            }
            Ok(0)
        }
    }
}
