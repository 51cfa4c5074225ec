//! Projective measurements at Poissonian times on uniformly chosen sites.

use rand::Rng;

use super::{waiting_time, Audit, EeSample, EventDriver, Snapshot, TrajectoryParams, WaitingTimes};
use crate::error::Result;
use crate::lattice::Hamiltonian;
use crate::measure::{measure_state, Outcome};
use crate::scalar::Real;
use crate::state::GaussianState;

/// One projective measurement of `n_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveEvent<T> {
    pub t: T,
    pub site: usize,
    pub outcome: Outcome,
    pub n_before: T,
    pub tau: T,
    /// `ΔS_pm = S(t⁺) − S(t⁻)`.
    pub ds_meas: Option<T>,
    /// `ΔS_un`, the change during the preceding unitary segment.
    pub ds_unitary: Option<T>,
    /// `δS_un = ΔS_un / τ`.
    pub ds_unitary_rate: Option<T>,
    pub in_window: bool,
}

/// Same law as the quantum-jump waiting time.
pub fn pm_waiting_time<T: Real>(eta: T, gamma: T, particles: usize) -> Result<T> {
    waiting_time(eta, gamma, particles)
}

/// Uniform site in `0..size`.
pub fn pm_sample_site<R: Rng + ?Sized>(size: usize, rng: &mut R) -> usize {
    rng.random_range(0..size)
}

/// Born sampling: outcome 1 iff `D_jj ≥ p`.
pub fn pm_outcome<T: Real>(occupation: T, draw: T) -> Outcome {
    if occupation >= draw {
        Outcome::Occupied
    } else {
        Outcome::Empty
    }
}

#[derive(Debug, Clone)]
pub struct ProjectiveTrajectory<T: Real> {
    pub events: Vec<ProjectiveEvent<T>>,
    pub ee: Vec<EeSample<T>>,
    pub snapshots: Vec<Snapshot<T>>,
    pub audit: Audit,
    pub short_segments: u64,
    pub state: GaussianState<T>,
}

/// Runs one projective-measurement trajectory from the Néel state to `t_final`.
///
/// Random draws per event, in order: `η ∈ (0, 1]` (exponential waiting times
/// only), the site, then the Born uniform in `[0, 1)`.
pub fn run_pm_trajectory<T: Real, R: Rng + ?Sized>(
    params: &TrajectoryParams<T>,
    hamiltonian: &Hamiltonian<T>,
    rng: &mut R,
) -> Result<ProjectiveTrajectory<T>> {
    let mut driver = EventDriver::new(params, hamiltonian)?;
    let particles = params.particles();
    let mean_wait = T::one() / (params.gamma * T::from_usize_lossy(particles));
    let mut events = Vec::new();
    loop {
        let tau = match params.waiting_times {
            WaitingTimes::Exponential => {
                let eta = T::lit(1.0 - rng.random::<f64>());
                pm_waiting_time(eta, params.gamma, particles)?
            }
            WaitingTimes::Fixed => mean_wait,
        };
        let Some(interval) = driver.advance(tau)? else {
            break;
        };
        let site = pm_sample_site(params.size, rng);
        let n_before = driver.state.occupations()[site];
        let outcome = pm_outcome(n_before, T::lit(rng.random::<f64>()));
        let next = measure_state(&driver.state, site, outcome, params.restoration)?;
        let ds_meas = driver.measured(next, &interval)?;
        events.push(ProjectiveEvent {
            t: interval.t,
            site,
            outcome,
            n_before,
            tau: interval.tau,
            ds_meas,
            ds_unitary: interval.ds_between,
            ds_unitary_rate: interval.ds_between_rate,
            in_window: interval.in_window,
        });
    }
    Ok(ProjectiveTrajectory {
        events,
        ee: driver.ee,
        snapshots: driver.snapshots,
        audit: driver.audit,
        short_segments: driver.short_segments,
        state: driver.state,
    })
}
