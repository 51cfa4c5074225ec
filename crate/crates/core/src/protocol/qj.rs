//! Quantum jumps: exponential waiting times, Born-weighted jump sites.

use rand::Rng;

use super::{waiting_time, Audit, EeSample, EventDriver, Snapshot, TrajectoryParams};
use crate::error::{Error, Result};
use crate::evolve::{evolve_one_body, Generator, Propagator};
use crate::lattice::Hamiltonian;
use crate::measure::{measure_state, Outcome};
use crate::scalar::Real;
use crate::state::{CorrelationMatrix, GaussianState};

/// One detected particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent<T> {
    pub t: T,
    pub site: usize,
    /// `D_jj` right before the jump.
    pub n_before: T,
    /// Time since the previous jump.
    pub tau: T,
    /// `ΔS_qj = S(t⁺) − S(t⁻)`.
    pub ds_jump: Option<T>,
    /// `ΔS_nH = S(t⁻) − S(t − τ⁺)`.
    pub ds_nh: Option<T>,
    /// `δS_nH = ΔS_nH / τ`; absent for `τ < 1e-12`.
    pub ds_nh_rate: Option<T>,
    pub in_window: bool,
}

/// `τ = −ln(η) / (γN)`.
pub fn qj_waiting_time<T: Real>(eta: T, gamma: T, particles: usize) -> Result<T> {
    waiting_time(eta, gamma, particles)
}

/// Normalized evolution under `H_eff = H − iγ/2 N̂`.
///
/// The anti-Hermitian part is proportional to the conserved `N̂`, so after
/// normalization only the unitary part survives.
pub fn qj_evolve_between_jumps<T: Real>(
    state: &GaussianState<T>,
    hamiltonian: &Hamiltonian<T>,
    tau: T,
    propagator: Propagator,
) -> Result<GaussianState<T>> {
    evolve_one_body(state, &Generator::hopping(hamiltonian), tau, propagator)
}

/// `p_j = D_jj / N`.
pub fn qj_jump_probabilities<T: Real>(d: &CorrelationMatrix<T>) -> Result<Vec<T>> {
    let particles = (d.trace().as_f64().round()) as usize;
    jump_probabilities(&d.occupations(), particles)
}

/// `p_j = n_j / N` from the occupations.
pub fn jump_probabilities<T: Real>(occupations: &[T], particles: usize) -> Result<Vec<T>> {
    if particles == 0 {
        return Err(Error::InvalidParameter("no particles to detect".into()));
    }
    let n = T::from_usize_lossy(particles);
    let floor = -T::lit(1e-9);
    occupations
        .iter()
        .enumerate()
        .map(|(site, &x)| {
            let p = x / n;
            if p < floor {
                Err(Error::NegativeProbability {
                    site,
                    probability: p.as_f64(),
                })
            } else {
                Ok(p)
            }
        })
        .collect()
}

/// First index whose cumulative probability reaches `draw`; round-off past the
/// total falls back to the last site with positive probability.
pub fn select_site<T: Real>(probabilities: &[T], draw: T) -> usize {
    let mut acc = T::zero();
    for (j, &p) in probabilities.iter().enumerate() {
        acc += p;
        if acc >= draw {
            return j;
        }
    }
    probabilities
        .iter()
        .rposition(|&p| p > T::zero())
        .unwrap_or(probabilities.len().saturating_sub(1))
}

#[derive(Debug, Clone)]
pub struct JumpTrajectory<T: Real> {
    pub events: Vec<JumpEvent<T>>,
    pub ee: Vec<EeSample<T>>,
    pub snapshots: Vec<Snapshot<T>>,
    pub audit: Audit,
    /// In-window segments shorter than 1e-12 excluded from rate statistics.
    pub short_segments: u64,
    pub state: GaussianState<T>,
}

/// Runs one quantum-jump trajectory from the Néel state to `t_final`.
///
/// Random draws per event, in order: the waiting-time uniform `η ∈ (0, 1]`,
/// then the site-selection uniform in `[0, 1)`.
pub fn run_qj_trajectory<T: Real, R: Rng + ?Sized>(
    params: &TrajectoryParams<T>,
    hamiltonian: &Hamiltonian<T>,
    rng: &mut R,
) -> Result<JumpTrajectory<T>> {
    let mut driver = EventDriver::new(params, hamiltonian)?;
    let particles = params.particles();
    let mut events = Vec::new();
    loop {
        let eta = T::lit(1.0 - rng.random::<f64>());
        let tau = qj_waiting_time(eta, params.gamma, particles)?;
        let Some(interval) = driver.advance(tau)? else {
            break;
        };
        let occupations = driver.state.occupations();
        let probabilities = jump_probabilities(&occupations, particles)?;
        let site = select_site(&probabilities, T::lit(rng.random::<f64>()));
        let n_before = occupations[site];
        let next = measure_state(&driver.state, site, Outcome::Occupied, params.restoration)?;
        let ds_jump = driver.measured(next, &interval)?;
        events.push(JumpEvent {
            t: interval.t,
            site,
            n_before,
            tau: interval.tau,
            ds_jump,
            ds_nh: interval.ds_between,
            ds_nh_rate: interval.ds_between_rate,
            in_window: interval.in_window,
        });
    }
    Ok(JumpTrajectory {
        events,
        ee: driver.ee,
        snapshots: driver.snapshots,
        audit: driver.audit,
        short_segments: driver.short_segments,
        state: driver.state,
    })
}
