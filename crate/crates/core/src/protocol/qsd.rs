//! Quantum state diffusion: Itô-unravelled weak monitoring of every site.

use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Audit, EeSample, Snapshot, TrajectoryParams, MAX_DT};
use crate::error::{Error, Result};
use crate::evolve::{apply_exponential, Generator, Propagator};
use crate::lattice::Hamiltonian;
use crate::linalg;
use crate::scalar::{cplx, Cplx, Real};
use crate::state::{neel_state, GaussianState};

/// Monitoring strength, time step and one step's Wiener increments.
#[derive(Debug, Clone, PartialEq)]
pub struct QsdStepParams<T> {
    pub gamma: T,
    pub dt: T,
    /// `dW_i`, mean 0 and standard deviation `sqrt(γ dt)`, one per site.
    pub noise: Vec<T>,
}

impl<T: Real> QsdStepParams<T> {
    pub fn new(gamma: T, dt: T, noise: Vec<T>) -> Result<Self> {
        if !(dt > T::zero() && dt <= T::lit(MAX_DT) + T::lit(1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "dt {} outside (0, 0.1]",
                dt.as_f64()
            )));
        }
        if !(gamma >= T::zero()) {
            return Err(Error::InvalidParameter("gamma must be nonnegative".into()));
        }
        Ok(Self { gamma, dt, noise })
    }

    /// Draws `size` independent increments, sites in ascending order.
    pub fn sample<R: Rng + ?Sized>(gamma: T, dt: T, size: usize, rng: &mut R) -> Result<Self> {
        let sigma = (gamma * dt).sqrt().as_f64();
        let noise = (0..size)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                T::lit(z * sigma)
            })
            .collect();
        Self::new(gamma, dt, noise)
    }
}

/// One step `U ← exp(A dt) U`, `A = −iH̃ + diag(dW_i/dt + (2⟨n_i⟩ − 1)γ)`, with the
/// occupations read before the step, followed by QR renormalization.
pub fn qsd_step<T: Real>(
    state: &GaussianState<T>,
    hamiltonian: &Hamiltonian<T>,
    params: &QsdStepParams<T>,
    integrator: Propagator,
) -> Result<GaussianState<T>> {
    let l = state.size();
    if params.noise.len() != l || hamiltonian.size() != l {
        return Err(Error::Dimension(format!(
            "noise of length {} / Hamiltonian of size {} for {l} sites",
            params.noise.len(),
            hamiltonian.size()
        )));
    }
    let occupations = state.occupations();
    let two = T::lit(2.0);
    let diagonal: Vec<Cplx<T>> = occupations
        .iter()
        .zip(&params.noise)
        .map(|(&n, &dw)| cplx(dw / params.dt + (two * n - T::one()) * params.gamma, T::zero()))
        .collect();
    let all_zero = diagonal.iter().all(|z| z.is_zero());
    let generator = Generator::Lattice {
        hamiltonian,
        diagonal: if all_zero { None } else { Some(&diagonal) },
    };
    let mut u = state.coefficients().clone();
    apply_exponential(&mut u, &generator, params.dt, integrator)?;
    Ok(GaussianState::from_orthonormal(
        linalg::orthonormalize(u)?,
        state.time() + params.dt,
    ))
}

/// Entropy change rate over one step, `δS = [S(t+dt) − S(t)] / dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QsdStepRecord<T> {
    /// Start of the step.
    pub t: T,
    /// Which translated copy of the subsystem.
    pub cut: usize,
    pub ds_rate: T,
}

#[derive(Debug, Clone)]
pub struct QsdTrajectory<T: Real> {
    /// Window steps, cut-major within each step.
    pub steps: Vec<QsdStepRecord<T>>,
    pub ee: Vec<EeSample<T>>,
    pub snapshots: Vec<Snapshot<T>>,
    pub audit: Audit,
    /// Per cut: `S` at the start of the first and the end of the last recorded step.
    pub window_entropy: Vec<Option<(T, T)>>,
    pub state: GaussianState<T>,
    pub step_count: u64,
}

/// Runs one QSD trajectory from the Néel state to `t_final`.
pub fn run_qsd_trajectory<T: Real, R: Rng + ?Sized>(
    params: &TrajectoryParams<T>,
    hamiltonian: &Hamiltonian<T>,
    rng: &mut R,
) -> Result<QsdTrajectory<T>> {
    params.validate()?;
    if hamiltonian.size() != params.size {
        return Err(Error::Dimension("Hamiltonian size differs from run size".into()));
    }
    let dt = params.dt;
    let total = (params.t_final / dt).as_f64().round() as usize;
    let cuts = params.cut_regions();
    let region = &cuts[0];
    let mut state = neel_state::<T>(params.size)?;
    let mut entropies: Vec<Option<T>> = vec![None; cuts.len()];
    let mut window_entropy: Vec<Option<(T, T)>> = vec![None; cuts.len()];
    let mut steps = Vec::new();
    let mut ee = Vec::new();
    let mut snapshots = Vec::new();
    let mut audit = Audit::default();
    let ee_every = params.ee_stride;
    let snap_every = params.snapshot_stride;

    for n in 0..=total {
        let t0 = dt * T::from_usize_lossy(n);
        if ee_every > 0 && n % ee_every == 0 {
            let s = match entropies[0] {
                Some(s) => s,
                None => state.entropy(region)?,
            };
            ee.push(EeSample { t: t0, entropy: s });
        }
        if snap_every > 0 && n % snap_every == 0 {
            if params.in_window(t0) {
                snapshots.push(Snapshot {
                    t: t0,
                    correlation: state.correlation_matrix(),
                });
            }
        }
        if n == total {
            break;
        }
        let t1 = dt * T::from_usize_lossy(n + 1);
        let record = params.in_window(t0) && params.in_window(t1);
        if record {
            for (c, cut) in cuts.iter().enumerate() {
                if entropies[c].is_none() {
                    entropies[c] = Some(state.entropy(cut)?);
                }
            }
        }
        let step = QsdStepParams::sample(params.gamma, dt, params.size, rng)?;
        state = qsd_step(&state, hamiltonian, &step, params.qsd_integrator)?;
        state.set_time(t1);
        audit.record(&state, params.full_audit);
        if record {
            for (c, cut) in cuts.iter().enumerate() {
                let before = entropies[c].expect("computed above");
                let after = state.entropy(cut)?;
                steps.push(QsdStepRecord {
                    t: t0,
                    cut: c,
                    ds_rate: (after - before) / dt,
                });
                entropies[c] = Some(after);
                window_entropy[c] = Some(match window_entropy[c] {
                    Some((first, _)) => (first, after),
                    None => (before, after),
                });
            }
        } else {
            entropies.iter_mut().for_each(|s| *s = None);
        }
    }
    Ok(QsdTrajectory {
        steps,
        ee,
        snapshots,
        audit,
        window_entropy,
        state,
        step_count: total as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::evolve_one_body;
    use crate::lattice::{hopping_matrix, HamiltonianSpec};
    use crate::linalg::{max_abs, orthonormality_defect};
    use crate::state::orthonormalize;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn no_monitoring_is_unitary_evolution() {
        let h = hopping_matrix(HamiltonianSpec::<f64>::unit(8).unwrap()).unwrap();
        let s = neel_state::<f64>(8).unwrap();
        let step = QsdStepParams::new(0.0, 0.05, vec![0.0; 8]).unwrap();
        let a = qsd_step(&s, &h, &step, Propagator::Rk4).unwrap();
        let b = evolve_one_body(&s, &Generator::hopping(&h), 0.05, Propagator::Rk4).unwrap();
        let diff = a.correlation_matrix().into_matrix() - b.correlation_matrix().into_matrix();
        assert!(max_abs(&diff) < 1e-10);
        let c = evolve_one_body(&s, &Generator::hopping(&h), 0.05, Propagator::Spectral).unwrap();
        let diff = a.correlation_matrix().into_matrix() - c.correlation_matrix().into_matrix();
        assert!(max_abs(&diff) < 1e-10);
    }

    #[test]
    fn decoupled_sites_follow_closed_form() {
        // J = 0: the generator is diagonal, each orbital is reweighted by exp(a_i dt)
        let h = hopping_matrix(HamiltonianSpec::<f64>::new(4, 0.0).unwrap()).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let u = DMatrix::from_column_slice(
            4,
            2,
            &[r, r, 0.0, 0.0, 0.0, 0.0, r, r].map(|x| Complex64::new(x, 0.0)),
        );
        let s = GaussianState::new(u, 0.0).unwrap();
        let (gamma, dt, w) = (0.7, 0.05, 0.13);
        let step = QsdStepParams::new(gamma, dt, vec![w, 0.0, 0.0, 0.0]).unwrap();
        for integrator in [Propagator::Rk4, Propagator::Exact] {
            let out = qsd_step(&s, &h, &step, integrator).unwrap();
            // (2n-1)γ vanishes at n = 1/2, leaving exp(w) on site 0 only
            let (a, b) = (w.exp(), 1.0);
            let norm = (a * a + b * b).sqrt();
            let col = out.coefficients().column(0);
            let tol = if integrator == Propagator::Exact { 1e-12 } else { 1e-9 };
            assert!((col[0].re - a / norm).abs() < tol);
            assert!((col[1].re - b / norm).abs() < tol);
            assert!(col[2].norm() < 1e-15 && col[3].norm() < 1e-15);
        }
    }

    #[test]
    fn steps_stay_orthonormal() {
        let h = hopping_matrix(HamiltonianSpec::<f64>::unit(12).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = neel_state::<f64>(12).unwrap();
        for _ in 0..200 {
            let step = QsdStepParams::sample(2.0, 0.05, 12, &mut rng).unwrap();
            s = qsd_step(&s, &h, &step, Propagator::Rk4).unwrap();
            assert!(orthonormality_defect(s.coefficients()) <= 1e-10);
        }
    }

    #[test]
    fn step_parameters_validated() {
        assert!(QsdStepParams::new(1.0, 0.0, vec![]).is_err());
        assert!(QsdStepParams::new(1.0, 0.2, vec![]).is_err());
        assert!(QsdStepParams::new(-1.0, 0.05, vec![]).is_err());
        let h = hopping_matrix(HamiltonianSpec::<f64>::unit(4).unwrap()).unwrap();
        let s = orthonormalize(DMatrix::<Complex64>::identity(4, 2)).unwrap();
        let bad = QsdStepParams::new(1.0, 0.05, vec![0.0; 3]).unwrap();
        assert!(qsd_step(&s, &h, &bad, Propagator::Rk4).is_err());
    }

    #[test]
    fn window_rates_telescope() {
        let mut p = TrajectoryParams::<f64>::new(12, 0.8);
        p.t_final = 4.0;
        p.window = (1.0, 3.0);
        p.qsd_cuts = 2;
        let h = hopping_matrix(HamiltonianSpec::unit(12).unwrap()).unwrap();
        let out = run_qsd_trajectory(&p, &h, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(out.steps.len(), 2 * 40);
        for c in 0..2 {
            let sum: f64 = out.steps.iter().filter(|r| r.cut == c).map(|r| r.ds_rate * p.dt).sum();
            let (first, last) = out.window_entropy[c].unwrap();
            assert!((sum - (last - first)).abs() < 1e-9);
        }
        assert_eq!(out.ee.len(), 9);
        assert_eq!(out.step_count, 80);
    }
}
