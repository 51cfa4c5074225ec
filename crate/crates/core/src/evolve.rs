//! One-body propagation `U ← exp(G τ) U` followed by re-orthonormalization.

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lattice::Hamiltonian;
use crate::linalg::{self, max_abs};
use crate::scalar::{cplx, Cplx, Real};
use crate::state::GaussianState;

/// Largest Runge-Kutta substep.
pub const RK4_MAX_SUBSTEP: f64 = 0.01;

/// How `exp(G τ)` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Propagator {
    /// Exact phases in the generator's eigenbasis; anti-Hermitian generators only.
    #[default]
    Spectral,
    /// Classical fourth-order Runge-Kutta with the generator frozen.
    Rk4,
    /// Dense matrix exponential.
    Exact,
}

/// Generator `G` of a one-body evolution.
#[derive(Debug, Clone, Copy)]
pub enum Generator<'a, T: Real> {
    /// `−i H̃ + diag(d)` for the lattice hopping; `None` means `d = 0`.
    Lattice {
        hamiltonian: &'a Hamiltonian<T>,
        diagonal: Option<&'a [Cplx<T>]>,
    },
    /// Arbitrary `L × L` matrix.
    Dense(&'a DMatrix<Cplx<T>>),
}

impl<'a, T: Real> Generator<'a, T> {
    /// The unitary generator `−i H̃`.
    pub fn hopping(hamiltonian: &'a Hamiltonian<T>) -> Self {
        Generator::Lattice {
            hamiltonian,
            diagonal: None,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Generator::Lattice { hamiltonian, .. } => hamiltonian.size(),
            Generator::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<Cplx<T>> {
        match self {
            Generator::Lattice {
                hamiltonian,
                diagonal,
            } => {
                let mut g = hamiltonian.complex_matrix() * cplx(T::zero(), -T::one());
                if let Some(d) = diagonal {
                    for (i, di) in d.iter().enumerate() {
                        g[(i, i)] += *di;
                    }
                }
                g
            }
            Generator::Dense(m) => (*m).clone(),
        }
    }

    /// `out = G u` for one column.
    fn apply(&self, u: &[Cplx<T>], out: &mut [Cplx<T>]) {
        match self {
            Generator::Lattice {
                hamiltonian,
                diagonal,
            } => hamiltonian.apply_generator(*diagonal, u, out),
            Generator::Dense(m) => {
                let l = u.len();
                for o in out.iter_mut() {
                    *o = Cplx::zero();
                }
                for (j, uj) in u.iter().enumerate() {
                    if uj.is_zero() {
                        continue;
                    }
                    let col = &m.as_slice()[j * l..(j + 1) * l];
                    linalg::axpy(*uj, col, out);
                }
            }
        }
    }
}

/// `U ← exp(G τ) U`, orthonormalized, with the state time advanced by `τ`.
pub fn evolve_one_body<T: Real>(
    state: &GaussianState<T>,
    generator: &Generator<'_, T>,
    duration: T,
    method: Propagator,
) -> Result<GaussianState<T>> {
    if duration < T::zero() || !duration.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "negative or non-finite duration {}",
            duration.as_f64()
        )));
    }
    if generator.size() != state.size() {
        return Err(Error::Dimension(format!(
            "generator of size {} for a state on {} sites",
            generator.size(),
            state.size()
        )));
    }
    if duration.is_zero() {
        return Ok(state.clone());
    }
    let mut u = state.coefficients().clone();
    apply_exponential(&mut u, generator, duration, method)?;
    // spectral propagation is unitary to rounding; only the other methods drift
    let u = if method == Propagator::Spectral {
        u
    } else {
        linalg::orthonormalize(u)?
    };
    Ok(GaussianState::from_orthonormal(u, state.time() + duration))
}

/// Applies `exp(G τ)` to the columns of `u` without orthonormalizing.
pub fn apply_exponential<T: Real>(
    u: &mut DMatrix<Cplx<T>>,
    generator: &Generator<'_, T>,
    duration: T,
    method: Propagator,
) -> Result<()> {
    match method {
        Propagator::Rk4 => {
            rk4(u, generator, duration);
            Ok(())
        }
        Propagator::Exact => {
            let g = generator.to_dense() * cplx(duration, T::zero());
            *u = g.exp() * &*u;
            Ok(())
        }
        Propagator::Spectral => match generator {
            Generator::Lattice {
                hamiltonian,
                diagonal: None,
            } => {
                hamiltonian.propagate(u, duration);
                Ok(())
            }
            _ => spectral_dense(u, &generator.to_dense(), duration),
        },
    }
}

fn spectral_dense<T: Real>(u: &mut DMatrix<Cplx<T>>, g: &DMatrix<Cplx<T>>, duration: T) -> Result<()> {
    let scale = max_abs(g);
    let defect = max_abs(&(g + g.adjoint()));
    let tol = T::lit(1e-12) * if scale > T::one() { scale } else { T::one() };
    if defect > tol {
        return Err(Error::NotAntiHermitian(defect.as_f64()));
    }
    // G = -i H with H = i G Hermitian
    let mut h = g * cplx(T::zero(), T::one());
    linalg::hermitize(&mut h);
    let (values, w) = linalg::hermitian_eigen(h);
    let mut coeffs = w.adjoint() * &*u;
    for (k, e) in values.iter().enumerate() {
        let arg = -(*e * duration);
        let phase = cplx(arg.cos(), arg.sin());
        for z in coeffs.row_mut(k).iter_mut() {
            *z *= phase;
        }
    }
    *u = w * coeffs;
    Ok(())
}

/// Number of equal substeps so that none exceeds [`RK4_MAX_SUBSTEP`].
pub fn rk4_substeps<T: Real>(duration: T) -> usize {
    let ratio = (duration / T::lit(RK4_MAX_SUBSTEP)).as_f64();
    // tolerate round-off so that duration == 0.01 is a single step
    ((ratio - 1e-9).ceil() as usize).max(1)
}

/// Classical RK4 for `U' = G U` with `G` frozen, substeps of at most 0.01.
fn rk4<T: Real>(u: &mut DMatrix<Cplx<T>>, generator: &Generator<'_, T>, duration: T) {
    let steps = rk4_substeps(duration);
    let h = duration / T::from_usize_lossy(steps);
    let half = h * T::lit(0.5);
    let sixth = h / T::lit(6.0);
    let l = u.nrows();
    let mut k1 = vec![Cplx::<T>::zero(); l];
    let mut k2 = vec![Cplx::<T>::zero(); l];
    let mut k3 = vec![Cplx::<T>::zero(); l];
    let mut k4 = vec![Cplx::<T>::zero(); l];
    let mut tmp = vec![Cplx::<T>::zero(); l];
    for mut col in u.column_iter_mut() {
        let y = col.as_mut_slice();
        for _ in 0..steps {
            generator.apply(y, &mut k1);
            for i in 0..l {
                tmp[i] = y[i] + k1[i] * half;
            }
            generator.apply(&tmp, &mut k2);
            for i in 0..l {
                tmp[i] = y[i] + k2[i] * half;
            }
            generator.apply(&tmp, &mut k3);
            for i in 0..l {
                tmp[i] = y[i] + k3[i] * h;
            }
            generator.apply(&tmp, &mut k4);
            for i in 0..l {
                let two = T::lit(2.0);
                y[i] += (k1[i] + (k2[i] + k3[i]) * two + k4[i]) * sixth;
            }
        }
    }
}
