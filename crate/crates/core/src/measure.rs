//! Occupation measurements: correlation-matrix updates and orbital-level updates.

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::hermitize;
use crate::scalar::{cplx, norm_sqr, Cplx, Real};
use crate::state::{state_from_correlation, CorrelationMatrix, GaussianState};

/// Probability floor below which an outcome counts as impossible.
pub const OUTCOME_FLOOR: f64 = 1e-12;

/// Result of measuring `n_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Empty,
    Occupied,
}

impl Outcome {
    pub fn as_u8(self) -> u8 {
        match self {
            Outcome::Empty => 0,
            Outcome::Occupied => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Outcome::Empty),
            1 => Some(Outcome::Occupied),
            _ => None,
        }
    }
}

/// How the orbitals are recovered after a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Restoration {
    /// Rotate the orbitals so one carries all weight on the measured site, then
    /// replace or trim it. `O(LN)` and exactly equivalent to the projector update.
    #[default]
    Orbital,
    /// Update `D` by the rank-one formula and re-diagonalize it. `O(L³)`.
    Correlation,
}

fn check_outcome<T: Real>(site: usize, occupation: T, outcome: Outcome) -> Result<()> {
    let floor = T::lit(OUTCOME_FLOOR);
    let probability = match outcome {
        Outcome::Occupied => occupation,
        Outcome::Empty => T::one() - occupation,
    };
    if !(probability > floor) {
        return Err(Error::ImpossibleOutcome {
            site,
            outcome: outcome.as_u8(),
            probability: probability.as_f64(),
        });
    }
    Ok(())
}

/// Correlation matrix after detecting a particle at `site` (`L̂_j ∝ n̂_j`).
///
/// `D'_jj = 1`, the rest of row and column `j` vanish, and
/// `D'_{ii'} = D_{ii'} − D_{ji'} D_{ij} / D_jj` elsewhere.
pub fn apply_jump<T: Real>(d: &CorrelationMatrix<T>, site: usize) -> Result<CorrelationMatrix<T>> {
    rank_one_update(d, site, Outcome::Occupied)
}

/// Correlation matrix after a projective measurement of `n_site` with `outcome`.
///
/// Outcome 1 is [`apply_jump`]. Outcome 0 empties row and column `j` and sets
/// `D'_{ii'} = D_{ii'} + D_{ji'} D_{ij} / (1 − D_jj)` elsewhere (Wick's theorem
/// for `(1 − n̂_j) ĉ_i† ĉ_{i'} (1 − n̂_j)`).
pub fn apply_projection<T: Real>(
    d: &CorrelationMatrix<T>,
    site: usize,
    outcome: Outcome,
) -> Result<CorrelationMatrix<T>> {
    rank_one_update(d, site, outcome)
}

fn rank_one_update<T: Real>(
    d: &CorrelationMatrix<T>,
    site: usize,
    outcome: Outcome,
) -> Result<CorrelationMatrix<T>> {
    let l = d.size();
    if site >= l {
        return Err(Error::InvalidParameter(format!("site {site} outside lattice")));
    }
    let m = d.matrix();
    let djj = m[(site, site)].re;
    check_outcome(site, djj, outcome)?;
    let (factor, diag) = match outcome {
        Outcome::Occupied => (-T::one() / djj, T::one()),
        Outcome::Empty => (T::one() / (T::one() - djj), T::zero()),
    };
    let mut out = DMatrix::<Cplx<T>>::zeros(l, l);
    for ip in 0..l {
        if ip == site {
            continue;
        }
        let dj_ip = m[(site, ip)];
        for i in 0..l {
            if i == site {
                continue;
            }
            out[(i, ip)] = m[(i, ip)] + dj_ip * m[(i, site)] * cplx(factor, T::zero());
        }
    }
    out[(site, site)] = cplx(diag, T::zero());
    hermitize(&mut out);
    CorrelationMatrix::from_matrix(out)
}

/// Post-measurement state.
pub fn measure_state<T: Real>(
    state: &GaussianState<T>,
    site: usize,
    outcome: Outcome,
    restoration: Restoration,
) -> Result<GaussianState<T>> {
    match restoration {
        Restoration::Orbital => project_orbitals(state, site, outcome),
        Restoration::Correlation => {
            let d = apply_projection(&state.correlation_matrix(), site, outcome)?;
            state_from_correlation(&d, state.particles(), state.time())
        }
    }
}

/// Orbital-level projection.
///
/// A Householder rotation among the orbitals concentrates the whole amplitude on
/// `site` into the first orbital; the remaining `N − 1` orbitals then vanish on
/// `site`. Outcome 1 replaces the first orbital by the site's unit vector, outcome
/// 0 removes its `site` component and renormalizes. Both leave an orthonormal set
/// spanning the image of the projected Slater determinant.
pub fn project_orbitals<T: Real>(
    state: &GaussianState<T>,
    site: usize,
    outcome: Outcome,
) -> Result<GaussianState<T>> {
    let (l, n) = state.coefficients().shape();
    if site >= l {
        return Err(Error::InvalidParameter(format!("site {site} outside lattice")));
    }
    let mut u = state.coefficients().clone();
    let row: Vec<Cplx<T>> = (0..n).map(|k| u[(site, k)]).collect();
    let weight: T = row.iter().map(|z| norm_sqr(*z)).fold(T::zero(), |a, b| a + b);
    check_outcome(site, weight, outcome)?;
    let norm = weight.sqrt();

    // Rotation V with (U V)_{site, ·} = (β, 0, …, 0): V = I − 2 w w† / (w† w),
    // w = conj(r) − conj(α) e_1, α = −e^{i arg r_1} |r|.
    let r1 = row[0];
    let r1_abs = norm_sqr(r1).sqrt();
    let phase = if r1_abs > T::zero() {
        r1.unscale(r1_abs)
    } else {
        cplx(T::one(), T::zero())
    };
    let alpha = -(phase * cplx(norm, T::zero()));
    let mut w: Vec<Cplx<T>> = row.iter().map(|z| z.conj()).collect();
    w[0] -= alpha.conj();
    let wnorm2: T = w.iter().map(|z| norm_sqr(*z)).fold(T::zero(), |a, b| a + b);
    if wnorm2 > T::zero() {
        let scale = T::lit(2.0) / wnorm2;
        let data = u.as_mut_slice();
        // uw = U w
        let mut uw = vec![Cplx::<T>::zero(); l];
        for (k, wk) in w.iter().enumerate() {
            if wk.is_zero() {
                continue;
            }
            crate::linalg::axpy(*wk, &data[k * l..(k + 1) * l], &mut uw);
        }
        // U ← U − scale · (U w) w†
        for (k, wk) in w.iter().enumerate() {
            let coeff = -(wk.conj() * cplx(scale, T::zero()));
            if coeff.is_zero() {
                continue;
            }
            crate::linalg::axpy(coeff, &uw, &mut data[k * l..(k + 1) * l]);
        }
    }
    for k in 1..n {
        u[(site, k)] = Cplx::zero();
    }
    match outcome {
        Outcome::Occupied => {
            for i in 0..l {
                u[(i, 0)] = Cplx::zero();
            }
            u[(site, 0)] = cplx(T::one(), T::zero());
        }
        Outcome::Empty => {
            u[(site, 0)] = Cplx::zero();
            let rest: T = u.column(0).iter().map(|z| norm_sqr(*z)).fold(T::zero(), |a, b| a + b);
            let inv = T::one() / rest.sqrt();
            for z in u.column_mut(0).iter_mut() {
                z.re *= inv;
                z.im *= inv;
            }
        }
    }
    Ok(GaussianState::from_orthonormal(u, state.time()))
}
