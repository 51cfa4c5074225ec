//! Slater-determinant states and their two-point correlation matrices.

use nalgebra::DMatrix;

use crate::entropy::block_entropy;
use crate::error::{Error, Result};
use crate::lattice::{Hamiltonian, Region};
use crate::linalg::{self, gram, hermitize, max_abs};
use crate::scalar::{cplx, norm_sqr, Cplx, Real};

/// Orthonormality tolerance enforced on construction.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Pure Gaussian state at half filling: an `L × N` coefficient matrix `U` with
/// orthonormal columns, `N = L / 2`, plus the simulation time.
///
/// Column `k` is the single-particle orbital of particle `k`; the many-body state
/// is `Π_k (Σ_j U_jk c_j†) |vac⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState<T: Real> {
    coeffs: DMatrix<Cplx<T>>,
    time: T,
}

impl<T: Real> GaussianState<T> {
    /// Validates half filling and orthonormality (`‖U†U − I‖_max ≤ 1e-10`).
    pub fn new(coeffs: DMatrix<Cplx<T>>, time: T) -> Result<Self> {
        check_half_filling(&coeffs)?;
        let defect = linalg::orthonormality_defect(&coeffs);
        if defect > T::lit(ORTHONORMALITY_TOL) {
            return Err(Error::NotOrthonormal(defect.as_f64()));
        }
        Ok(Self { coeffs, time })
    }

    /// Wraps columns already produced by an orthonormalizing routine.
    pub(crate) fn from_orthonormal(coeffs: DMatrix<Cplx<T>>, time: T) -> Self {
        debug_assert_eq!(coeffs.nrows(), 2 * coeffs.ncols());
        Self { coeffs, time }
    }

    pub fn size(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn particles(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn set_time(&mut self, time: T) {
        self.time = time;
    }

    pub fn coefficients(&self) -> &DMatrix<Cplx<T>> {
        &self.coeffs
    }

    pub fn into_coefficients(self) -> DMatrix<Cplx<T>> {
        self.coeffs
    }

    /// `⟨n_i⟩ = D_ii = Σ_k |U_ik|²` for every site.
    pub fn occupations(&self) -> Vec<T> {
        let l = self.size();
        let mut n = vec![T::zero(); l];
        for col in self.coeffs.column_iter() {
            for (ni, z) in n.iter_mut().zip(col.iter()) {
                *ni += norm_sqr(*z);
            }
        }
        n
    }

    /// Rows of `U` listed by `sites`, transposed into an `N × |sites|` matrix so
    /// that its Gram matrix is the restricted correlation matrix.
    fn rows_transposed(&self, sites: &[usize]) -> DMatrix<Cplx<T>> {
        let n = self.particles();
        DMatrix::from_fn(n, sites.len(), |k, m| self.coeffs[(sites[m], k)])
    }

    /// `D` restricted to a region, computed from the orbitals directly.
    pub fn region_block(&self, region: &Region) -> DMatrix<Cplx<T>> {
        gram(&self.rows_transposed(region.sites()))
    }

    /// Entanglement entropy of `region` in nats.
    pub fn entropy(&self, region: &Region) -> Result<T> {
        block_entropy(self.region_block(region))
    }

    /// `⟨H⟩ = Tr(H̃ D) = Σ_k u_k† H̃ u_k`.
    pub fn energy(&self, hamiltonian: &Hamiltonian<T>) -> T {
        let l = self.size();
        let j = hamiltonian.hopping();
        let mut e = T::zero();
        for col in self.coeffs.column_iter() {
            for i in 0..l {
                let next = col[(i + 1) % l];
                let z = col[i].conj() * next;
                // bond (i, i+1) contributes J (u_i* u_{i+1} + c.c.)
                e += T::lit(2.0) * j * z.re;
            }
        }
        e
    }

    pub fn correlation_matrix(&self) -> CorrelationMatrix<T> {
        correlation_matrix(self)
    }
}

fn check_half_filling<T: Real>(coeffs: &DMatrix<Cplx<T>>) -> Result<()> {
    let (l, n) = coeffs.shape();
    if l == 0 || l != 2 * n {
        return Err(Error::Dimension(format!(
            "expected an L x L/2 coefficient matrix, got {l} x {n}"
        )));
    }
    Ok(())
}

/// Néel product state `|1010…⟩`: orbital `k` sits on site `2k` (0-based).
pub fn neel_state<T: Real>(size: usize) -> Result<GaussianState<T>> {
    if size == 0 || size % 2 != 0 {
        return Err(Error::OddSize(size));
    }
    let n = size / 2;
    let mut u = DMatrix::<Cplx<T>>::zeros(size, n);
    for k in 0..n {
        u[(2 * k, k)] = cplx(T::one(), T::zero());
    }
    Ok(GaussianState::from_orthonormal(u, T::zero()))
}

/// Orthonormalizes arbitrary full-rank half-filling columns into a state at `t = 0`.
pub fn orthonormalize<T: Real>(coeffs: DMatrix<Cplx<T>>) -> Result<GaussianState<T>> {
    check_half_filling(&coeffs)?;
    Ok(GaussianState::from_orthonormal(
        linalg::orthonormalize(coeffs)?,
        T::zero(),
    ))
}

/// Hermitian two-point function `D_mn = ⟨c_m† c_n⟩ = Σ_k U*_mk U_nk`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T: Real> {
    d: DMatrix<Cplx<T>>,
}

impl<T: Real> CorrelationMatrix<T> {
    /// Accepts any square matrix and Hermitizes it.
    pub fn from_matrix(mut d: DMatrix<Cplx<T>>) -> Result<Self> {
        if d.nrows() != d.ncols() || d.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "correlation matrix must be square, got {} x {}",
                d.nrows(),
                d.ncols()
            )));
        }
        hermitize(&mut d);
        Ok(Self { d })
    }

    pub(crate) fn from_hermitian(d: DMatrix<Cplx<T>>) -> Self {
        Self { d }
    }

    pub fn matrix(&self) -> &DMatrix<Cplx<T>> {
        &self.d
    }

    pub fn into_matrix(self) -> DMatrix<Cplx<T>> {
        self.d
    }

    pub fn size(&self) -> usize {
        self.d.nrows()
    }

    /// `⟨n_i⟩ = D_ii`
    pub fn occupation(&self, site: usize) -> T {
        self.d[(site, site)].re
    }

    pub fn occupations(&self) -> Vec<T> {
        (0..self.size()).map(|i| self.occupation(i)).collect()
    }

    pub fn trace(&self) -> T {
        (0..self.size()).fold(T::zero(), |acc, i| acc + self.occupation(i))
    }

    /// Restriction `D^A` to the sites of `region`.
    pub fn block(&self, region: &Region) -> DMatrix<Cplx<T>> {
        let s = region.sites();
        DMatrix::from_fn(s.len(), s.len(), |a, b| self.d[(s[a], s[b])])
    }

    /// `‖D² − D‖_max`
    pub fn projector_defect(&self) -> T {
        linalg::projector_defect(&self.d)
    }

    /// `‖D − D†‖_max`
    pub fn hermiticity_defect(&self) -> T {
        max_abs(&(&self.d - self.d.adjoint()))
    }

    /// `Tr(H̃ D)`
    pub fn energy(&self, hamiltonian: &Hamiltonian<T>) -> T {
        let h = hamiltonian.matrix();
        let mut e = T::zero();
        for i in 0..self.size() {
            for j in 0..self.size() {
                let hij = h[(i, j)];
                if !hij.is_zero() {
                    e += hij * self.d[(i, j)].re;
                }
            }
        }
        e
    }
}

/// Builds `D_mn = Σ_k U*_mk U_nk`, exactly Hermitian.
pub fn correlation_matrix<T: Real>(state: &GaussianState<T>) -> CorrelationMatrix<T> {
    let all: Vec<usize> = (0..state.size()).collect();
    CorrelationMatrix::from_hermitian(gram(&state.rows_transposed(&all)))
}

/// Projector tolerance accepted by [`state_from_correlation`].
pub const RESTORE_PROJECTOR_TOL: f64 = 1e-6;
/// Minimal gap between the `N`-th and `(N+1)`-th eigenvalue of `D`.
pub const RESTORE_GAP_TOL: f64 = 1e-6;

/// Recovers orbitals from a rank-`N` projector `D`.
///
/// Hermitian eigendecomposition `D = W diag(s) W†` with `s` descending; because
/// `D_mn = Σ_k U*_mk U_nk` is the complex conjugate of `U U†`, the occupied
/// orbitals are the complex conjugates of the leading `N` eigenvectors. This is
/// the singular value decomposition of a Hermitian projector in disguise.
pub fn state_from_correlation<T: Real>(
    d: &CorrelationMatrix<T>,
    particles: usize,
    time: T,
) -> Result<GaussianState<T>> {
    let l = d.size();
    if 2 * particles != l {
        return Err(Error::Dimension(format!(
            "{particles} particles on {l} sites is not half filling"
        )));
    }
    let defect = d.projector_defect();
    if defect > T::lit(RESTORE_PROJECTOR_TOL) {
        return Err(Error::InvalidParameter(format!(
            "correlation matrix is not a projector (defect {:e})",
            defect.as_f64()
        )));
    }
    let trace = d.trace();
    if (trace - T::from_usize_lossy(particles)).magnitude() > T::lit(RESTORE_PROJECTOR_TOL) {
        return Err(Error::InvalidParameter(format!(
            "trace {} differs from particle number {particles}",
            trace.as_f64()
        )));
    }
    let (values, vectors) = linalg::hermitian_eigen(d.matrix().clone());
    let gap = values[particles - 1] - values[particles];
    if gap < T::lit(RESTORE_GAP_TOL) {
        return Err(Error::AmbiguousSubspace(gap.as_f64()));
    }
    let u = vectors.columns(0, particles).map(|z| z.conj());
    Ok(GaussianState::from_orthonormal(
        linalg::orthonormalize(u)?,
        time,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::HamiltonianSpec;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn neel_layout() {
        let s = neel_state::<f64>(4).unwrap();
        let u = s.coefficients();
        assert_eq!(u.shape(), (4, 2));
        assert_eq!(u[(0, 0)], c(1.0));
        assert_eq!(u[(2, 1)], c(1.0));
        assert_eq!(u.iter().filter(|z| **z != c(0.0)).count(), 2);
        assert_eq!(s.time(), 0.0);
        assert_eq!(linalg::orthonormality_defect(u), 0.0);
        let d = s.correlation_matrix();
        assert_eq!(d.occupations(), vec![1.0, 0.0, 1.0, 0.0]);
        assert!(neel_state::<f64>(5).is_err());
    }

    #[test]
    fn neel_is_orthonormal_for_any_size() {
        for l in (2..=40).step_by(2) {
            let s = neel_state::<f64>(l).unwrap();
            assert_eq!(linalg::orthonormality_defect(s.coefficients()), 0.0);
        }
    }

    #[test]
    fn two_site_single_particle() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = DMatrix::from_column_slice(2, 1, &[c(h), c(h)]);
        let s = GaussianState::new(u, 0.0).unwrap();
        let d = s.correlation_matrix();
        for z in d.matrix().iter() {
            assert!((z - c(0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_orthonormal_or_wrong_filling() {
        let u = DMatrix::from_column_slice(2, 1, &[c(1.0), c(1.0)]);
        assert!(matches!(
            GaussianState::new(u, 0.0),
            Err(Error::NotOrthonormal(_))
        ));
        let u = DMatrix::<Complex64>::zeros(6, 2);
        assert!(matches!(GaussianState::new(u, 0.0), Err(Error::Dimension(_))));
    }

    #[test]
    fn restore_diagonal_projector() {
        let mut m = DMatrix::<Complex64>::zeros(4, 4);
        m[(0, 0)] = c(1.0);
        m[(2, 2)] = c(1.0);
        let d = CorrelationMatrix::from_matrix(m.clone()).unwrap();
        let s = state_from_correlation(&d, 2, 0.0).unwrap();
        // columns are e_0 and e_2 up to order and phase
        let occ = s.occupations();
        assert!((occ[0] - 1.0).abs() < 1e-14 && (occ[2] - 1.0).abs() < 1e-14);
        assert!(occ[1].abs() < 1e-14 && occ[3].abs() < 1e-14);
        assert!(max_abs(&(s.correlation_matrix().into_matrix() - m)) < 1e-14);
    }

    #[test]
    fn restore_rejects_ambiguous_subspace() {
        let m = DMatrix::<Complex64>::from_diagonal_element(4, 4, c(0.5));
        let d = CorrelationMatrix::from_matrix(m).unwrap();
        assert!(state_from_correlation(&d, 2, 0.0).is_err());
    }

    #[test]
    fn energy_routes_agree() {
        let h = crate::lattice::hopping_matrix(HamiltonianSpec::<f64>::new(6, 0.8).unwrap()).unwrap();
        let u = DMatrix::<Complex64>::from_fn(6, 3, |i, j| {
            Complex64::new(((i * 5 + j * 3) % 7) as f64, ((i + 4 * j) % 5) as f64 - 2.0)
        });
        let s = orthonormalize(u).unwrap();
        let d = s.correlation_matrix();
        assert!((s.energy(&h) - d.energy(&h)).abs() < 1e-12);
    }
}
