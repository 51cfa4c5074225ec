//! Exact many-body reference on the fixed-particle-number occupation basis.
//!
//! Only meant for small lattices (`L ≤ 10`) in tests and `oracle-check`.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::evolve::{Generator, Propagator};
use crate::lattice::{hopping_matrix, Hamiltonian, HamiltonianSpec, Region};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, max_abs};
use crate::measure::{measure_state, Outcome, Restoration};
use crate::protocol::pm::pm_outcome;
use crate::protocol::qj::{jump_probabilities, qj_evolve_between_jumps, select_site};
use crate::protocol::qsd::{qsd_step, QsdStepParams};
use crate::protocol::waiting_time;
use crate::scalar::{cplx, norm_sqr, Cplx, Real};
use crate::state::{neel_state, CorrelationMatrix, GaussianState};

/// Largest lattice the oracle accepts.
pub const MAX_ORACLE_SITES: usize = 10;

/// All occupation bitmasks of `particles` fermions on `size` sites, ascending.
/// Bit `i` is site `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    size: usize,
    particles: usize,
    states: Vec<u32>,
}

impl FockBasis {
    pub fn new(size: usize, particles: usize) -> Result<Self> {
        if size > MAX_ORACLE_SITES {
            return Err(Error::OracleTooLarge(size));
        }
        if particles > size {
            return Err(Error::InvalidParameter(format!(
                "{particles} particles on {size} sites"
            )));
        }
        let states = (0u32..(1u32 << size))
            .filter(|s| s.count_ones() as usize == particles)
            .collect();
        Ok(Self {
            size,
            particles,
            states,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn index_of(&self, mask: u32) -> Option<usize> {
        self.states.binary_search(&mask).ok()
    }

    /// Matrix of `Σ_ij m_ij c_i† c_j` in this basis.
    pub fn one_body_operator<T: Real>(&self, m: &DMatrix<Cplx<T>>) -> DMatrix<Cplx<T>> {
        let dim = self.dim();
        let mut out = DMatrix::zeros(dim, dim);
        for (col, &s) in self.states.iter().enumerate() {
            for j in 0..self.size {
                if s & (1 << j) == 0 {
                    continue;
                }
                for i in 0..self.size {
                    let mij = m[(i, j)];
                    if mij.is_zero() {
                        continue;
                    }
                    if let Some((target, sign)) = hop(s, i, j) {
                        let row = self.index_of(target).expect("particle number conserved");
                        out[(row, col)] += mij * cplx(T::lit(sign), T::zero());
                    }
                }
            }
        }
        out
    }
}

/// `c_i† c_j |s⟩ = sign |target⟩`, or `None` if it vanishes.
fn hop(s: u32, i: usize, j: usize) -> Option<(u32, f64)> {
    if s & (1 << j) == 0 {
        return None;
    }
    if i == j {
        return Some((s, 1.0));
    }
    let removed = s & !(1 << j);
    if removed & (1 << i) != 0 {
        return None;
    }
    let below = |x: u32, k: usize| (x & ((1u32 << k) - 1)).count_ones();
    let parity = below(s, j) + below(removed, i);
    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
    Some((removed | (1 << i), sign))
}

/// Normalized many-body wavefunction.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState<T: Real> {
    basis: FockBasis,
    amplitudes: DVector<Cplx<T>>,
}

impl<T: Real> FockState<T> {
    /// Normalizes `amplitudes`; rejects a zero vector or a length mismatch.
    pub fn new(basis: FockBasis, amplitudes: DVector<Cplx<T>>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        let norm = amplitudes.norm();
        if !(norm > T::lit(1e-300)) {
            return Err(Error::InvalidParameter("zero wavefunction".into()));
        }
        Ok(Self {
            basis,
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<Cplx<T>> {
        &self.amplitudes
    }

    pub fn amplitude(&self, mask: u32) -> Cplx<T> {
        self.basis
            .index_of(mask)
            .map_or_else(Cplx::zero, |k| self.amplitudes[k])
    }

    pub fn size(&self) -> usize {
        self.basis.size
    }

    /// `⟨ψ|A|ψ⟩` for a many-body matrix `A`.
    pub fn expectation(&self, op: &DMatrix<Cplx<T>>) -> Cplx<T> {
        self.amplitudes.dotc(&(op * &self.amplitudes))
    }

    fn apply_normalized(&self, op: &DMatrix<Cplx<T>>) -> Result<Self> {
        Self::new(self.basis.clone(), op * &self.amplitudes)
    }
}

/// Slater expansion: the amplitude of `{j₁ < … < j_N}` is the determinant of
/// those rows of `U`.
pub fn fock_from_gaussian<T: Real>(state: &GaussianState<T>) -> Result<FockState<T>> {
    let l = state.size();
    let n = state.particles();
    let basis = FockBasis::new(l, n)?;
    let u = state.coefficients();
    let amplitudes = DVector::from_iterator(
        basis.dim(),
        basis.states.iter().map(|&s| {
            let rows: Vec<usize> = (0..l).filter(|i| s & (1 << i) != 0).collect();
            u.select_rows(&rows).determinant()
        }),
    );
    FockState::new(basis, amplitudes)
}

/// `D_mn = ⟨c_m† c_n⟩` by brute force.
pub fn fock_correlation<T: Real>(state: &FockState<T>) -> DMatrix<Cplx<T>> {
    let l = state.size();
    let mut d = DMatrix::zeros(l, l);
    for (k, &s) in state.basis.states.iter().enumerate() {
        let a = state.amplitudes[k];
        if a.is_zero() {
            continue;
        }
        for n in 0..l {
            for m in 0..l {
                if let Some((target, sign)) = hop(s, m, n) {
                    let b = state.amplitude(target);
                    d[(m, n)] += b.conj() * a * cplx(T::lit(sign), T::zero());
                }
            }
        }
    }
    d
}

/// Many-body `Ĥ = Σ H̃_ij c_i† c_j`.
pub fn fock_hamiltonian<T: Real>(basis: &FockBasis, hamiltonian: &Hamiltonian<T>) -> DMatrix<Cplx<T>> {
    basis.one_body_operator(&hamiltonian.complex_matrix())
}

/// `exp(−iĤτ)|ψ⟩` through the eigendecomposition of `Ĥ`.
pub fn fock_evolve<T: Real>(
    state: &FockState<T>,
    spec: HamiltonianSpec<T>,
    duration: T,
) -> Result<FockState<T>> {
    let h = hopping_matrix(spec)?;
    if duration == T::zero() {
        return Ok(state.clone());
    }
    if h.size() != state.size() {
        return Err(Error::Dimension("Hamiltonian size differs from state size".into()));
    }
    let (values, vectors) = hermitian_eigen(fock_hamiltonian(&state.basis, &h));
    let mut coeffs = vectors.ad_mul(&state.amplitudes);
    for (c, e) in coeffs.iter_mut().zip(&values) {
        let phase = -*e * duration;
        *c *= cplx(phase.cos(), phase.sin());
    }
    FockState::new(state.basis.clone(), vectors * coeffs)
}

/// `exp(Â τ)|ψ⟩`, normalized, for an arbitrary one-body generator `A`.
pub fn fock_evolve_generator<T: Real>(
    state: &FockState<T>,
    generator: &DMatrix<Cplx<T>>,
    duration: T,
) -> Result<FockState<T>> {
    let a = state.basis.one_body_operator(generator) * cplx(duration, T::zero());
    state.apply_normalized(&a.exp())
}

/// Projects onto `n_j = outcome` and renormalizes; returns the Born probability.
pub fn fock_measure<T: Real>(
    state: &FockState<T>,
    site: usize,
    outcome: Outcome,
) -> Result<(FockState<T>, T)> {
    if site >= state.size() {
        return Err(Error::InvalidRegion(format!("site {site} out of range")));
    }
    let keep = outcome == Outcome::Occupied;
    let mut amplitudes = state.amplitudes.clone();
    for (k, &s) in state.basis.states.iter().enumerate() {
        if (s & (1 << site) != 0) != keep {
            amplitudes[k] = Cplx::zero();
        }
    }
    let probability: T = amplitudes.iter().map(|&a| norm_sqr(a)).fold(T::zero(), |x, y| x + y);
    if !(probability > T::lit(1e-12)) {
        return Err(Error::ImpossibleOutcome {
            site,
            outcome: outcome.as_u8(),
            probability: probability.as_f64(),
        });
    }
    Ok((FockState::new(state.basis.clone(), amplitudes)?, probability))
}

/// `−Tr ρ_A ln ρ_A` for any region.
///
/// Basis states are first reordered so that every creation operator in `A`
/// precedes those outside it; the resulting sign makes the A/B split a plain
/// tensor product, which is valid because the state has a definite particle number.
pub fn fock_entropy<T: Real>(state: &FockState<T>, region: &Region) -> Result<T> {
    let l = state.size();
    if region.sites().iter().any(|&s| s >= l) {
        return Err(Error::InvalidRegion("site out of range".into()));
    }
    let a_sites = region.sites();
    let b_sites: Vec<usize> = (0..l).filter(|s| !region.contains(*s)).collect();
    let compress = |s: u32, sites: &[usize]| {
        sites
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, &site)| acc | ((((s >> site) & 1) as usize) << k))
    };
    let mut psi = DMatrix::<Cplx<T>>::zeros(1 << a_sites.len(), 1 << b_sites.len());
    for (k, &s) in state.basis.states.iter().enumerate() {
        let mut swaps = 0u32;
        for &a in a_sites {
            if s & (1 << a) != 0 {
                swaps += b_sites.iter().filter(|&&b| b < a && s & (1 << b) != 0).count() as u32;
            }
        }
        let sign = if swaps % 2 == 0 { T::one() } else { -T::one() };
        psi[(compress(s, a_sites), compress(s, &b_sites))] += state.amplitudes[k] * cplx(sign, T::zero());
    }
    let rho = &psi * psi.adjoint();
    let eps = T::log_clamp();
    Ok(hermitian_eigenvalues(rho)
        .into_iter()
        .filter(|&x| x > eps)
        .fold(T::zero(), |acc, x| acc - x * x.ln()))
}

/// `I = S_A + S_r − S_{A∪r}` from exact entropies.
pub fn fock_mutual_information<T: Real>(state: &FockState<T>, region: &Region, site: usize) -> Result<T> {
    if region.contains(site) {
        return Err(Error::SiteInRegion(site));
    }
    let single = Region::new([site], state.size())?;
    Ok(fock_entropy(state, region)? + fock_entropy(state, &single)? - fock_entropy(state, &region.with_site(site))?)
}

/// Largest deviations seen in one lockstep comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub events: usize,
    /// `max |D_gaussian − D_fock|` over all events.
    pub max_correlation_diff: f64,
    /// `max |S_gaussian − S_fock|` over all events, half-chain prefix.
    pub max_entropy_diff: f64,
    /// `max |p_gaussian − p_fock|` over the Born probabilities used.
    pub max_probability_diff: f64,
}

impl OracleReport {
    fn new() -> Self {
        Self {
            events: 0,
            max_correlation_diff: 0.0,
            max_entropy_diff: 0.0,
            max_probability_diff: 0.0,
        }
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_correlation_diff < tol && self.max_entropy_diff < tol && self.max_probability_diff < tol
    }

    fn compare<T: Real>(&mut self, g: &GaussianState<T>, f: &FockState<T>, region: &Region) -> Result<()> {
        let dg = g.correlation_matrix().into_matrix();
        let df = fock_correlation(f);
        self.max_correlation_diff = self.max_correlation_diff.max(max_abs(&(dg - df)).as_f64());
        let s = (g.entropy(region)? - fock_entropy(f, region)?).as_f64().abs();
        self.max_entropy_diff = self.max_entropy_diff.max(s);
        Ok(())
    }

    fn probability(&mut self, a: f64, b: f64) {
        self.max_probability_diff = self.max_probability_diff.max((a - b).abs());
    }
}

/// Settings shared by the lockstep drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRun<T> {
    pub size: usize,
    pub hopping: T,
    pub gamma: T,
    pub events: usize,
    pub restoration: Restoration,
}

impl<T: Real> OracleRun<T> {
    pub fn new(size: usize, gamma: T, events: usize) -> Self {
        Self {
            size,
            hopping: T::one(),
            gamma,
            events,
            restoration: Restoration::default(),
        }
    }

    fn setup(&self) -> Result<(Hamiltonian<T>, GaussianState<T>, FockState<T>, Region)> {
        if self.size > MAX_ORACLE_SITES {
            return Err(Error::OracleTooLarge(self.size));
        }
        let h = hopping_matrix(HamiltonianSpec::new(self.size, self.hopping)?)?;
        let g = neel_state(self.size)?;
        let f = fock_from_gaussian(&g)?;
        let region = Region::prefix(self.size / 2, self.size)?;
        Ok((h, g, f, region))
    }
}

/// Quantum jumps in lockstep. The Fock side integrates the full non-Hermitian
/// `Ĥ − iγ/2 N̂` and applies `n̂_j`.
pub fn oracle_check_qj<T: Real, R: Rng + ?Sized>(run: &OracleRun<T>, rng: &mut R) -> Result<OracleReport> {
    let (h, mut g, mut f, region) = run.setup()?;
    let n = g.particles();
    let mut heff = h.complex_matrix() * cplx(T::zero(), -T::one());
    for i in 0..run.size {
        heff[(i, i)] -= cplx(run.gamma / T::lit(2.0), T::zero());
    }
    let mut report = OracleReport::new();
    for _ in 0..run.events {
        let tau = waiting_time(T::lit(1.0 - rng.random::<f64>()), run.gamma, n)?;
        g = qj_evolve_between_jumps(&g, &h, tau, Propagator::Spectral)?;
        f = fock_evolve_generator(&f, &heff, tau)?;
        let occupations = g.occupations();
        let probabilities = jump_probabilities(&occupations, n)?;
        let site = select_site(&probabilities, T::lit(rng.random::<f64>()));
        let (next, p) = fock_measure(&f, site, Outcome::Occupied)?;
        report.probability(occupations[site].as_f64(), p.as_f64());
        f = next;
        g = measure_state(&g, site, Outcome::Occupied, run.restoration)?;
        report.compare(&g, &f, &region)?;
        report.events += 1;
    }
    Ok(report)
}

/// Projective measurements in lockstep; the outcome is drawn from the Gaussian
/// occupation and applied to both sides.
pub fn oracle_check_pm<T: Real, R: Rng + ?Sized>(run: &OracleRun<T>, rng: &mut R) -> Result<OracleReport> {
    let (h, mut g, mut f, region) = run.setup()?;
    let n = g.particles();
    let mut report = OracleReport::new();
    for _ in 0..run.events {
        let tau = waiting_time(T::lit(1.0 - rng.random::<f64>()), run.gamma, n)?;
        g = qj_evolve_between_jumps(&g, &h, tau, Propagator::Spectral)?;
        f = fock_evolve(&f, h.spec(), tau)?;
        let site = rng.random_range(0..run.size);
        let occupation = g.occupations()[site];
        let outcome = pm_outcome(occupation, T::lit(rng.random::<f64>()));
        let (next, p) = fock_measure(&f, site, outcome)?;
        let pg = match outcome {
            Outcome::Occupied => occupation,
            Outcome::Empty => T::one() - occupation,
        };
        report.probability(pg.as_f64(), p.as_f64());
        f = next;
        g = measure_state(&g, site, outcome, run.restoration)?;
        report.compare(&g, &f, &region)?;
        report.events += 1;
    }
    Ok(report)
}

/// QSD steps in lockstep with shared Wiener increments. The Fock side reads its
/// own occupations and exponentiates the many-body generator exactly.
pub fn oracle_check_qsd<T: Real, R: Rng + ?Sized>(
    run: &OracleRun<T>,
    dt: T,
    integrator: Propagator,
    rng: &mut R,
) -> Result<OracleReport> {
    let (h, mut g, mut f, region) = run.setup()?;
    let sigma = (run.gamma * dt).sqrt();
    let two = T::lit(2.0);
    let mut report = OracleReport::new();
    for _ in 0..run.events {
        let noise: Vec<T> = (0..run.size)
            .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)) * sigma)
            .collect();
        let params = QsdStepParams::new(run.gamma, dt, noise)?;
        g = qsd_step(&g, &h, &params, integrator)?;
        let occupations = fock_correlation(&f).diagonal();
        let diagonal: Vec<Cplx<T>> = occupations
            .iter()
            .zip(&params.noise)
            .map(|(n, &dw)| cplx(dw / dt + (two * n.re - T::one()) * run.gamma, T::zero()))
            .collect();
        let generator = Generator::Lattice {
            hamiltonian: &h,
            diagonal: Some(&diagonal),
        }
        .to_dense();
        f = fock_evolve_generator(&f, &generator, dt)?;
        report.compare(&g, &f, &region)?;
        report.events += 1;
    }
    Ok(report)
}

/// Checks that a Gaussian correlation matrix and a Fock state describe the same
/// state; returns `max |D_gaussian − D_fock|`.
pub fn correlation_mismatch<T: Real>(d: &CorrelationMatrix<T>, f: &FockState<T>) -> T {
    max_abs(&(d.matrix() - fock_correlation(f)))
}
