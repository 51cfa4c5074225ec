//! Periodic nearest-neighbour hopping chain and subsystem regions.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::Zero;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{cplx, Cplx, Real};

/// Lattice size and hopping strength of the periodic chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianSpec<T> {
    pub size: usize,
    pub hopping: T,
}

impl<T: Real> HamiltonianSpec<T> {
    pub fn new(size: usize, hopping: T) -> Result<Self> {
        if size < 4 || size % 2 != 0 {
            return Err(Error::InvalidLatticeSize(size));
        }
        Ok(Self { size, hopping })
    }

    /// Unit hopping, `J = 1`.
    pub fn unit(size: usize) -> Result<Self> {
        Self::new(size, T::one())
    }
}

/// One-body hopping matrix `H̃` with its cached plane-wave eigendecomposition.
///
/// `H̃` is circulant, so the discrete Fourier modes diagonalize it with energies
/// `2J cos(2πk/L)`; propagation by `exp(-iH̃τ)` is two FFTs per orbital.
/// Read-only after construction and cheap to share between threads.
#[derive(Clone)]
pub struct Hamiltonian<T: Real> {
    spec: HamiltonianSpec<T>,
    matrix: DMatrix<T>,
    mode_energies: Vec<T>,
    spectrum: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for Hamiltonian<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hamiltonian")
            .field("spec", &self.spec)
            .field("spectrum", &self.spectrum)
            .finish()
    }
}

/// Builds `H̃` with `H̃_{i,i±1 mod L} = J` and caches its spectrum.
pub fn hopping_matrix<T: Real>(spec: HamiltonianSpec<T>) -> Result<Hamiltonian<T>> {
    let spec = HamiltonianSpec::new(spec.size, spec.hopping)?;
    let l = spec.size;
    let mut matrix = DMatrix::<T>::zeros(l, l);
    for i in 0..l {
        let j = (i + 1) % l;
        matrix[(i, j)] = spec.hopping;
        matrix[(j, i)] = spec.hopping;
    }
    let two_pi = T::two_pi();
    let mode_energies: Vec<T> = (0..l)
        .map(|k| {
            let phase = two_pi * T::from_usize_lossy(k) / T::from_usize_lossy(l);
            T::lit(2.0) * spec.hopping * phase.cos()
        })
        .collect();
    let mut spectrum = mode_energies.clone();
    spectrum.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut planner = FftPlanner::<T>::new();
    let forward = planner.plan_fft_forward(l);
    let inverse = planner.plan_fft_inverse(l);
    Ok(Hamiltonian {
        spec,
        matrix,
        mode_energies,
        spectrum,
        forward,
        inverse,
    })
}

impl<T: Real> Hamiltonian<T> {
    pub fn spec(&self) -> HamiltonianSpec<T> {
        self.spec
    }

    pub fn size(&self) -> usize {
        self.spec.size
    }

    pub fn hopping(&self) -> T {
        self.spec.hopping
    }

    /// The real symmetric one-body matrix.
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    /// Complex copy of `H̃`.
    pub fn complex_matrix(&self) -> DMatrix<Cplx<T>> {
        self.matrix.map(|x| cplx(x, T::zero()))
    }

    /// Eigenvalues sorted descending.
    pub fn spectrum(&self) -> &[T] {
        &self.spectrum
    }

    /// Energy of Fourier mode `k`, in FFT order.
    pub fn mode_energies(&self) -> &[T] {
        &self.mode_energies
    }

    /// `out = (-i H̃ + diag(d)) u` for one orbital; `d = None` means no diagonal.
    #[inline]
    pub(crate) fn apply_generator(
        &self,
        diagonal: Option<&[Cplx<T>]>,
        u: &[Cplx<T>],
        out: &mut [Cplx<T>],
    ) {
        let l = u.len();
        let j = self.spec.hopping;
        for i in 0..l {
            let left = u[if i == 0 { l - 1 } else { i - 1 }];
            let right = u[if i + 1 == l { 0 } else { i + 1 }];
            let s = left + right;
            // -i J s
            out[i] = cplx(j * s.im, -(j * s.re));
        }
        if let Some(d) = diagonal {
            for i in 0..l {
                out[i] += d[i] * u[i];
            }
        }
    }

    /// Applies `exp(-i H̃ τ)` to every column of `u` in place.
    pub fn propagate(&self, u: &mut DMatrix<Cplx<T>>, duration: T) {
        let l = self.size();
        debug_assert_eq!(u.nrows(), l);
        let phases: Vec<Cplx<T>> = self
            .mode_energies
            .iter()
            .map(|&e| {
                let arg = -(e * duration);
                cplx(arg.cos(), arg.sin())
            })
            .collect();
        let scale = T::one() / T::from_usize_lossy(l);
        let mut scratch = vec![Cplx::<T>::zero(); self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len())];
        for mut col in u.column_iter_mut() {
            let data = col.as_mut_slice();
            self.forward.process_with_scratch(data, &mut scratch);
            for (z, p) in data.iter_mut().zip(&phases) {
                *z *= *p;
            }
            self.inverse.process_with_scratch(data, &mut scratch);
            for z in data.iter_mut() {
                z.re *= scale;
                z.im *= scale;
            }
        }
    }
}

/// Ordered set of distinct 0-based sites defining a subsystem `A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Region {
    sites: Vec<usize>,
}

impl Region {
    /// Sorts and validates `sites`: nonempty, distinct, each `< size`.
    pub fn new(sites: impl IntoIterator<Item = usize>, size: usize) -> Result<Self> {
        let mut sites: Vec<usize> = sites.into_iter().collect();
        sites.sort_unstable();
        if sites.is_empty() {
            return Err(Error::InvalidRegion("empty region".into()));
        }
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidRegion("repeated site".into()));
        }
        if let Some(&last) = sites.last() {
            if last >= size {
                return Err(Error::InvalidRegion(format!(
                    "site {last} outside a lattice of {size} sites"
                )));
            }
        }
        Ok(Self { sites })
    }

    /// Sites `0..len`.
    pub fn prefix(len: usize, size: usize) -> Result<Self> {
        Self::new(0..len, size)
    }

    /// `len` consecutive sites starting at `start`, wrapping around the ring.
    pub fn contiguous(start: usize, len: usize, size: usize) -> Result<Self> {
        if len > size {
            return Err(Error::InvalidRegion(format!("{len} sites on a ring of {size}")));
        }
        Self::new((0..len).map(|k| (start + k) % size), size)
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    /// All sites of the ring not in the region; `None` when the region is the whole ring.
    pub fn complement(&self, size: usize) -> Option<Self> {
        let rest: Vec<usize> = (0..size).filter(|s| !self.contains(*s)).collect();
        if rest.is_empty() {
            None
        } else {
            Some(Self { sites: rest })
        }
    }

    /// The region with `site` added.
    pub fn with_site(&self, site: usize) -> Self {
        let mut sites = self.sites.clone();
        if let Err(pos) = sites.binary_search(&site) {
            sites.insert(pos, site);
        }
        Self { sites }
    }

    /// Minimal periodic distance from `site` to the nearest site of the region.
    pub fn distance_to(&self, site: usize, size: usize) -> usize {
        self.sites
            .iter()
            .map(|&a| {
                let d = a.abs_diff(site) % size;
                d.min(size - d)
            })
            .min()
            .unwrap_or(0)
    }

    /// True when the sites form one run on the ring (wrapping allowed).
    pub fn is_contiguous(&self, size: usize) -> bool {
        let n = self.sites.len();
        if n == size {
            return true;
        }
        let breaks = (0..n)
            .filter(|&k| {
                let next = self.sites[(k + 1) % n];
                (self.sites[k] + 1) % size != next
            })
            .count();
        breaks == 1
    }
}
