//! Von Neumann entropies and mutual information of Gaussian states.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::linalg::hermitian_eigenvalues;
use crate::scalar::{Cplx, Real};
use crate::state::CorrelationMatrix;

/// Eigenvalues further than this outside `[0, 1]` indicate corrupted input.
pub const EIGENVALUE_SLACK: f64 = 1e-6;

/// `−λ ln λ − (1−λ) ln(1−λ)` with `λ` clamped to `[ε, 1−ε]`.
#[inline]
pub fn binary_entropy<T: Real>(lambda: T) -> T {
    let eps = T::log_clamp();
    let hi = T::one() - eps;
    let x = if lambda < eps {
        eps
    } else if lambda > hi {
        hi
    } else {
        lambda
    };
    let y = T::one() - x;
    -(x * x.ln() + y * y.ln())
}

/// Entropy from the eigenvalues of a restricted correlation matrix.
pub fn entropy_from_eigenvalues<T: Real>(eigenvalues: &[T]) -> Result<T> {
    let slack = T::lit(EIGENVALUE_SLACK);
    let mut s = T::zero();
    for &l in eigenvalues {
        if l < -slack || l > T::one() + slack || !l.is_finite() {
            return Err(Error::EigenvalueOutOfRange(l.as_f64()));
        }
        s += binary_entropy(l);
    }
    Ok(s)
}

/// Entropy of the Gaussian state whose restricted correlation matrix is `block`.
pub fn block_entropy<T: Real>(block: DMatrix<Cplx<T>>) -> Result<T> {
    entropy_from_eigenvalues(&hermitian_eigenvalues(block))
}

/// `S_A = −Σ_i [λ_i ln λ_i + (1−λ_i) ln(1−λ_i)]` over the eigenvalues of `D^A`.
pub fn entanglement_entropy<T: Real>(d: &CorrelationMatrix<T>, region: &Region) -> Result<T> {
    check_region(d, region)?;
    block_entropy(d.block(region))
}

fn check_region<T: Real>(d: &CorrelationMatrix<T>, region: &Region) -> Result<()> {
    match region.sites().last() {
        Some(&s) if s < d.size() => Ok(()),
        _ => Err(Error::InvalidRegion(format!(
            "region does not fit a lattice of {} sites",
            d.size()
        ))),
    }
}

/// Mutual information between a region and one outside site, with the periodic
/// distance from that site to the nearest site of the region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutualInformation<T> {
    pub value: T,
    pub distance: usize,
}

/// `I = S_A + S_r − S_{A∪r}`, where `S_r` is the binary entropy of `D_rr`.
pub fn mutual_information<T: Real>(
    d: &CorrelationMatrix<T>,
    region: &Region,
    site: usize,
) -> Result<MutualInformation<T>> {
    check_region(d, region)?;
    if site >= d.size() {
        return Err(Error::InvalidRegion(format!("site {site} outside lattice")));
    }
    if region.contains(site) {
        return Err(Error::SiteInRegion(site));
    }
    let s_a = entanglement_entropy(d, region)?;
    let s_r = binary_entropy(d.occupation(site));
    let s_ar = entanglement_entropy(d, &region.with_site(site))?;
    Ok(MutualInformation {
        value: s_a + s_r - s_ar,
        distance: region.distance_to(site, d.size()),
    })
}
