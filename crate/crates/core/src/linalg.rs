//! Dense complex kernels: Gram products, Cholesky-based QR, Hermitian eigensolvers.
//!
//! Matrices are nalgebra `DMatrix` values, column-major; the hot kernels work on
//! the contiguous column slices directly.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{cplx, norm_sqr, Cplx, Real};

/// `Σ_i conj(a_i) b_i`, four independent accumulators so the loop pipelines.
#[inline]
pub(crate) fn dot_conj<T: Real>(a: &[Cplx<T>], b: &[Cplx<T>]) -> Cplx<T> {
    debug_assert_eq!(a.len(), b.len());
    let mut re = [T::zero(); 4];
    let mut im = [T::zero(); 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            re[l] += x[l].re * y[l].re + x[l].im * y[l].im;
            im[l] += x[l].re * y[l].im - x[l].im * y[l].re;
        }
    }
    for (x, y) in ra.iter().zip(rb) {
        re[0] += x.re * y.re + x.im * y.im;
        im[0] += x.re * y.im - x.im * y.re;
    }
    cplx(
        (re[0] + re[1]) + (re[2] + re[3]),
        (im[0] + im[1]) + (im[2] + im[3]),
    )
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy<T: Real>(alpha: Cplx<T>, x: &[Cplx<T>], y: &mut [Cplx<T>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        let re = alpha.re * xi.re - alpha.im * xi.im;
        let im = alpha.re * xi.im + alpha.im * xi.re;
        yi.re += re;
        yi.im += im;
    }
}

/// Gram matrix `X† X` of the columns of `x`; exactly Hermitian with a real diagonal.
pub fn gram<T: Real>(x: &DMatrix<Cplx<T>>) -> DMatrix<Cplx<T>> {
    let (rows, cols) = x.shape();
    let data = x.as_slice();
    let mut g = DMatrix::<Cplx<T>>::zeros(cols, cols);
    for b in 0..cols {
        let cb = &data[b * rows..(b + 1) * rows];
        for a in 0..=b {
            let ca = &data[a * rows..(a + 1) * rows];
            let v = dot_conj(ca, cb);
            if a == b {
                g[(a, a)] = cplx(v.re, T::zero());
            } else {
                g[(a, b)] = v;
                g[(b, a)] = v.conj();
            }
        }
    }
    g
}

/// Replaces `m` by `(m + m†) / 2`.
pub fn hermitize<T: Real>(m: &mut DMatrix<Cplx<T>>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let half = T::lit(0.5);
    for j in 0..n {
        m[(j, j)].im = T::zero();
        for i in 0..j {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * half;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(m: &DMatrix<Cplx<T>>) -> T {
    m.iter()
        .map(|z| norm_sqr(*z))
        .fold(T::zero(), |acc, v| if v > acc { v } else { acc })
        .sqrt()
}

/// `‖U†U − I‖_max`
pub fn orthonormality_defect<T: Real>(u: &DMatrix<Cplx<T>>) -> T {
    let mut g = gram(u);
    for k in 0..g.nrows() {
        g[(k, k)] -= Cplx::new(T::one(), T::zero());
    }
    max_abs(&g)
}

/// `‖D² − D‖_max`
pub fn projector_defect<T: Real>(d: &DMatrix<Cplx<T>>) -> T {
    let sq = d * d;
    max_abs(&(sq - d))
}

/// Upper Cholesky factor `R` of a Hermitian positive definite `g = R†R`, with a
/// real positive diagonal. Returns `None` when a pivot falls below
/// `rel_tol · max diag(g)`.
fn cholesky_upper<T: Real>(g: &DMatrix<Cplx<T>>, rel_tol: T) -> Option<DMatrix<Cplx<T>>> {
    let n = g.nrows();
    let scale = (0..n)
        .map(|k| g[(k, k)].re)
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let floor = rel_tol * scale;
    let mut r = DMatrix::<Cplx<T>>::zeros(n, n);
    for j in 0..n {
        let mut pivot = g[(j, j)].re;
        for k in 0..j {
            pivot -= norm_sqr(r[(k, j)]);
        }
        if !(pivot > floor) {
            return None;
        }
        let rjj = pivot.sqrt();
        r[(j, j)] = cplx(rjj, T::zero());
        for c in (j + 1)..n {
            let mut v = g[(j, c)];
            for k in 0..j {
                v -= r[(k, j)].conj() * r[(k, c)];
            }
            r[(j, c)] = v / rjj;
        }
    }
    Some(r)
}

/// In place `U ← U R⁻¹` for upper-triangular `R`.
fn solve_upper_right<T: Real>(u: &mut DMatrix<Cplx<T>>, r: &DMatrix<Cplx<T>>) {
    let (rows, cols) = u.shape();
    let data = u.as_mut_slice();
    for b in 0..cols {
        let (done, rest) = data.split_at_mut(b * rows);
        let col = &mut rest[..rows];
        for a in 0..b {
            let coeff = -r[(a, b)];
            if coeff.is_zero() {
                continue;
            }
            axpy(coeff, &done[a * rows..(a + 1) * rows], col);
        }
        let inv = T::one() / r[(b, b)].re;
        for z in col.iter_mut() {
            z.re *= inv;
            z.im *= inv;
        }
    }
}

const CHOLQR_REL_TOL: f64 = 1e-20;
const RANK_FLOOR: f64 = 1e-12;

/// Orthonormalizes the columns of `u` as the `Q` factor of `u = QR` with a real
/// positive diagonal on `R`, which makes `Q` unique.
///
/// Uses Cholesky QR (repeated once when the input is far from orthonormal) and
/// falls back to Householder QR when the Gram matrix is too ill-conditioned.
/// Rank loss (a pivot below `1e-12`) is an error: the state would describe fewer
/// than `N` particles.
pub fn orthonormalize<T: Real>(mut u: DMatrix<Cplx<T>>) -> Result<DMatrix<Cplx<T>>> {
    let g = gram(&u);
    match cholesky_upper(&g, T::lit(CHOLQR_REL_TOL)) {
        Some(r) => {
            let (min, max) = diag_range(&r);
            if min < T::lit(RANK_FLOOR) {
                return Err(Error::RankDeficient(min.as_f64()));
            }
            solve_upper_right(&mut u, &r);
            // cond(u)^2 * eps bounds the loss of orthogonality of one pass
            if max / min > T::lit(1.0 + 1e-2) {
                let g2 = gram(&u);
                let r2 = cholesky_upper(&g2, T::lit(CHOLQR_REL_TOL))
                    .ok_or_else(|| Error::RankDeficient(0.0))?;
                solve_upper_right(&mut u, &r2);
            }
            Ok(u)
        }
        None => householder_orthonormalize(u),
    }
}

fn diag_range<T: Real>(r: &DMatrix<Cplx<T>>) -> (T, T) {
    let mut min = T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
    let mut max = T::zero();
    for k in 0..r.nrows() {
        let v = r[(k, k)].re;
        if v < min {
            min = v;
        }
        if v > max {
            max = v;
        }
    }
    (min, max)
}

fn householder_orthonormalize<T: Real>(u: DMatrix<Cplx<T>>) -> Result<DMatrix<Cplx<T>>> {
    let n = u.ncols();
    let qr = u.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..n {
        let d = r[(k, k)];
        let m = ComplexField::abs(d);
        if m < T::lit(RANK_FLOOR) {
            return Err(Error::RankDeficient(m.as_f64()));
        }
        let phase = d.unscale(m);
        for z in q.column_mut(k).iter_mut() {
            *z *= phase;
        }
    }
    Ok(q)
}

/// Eigenvalues of a Hermitian matrix, sorted descending.
pub fn hermitian_eigenvalues<T: Real>(m: DMatrix<Cplx<T>>) -> Vec<T> {
    let mut ev: Vec<T> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Full Hermitian eigendecomposition, eigenvalues sorted descending with ties
/// kept in solver order; columns of the returned matrix are the eigenvectors.
pub fn hermitian_eigen<T: Real>(m: DMatrix<Cplx<T>>) -> (Vec<T>, DMatrix<Cplx<T>>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn gram_is_hermitian() {
        let x = random_matrix(9, 4, 1);
        let g = gram(&x);
        let direct = x.adjoint() * &x;
        assert!(max_abs(&(&g - &direct)) < 1e-14);
        assert!(max_abs(&(&g - g.adjoint())) == 0.0);
    }

    #[test]
    fn random_qr_is_orthonormal() {
        let u = random_matrix(8, 4, 7);
        let q = orthonormalize(u.clone()).unwrap();
        assert!(orthonormality_defect(&q) < 1e-13);
        // R = Q†U is upper triangular with a positive diagonal
        let r = q.adjoint() * &u;
        for j in 0..4 {
            assert!(r[(j, j)].re > 0.0 && r[(j, j)].im.abs() < 1e-13);
            for i in (j + 1)..4 {
                assert!(r[(i, j)].norm() < 1e-13);
            }
        }
    }

    #[test]
    fn scaling_is_removed() {
        let v = orthonormalize(random_matrix(8, 4, 3)).unwrap();
        let q = orthonormalize(v.scale(2.0)).unwrap();
        assert!(max_abs(&(&q - &v)) < 1e-14);
    }

    #[test]
    fn identity_columns_are_fixed_points() {
        let mut u = DMatrix::<Complex64>::zeros(6, 3);
        u[(0, 0)] = Complex64::new(1.0, 0.0);
        u[(2, 1)] = Complex64::new(1.0, 0.0);
        u[(4, 2)] = Complex64::new(1.0, 0.0);
        assert_eq!(orthonormalize(u.clone()).unwrap(), u);
    }

    #[test]
    fn ill_conditioned_input_uses_fallback_and_matches() {
        let mut u = random_matrix(10, 3, 5);
        let c0 = u.column(0).clone_owned();
        let mut c1 = u.column_mut(1);
        c1.copy_from(&(c0.scale(1.0) + c1.scale(1e-9)));
        let q = orthonormalize(u.clone()).unwrap();
        assert!(orthonormality_defect(&q) < 1e-12);
        let r = q.adjoint() * &u;
        for j in 0..3 {
            assert!(r[(j, j)].re > 0.0 && r[(j, j)].im.abs() < 1e-12 * r[(j, j)].re.max(1.0));
        }
    }

    #[test]
    fn rank_deficiency_is_an_error() {
        let mut u = random_matrix(6, 3, 11);
        let c0 = u.column(0).clone_owned();
        u.column_mut(2).copy_from(&c0);
        assert!(matches!(orthonormalize(u), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn eigen_sorted_descending() {
        let x = random_matrix(5, 5, 2);
        let h = &x + x.adjoint();
        let (vals, vecs) = hermitian_eigen(h.clone());
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            5,
            vals.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        assert!(max_abs(&(&vecs * d * vecs.adjoint() - &h)) < 1e-12);
        let only = hermitian_eigenvalues(h);
        for (a, b) in only.iter().zip(&vals) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
