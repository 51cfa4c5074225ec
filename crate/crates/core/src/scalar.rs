//! Real scalar abstraction shared by every numerical routine in the crate.

use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point type the Gaussian-state algebra is generic over: `f32` or `f64`.
///
/// Tolerances quoted throughout the crate assume `f64`; `f32` runs are supported
/// for quick exploratory work but will not meet them.
pub trait Real: RealField + FftNum + Copy + FromPrimitive + ToPrimitive + Default {
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn magnitude(self) -> Self {
        <Self as ComplexField>::abs(self)
    }

    /// Clamp used before taking logarithms of correlation-matrix eigenvalues.
    ///
    /// `1e-12` for `f64`; widened for types whose epsilon makes `1 - 1e-12 == 1`.
    #[inline]
    fn log_clamp() -> Self {
        let floor = Self::lit(1e-12);
        let eps = Self::default_epsilon() * Self::lit(16.0);
        if eps > floor {
            eps
        } else {
            floor
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex amplitude over a [`Real`] field.
pub type Cplx<T> = Complex<T>;

#[inline]
pub(crate) fn cplx<T: Real>(re: T, im: T) -> Cplx<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn norm_sqr<T: Real>(z: Cplx<T>) -> T {
    z.re * z.re + z.im * z.im
}
