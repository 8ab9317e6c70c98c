//! Scalar, complex and matrix aliases shared by every module.

use nalgebra as na;
use num_traits as nt;

/// Real field the whole library is generic over (`f32` or `f64`).
pub trait Real: Copy + nt::FromPrimitive + nt::ToPrimitive + na::RealField {}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = na::Complex<T>;
pub type CMat<T> = na::DMatrix<C<T>>;
pub type CVec<T> = na::DVector<C<T>>;

/// A point of Ω ⊂ ℂ^m.
pub type Point<T> = Vec<C<T>>;

#[inline]
pub fn re<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 representable")
}

#[inline]
pub fn cplx<T: Real>(re_: f64, im: f64) -> C<T> {
    C::new(re(re_), re(im))
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("finite real")
}

/// Largest entry modulus, as `f64`.
pub fn max_abs<T: Real>(a: &CMat<T>) -> f64 {
    a.iter().map(|z| to_f64(z.norm_sqr().sqrt())).fold(0.0, f64::max)
}

/// Max-entry residual of `a - b`, normalized by the larger operand magnitude
/// (clamped below at 1 so vanishing operands do not blow the ratio up).
pub fn residual<T: Real>(a: &CMat<T>, b: &CMat<T>) -> f64 {
    let scale = max_abs(a).max(max_abs(b)).max(1.0);
    max_abs(&(a - b)) / scale
}

/// Max-entry size of `a`, normalized the same way as [`residual`].
pub fn residual_zero<T: Real>(a: &CMat<T>, scale: f64) -> f64 {
    max_abs(a) / scale.max(1.0)
}

pub fn identity<T: Real>(n: usize) -> CMat<T> {
    CMat::<T>::identity(n, n)
}
