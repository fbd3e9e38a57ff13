//! Scalar abstraction shared by every routine in the crate.

use nalgebra::{Complex, DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating point type the library is generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync {}

pub type Mat<T> = DMatrix<T>;
pub type Vector<T> = DVector<T>;
pub type C<T> = Complex<T>;
pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Converts an `f64` constant into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Tolerance `tol`, floored at a small multiple of machine epsilon of `T`.
#[inline]
pub fn tol<T: Real>(tol: f64) -> T {
    let floor = T::default_epsilon() * lit(64.0);
    let t = lit::<T>(tol);
    if t < floor {
        floor
    } else {
        t
    }
}

pub(crate) fn complexify<T: Real>(m: &Mat<T>) -> CMat<T> {
    m.map(|x| Complex::new(x, T::zero()))
}

pub(crate) fn complexify_vec<T: Real>(v: &Vector<T>) -> CVector<T> {
    v.map(|x| Complex::new(x, T::zero()))
}

/// Real part plus the largest absolute imaginary part.
pub(crate) fn split_real<T: Real>(m: &CMat<T>) -> (Mat<T>, T) {
    let im = m.iter().fold(T::zero(), |a, z| a.max(z.im.abs()));
    (m.map(|z| z.re), im)
}

pub(crate) fn split_real_vec<T: Real>(v: &CVector<T>) -> (Vector<T>, T) {
    let im = v.iter().fold(T::zero(), |a, z| a.max(z.im.abs()));
    (v.map(|z| z.re), im)
}

pub(crate) fn symmetrize<T: Real>(m: &Mat<T>) -> Mat<T> {
    (m + m.transpose()) * lit::<T>(0.5)
}

pub(crate) fn max_abs<T: Real>(m: &Mat<T>) -> T {
    m.iter().fold(T::zero(), |a, &x| a.max(x.abs()))
}
