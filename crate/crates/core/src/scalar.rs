//! Scalar abstraction shared by the deterministic layers.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating point scalar usable throughout the crate (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in target scalar")
}

/// Maps a tolerance calibrated for `f64` onto `T`.
///
/// Tolerances are treated as powers of machine epsilon, so `1e-10` in double
/// precision becomes roughly `4e-5` in single precision.
pub fn tol<T: Real>(tol_f64: f64) -> T {
    let eps_t = T::default_epsilon().to_f64().unwrap_or(f64::EPSILON);
    if eps_t <= f64::EPSILON {
        return lit(tol_f64);
    }
    let power = tol_f64.ln() / f64::EPSILON.ln();
    lit((power * eps_t.ln()).exp())
}

/// A positive number far below any meaningful magnitude, used as a floor for scales.
#[inline]
pub fn tiny<T: Real>() -> T {
    T::default_epsilon().powi(8)
}

/// Builds a complex scalar from real and imaginary parts.
#[inline]
pub fn cx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}
