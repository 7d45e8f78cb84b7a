//! Scalar abstraction shared by every module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}

/// Rescales a threshold tuned for `f64` to the precision of `T`.
///
/// For `f64` the value is returned unchanged; for `f32` it grows by the ratio
/// of the two machine epsilons.
#[inline]
pub fn scaled_tol<T: Real>(tol_f64: f64) -> T {
    let ratio = T::epsilon().to_f64().unwrap_or(f64::EPSILON) / f64::EPSILON;
    lit(tol_f64 * ratio)
}

/// Lossy conversion used for error messages and reports.
#[inline]
pub fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}
