//! Scalar abstraction: every model quantity is generic over one IEEE float type.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Scalar type used throughout the crate (`f32`, `f64`, ...).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// Lossy `f64` -> `T` cast for literals and precomputed constants.
///
/// Panics only if the scalar type cannot represent ordinary finite values,
/// which no `Float` implementor of practical interest does.
#[inline]
pub fn cast<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 constant must be representable")
}

/// `T` -> `f64`, used for error payloads and text output.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
