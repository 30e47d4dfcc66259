//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type the simulator can run on (`f32` or `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Lossy widening used by serializers and metric readers.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Zero-length threshold below which directions are considered degenerate (meters).
pub fn eps_zero<T: Scalar>() -> T {
    T::lit(1e-9)
}
