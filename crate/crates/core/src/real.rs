//! Scalar abstraction shared by every numerical routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar used throughout the crate (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range")
    }

    /// Converts an unsigned count.
    fn count(k: u64) -> Self {
        Self::from_u64(k).expect("count out of range")
    }

    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance for root polishing.
    fn root_tol() -> Self;

    /// Target relative tolerance for adaptive quadrature.
    fn quad_tol() -> Self;
}

impl Real for f64 {
    fn root_tol() -> Self {
        4.0 * f64::EPSILON
    }
    fn quad_tol() -> Self {
        1e-13
    }
}

impl Real for f32 {
    fn root_tol() -> Self {
        4.0 * f32::EPSILON
    }
    fn quad_tol() -> Self {
        1e-6
    }
}
