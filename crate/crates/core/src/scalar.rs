use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar the dense linear algebra is generic over.
///
/// Implemented for `f32` and `f64`. Everything downstream of the fitness
/// function runs in `f64`; `f32` exists so the kernels can be exercised at a
/// lower precision.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, panicking only on values no float can hold.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance floor: `max(abs, 64 * epsilon)`.
    fn tol(abs: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        Self::lit(abs).max(floor)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + NumAssign
        + Debug
        + Display
        + Default
        + Sum
        + Send
        + Sync
        + 'static
{
}
