//! Floating-point abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type the library is generic over.
///
/// Implemented for `f32` and `f64`. Tolerances scale with the precision of
/// the type so that the same code paths stay meaningful in single precision.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Boundary membership tolerance.
    const BOUNDARY_TOL: f64;
    /// Root-finding tolerance.
    const ROOT_TOL: f64;
    /// Largest exponent magnitude accepted by `exp` before clamping.
    const EXP_CLAMP: f64;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts an integer count.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Lossless widening for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const BOUNDARY_TOL: f64 = 1e-5;
    const ROOT_TOL: f64 = 1e-6;
    const EXP_CLAMP: f64 = 80.0;
}

impl Scalar for f64 {
    const BOUNDARY_TOL: f64 = 1e-10;
    const ROOT_TOL: f64 = 1e-12;
    const EXP_CLAMP: f64 = 700.0;
}

/// Numerical tolerances passed to geometry routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Tolerances<T> {
    pub boundary: T,
    pub root: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            boundary: T::lit(T::BOUNDARY_TOL),
            root: T::lit(T::ROOT_TOL),
        }
    }
}
