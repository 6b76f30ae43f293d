//! Floating point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::Serialize;

/// Real scalar type the estimation code is written against.
///
/// Implemented for `f32` and `f64`. Everything in the crate is generic over
/// this trait; the concrete aliases at the crate root pin it to `f64`, which
/// is what the tolerances documented throughout the crate assume.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Relative tolerance floor that is meaningful for the scalar's precision.
pub(crate) fn precision_floor<T: Scalar>(requested: T) -> T {
    requested.max(T::epsilon() * T::of(64.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion() {
        assert_eq!(<f64 as Scalar>::of(0.25), 0.25);
        assert_eq!(<f32 as Scalar>::of(0.25), 0.25f32);
        assert_eq!(<f64 as Scalar>::of_usize(12), 12.0);
        assert!(precision_floor(1e-12f32) > 1e-12);
        assert_eq!(precision_floor(1e-8f64), 1e-8);
    }
}
