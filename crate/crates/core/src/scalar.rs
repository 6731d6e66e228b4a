//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the engine computes in: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Display
    + Debug
    + Default
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    /// Conversion from a count.
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable in every Scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Rounds to two decimals, ties away from zero.
pub fn round2<T: Scalar>(x: T) -> T {
    let hundred = T::of(100.0);
    (x * hundred).round() / hundred
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round2_ties_away_from_zero() {
        assert_eq!(round2(0.125f64), 0.13);
        assert_eq!(round2(-0.125f64), -0.13);
        assert_eq!(round2(22.2818f64), 22.28);
        assert_eq!(round2(2.5f32), 2.5);
    }
}
