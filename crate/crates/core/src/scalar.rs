//! Scalar abstractions shared by the probability and spectral code.
//!
//! Probabilities (killed walks, decorated chains, moments) only need field
//! arithmetic, so they run over [`Scalar`], which covers `f32`, `f64` and
//! exact `BigRational`. Eigenproblems need a real closed field and run over
//! [`Real`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};

/// Field-like scalar used for probability masses.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + for<'a> std::ops::AddAssign<&'a Self>
    + 'static
{
    /// Exact (or nearest) representation of `num / den`.
    fn ratio(num: u64, den: u64) -> Self;

    /// Lossy conversion for reporting.
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    fn ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Floating-point scalar for dense eigenproblems.
pub trait Real:
    Scalar + num_traits::Float + num_traits::FloatConst + FromPrimitive + nalgebra::RealField + Copy
{
    fn from_f64_lossy(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite float")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_is_exact_for_rationals() {
        let half = <BigRational as Scalar>::ratio(1, 2);
        assert_eq!(half.clone() + half, BigRational::one());
        assert_eq!(<f64 as Scalar>::ratio(7, 64), 7.0 / 64.0);
    }
}
