//! Scalar abstractions shared by every module.
//!
//! Continuous models (densities, Monte Carlo, patterns) are written against
//! [`Real`], implemented for `f32` and `f64`. Series arithmetic only needs a
//! ring with exact integer embedding, so it is written against
//! [`SeriesScalar`], which additionally covers `BigRational` for exact
//! coefficient work.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + std::fmt::LowerExp
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, rounding for narrower types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ring scalar for truncated power-series arithmetic.
pub trait SeriesScalar:
    Clone + Num + std::ops::Neg<Output = Self> + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    #[inline]
    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable")
    }

    /// Lossy view used for radius estimates and reporting.
    #[inline]
    fn approx_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl SeriesScalar for f32 {}
impl SeriesScalar for f64 {}
impl SeriesScalar for BigRational {}

/// Exact rational `numer/denom`.
pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}
