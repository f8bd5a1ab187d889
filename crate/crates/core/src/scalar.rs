//! Numeric traits the rest of the crate is written against.
//!
//! Two tiers: [`Field`] covers anything with exact `+ - * /` and an ordering,
//! which is all the linear transport maps need, so they run unchanged over
//! the rational type [`Exact`]. [`Scalar`] adds the transcendental
//! operations (square roots, rounding) used by geometry and event detection.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// Arbitrary-precision rational used for exact checks.
pub type Exact = dashu_ratio::RBig;

/// Ordered field: enough for the linearised collision and free-flight maps.
pub trait Field:
    Num + Signed + Neg<Output = Self> + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    fn two() -> Self {
        Self::one() + Self::one()
    }

    /// Lossy constant conversion; panics only for non-finite input.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }
}

impl Field for f32 {}
impl Field for f64 {}
impl Field for Exact {}

/// Floating-point scalar: f32 or f64.
pub trait Scalar: Field + Float + FloatConst + Copy + Display + Default {}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts a finite float into `F`. Every finite binary float is a dyadic
/// rational, so for the rational fields no information is lost.
pub fn exact_from<S: Scalar, F: Field>(x: S) -> F {
    let x = x.to_f64().expect("finite scalar");
    F::from_f64(x).expect("finite scalar")
}
