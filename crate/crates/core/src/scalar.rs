//! Scalar abstraction shared by the solvers and the classifier.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating point type every numeric routine in this crate is written against.
///
/// Implemented for `f32` and `f64`. File formats and the command-line front end
/// are fixed to `f64`; everything below them is generic.
pub trait Scalar:
    'static
    + Send
    + Sync
    + Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
{
    /// Converts a literal. Panics only for types that cannot hold an `f64`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("scalar literal out of range")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

#[inline]
pub(crate) fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Numerical tolerances used by feasibility checks and the solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// Absolute slack a constraint may be violated by and still count as satisfied.
    pub feasibility: T,
    /// Distance from the nearest integer an integer variable may have.
    pub integrality: T,
    /// Smallest pivot / direction component the simplex accepts.
    pub pivot: T,
    /// Entries below this magnitude are treated as zero.
    pub zero: T,
    /// Relative tolerance on dual multipliers when testing optimality.
    pub optimality: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        Self {
            feasibility: T::lit(1e-8).max(eps * T::lit(64.0)),
            integrality: T::lit(1e-6).max(eps * T::lit(64.0)),
            pivot: T::lit(1e-9).max(eps * T::lit(16.0)),
            zero: T::lit(1e-11).max(eps * T::lit(4.0)),
            optimality: T::lit(1e-9).max(eps * T::lit(16.0)),
        }
    }
}
