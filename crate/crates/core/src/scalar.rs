//! Floating-point scalar abstraction shared by every numerical module.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real scalar type the analysis is generic over.
///
/// Implemented for `f32` and `f64`. File formats always store `f64`, so
/// conversions go through [`Scalar::of`] and [`Scalar::to_f64_lossy`].
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts a literal or stored `f64` into this scalar type.
    #[inline]
    fn of(v: f64) -> Self {
        // Infallible for both f32 and f64 (f32 rounds, possibly to inf).
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
