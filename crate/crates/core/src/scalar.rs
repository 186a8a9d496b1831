//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar usable by the decomposition, data and control code.
///
/// Implemented for `f32` and `f64`. All tolerances in the crate are expressed in
/// `f64` literals and converted with [`Scalar::lit`].
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + LowerExp + Debug + Default
{
    /// Machine epsilon of the underlying type.
    fn machine_eps() -> Self;

    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in scalar")
    }
}

impl Scalar for f64 {
    #[inline]
    fn machine_eps() -> Self {
        f64::EPSILON
    }
}

impl Scalar for f32 {
    #[inline]
    fn machine_eps() -> Self {
        f32::EPSILON
    }
}
