//! Floating-point element types the numeric core is generic over.
//!
//! Activation storage is 32-bit; every distance, moment and likelihood is
//! accumulated in 64-bit regardless of the element type.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::io::npy::NpyElement;

/// f32 or f64.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + NpyElement + 'static
{
    #[inline]
    fn as_f64(self) -> f64 {
        // Float -> f64 never fails for f32/f64.
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).unwrap_or_else(Self::nan)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
