//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// Everything in this crate is written against `Real` so that the same code
/// runs in single or double precision. Tolerances quoted in the docs are for
/// `f64`; [`Real::tolerance`] scales them for lower precision types.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// `target` if the type can resolve it, otherwise a few thousand ulps.
    #[inline]
    fn tolerance(target: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(4096.0);
        Self::lit(target).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}
