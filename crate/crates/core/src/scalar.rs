//! Scalar abstraction for the closed-form physics.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar used by the kinematics, analytic fringe model and
/// heating formulas: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion from a signed integer.
    #[inline]
    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable")
    }

    /// Widening conversion for code paths that always run in double precision.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
