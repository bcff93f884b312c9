use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar the simulator core is generic over (`f32` or `f64`).
///
/// Besides the arithmetic bounds this carries the precision-dependent
/// tolerances used by the propagator, so the same code path can run in
/// single precision with proportionally looser checks.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Norm drift above which a propagated state is renormalized.
    fn renormalize_threshold() -> Self;

    /// Norm drift treated as an integrator failure.
    fn drift_failure_threshold() -> Self;

    /// Tolerance used when checking that a state handed to an operation is normalized.
    fn normalization_tolerance() -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn renormalize_threshold() -> Self {
        1e-12
    }
    fn drift_failure_threshold() -> Self {
        1e-8
    }
    fn normalization_tolerance() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn renormalize_threshold() -> Self {
        1e-6
    }
    fn drift_failure_threshold() -> Self {
        1e-3
    }
    fn normalization_tolerance() -> Self {
        1e-4
    }
}
