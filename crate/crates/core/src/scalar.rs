//! Scalar abstraction for the geometric and integration layers.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point scalar usable by the group and ODE code.
///
/// Tolerances that depend on machine precision are carried as associated
/// constants so the same algorithms work for `f32` and `f64`.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Determinant drift above which a group element is rescaled.
    const DET_DRIFT: Self;
    /// Smallest admissible integrator step.
    const MIN_STEP: Self;

    /// Converts an `f64` literal. Panics only for non-representable values,
    /// which never happens for the literals used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl Real for f64 {
    const DET_DRIFT: Self = 1e-13;
    const MIN_STEP: Self = 1e-12;
}

impl Real for f32 {
    const DET_DRIFT: Self = 1e-6;
    const MIN_STEP: Self = 1e-6;
}
