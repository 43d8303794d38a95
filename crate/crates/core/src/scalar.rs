//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point scalar the library is generic over (`f32` or `f64`).
///
/// The validation and convergence tolerances scale with the type so that the
/// same checks are meaningful in single precision.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance for Hermiticity, unitarity, unit trace and positivity checks.
    fn validation_tol() -> Self;

    /// Off-diagonal norm (relative to the matrix scale) at which Jacobi sweeps stop.
    fn jacobi_tol() -> Self;

    /// Below this magnitude `sinh(x)/x` is replaced by its limit 1 and the
    /// `|00>`/`|11>` block is treated as decoupled.
    fn singular_tol() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Real for f64 {
    fn validation_tol() -> Self {
        1e-12
    }
    fn jacobi_tol() -> Self {
        1e-14
    }
    fn singular_tol() -> Self {
        1e-8
    }
}

impl Real for f32 {
    fn validation_tol() -> Self {
        1e-5
    }
    fn jacobi_tol() -> Self {
        1e-7
    }
    fn singular_tol() -> Self {
        1e-4
    }
}

/// `sinh(x)/x`, continuous at the origin.
pub fn sinhc<T: Real>(x: T) -> T {
    if x.abs() < T::singular_tol() {
        T::one() + x * x / T::lit(6.0)
    } else {
        x.sinh() / x
    }
}
