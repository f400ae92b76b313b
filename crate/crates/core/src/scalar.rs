//! Scalar abstraction shared by every spectral kernel.

use std::fmt::{Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst};
use rustfft::FftNum;

/// Floating point type the solver is generic over (`f32` or `f64`).
///
/// Note that `Float` and `Signed` (pulled in by `FftNum`) both provide `abs`
/// and `signum`; call them as `Float::abs(x)` inside generic code.
pub trait Real: Float + FloatConst + FftNum + Default + Display + LowerExp + Sum {
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }

    /// Relative tolerance for identities exact in exact arithmetic: `1e-10`,
    /// loosened to `1e3 eps` when the precision cannot reach it.
    fn identity_tol() -> f64 {
        (1e3 * Self::epsilon().as_f64()).max(1e-10)
    }

    /// Bound on `||curl^3 u||^2 + ||curl^3 B||^2` past which a run is treated
    /// as blown up; the cubic diagnostics of larger fields overflow.
    fn blow_up_cap() -> f64 {
        Self::max_value().as_f64().cbrt() * 1e-2
    }
}

impl Real for f32 {}
impl Real for f64 {}
