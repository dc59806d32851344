//! Scalar abstraction shared by the analytic modules.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point type the analytic core is written against.
///
/// Implemented for `f32` and `f64`. Tolerances inside the crate are derived
/// from [`Real::tol`] so that the same code runs at either precision; the
/// documented contracts (residuals of `1e-12` and the like) refer to `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a literal. Panics only if the literal is not representable, which
    /// cannot happen for the finite constants used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// `max(requested, 64 * epsilon)`: a requested absolute tolerance clamped to
    /// what the precision can deliver.
    #[inline]
    fn tol(requested: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        let r = Self::lit(requested);
        if r > floor {
            r
        } else {
            floor
        }
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Root of `s^2 = w` closest to `previous`; used for continuity-based branch tracking.
pub(crate) fn sqrt_near<T: Real>(w: Complex<T>, previous: Complex<T>) -> Complex<T> {
    let s = w.sqrt();
    if (s - previous).norm() <= (-s - previous).norm() {
        s
    } else {
        -s
    }
}
