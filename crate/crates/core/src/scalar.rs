//! Scalar abstraction shared by the network, planner and environment code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the library is generic over: `f32` or `f64`.
///
/// Constants are written as `f64` literals and converted with [`Real::lit`];
/// random draws are made in `f64` and converted the same way, so a given seed
/// produces the same sample stream for both precisions.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 constant representable")
    }

    /// Widens to `f64`. Exact for both `f32` and `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("finite float widens to f64")
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + LinalgScalar
        + ScalarOperand
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<F: Real>(x: F) -> F {
    let pi = F::lit(std::f64::consts::PI);
    let two_pi = pi + pi;
    let mut y = x % two_pi;
    if y <= -pi {
        y += two_pi;
    } else if y > pi {
        y -= two_pi;
    }
    y
}
