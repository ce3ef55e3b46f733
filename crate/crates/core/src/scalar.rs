//! Scalar abstraction: every kernel in this crate is generic over [`Real`],
//! implemented for `f32` and `f64`.

use std::fmt;

/// Floating-point scalar the numeric kernels operate on.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + num_traits::Signed
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Convert an `f64` constant into the working scalar type.
#[inline]
pub fn from_f64<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 constant representable in scalar type")
}

/// Convert a `usize` (grid index, count) into the working scalar type.
#[inline]
pub fn from_usize<R: Real>(n: usize) -> R {
    R::from_usize(n).expect("usize representable in scalar type")
}
