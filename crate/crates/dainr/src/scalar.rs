use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type the numeric stack is generic over.
///
/// `f64` is used by tests and oracles, `f32` is the training default.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + rustfft::FftNum
    + Default
    + std::fmt::Display
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for lifting an `f64` constant into `T`.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable")
}

/// Convert between scalar types through `f64`.
#[inline]
pub fn cast<T: Real, U: Real>(x: T) -> U {
    real(x.to_f64().expect("scalar representable as f64"))
}
