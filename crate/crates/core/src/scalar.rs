//! Scalar abstraction for the soft-decision parts of the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for received samples, LLRs and metrics (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` constant.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real")
    }

    /// `ln(1 + e^{-x})`, evaluated without overflow for either sign of `x`.
    fn softplus_neg(self) -> Self {
        if self > Self::zero() {
            (-self).exp().ln_1p()
        } else {
            -self + self.exp().ln_1p()
        }
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}
