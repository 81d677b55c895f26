//! Scalar abstraction for the closed-form model code.
//!
//! The bridge, likelihood and density routines are written once against
//! [`Scalar`] and instantiated for `f32` and `f64`. Everything that needs
//! linear algebra or random sampling works in `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; data arrive in `f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
