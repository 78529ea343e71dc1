//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point type the simulation can be instantiated with.
///
/// Implemented for `f32` and `f64`. Every algorithm here needs square roots,
/// exponentials and trigonometry, so exact or rational scalars are not
/// supported.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for the finite constants used in this crate.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite value")
    }

    fn cplx(re: f64, im: f64) -> Complex<Self> {
        Complex::new(Self::lit(re), Self::lit(im))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Principal-value argument mapped onto `(-π, π]`.
pub(crate) fn principal_arg<T: Real>(z: Complex<T>) -> T {
    let a = z.im.atan2(z.re);
    if a <= -T::PI() {
        a + T::PI() + T::PI()
    } else {
        a
    }
}
