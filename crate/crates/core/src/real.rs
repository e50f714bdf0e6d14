//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the laboratory is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or parameter.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every supported scalar")
    }

    /// Conversion from a count or index.
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize is representable in every supported scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;

/// Wrap an angle into (−π, π].
pub fn wrap_angle<T: Real>(theta: T) -> T {
    let two_pi = T::TAU();
    let mut r = theta % two_pi;
    if r <= -T::PI() {
        r = r + two_pi;
    } else if r > T::PI() {
        r = r - two_pi;
    }
    r
}

/// `e^{iθ}`
#[inline]
pub fn unit_phasor<T: Real>(theta: T) -> C<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

/// Wrapped difference `Arg(e^{i(a − b)})`, computed on the unit circle.
pub fn circular_difference<T: Real>(a: T, b: T) -> T {
    let z = unit_phasor(a) * unit_phasor(b).conj();
    z.im.atan2(z.re)
}
