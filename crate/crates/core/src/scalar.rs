//! Real scalar abstraction shared by every floating-point code path.
//!
//! Two implementations ship: `f64` and the double-double [`Dd`] type.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub use crate::dd::Dd;

/// Real scalar used by the numerical modules.
pub trait Real:
    Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Short label stored in exported records.
    const LABEL: &'static str;

    fn pi() -> Self;

    /// Cosine accurate to the full precision of the type.
    fn cos_full(self) -> Self;

    /// Sine accurate to the full precision of the type.
    fn sin_full(self) -> Self;

    /// Exponential accurate to the full precision of the type.
    fn exp_full(self) -> Self;

    /// Unit roundoff of the type.
    fn unit_roundoff() -> Self;

    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64")
    }

    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("representable usize")
    }

    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const LABEL: &'static str = "double";

    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn cos_full(self) -> Self {
        self.cos()
    }
    fn sin_full(self) -> Self {
        self.sin()
    }
    fn exp_full(self) -> Self {
        self.exp()
    }
    fn unit_roundoff() -> Self {
        f64::EPSILON / 2.0
    }
}

impl Real for Dd {
    const LABEL: &'static str = "dd";

    fn pi() -> Self {
        Dd::PI
    }
    fn cos_full(self) -> Self {
        self.cos()
    }
    fn sin_full(self) -> Self {
        self.sin()
    }
    fn exp_full(self) -> Self {
        self.exp()
    }
    fn unit_roundoff() -> Self {
        Dd::from_f64(2f64.powi(-104))
    }
    fn of(x: f64) -> Self {
        Dd::from_f64(x)
    }
}

/// Precision selector carried through configs and job files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    Dd,
}

pub type C<T> = Complex<T>;

pub fn c<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::of(re), T::of(im))
}

/// Principal square root computed without trigonometry.
pub fn csqrt<T: Real>(z: C<T>) -> C<T> {
    if z.re.is_zero() && z.im.is_zero() {
        return C::zero();
    }
    let m = z.re.hypot(z.im);
    let two = T::of(2.0);
    if z.re >= T::zero() {
        let t = ((m + z.re) / two).sqrt();
        Complex::new(t, z.im / (two * t))
    } else {
        let t = ((m - z.re) / two).sqrt();
        let t = if z.im < T::zero() { -t } else { t };
        Complex::new(z.im / (two * t), t)
    }
}

pub fn cabs<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}

/// Lossy conversion into `f64` components.
pub fn to_c64<T: Real>(z: C<T>) -> C<f64> {
    Complex::new(z.re.as_f64(), z.im.as_f64())
}

pub fn from_c64<T: Real>(z: C<f64>) -> C<T> {
    Complex::new(T::of(z.re), T::of(z.im))
}

/// exp(i·theta) using the full-precision trigonometry of `T`.
pub fn cis<T: Real>(theta: T) -> C<T> {
    Complex::new(theta.cos_full(), theta.sin_full())
}
