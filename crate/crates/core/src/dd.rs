//! Double-double arithmetic: an unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
//!
//! Error-free transformations follow Dekker/Knuth; products use `f64::mul_add`.
//! Transcendental functions needed by `num_traits::Float` are provided to full
//! precision where the library relies on them (sqrt, ln, exp, sin, cos) and
//! otherwise fall back to double precision.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

use num_traits::{Float, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd { hi: 3.141_592_653_589_793, lo: 1.224_646_799_147_353_2e-16 };
    pub const LN_2: Dd = Dd { hi: 0.693_147_180_559_945_3, lo: 2.319_046_813_846_299_6e-17 };

    /// `hi + lo`, renormalised.
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (h, l) = two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    pub const fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn renorm(hi: f64, lo: f64) -> Dd {
        if !hi.is_finite() {
            return Dd { hi, lo: 0.0 };
        }
        let (h, l) = quick_two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        Dd::renorm(p, e + self.lo * b)
    }

    fn sqrt_dd(self) -> Dd {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Dd::ZERO } else { Dd::from_f64(f64::NAN) };
        }
        if self.hi.is_infinite() {
            return self;
        }
        // One Newton correction on the double-precision root.
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = (self - Dd::new(p, e)).hi;
        Dd::renorm(x, r / (2.0 * x))
    }

    fn exp_dd(self) -> Dd {
        if self.hi.is_nan() {
            return self;
        }
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / Dd::LN_2.hi).round();
        let r = self - Dd::LN_2 * Dd::from_f64(k);
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for n in 1..40 {
            term = term * r / Dd::from_f64(n as f64);
            sum += term;
            if term.hi.abs() < 1e-34 {
                break;
            }
        }
        sum.mul_f64(2f64.powi(k as i32))
    }

    fn ln_dd(self) -> Dd {
        if self.hi <= 0.0 || self.hi.is_nan() {
            return Dd::from_f64(if self.hi == 0.0 { f64::NEG_INFINITY } else { f64::NAN });
        }
        if self.hi.is_infinite() {
            return self;
        }
        // Newton on exp(y) = x: y ← y + x·exp(−y) − 1.
        let mut y = Dd::from_f64(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp_dd() - Dd::ONE;
        }
        y
    }

    fn sincos_dd(self) -> (Dd, Dd) {
        let half_pi = Dd::PI.mul_f64(0.5);
        let k = (self / half_pi).hi.round();
        let r = self - half_pi * Dd::from_f64(k);
        let r2 = r * r;
        let mut term = r;
        let mut s = r;
        let mut n = 1.0;
        while n < 60.0 && term.hi.abs() > 1e-35 {
            term = -(term * r2) / Dd::from_f64((n + 1.0) * (n + 2.0));
            s += term;
            n += 2.0;
        }
        let mut term = Dd::ONE;
        let mut c = Dd::ONE;
        let mut n = 0.0;
        while n < 60.0 && term.hi.abs() > 1e-35 {
            term = -(term * r2) / Dd::from_f64((n + 1.0) * (n + 2.0));
            c += term;
            n += 2.0;
        }
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd::from_f64(x)
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.hi, f)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        Dd::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return Dd::from_f64(q1);
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (h, l) = quick_two_sum(q1, q2);
        Dd { hi: h, lo: l } + Dd::from_f64(q3)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, b: Dd) -> Dd {
        self - b * (self / b).trunc()
    }
}

macro_rules! assign_op {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr for Dd {
            fn $f(&mut self, b: Dd) {
                *self = *self $op b;
            }
        }
    };
}
assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);
assign_op!(RemAssign, rem_assign, %);

impl Zero for Dd {
    fn zero() -> Dd {
        Dd::ZERO
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for Dd {
    fn one() -> Dd {
        Dd::ONE
    }
}

impl Num for Dd {
    type FromStrRadixErr = num_traits::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Dd, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Dd::from_f64)
    }
}

impl ToPrimitive for Dd {
    fn to_i64(&self) -> Option<i64> {
        let t = self.trunc();
        t.hi.to_i64().map(|h| h + t.lo as i64)
    }
    fn to_u64(&self) -> Option<u64> {
        self.hi.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.hi + self.lo)
    }
}

impl FromPrimitive for Dd {
    fn from_i64(n: i64) -> Option<Dd> {
        let hi = n as f64;
        Some(Dd::new(hi, (n - hi as i64) as f64))
    }
    fn from_u64(n: u64) -> Option<Dd> {
        let hi = n as f64;
        Some(Dd::new(hi, (n as i128 - hi as i128) as f64))
    }
    fn from_f64(x: f64) -> Option<Dd> {
        Some(Dd::from_f64(x))
    }
}

impl NumCast for Dd {
    fn from<N: ToPrimitive>(n: N) -> Option<Dd> {
        n.to_f64().map(Dd::from_f64)
    }
}

impl Float for Dd {
    fn nan() -> Dd {
        Dd::from_f64(f64::NAN)
    }
    fn infinity() -> Dd {
        Dd::from_f64(f64::INFINITY)
    }
    fn neg_infinity() -> Dd {
        Dd::from_f64(f64::NEG_INFINITY)
    }
    fn neg_zero() -> Dd {
        Dd::from_f64(-0.0)
    }
    fn min_value() -> Dd {
        Dd::from_f64(f64::MIN)
    }
    fn min_positive_value() -> Dd {
        Dd::from_f64(f64::MIN_POSITIVE)
    }
    fn max_value() -> Dd {
        Dd::from_f64(f64::MAX)
    }
    fn epsilon() -> Dd {
        Dd::from_f64(2f64.powi(-104))
    }
    fn is_nan(self) -> bool {
        self.hi.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.hi.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.hi.is_finite()
    }
    fn is_normal(self) -> bool {
        self.hi.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.hi.classify()
    }
    fn floor(self) -> Dd {
        let h = self.hi.floor();
        if h == self.hi {
            Dd::renorm(h, self.lo.floor())
        } else {
            Dd::from_f64(h)
        }
    }
    fn ceil(self) -> Dd {
        -(-self).floor()
    }
    fn round(self) -> Dd {
        let f = (self + Dd::from_f64(0.5)).floor();
        // Ties away from zero, like f64::round.
        if self.hi < 0.0 {
            -((-self).round())
        } else {
            f
        }
    }
    fn trunc(self) -> Dd {
        if self.hi >= 0.0 {
            self.floor()
        } else {
            self.ceil()
        }
    }
    fn fract(self) -> Dd {
        self - self.trunc()
    }
    fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Dd {
        Dd::from_f64(self.hi.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.hi.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.hi.is_sign_negative()
    }
    fn mul_add(self, a: Dd, b: Dd) -> Dd {
        self * a + b
    }
    fn recip(self) -> Dd {
        Dd::ONE / self
    }
    fn powi(self, n: i32) -> Dd {
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }
    fn powf(self, n: Dd) -> Dd {
        (n * self.ln_dd()).exp_dd()
    }
    fn sqrt(self) -> Dd {
        self.sqrt_dd()
    }
    fn exp(self) -> Dd {
        self.exp_dd()
    }
    fn exp2(self) -> Dd {
        (self * Dd::LN_2).exp_dd()
    }
    fn ln(self) -> Dd {
        self.ln_dd()
    }
    fn log(self, base: Dd) -> Dd {
        self.ln_dd() / base.ln_dd()
    }
    fn log2(self) -> Dd {
        self.ln_dd() / Dd::LN_2
    }
    fn log10(self) -> Dd {
        self.ln_dd() / Dd::from_f64(10.0).ln_dd()
    }
    fn max(self, o: Dd) -> Dd {
        if self.is_nan() || o > self {
            o
        } else {
            self
        }
    }
    fn min(self, o: Dd) -> Dd {
        if self.is_nan() || o < self {
            o
        } else {
            self
        }
    }
    fn abs_sub(self, o: Dd) -> Dd {
        if self > o {
            self - o
        } else {
            Dd::ZERO
        }
    }
    fn cbrt(self) -> Dd {
        let x = Dd::from_f64(self.hi.cbrt());
        x - (x * x * x - self) / (x * x * Dd::from_f64(3.0))
    }
    fn hypot(self, o: Dd) -> Dd {
        let (a, b) = (self.abs(), o.abs());
        let (big, small) = if a > b { (a, b) } else { (b, a) };
        if big.is_zero() {
            return Dd::ZERO;
        }
        let r = small / big;
        big * (Dd::ONE + r * r).sqrt_dd()
    }
    fn sin(self) -> Dd {
        self.sincos_dd().0
    }
    fn cos(self) -> Dd {
        self.sincos_dd().1
    }
    fn tan(self) -> Dd {
        let (s, c) = self.sincos_dd();
        s / c
    }
    fn asin(self) -> Dd {
        Dd::from_f64(self.hi.asin())
    }
    fn acos(self) -> Dd {
        Dd::from_f64(self.hi.acos())
    }
    fn atan(self) -> Dd {
        // Newton on tan(y) = x starting from the double result.
        let mut y = Dd::from_f64(self.hi.atan());
        let (s, c) = y.sincos_dd();
        y = y - (s - self * c) * c;
        y
    }
    fn atan2(self, other: Dd) -> Dd {
        let mut y = Dd::from_f64(self.hi.atan2(other.hi));
        let r = self.hypot(other);
        if r.is_zero() {
            return y;
        }
        let (s, c) = y.sincos_dd();
        // Rotate the residual: sin(θ − y) ≈ (self·c − other·s)/r.
        y = y + (self * c - other * s) / r;
        y
    }
    fn sin_cos(self) -> (Dd, Dd) {
        self.sincos_dd()
    }
    fn exp_m1(self) -> Dd {
        self.exp_dd() - Dd::ONE
    }
    fn ln_1p(self) -> Dd {
        (Dd::ONE + self).ln_dd()
    }
    fn sinh(self) -> Dd {
        let e = self.exp_dd();
        (e - e.recip()).mul_f64(0.5)
    }
    fn cosh(self) -> Dd {
        let e = self.exp_dd();
        (e + e.recip()).mul_f64(0.5)
    }
    fn tanh(self) -> Dd {
        let e2 = (self.mul_f64(2.0)).exp_dd();
        (e2 - Dd::ONE) / (e2 + Dd::ONE)
    }
    fn asinh(self) -> Dd {
        (self + (self * self + Dd::ONE).sqrt_dd()).ln_dd()
    }
    fn acosh(self) -> Dd {
        (self + (self * self - Dd::ONE).sqrt_dd()).ln_dd()
    }
    fn atanh(self) -> Dd {
        ((Dd::ONE + self) / (Dd::ONE - self)).ln_dd().mul_f64(0.5)
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.hi.integer_decode()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, hi: f64, lo: f64, tol: f64) {
        let err = a - Dd::new(hi, lo);
        assert!(err.abs().hi < tol, "{a:?} vs {hi:e}+{lo:e}: err {err:?}");
    }

    #[test]
    fn division_is_double_double_accurate() {
        let third = Dd::ONE / Dd::from_f64(3.0);
        close(third * Dd::from_f64(3.0), 1.0, 0.0, 1e-31);
        close(third, 0.333_333_333_333_333_3, 1.850_371_707_708_594e-17, 1e-32);
    }

    #[test]
    fn elementary_functions() {
        // references from a 40-digit evaluation
        close(Dd::from_f64(1.0).cos(), 0.540_302_305_868_139_8, -4.760_954_612_604_417e-17, 1e-31);
        close(Dd::from_f64(1.0).exp(), 2.718_281_828_459_045, 1.445_646_891_729_250_2e-16, 1e-30);
        close(Dd::from_f64(2.0).sqrt(), 1.414_213_562_373_095_1, -9.667_293_313_452_913e-17, 1e-31);
        close(Dd::from_f64(3.0).ln(), 1.098_612_288_668_109_8, -9.071_297_235_001_53e-17, 1e-31);
        close((Dd::PI / Dd::from_f64(3.0)).cos(), 0.5, 0.0, 1e-31);
    }

    #[test]
    fn rounding() {
        assert_eq!(Dd::from_f64(-3.25).round(), Dd::from_f64(-3.0));
        assert_eq!(Dd::from_f64(2.5).round(), Dd::from_f64(3.0));
        assert_eq!(Dd::new(3.0, -1e-20).floor(), Dd::from_f64(2.0));
        assert_eq!(Dd::new(3.0, 1e-20).floor(), Dd::from_f64(3.0));
    }

    #[test]
    fn conversions() {
        assert_eq!(<Dd as FromPrimitive>::from_f64(0.69).unwrap().hi(), 0.69);
        assert_eq!(Dd::new(0.5, 1e-20).to_f64(), Some(0.5));
    }
}
