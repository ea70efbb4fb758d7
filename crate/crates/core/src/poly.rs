//! Dense univariate polynomials over an arbitrary coefficient ring.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, Zero};

use crate::error::{Error, Result};

/// Coefficient ring used by [`Poly`].
pub trait Coeff: Num + Clone + Neg<Output = Self> {}
impl<K: Num + Clone + Neg<Output = K>> Coeff for K {}

/// A polynomial stored lowest degree first; trailing zeros are always trimmed,
/// so the zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly<K> {
    coeffs: Vec<K>,
}

impl<K: Coeff> Poly<K> {
    pub fn new(mut coeffs: Vec<K>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(K::one())
    }

    pub fn constant(c: K) -> Self {
        Poly::new(vec![c])
    }

    /// The monomial `c·x^n`.
    pub fn monomial(c: K, n: usize) -> Self {
        let mut v = vec![K::zero(); n + 1];
        v[n] = c;
        Poly::new(v)
    }

    /// `∏ (x − r)`.
    pub fn from_roots(roots: &[K]) -> Self {
        roots.iter().fold(Poly::one(), |acc, r| {
            acc * Poly::new(vec![-r.clone(), K::one()])
        })
    }

    pub fn coeffs(&self) -> &[K] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<K> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> K {
        self.coeffs.get(k).cloned().unwrap_or_else(K::zero)
    }

    pub fn leading(&self) -> Option<&K> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_some_and(|c| c.is_one())
    }

    pub fn eval(&self, x: &K) -> K {
        self.coeffs
            .iter()
            .rev()
            .fold(K::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    /// Evaluates at a point of an extension ring (e.g. real coefficients at a complex point).
    pub fn eval_with<X>(&self, x: &X, lift: impl Fn(&K) -> X) -> X
    where
        X: Clone + Zero + Mul<Output = X> + Add<Output = X>,
    {
        self.coeffs
            .iter()
            .rev()
            .fold(X::zero(), |acc, c| acc * x.clone() + lift(c))
    }

    pub fn derivative(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len().saturating_sub(1));
        let mut k = K::one();
        for c in self.coeffs.iter().skip(1) {
            out.push(c.clone() * k.clone());
            k = k + K::one();
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: &K) -> Self {
        Poly::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    pub fn map<L: Coeff>(&self, f: impl Fn(&K) -> L) -> Poly<L> {
        Poly::new(self.coeffs.iter().map(f).collect())
    }

    /// Coefficients reversed: `x^n p(1/x)` for `n = deg p`.
    pub fn reversed(&self) -> Self {
        let mut c = self.coeffs.clone();
        c.reverse();
        Poly::new(c)
    }

    /// Euclidean division over a field.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.coeffs[dd].clone();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![K::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd].clone() / lead.clone();
            if !q.is_zero() {
                for (i, dc) in d.coeffs.iter().enumerate() {
                    rem[k + i] = rem[k + i].clone() - q.clone() * dc.clone();
                }
            }
            quot[k] = q;
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => {
                let inv = K::one() / l.clone();
                self.scale(&inv)
            }
            None => Poly::zero(),
        }
    }

    /// Monic gcd over a field (exact arithmetic expected).
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Squarefree test by `gcd(p, p′) = 1` (exact arithmetic expected).
    pub fn is_squarefree(&self) -> bool {
        self.gcd(&self.derivative()).degree() == Some(0)
    }
}

impl<K: Coeff> Add for Poly<K> {
    type Output = Poly<K>;
    fn add(self, rhs: Self) -> Self {
        &self + &rhs
    }
}

impl<K: Coeff> Add for &Poly<K> {
    type Output = Poly<K>;
    fn add(self, rhs: Self) -> Poly<K> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<K: Coeff> Sub for Poly<K> {
    type Output = Poly<K>;
    fn sub(self, rhs: Self) -> Self {
        &self - &rhs
    }
}

impl<K: Coeff> Sub for &Poly<K> {
    type Output = Poly<K>;
    fn sub(self, rhs: Self) -> Poly<K> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<K: Coeff> Mul for Poly<K> {
    type Output = Poly<K>;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<K: Coeff> Mul for &Poly<K> {
    type Output = Poly<K>;
    fn mul(self, rhs: Self) -> Poly<K> {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![K::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly::new(out)
    }
}

impl<K: Coeff> Neg for Poly<K> {
    type Output = Poly<K>;
    fn neg(self) -> Self {
        Poly::new(self.coeffs.into_iter().map(|c| -c).collect())
    }
}

pub type QPoly = Poly<BigRational>;

/// Parses an exact rational `"p/q"`, `"p"` or terminating decimal `"1.25"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        let neg = ip.trim_start().starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        if !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{}{}", if ip.is_empty() { "0" } else { ip }, fp);
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), fp.len());
        let r = BigRational::new(num, den);
        return Ok(if neg { -r } else { r });
    }
    let p: BigInt = t.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(p))
}

/// Parses the sparse form `"x^4 - 2x^2 + 1/3x - 5"` (also `"3*x^2"`) into a rational polynomial.
pub fn parse_sparse(s: &str) -> Result<QPoly> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut terms: Vec<String> = Vec::new();
    let mut cur = String::new();
    for (i, ch) in compact.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 && !cur.ends_with('^') {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);

    let mut coeffs: Vec<BigRational> = Vec::new();
    for term in terms {
        let (sign, body) = match term.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, term.strip_prefix('+').unwrap_or(&term)),
        };
        if body.is_empty() {
            return Err(Error::Parse(format!("dangling sign in {s:?}")));
        }
        let (coef, power) = match body.find('x') {
            None => (parse_rational(body)?, 0usize),
            Some(pos) => {
                let cpart = body[..pos].trim_end_matches('*');
                let coef = if cpart.is_empty() {
                    BigRational::one()
                } else {
                    parse_rational(cpart)?
                };
                let rest = &body[pos + 1..];
                let power = if rest.is_empty() {
                    1
                } else if let Some(p) = rest.strip_prefix('^') {
                    p.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad exponent in {term:?}")))?
                } else {
                    return Err(Error::Parse(format!("unexpected text after x in {term:?}")));
                };
                (coef, power)
            }
        };
        if coeffs.len() <= power {
            coeffs.resize(power + 1, BigRational::zero());
        }
        let signed = if sign < 0 { -coef } else { coef };
        coeffs[power] = coeffs[power].clone() + signed;
    }
    Ok(Poly::new(coeffs))
}

pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for Poly<BigRational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let show_coef = k == 0 || !a.is_one();
            if show_coef {
                write!(f, "{}", format_rational(&a))?;
            }
            match k {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{k}")?,
            }
        }
        Ok(())
    }
}

pub fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn qpoly(c: &[i64]) -> QPoly {
    Poly::new(c.iter().map(|&v| q(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let p = parse_sparse("x^4-1").unwrap();
        assert_eq!(p, qpoly(&[-1, 0, 0, 0, 1]));
        let p = parse_sparse("x^6 - 4x^4 + 4*x^2 - 1").unwrap();
        assert_eq!(p, qpoly(&[-1, 0, 4, 0, -4, 0, 1]));
        let p = parse_sparse("1/2x^2 + x - 3/4").unwrap();
        assert_eq!(p.coeff(2), qf(1, 2));
        assert_eq!(p.coeff(0), qf(-3, 4));
        assert_eq!(p.to_string(), "1/2x^2 + x - 3/4");
        assert_eq!(parse_sparse("x^2 + 0.25").unwrap().coeff(0), qf(1, 4));
        assert!(parse_sparse("x^^2").is_err());
        assert!(parse_sparse("").is_err());
    }

    #[test]
    fn euclid_and_squarefree() {
        let a = qpoly(&[-1, 0, 0, 0, 1]);
        let b = qpoly(&[-1, 1]);
        let (qt, r) = a.div_rem(&b);
        assert!(r.is_zero());
        assert_eq!(qt, qpoly(&[1, 1, 1, 1]));
        assert!(a.is_squarefree());
        let sq = qpoly(&[1, 0, 1]) * qpoly(&[1, 0, 1]);
        assert!(!sq.is_squarefree());
        assert_eq!(sq.gcd(&sq.derivative()), qpoly(&[1, 0, 1]));
    }

    #[test]
    fn derivative_matches_roots() {
        // x(x-1)(x-2)(x-3)(x-5); f'(2) = 2·1·(−1)·(−3) = 6
        let f = Poly::from_roots(&[q(0), q(1), q(2), q(3), q(5)]);
        assert_eq!(f.derivative().eval(&q(2)), q(6));
    }
}
