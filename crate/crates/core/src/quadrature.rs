//! Quadrature rules for abelian integrals.
//!
//! Segments that end at two branch points carry the weight `1/√(1−τ²)` after
//! the affine change of variable, which Gauss–Chebyshev integrates exactly.
//! Rays leaving a single branch point are made smooth by `x = a + (b−a)v²` and
//! handled with Gauss–Legendre.  Both rules double their node count until two
//! successive levels agree; if that never happens the integrand is treated as
//! nearly singular and handed to adaptive tanh-sinh.

use std::any::{Any, TypeId};
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cabs, Precision, Real, C};

fn default_nodes() -> usize {
    32
}
fn default_refine_tol() -> f64 {
    1e-13
}
fn default_max_nodes() -> usize {
    4096
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Starting node count; doubled until refinement converges.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Relative agreement required between two refinement levels.
    #[serde(default = "default_refine_tol")]
    pub refine_tol: f64,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default = "default_max_nodes")]
    pub max_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            nodes: default_nodes(),
            refine_tol: default_refine_tol(),
            precision: Precision::Double,
            max_nodes: default_max_nodes(),
        }
    }
}

impl QuadratureConfig {
    /// Tolerances appropriate for double-double evaluation.
    pub fn extended() -> Self {
        QuadratureConfig { nodes: 64, refine_tol: 1e-26, precision: Precision::Dd, max_nodes: 8192 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 16 {
            return Err(Error::InvalidParam(format!("quadrature order {} < 16", self.nodes)));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::InvalidParam("refine_tol must be positive".into()));
        }
        Ok(())
    }
}

/// A vector of integrals with the refinement estimate that certified it.
#[derive(Clone, Debug)]
pub struct Integral<T: Real> {
    pub values: Vec<C<T>>,
    pub error: T,
    pub nodes_used: usize,
}

thread_local! {
    static LEGENDRE: RefCell<HashMap<(TypeId, usize), Rc<dyn Any>>> = RefCell::new(HashMap::new());
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, computed by Newton on `P_n`.
pub fn legendre_rule<T: Real>(n: usize) -> Rc<Vec<(T, T)>> {
    let key = (TypeId::of::<T>(), n);
    if let Some(hit) = LEGENDRE.with(|m| m.borrow().get(&key).cloned()) {
        if let Ok(rule) = hit.downcast::<Vec<(T, T)>>() {
            return rule;
        }
    }
    let mut rule = Vec::with_capacity(n);
    let nf = T::of_usize(n);
    for i in 0..n {
        let mut x = (T::pi() * (T::of_usize(i) + T::of(0.75)) / (nf + T::of(0.5))).cos_full();
        let mut dp = T::one();
        for _ in 0..100 {
            let (mut p0, mut p1) = (T::one(), x);
            for k in 2..=n {
                let kf = T::of_usize(k);
                let p2 = ((T::of(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - T::one());
            let dx = p1 / dp;
            x = x - dx;
            if dx.abs() <= T::unit_roundoff() * T::of(2.0) {
                break;
            }
        }
        let w = T::of(2.0) / ((T::one() - x * x) * dp * dp);
        rule.push((x, w));
    }
    let rule = Rc::new(rule);
    LEGENDRE.with(|m| m.borrow_mut().insert(key, rule.clone() as Rc<dyn Any>));
    rule
}

fn accumulate<T: Real>(acc: &mut Vec<C<T>>, v: &[C<T>], w: T) {
    if acc.is_empty() {
        acc.resize(v.len(), C::zero());
    }
    for (a, x) in acc.iter_mut().zip(v) {
        *a = *a + *x * w;
    }
}

fn max_diff<T: Real>(a: &[C<T>], b: &[C<T>]) -> (T, T) {
    let d = a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max(cabs(*x - *y)));
    let s = a.iter().fold(T::zero(), |m, x| m.max(cabs(*x)));
    (d, s)
}

/// `∫_{−1}^{1} g(τ) dτ / √(1−τ²)` by `n`-point Gauss–Chebyshev.
pub fn chebyshev_sum<T: Real>(n: usize, g: &mut impl FnMut(T) -> Vec<C<T>>) -> Vec<C<T>> {
    let mut acc = Vec::new();
    let w = T::pi() / T::of_usize(n);
    for k in 1..=n {
        let tau = (T::pi() * T::of_usize(2 * k - 1) / T::of_usize(2 * n)).cos_full();
        accumulate(&mut acc, &g(tau), w);
    }
    acc
}

/// `∫_a^b h(t) dt` by `n`-point Gauss–Legendre.
pub fn legendre_sum<T: Real>(n: usize, a: T, b: T, h: &mut impl FnMut(T) -> Vec<C<T>>) -> Vec<C<T>> {
    let rule = legendre_rule::<T>(n);
    let half = (b - a) / T::of(2.0);
    let mid = (a + b) / T::of(2.0);
    let mut acc = Vec::new();
    for &(x, w) in rule.iter() {
        accumulate(&mut acc, &h(mid + half * x), w * half);
    }
    acc
}

/// Tanh-sinh on `[a, b]` with level doubling.  Returns `None` when the levels
/// never agree.
fn tanh_sinh<T: Real>(a: T, b: T, tol: T, h: &mut impl FnMut(T) -> Vec<C<T>>) -> Option<(Vec<C<T>>, T, usize)> {
    let half = (b - a) / T::of(2.0);
    let mid = (a + b) / T::of(2.0);
    let half_pi = T::pi() / T::of(2.0);
    let t_max = if T::unit_roundoff() < T::of(1e-20) { T::of(4.0) } else { T::of(3.2) };
    let mut step = T::one();
    let mut prev: Option<Vec<C<T>>> = None;
    let mut sum: Vec<C<T>> = Vec::new();
    let mut evals = 0;
    let node = |t: T| -> (T, T, T) {
        let e = t.exp_full();
        let (sinh, cosh) = ((e - e.recip()) / T::of(2.0), (e + e.recip()) / T::of(2.0));
        let u = (half_pi * sinh).exp_full();
        let (ch, th) = ((u + u.recip()) / T::of(2.0), (u - u.recip()) / (u + u.recip()));
        // Distance to the nearer endpoint, formed without cancellation.
        let gap = T::of(2.0) / (u * u + T::one());
        (th, gap, half_pi * cosh / (ch * ch))
    };
    for level in 0..12 {
        let mut fresh = Vec::new();
        let stride = if level == 0 { 1 } else { 2 };
        let first = if level == 0 { 0 } else { 1 };
        let mut k = first;
        loop {
            let t = T::of_usize(k) * step;
            if t > t_max {
                break;
            }
            let (x, gap, w) = node(t);
            if gap > T::zero() && w > T::zero() {
                for (xs, sign) in [(x, T::one()), (-x, -T::one())] {
                    if k == 0 && sign < T::zero() {
                        continue;
                    }
                    let _ = sign;
                    let arg = mid + half * xs;
                    if arg <= a || arg >= b {
                        continue;
                    }
                    let v = h(arg);
                    evals += 1;
                    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                        accumulate(&mut fresh, &v, w);
                    }
                }
            }
            k += stride;
        }
        if sum.is_empty() {
            sum = fresh;
        } else if !fresh.is_empty() {
            for (s, f) in sum.iter_mut().zip(&fresh) {
                *s = *s + *f;
            }
        }
        let current: Vec<C<T>> = sum.iter().map(|s| *s * step * half).collect();
        if let Some(p) = &prev {
            let (d, s) = max_diff(&current, p);
            if level >= 3 && d <= tol * s.max(T::one()) {
                return Some((current, d, evals));
            }
        }
        prev = Some(current);
        step = step / T::of(2.0);
    }
    None
}

/// Adaptive tanh-sinh with interval bisection for integrands that vary sharply.
fn tanh_sinh_adaptive<T: Real>(a: T, b: T, tol: T, depth: usize, h: &mut impl FnMut(T) -> Vec<C<T>>) -> Result<(Vec<C<T>>, T, usize)> {
    if let Some(res) = tanh_sinh(a, b, tol, h) {
        return Ok(res);
    }
    if depth == 0 {
        return Err(Error::QuadratureDivergence { delta: f64::NAN, tol: tol.as_f64() });
    }
    let m = (a + b) / T::of(2.0);
    let (mut left, e1, n1) = tanh_sinh_adaptive(a, m, tol, depth - 1, h)?;
    let (right, e2, n2) = tanh_sinh_adaptive(m, b, tol, depth - 1, h)?;
    for (l, r) in left.iter_mut().zip(&right) {
        *l = *l + *r;
    }
    Ok((left, e1 + e2, n1 + n2))
}

/// `∫_{−1}^{1} g(τ) dτ / √(1−τ²)`, refined until two levels agree.
pub fn integrate_chebyshev<T: Real>(cfg: &QuadratureConfig, mut g: impl FnMut(T) -> Vec<C<T>>) -> Result<Integral<T>> {
    let tol = T::of(cfg.refine_tol);
    let mut n = cfg.nodes;
    let mut prev = chebyshev_sum(n, &mut g);
    let mut last_delta = T::infinity();
    while 2 * n <= cfg.max_nodes {
        n *= 2;
        let cur = chebyshev_sum(n, &mut g);
        let (d, s) = max_diff(&cur, &prev);
        last_delta = d;
        if d <= tol * s.max(T::one()) {
            return Ok(Integral { values: cur, error: d, nodes_used: n });
        }
        prev = cur;
    }
    // Substituting τ = cos θ removes the weight; the integrand is then smooth
    // but may have nearby complex singularities.
    let fallback = tanh_sinh_adaptive(T::zero(), T::pi(), tol, 10, &mut |theta: T| g(theta.cos_full()));
    match fallback {
        Ok((values, error, nodes_used)) => Ok(Integral { values, error, nodes_used }),
        Err(_) => Err(Error::QuadratureDivergence { delta: last_delta.as_f64(), tol: cfg.refine_tol }),
    }
}

/// `∫_a^b h(t) dt` for a smooth integrand, refined until two levels agree.
pub fn integrate_smooth<T: Real>(cfg: &QuadratureConfig, a: T, b: T, mut h: impl FnMut(T) -> Vec<C<T>>) -> Result<Integral<T>> {
    let tol = T::of(cfg.refine_tol);
    let mut n = cfg.nodes;
    let mut prev = legendre_sum(n, a, b, &mut h);
    let mut last_delta = T::infinity();
    while 2 * n <= cfg.max_nodes.min(1024) {
        n *= 2;
        let cur = legendre_sum(n, a, b, &mut h);
        let (d, s) = max_diff(&cur, &prev);
        last_delta = d;
        if d <= tol * s.max(T::one()) {
            return Ok(Integral { values: cur, error: d, nodes_used: n });
        }
        prev = cur;
    }
    match tanh_sinh_adaptive(a, b, tol, 10, &mut h) {
        Ok((values, error, nodes_used)) => Ok(Integral { values, error, nodes_used }),
        Err(_) => Err(Error::QuadratureDivergence { delta: last_delta.as_f64(), tol: cfg.refine_tol }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dd;
    use num_complex::Complex;

    #[test]
    fn chebyshev_is_exact_for_weighted_polynomials() {
        // ∫ τ² / √(1−τ²) = π/2
        let cfg = QuadratureConfig::default();
        let r = integrate_chebyshev::<f64>(&cfg, |t| vec![Complex::new(t * t, 0.0)]).unwrap();
        assert!((r.values[0].re - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_handles_near_singularity() {
        // ∫ 1/(τ − 1.001i) / √(1−τ²) has a pole close to the segment.
        let cfg = QuadratureConfig::default();
        let z0 = Complex::new(0.0, 0.001);
        let r = integrate_chebyshev::<f64>(&cfg, |t| vec![Complex::new(1.0, 0.0) / (Complex::new(t, 0.0) - z0)]).unwrap();
        // Closed form: −π / √(z0² − 1) with the branch making it analytic off [−1,1].
        let s = (z0 * z0 - 1.0).sqrt();
        let s = if (z0 / s).re < 0.0 { -s } else { s };
        let exact = -std::f64::consts::PI / s;
        assert!((r.values[0] - exact).norm() < 1e-10, "{} vs {}", r.values[0], exact);
    }

    #[test]
    fn legendre_rule_integrates_exp() {
        let cfg = QuadratureConfig::default();
        let r = integrate_smooth::<f64>(&cfg, 0.0, 1.0, |t| vec![Complex::new(t.exp(), 0.0)]).unwrap();
        assert!((r.values[0].re - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn dd_legendre_reaches_extended_accuracy() {
        let cfg = QuadratureConfig::extended();
        let r = integrate_smooth::<Dd>(&cfg, Dd::from_f64(0.0), Dd::from_f64(1.0), |t| vec![Complex::new(t.exp_full(), Dd::from_f64(0.0))]).unwrap();
        let e_minus_1 = Dd::from_f64(1.0).exp_full() - Dd::from_f64(1.0);
        assert!(num_traits::Float::abs(r.values[0].re - e_minus_1) < Dd::from_f64(1e-28));
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // ∫_0^1 ln t dt = −1
        let (v, _, _) = tanh_sinh(0.0f64, 1.0, 1e-12, &mut |t| vec![Complex::new(t.ln(), 0.0)]).unwrap();
        assert!((v[0].re + 1.0).abs() < 1e-11);
    }
}
