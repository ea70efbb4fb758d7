//! Polynomial Pell equations `P² − fQ² = c` and torsion of `[∞⁺] − [∞⁻]`.
//!
//! The continued fraction of `√f` in the Laurent field at infinity is run
//! with the classical recurrences `P_{i+1} = a_iQ_i − P_i`,
//! `Q_{i+1} = (f − P_{i+1}²)/Q_i`; a constant `Q_{i+1}` ends the search.

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::betti::{distance_to_lattice, evaluate, SectionSpec};
use crate::curve::{make_point, FamilyModel, FamilyPoint};
use crate::error::{Error, Result};
use crate::poly::{format_rational, Coeff, Poly, QPoly};
use crate::quadrature::QuadratureConfig;
use crate::scalar::Real;
use crate::{Rational, C64};

/// `Σ_k coeffs[k]·x^{leading_exponent − k}`, truncated after `coeffs.len()` terms.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries<K> {
    pub leading_exponent: i64,
    pub coeffs: Vec<K>,
}

impl<K: Coeff> LaurentSeries<K> {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Terms with non-negative exponent.
    pub fn polynomial_part(&self) -> Poly<K> {
        let top = self.leading_exponent.max(-1);
        let mut c = vec![K::zero(); (top + 1).max(0) as usize];
        for (k, a) in self.coeffs.iter().enumerate() {
            let e = self.leading_exponent - k as i64;
            if e >= 0 {
                c[e as usize] = a.clone();
            }
        }
        Poly::new(c)
    }
}

fn check_even_monic<K: Coeff>(f: &Poly<K>) -> Result<usize> {
    let deg = f.degree().ok_or(Error::NotEvenDegree)?;
    if deg % 2 == 1 {
        return Err(Error::OddDegree);
    }
    if deg == 0 || !f.is_monic() {
        return Err(Error::NotEvenDegree);
    }
    Ok(deg / 2)
}

/// `S = x^m·Σ s_k x^{−k}` with `S² = f + O(x^{2m−order})`, `m = deg f / 2`.
pub fn sqrt_series<K: Coeff>(f: &Poly<K>, order: usize) -> Result<LaurentSeries<K>> {
    let m = check_even_monic(f)?;
    let two = K::one() + K::one();
    // f(x) = x^{2m}·F(1/x) with F_k = f_{2m−k} and F_0 = 1.
    let big_f = |k: usize| if k <= 2 * m { f.coeff(2 * m - k) } else { K::zero() };
    let mut s: Vec<K> = Vec::with_capacity(order);
    for k in 0..order {
        if k == 0 {
            s.push(K::one());
            continue;
        }
        let mut acc = big_f(k);
        for i in 1..k {
            acc = acc - s[i].clone() * s[k - i].clone();
        }
        s.push(acc / two.clone());
    }
    Ok(LaurentSeries { leading_exponent: m as i64, coeffs: s })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PellSolution<K> {
    /// Monic, of degree `order`.
    pub p: Poly<K>,
    pub q: Poly<K>,
    pub c: K,
    pub order: usize,
    /// Partial quotients consumed.
    pub steps: usize,
}

/// Runs the continued fraction; `clean` trims negligible coefficients of each
/// new remainder.
fn continued_fraction<K: Coeff>(f: &Poly<K>, n_max: usize, clean: impl Fn(Poly<K>) -> Poly<K>) -> Result<Option<PellSolution<K>>> {
    let m = check_even_monic(f)?;
    let a0 = sqrt_series(f, m + 1)?.polynomial_part();
    let (mut big_p, mut big_q) = (Poly::<K>::zero(), Poly::<K>::one());
    // Only degrees are tracked until a solution appears; the convergents are
    // rebuilt from the stored partial quotients.
    let mut quotients: Vec<Poly<K>> = Vec::new();
    let mut degree = 0;
    for i in 0.. {
        let (a, _) = (&big_p + &a0).div_rem(&big_q);
        let Some(da) = a.degree().filter(|_| !a.is_zero()) else {
            return Err(Error::Inconclusive("vanishing partial quotient".into()));
        };
        degree += da;
        if degree > n_max {
            return Ok(None);
        }
        let next_p = &(&a * &big_q) - &big_p;
        let (next_q, _) = (f - &(&next_p * &next_p)).div_rem(&big_q);
        let next_q = clean(next_q);
        quotients.push(a);
        if next_q.is_zero() {
            // f is a perfect square; the expansion terminates.
            return Err(Error::NonSquarefree);
        }
        if next_q.degree() == Some(0) {
            let (mut pm2, mut pm1) = (Poly::<K>::zero(), Poly::<K>::one());
            let (mut qm2, mut qm1) = (Poly::<K>::one(), Poly::<K>::zero());
            for a in &quotients {
                let p = &(a * &pm1) + &pm2;
                let q = &(a * &qm1) + &qm2;
                (pm2, pm1) = (pm1, p);
                (qm2, qm1) = (qm1, q);
            }
            let sign = if i % 2 == 0 { -K::one() } else { K::one() };
            let c = sign * next_q.coeff(0);
            let lc = pm1.leading().cloned().unwrap_or_else(K::one);
            let unit = Poly::constant(K::one() / lc.clone());
            return Ok(Some(PellSolution { p: &pm1 * &unit, q: &qm1 * &unit, c: c / (lc.clone() * lc), order: degree, steps: i + 1 }));
        }
        (big_p, big_q) = (next_p, next_q);
    }
    unreachable!()
}

/// Default search horizon `4g + 4`.
pub fn default_n_max(f_degree: usize) -> usize {
    2 * f_degree
}

/// Exact Pell solution of least degree `≤ n_max`, if any.
pub fn pell_solve(f: &QPoly, n_max: usize) -> Result<Option<PellSolution<Rational>>> {
    check_even_monic(f)?;
    if !f.is_squarefree() {
        return Err(Error::NonSquarefree);
    }
    let sol = continued_fraction(f, n_max, |p| p)?;
    if let Some(s) = &sol {
        let lhs = &(&s.p * &s.p) - &(&(f * &s.q) * &s.q);
        debug_assert_eq!(lhs, Poly::constant(s.c.clone()));
    }
    Ok(sol)
}

/// Floating-point Pell search for real coefficients; a remainder counts as
/// constant once its higher coefficients fall below `rel_tol` times the
/// largest coefficient seen.
pub fn pell_solve_float<T: Real>(f: &Poly<T>, n_max: usize, rel_tol: f64) -> Result<Option<PellSolution<T>>> {
    check_even_monic(f)?;
    let scale = f.coeffs().iter().fold(T::one(), |m, c| m.max(c.abs()));
    let tol = T::of(rel_tol) * scale;
    let sol = continued_fraction(f, n_max, |p| Poly::new(p.coeffs().iter().map(|c| if c.abs() <= tol { T::zero() } else { *c }).collect()))?;
    if let Some(s) = &sol {
        let lhs = &(&s.p * &s.p) - &(&(f * &s.q) * &s.q);
        let worst = lhs.coeffs().iter().skip(1).fold(T::zero(), |m, c| m.max(c.abs()));
        if worst > tol * T::of(1e3) {
            return Err(Error::Inconclusive(format!("Pell residual {:e} in floating mode", worst.as_f64())));
        }
    }
    Ok(sol)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[allow(non_snake_case)]
pub struct PellReport {
    pub found: bool,
    pub P: Option<String>,
    pub Q: Option<String>,
    pub c: Option<String>,
    pub order: Option<usize>,
    pub n_max: usize,
}

impl PellReport {
    pub fn new(sol: Option<&PellSolution<Rational>>, n_max: usize) -> Self {
        match sol {
            Some(s) => PellReport {
                found: true,
                P: Some(s.p.to_string()),
                Q: Some(s.q.to_string()),
                c: Some(format_rational(&s.c)),
                order: Some(s.order),
                n_max,
            },
            None => PellReport { found: false, P: None, Q: None, c: None, order: None, n_max },
        }
    }
}

/// Point of the even-degree family with `f = P² − p`, its certificate, and
/// the distance of the numerically computed Betti vector to `(1/(g+1))ℤ^{2g}`.
#[derive(Clone, Debug)]
pub struct PellFamily {
    pub point: FamilyPoint,
    pub f: QPoly,
    pub solution: PellSolution<Rational>,
    pub betti_distance: f64,
    pub beta: Vec<f64>,
}

pub fn pell_family(big_p: &QPoly, p: &Rational, cfg: &QuadratureConfig) -> Result<PellFamily> {
    let n = big_p.degree().unwrap_or(0);
    if n < 2 || !big_p.is_monic() {
        return Err(Error::InvalidParam("P must be monic of degree g + 1 ≥ 2".into()));
    }
    let g = n - 1;
    if p.is_zero() {
        return Err(Error::DegenerateDiscriminant("P² − p with p = 0 has double roots".into()));
    }
    let f = &(big_p * big_p) - &Poly::constant(p.clone());
    if !f.is_squarefree() {
        return Err(Error::DegenerateDiscriminant(format!("{f} has a repeated root")));
    }
    let params: Vec<C64> = f.coeffs()[..2 * g + 2].iter().map(|c| C64::new(c.to_f64().unwrap_or(f64::NAN), 0.0)).collect();
    let point = make_point(FamilyModel::even(g), params)?;
    let solution = PellSolution { p: big_p.clone(), q: Poly::one(), c: p.clone(), order: n, steps: 1 };
    let (_, ev) = evaluate::<f64>(&point, &SectionSpec::InfinityDifference, cfg)?;
    let beta: Vec<f64> = ev.beta.clone();
    let betti_distance = distance_to_lattice(&beta, n as u32);
    Ok(PellFamily { point, f, solution, betti_distance, beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse_sparse, qf, qpoly};

    #[test]
    fn series_of_x4_minus_1() {
        let s = sqrt_series(&qpoly(&[-1, 0, 0, 0, 1]), 9).unwrap();
        // x²(1 − ½x⁻⁴ − ⅛x⁻⁸ − …)
        assert_eq!(s.coeffs[0], qf(1, 1));
        assert_eq!(s.coeffs[4], qf(-1, 2));
        assert_eq!(s.coeffs[8], qf(-1, 8));
        assert!(s.coeffs.iter().enumerate().all(|(k, c)| k % 4 == 0 || c.is_zero()));
    }

    #[test]
    fn perfect_square_series_terminates() {
        let s = sqrt_series(&qpoly(&[1, 0, 2, 0, 1]), 12).unwrap();
        assert_eq!(s.polynomial_part(), qpoly(&[1, 0, 1]));
        assert!(s.coeffs[3..].iter().all(|c| c.is_zero()));
        assert_eq!(pell_solve(&qpoly(&[1, 0, 2, 0, 1]), 8).unwrap_err(), Error::NonSquarefree);
    }

    #[test]
    fn lemniscate_is_two_torsion() {
        let s = pell_solve(&parse_sparse("x^4-1").unwrap(), 8).unwrap().unwrap();
        assert_eq!((s.order, s.p.clone(), s.q.clone(), s.c.clone()), (2, qpoly(&[0, 0, 1]), qpoly(&[1]), qf(1, 1)));
    }

    #[test]
    fn chebyshev_like_sextic_has_order_three() {
        let f = parse_sparse("x^6 - 4x^4 + 4x^2 - 1").unwrap();
        let s = pell_solve(&f, 12).unwrap().unwrap();
        assert_eq!(s.order, 3);
        assert_eq!(s.p, qpoly(&[0, -2, 0, 1]));
        assert_eq!(s.q, qpoly(&[1]));
        assert_eq!(s.c, qf(1, 1));
    }

    #[test]
    fn degree_checks() {
        assert_eq!(sqrt_series(&qpoly(&[1, 0, 0, 1]), 4).unwrap_err(), Error::OddDegree);
        assert_eq!(pell_solve(&qpoly(&[1, 0, 0, 0, 2]), 4).unwrap_err(), Error::NotEvenDegree);
    }

    #[test]
    fn float_mode_matches_exact() {
        let f: Poly<crate::Dd> = Poly::new([-1.0, 0.0, 4.0, 0.0, -4.0, 0.0, 1.0].iter().map(|&c| crate::Dd::from_f64(c)).collect());
        let s = pell_solve_float(&f, 12, 1e-20).unwrap().unwrap();
        assert_eq!(s.order, 3);
    }
}
