//! Kodaira–Spencer classes of the odd-degree family, evaluated as residues.
//!
//! Moving `s_i` is represented near `P_i = (s_i, 0)` by the vector field
//! `y²/(h(x)(x − s_i)) ∂_x` with `h = f′`.  Contracting it with a quadratic
//! differential `q` gives a 1-form whose residue at `P_i` is `θ_{∂/∂s_i}(q)`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{curve_data, FamilyPoint, ModelKind};
use crate::error::{Error, Result};
use crate::homology::{sqrt_from, unit};
use crate::linalg::{complex_rank, det, exact_det, singular_values, CMat, Mat, RankPolicy};
use crate::poly::{Coeff, Poly};
use crate::scalar::{cabs, from_c64, Real, C};
use crate::Rational;

/// Which family of quadratic differentials is contracted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    /// `x^j dx² / y²`
    Even,
    /// `x^j dx² / y`
    Odd,
}

/// Truncated power series in the local uniformizer `y`.
#[derive(Clone, Debug, PartialEq)]
struct Series<K> {
    c: Vec<K>,
}

impl<K: Coeff> Series<K> {
    fn constant(a: K, n: usize) -> Self {
        let mut c = vec![K::zero(); n];
        c[0] = a;
        Series { c }
    }

    fn len(&self) -> usize {
        self.c.len()
    }

    fn add(&self, o: &Self) -> Self {
        Series { c: self.c.iter().zip(&o.c).map(|(a, b)| a.clone() + b.clone()).collect() }
    }

    fn mul(&self, o: &Self) -> Self {
        let n = self.len();
        let mut c = vec![K::zero(); n];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate().take(n - i) {
                c[i + j] = c[i + j].clone() + a.clone() * b.clone();
            }
        }
        Series { c }
    }

    fn scale(&self, k: &K) -> Self {
        Series { c: self.c.iter().map(|a| a.clone() * k.clone()).collect() }
    }

    fn inverse(&self) -> Self {
        let n = self.len();
        let a0 = self.c[0].clone();
        let mut inv = vec![K::zero(); n];
        inv[0] = K::one() / a0.clone();
        for k in 1..n {
            let mut acc = K::zero();
            for i in 1..=k {
                acc = acc + self.c[i].clone() * inv[k - i].clone();
            }
            inv[k] = -acc / a0.clone();
        }
        Series { c: inv }
    }

    fn derivative(&self) -> Self {
        let n = self.len();
        let mut c = vec![K::zero(); n];
        let mut k = K::zero();
        for i in 1..n {
            k = k + K::one();
            c[i - 1] = self.c[i].clone() * k.clone();
        }
        Series { c }
    }

    fn shift_down(&self, by: usize) -> Self {
        let mut c: Vec<K> = self.c.iter().skip(by).cloned().collect();
        c.resize(self.len(), K::zero());
        Series { c }
    }

    fn shift_up(&self, by: usize) -> Self {
        let mut c = vec![K::zero(); by];
        c.extend(self.c.iter().take(self.len() - by).cloned());
        Series { c }
    }

    fn compose(p: &Poly<K>, x: &Self) -> Self {
        let n = x.len();
        p.coeffs().iter().rev().fold(Series::constant(K::zero(), n), |acc, a| acc.mul(x).add(&Series::constant(a.clone(), n)))
    }
}

/// Taylor coefficients of `f` at `s` by repeated synthetic division.
fn taylor<K: Coeff>(f: &Poly<K>, s: &K) -> Vec<K> {
    let mut rest = f.coeffs().to_vec();
    let mut out = Vec::with_capacity(rest.len());
    while !rest.is_empty() {
        let mut acc = K::zero();
        let mut q = vec![K::zero(); rest.len()];
        for k in (0..rest.len()).rev() {
            acc = acc * s.clone() + rest[k].clone();
            q[k] = acc.clone();
        }
        out.push(q[0].clone());
        rest = q[1..].to_vec();
    }
    out
}

/// Residue at `(s, 0)` of the contraction, by Laurent expansion in `y`.
///
/// `f(s + X) = y²` is inverted term by term for `X(y)`; the 1-form is then
/// `N(y)/(y²·D̃(y)) dy` and the residue is the `y¹` coefficient of `N/D̃`.
fn residue_series<K: Coeff>(f: &Poly<K>, s: &K, j: usize, parity: Parity) -> K {
    const N: usize = 10;
    let t = taylor(f, s);
    let f1 = t[1].clone();
    // X = (y² − Σ_{m≥2} t_m X^m)/t₁, iterated to full length.
    let y2 = Series { c: (0..N).map(|k| if k == 2 { K::one() } else { K::zero() }).collect() };
    let mut x_ = y2.scale(&(K::one() / f1.clone()));
    for _ in 0..N {
        let mut higher = Series::constant(K::zero(), N);
        let mut pow = x_.clone();
        for tm in t.iter().skip(2) {
            pow = pow.mul(&x_);
            higher = higher.add(&pow.scale(tm));
        }
        x_ = y2.add(&higher.scale(&-K::one())).scale(&(K::one() / f1.clone()));
    }
    let x = x_.add(&Series::constant(s.clone(), N));
    let dx = x.derivative();
    let mut num = dx;
    for _ in 0..j {
        num = num.mul(&x);
    }
    if parity == Parity::Odd {
        num = num.shift_up(1);
    }
    let h = f.derivative();
    let den = Series::compose(&h, &x).mul(&x_.shift_down(2));
    num.mul(&den.inverse()).c[1].clone()
}

/// Residue by the trapezoid rule on a small circle traversed twice, so that
/// `y` returns to its starting sheet.
fn residue_contour<T: Real>(f: &Poly<C<T>>, roots: &[C<T>], i: usize, j: usize, parity: Parity, nodes: usize) -> C<T> {
    let s = roots[i];
    let sep = roots.iter().enumerate().filter(|&(k, _)| k != i).fold(T::infinity(), |m, (_, r)| m.min(cabs(*r - s)));
    let r = sep * T::of(1e-2);
    let h = f.derivative();
    let sqrt_r = r.sqrt();
    let mut acc = C::new(T::zero(), T::zero());
    for k in 0..nodes {
        let theta = T::of(4.0) * T::pi() * T::of_usize(k) / T::of_usize(nodes);
        let e1 = crate::scalar::cis(theta);
        let e_half = crate::scalar::cis(theta * T::of(0.5));
        let x = s + e1 * r;
        let mut form = x.powu(j as u32) / (h.eval(&x) * (x - s));
        if parity == Parity::Odd {
            let mut y = e_half * sqrt_r;
            for (m, e) in roots.iter().enumerate() {
                if m != i {
                    y = y * sqrt_from(x - *e, unit(s - *e));
                }
            }
            form = form * y;
        }
        // dx = i·r·e^{iθ} dθ
        acc = acc + form * e1 * r;
    }
    // (1/2πi)·∫₀^{4π} … i dθ with step 4π/nodes.
    acc * (T::of(2.0) / T::of_usize(nodes))
}

/// Both residue evaluations for parameter `i` and exponent `j`.
#[derive(Clone, Copy, Debug)]
pub struct ResiduePair<T: Real> {
    pub series: C<T>,
    pub contour: C<T>,
}

pub const CONTOUR_NODES: usize = 64;
pub const RESIDUE_TOL: f64 = 1e-10;

fn odd_point_check(p: &FamilyPoint) -> Result<()> {
    if p.model != ModelKind::OddDeg {
        return Err(Error::Unsupported("Kodaira–Spencer residues use the odd-degree model".into()));
    }
    Ok(())
}

/// `θ_{∂/∂s_i}(x^j dx²/y²)` (or `/y` for `Parity::Odd`), cross-checked.
pub fn ks_residue<T: Real>(p: &FamilyPoint, i: usize, j: usize, parity: Parity) -> Result<ResiduePair<T>> {
    odd_point_check(p)?;
    let g = p.genus;
    if i >= 2 * g - 1 || j > 2 * g - 2 {
        return Err(Error::InvalidParam(format!("index (i, j) = ({i}, {j}) out of range for genus {g}")));
    }
    let c = curve_data::<T>(p)?;
    // Branch points are 0, 1, s_0, …: parameter i sits at index i + 2.
    let s = c.branch_points[i + 2];
    let series = residue_series(&c.f, &s, j, parity);
    let contour = residue_contour(&c.f, &c.branch_points, i + 2, j, parity, CONTOUR_NODES);
    let diff = cabs(series - contour).as_f64();
    if diff > RESIDUE_TOL * (1.0 + cabs(series).as_f64()) {
        return Err(Error::ResidueDisagreement { series: cabs(series).as_f64(), contour: cabs(contour).as_f64() });
    }
    Ok(ResiduePair { series, contour })
}

/// Exact residue over ℚ for rational parameters.
pub fn ks_residue_exact(params: &[Rational], genus: usize, i: usize, j: usize, parity: Parity) -> Result<Rational> {
    let model = crate::curve::FamilyModel::odd(genus);
    if params.len() != model.arity() {
        return Err(Error::Arity { expected: model.arity(), got: params.len() });
    }
    if i >= 2 * genus - 1 || j > 2 * genus - 2 {
        return Err(Error::InvalidParam(format!("index (i, j) = ({i}, {j}) out of range for genus {genus}")));
    }
    let f = model.rational_polynomial(params);
    if !f.is_squarefree() {
        return Err(Error::DegenerateDiscriminant("branch points collide".into()));
    }
    Ok(residue_series(&f, &params[i], j, parity))
}

#[derive(Clone, Debug)]
pub struct KsTensor<T: Real> {
    pub s: FamilyPoint,
    /// `M[i][j] = θ_{∂/∂s_i}(x^j dx²/y²)`, `(2g−1) × (2g−1)`.
    pub m: CMat<T>,
    pub c: Vec<C<T>>,
    /// `(T_i)_{ab} = M[i][a+b]`.
    pub symmetric_forms: Vec<CMat<T>>,
    /// Largest series/contour discrepancy over all entries.
    pub residue_gap: f64,
}

pub fn ks_tensor<T: Real>(p: &FamilyPoint) -> Result<KsTensor<T>> {
    odd_point_check(p)?;
    let g = p.genus;
    let n = 2 * g - 1;
    let pairs: Vec<ResiduePair<T>> = (0..n * n).into_par_iter().map(|k| ks_residue::<T>(p, k / n, k % n, Parity::Even)).collect::<Result<_>>()?;
    let m: CMat<T> = Mat::from_fn(n, n, |i, j| pairs[i * n + j].series);
    let gap = pairs.iter().map(|r| cabs(r.series - r.contour).as_f64()).fold(0.0, f64::max);
    let c = (0..n).map(|i| m[(i, 0)]).collect();
    let symmetric_forms = (0..n).map(|i| Mat::from_fn(g, g, |a, b| m[(i, a + b)])).collect();
    Ok(KsTensor { s: p.clone(), m, c, symmetric_forms, residue_gap: gap })
}

/// Structural diagnostics of a tensor.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct KsChecks {
    /// `max |M[i][j]/M[i][0] − s_i^j| / (1 + |s_i^j|)`.
    pub ratio_law: f64,
    /// Largest `σ₂/σ₁` over the contracted forms.
    pub rank_one: f64,
    pub det: [f64; 2],
    pub condition: f64,
    /// Largest `|θ(x^j dx²/y)|` over `j ≤ g − 3`, if any.
    pub odd_annihilation: Option<f64>,
    pub residue_gap: f64,
}

impl<T: Real> KsTensor<T> {
    pub fn checks(&self) -> Result<KsChecks> {
        let n = self.m.nrows();
        let g = self.s.genus;
        let mut ratio = 0.0f64;
        for i in 0..n {
            let s: C<T> = from_c64(self.s.params[i]);
            let mut pow = C::new(T::one(), T::zero());
            for j in 0..n {
                let got = self.m[(i, j)] / self.m[(i, 0)];
                ratio = ratio.max((cabs(got - pow) / (T::one() + cabs(pow))).as_f64());
                pow = pow * s;
            }
        }
        let rank_one = self
            .symmetric_forms
            .iter()
            .map(|t| {
                let sv = singular_values(&t.realify());
                // The real form doubles each singular value.
                if sv.len() > 2 { (sv[2] / sv[0]).as_f64() } else { 0.0 }
            })
            .fold(0.0, f64::max);
        let d = det(&self.m);
        let odd_annihilation = if g >= 3 {
            let mut worst = 0.0f64;
            for i in 0..n {
                for j in 0..=g - 3 {
                    let r = ks_residue::<T>(&self.s, i, j, Parity::Odd)?;
                    worst = worst.max(cabs(r.series).as_f64()).max(cabs(r.contour).as_f64());
                }
            }
            Some(worst)
        } else {
            None
        };
        Ok(KsChecks {
            ratio_law: ratio,
            rank_one,
            det: [d.re.as_f64(), d.im.as_f64()],
            condition: crate::linalg::condition_number(&self.m).as_f64(),
            odd_annihilation,
            residue_gap: self.residue_gap,
        })
    }
}

/// Exact `M` over ℚ.
pub fn ks_matrix_exact(params: &[Rational], genus: usize) -> Result<Mat<Rational>> {
    let n = 2 * genus - 1;
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = ks_residue_exact(params, genus, i, j, Parity::Even)?;
        }
    }
    Ok(m)
}

pub fn exact_determinant(m: &Mat<Rational>) -> Rational {
    exact_det(m)
}

/// Rank of the `d × g` matrix with rows `(T_i ω)ᵀ`.
pub fn contracted_rank<T: Real>(forms: &[CMat<T>], omega: &[C<T>], policy: &RankPolicy) -> Result<usize> {
    let Some(first) = forms.first() else { return Ok(0) };
    let g = first.nrows();
    if omega.len() != g {
        return Err(Error::Arity { expected: g, got: omega.len() });
    }
    let rows = Mat::from_fn(forms.len(), g, |i, a| (0..g).fold(C::new(T::zero(), T::zero()), |s, b| s + forms[i][(a, b)] * omega[b]));
    Ok(complex_rank(&rows, policy)?.rank)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MaxRank {
    pub max_rank: usize,
    pub witness: Vec<[f64; 2]>,
    pub ambiguous: usize,
}

/// Maximum of [`contracted_rank`] over `n_trials` Gaussian `ω` and the
/// extra candidates supplied (e.g. `e₀`, which is generic for the
/// Kodaira–Spencer forms since every `T_i e₀ = c_i v_i`).
pub fn max_contracted_rank<T: Real>(forms: &[CMat<T>], n_trials: usize, extra: &[Vec<C<T>>], seed: u64, policy: &RankPolicy) -> Result<MaxRank> {
    let Some(first) = forms.first() else { return Ok(MaxRank { max_rank: 0, witness: Vec::new(), ambiguous: 0 }) };
    let g = first.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<Vec<C<T>>> = extra.to_vec();
    for _ in 0..n_trials.max(1) {
        candidates.push(
            (0..g)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    from_c64(Complex::new(re, im))
                })
                .collect(),
        );
    }
    let mut best = MaxRank { max_rank: 0, witness: vec![[0.0, 0.0]; g], ambiguous: 0 };
    for w in candidates {
        match contracted_rank(forms, &w, policy) {
            Ok(r) if r > best.max_rank => {
                best.max_rank = r;
                best.witness = w.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect();
            }
            Ok(_) => {}
            Err(Error::RankAmbiguous { .. }) => best.ambiguous += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}

/// `e₀ = (1, 0, …, 0)`.
pub fn vandermonde_witness<T: Real>(g: usize) -> Vec<C<T>> {
    (0..g).map(|k| C::new(if k == 0 { T::one() } else { T::zero() }, T::zero())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{make_point, FamilyModel};
    use crate::poly::{q, qf};
    use crate::C64;

    #[test]
    fn first_coefficient_at_2_3_5() {
        let p = make_point(FamilyModel::odd(2), [2.0, 3.0, 5.0].iter().map(|&v| C64::new(v, 0.0)).collect()).unwrap();
        let r = ks_residue::<f64>(&p, 0, 0, Parity::Even).unwrap();
        assert!((r.series - C64::new(1.0 / 3.0, 0.0)).norm() < 1e-13);
        assert_eq!(ks_residue_exact(&[q(2), q(3), q(5)], 2, 0, 0, Parity::Even).unwrap(), qf(1, 3));
    }

    #[test]
    fn taylor_shift() {
        let f = crate::poly::qpoly(&[1, 2, 3]);
        assert_eq!(taylor(&f, &q(1)), vec![q(6), q(8), q(3)]);
    }
}
