//! Abelian logarithms of divisor sections, their Betti coordinates, and the
//! derivatives of both along a family.
//!
//! For `[∞⁺] − [∞⁻]` the hyperelliptic involution gives
//! `∫_{∞⁻}^{∞⁺} ω = 2∫_e^{∞⁺} ω` for any branch point `e`; the path is a ray
//! from `e`, switched to `u = 1/x` once it is far from every branch point.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{curve_data, CurveData, FamilyPoint, InfinityStructure};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::homology::{chain_order, partial_root};
use crate::linalg::{condition_number, inverse, real_rank, solve_row, CMat, Mat, RankPolicy};
use crate::periods::{continue_to, periods, PeriodData};
use crate::quadrature::{integrate_smooth, QuadratureConfig};
use crate::scalar::{cabs, cis, csqrt, from_c64, to_c64, Real, C};
use crate::{Rational, C64};

/// Closest approach to a branch point tolerated by an integration path.
pub const PATH_CLEARANCE: f64 = 1e-6;

/// Default relative finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// A point `(x, y)` on the affine curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: C64,
    pub y: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SectionSpec {
    /// `[∞⁺] − [∞⁻]` on the even-degree model; `∞⁺` is where `y ~ +x^{g+1}`.
    InfinityDifference,
    /// `[P₁] − [P₂]`.
    DivisorPair { p1: CurvePoint, p2: CurvePoint },
}

impl SectionSpec {
    /// The same section on a nearby fibre: `x` is kept and `y` takes the
    /// square root closest to its old value.
    pub fn follow(&self, p: &FamilyPoint) -> SectionSpec {
        match *self {
            SectionSpec::InfinityDifference => SectionSpec::InfinityDifference,
            SectionSpec::DivisorPair { p1, p2 } => {
                let f = p.family().polynomial::<f64>(&p.params);
                let lift = |q: CurvePoint| {
                    let r = f.eval(&q.x).sqrt();
                    let y = if (r - q.y).norm() <= (r + q.y).norm() { r } else { -r };
                    CurvePoint { x: q.x, y }
                };
                SectionSpec::DivisorPair { p1: lift(p1), p2: lift(p2) }
            }
        }
    }
}

/// A ray from a chain vertex used for `[∞⁺] − [∞⁻]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayPath {
    /// Chain index of the starting branch point; `None` is the last vertex.
    pub base: Option<usize>,
    pub angle: f64,
    /// Scales the radius at which the integral switches to `u = 1/x`.
    pub cut: f64,
}

impl Default for RayPath {
    fn default() -> Self {
        RayPath { base: None, angle: 0.0, cut: 1.0 }
    }
}

fn segment_clearance<T: Real>(a: C<T>, b: C<T>, pts: &[C<T>], skip: usize) -> f64 {
    let (a, b) = (to_c64(a), to_c64(b));
    let d = b - a;
    let len2 = d.norm_sqr();
    pts.iter()
        .enumerate()
        .filter(|&(i, _)| i != skip)
        .map(|(_, p)| {
            let p = to_c64(*p);
            let t = if len2 > 0.0 { ((p - a) * d.conj()).re / len2 } else { 0.0 };
            (a + d * t.clamp(0.0, 1.0) - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

fn powers<T: Real>(x: C<T>, w: C<T>, g: usize) -> Vec<C<T>> {
    let mut out = Vec::with_capacity(g);
    let mut p = w;
    for _ in 0..g {
        out.push(p);
        p = p * x;
    }
    out
}

/// `∫_e^P x^j dx/y` along the straight segment, where `y(P) ≈ y_end`.
///
/// With `x = e + (x_P − e)v²` the branch-point singularity disappears:
/// `dx/y = 2·√(x_P − e) dv / ρ(x)`, `ρ² = ∏_{others}(x − e_i)`.
fn branch_segment<T: Real>(sorted: &[C<T>], b: usize, x_end: C<T>, y_end: C<T>, g: usize, cfg: &QuadratureConfig) -> Result<Vec<C<T>>> {
    let e = sorted[b];
    if x_end == e {
        return Ok(vec![C::zero(); g]);
    }
    let mid = (e + x_end) * T::of(0.5);
    let sq = csqrt(x_end - e);
    let y_here = sq * partial_root(x_end, mid, sorted, &[b]);
    let sign = if cabs(y_here - y_end) <= cabs(y_here + y_end) { T::one() } else { -T::one() };
    let res = integrate_smooth(cfg, T::zero(), T::one(), |v: T| {
        let x = e + (x_end - e) * (v * v);
        powers(x, C::new(T::one(), T::zero()) / partial_root(x, mid, sorted, &[b]), g)
    })?;
    let k = sq * (T::of(2.0) * sign);
    Ok(res.values.into_iter().map(|v| v * k).collect())
}

/// `Λ([∞⁺] − [∞⁻])` along a ray.
pub fn infinity_log<T: Real>(c: &CurveData<T>, path: &RayPath, cfg: &QuadratureConfig) -> Result<Vec<C<T>>> {
    if c.infinity != InfinityStructure::TwoPoints {
        return Err(Error::Unsupported("[∞⁺] − [∞⁻] needs the even-degree model".into()));
    }
    let g = c.genus;
    let order = chain_order(&c.branch_points);
    let sorted: Vec<C<T>> = order.iter().map(|&i| c.branch_points[i]).collect();
    let b = path.base.unwrap_or(sorted.len() - 1);
    if b >= sorted.len() {
        return Err(Error::InvalidParam(format!("ray base {b} out of range")));
    }
    let e = sorted[b];
    let rmax = sorted.iter().fold(T::zero(), |m, z| m.max(cabs(*z)));
    let radius = T::of(path.cut) * (T::of(3.0) * rmax + T::one());
    let mut angle = path.angle;
    let mut distance = 0.0;
    for _attempt in 0..2 {
        let x_m = e + cis(T::of(angle)) * radius;
        distance = segment_clearance(e, x_m, &sorted, b);
        if distance < PATH_CLEARANCE {
            angle += 0.1;
            continue;
        }
        // Beyond x_m every |e_i u| < ½, so √f̃(u) = ∏√(1 − e_i u) is principal
        // and equals 1 at u = 0, i.e. at ∞⁺.
        let sqrt_ft = |u: C<T>| sorted.iter().fold(C::new(T::one(), T::zero()), |acc, e| acc * csqrt(C::new(T::one(), T::zero()) - *e * u));
        let u_m = C::new(T::one(), T::zero()) / x_m;
        let y_m = x_m.powu(g as u32 + 1) * sqrt_ft(u_m);
        let near = branch_segment(&sorted, b, x_m, y_m, g, cfg)?;
        // x = 1/u: x^j dx/y = −u^{g−1−j} du/√f̃ on ∞⁺.
        let tail = integrate_smooth(cfg, T::zero(), T::one(), |t: T| {
            let u = u_m * t;
            let w = C::new(T::one(), T::zero()) / sqrt_ft(u);
            (0..g).map(|j| w * u.powu((g - 1 - j) as u32)).collect()
        })?;
        return Ok(near.into_iter().zip(tail.values).map(|(a, t)| (a + t * u_m) * T::of(2.0)).collect());
    }
    Err(Error::PathThroughBranchPoint { distance })
}

/// `Λ` of a section, along the deterministic path for the curve.
pub fn abelian_log<T: Real>(c: &CurveData<T>, sec: &SectionSpec, cfg: &QuadratureConfig) -> Result<Vec<C<T>>> {
    match sec {
        SectionSpec::InfinityDifference => infinity_log(c, &RayPath::default(), cfg),
        SectionSpec::DivisorPair { p1, p2 } => {
            let g = c.genus;
            for q in [p1, p2] {
                let fx = c.eval(from_c64(q.x));
                let defect = to_c64(fx) - q.y * q.y;
                if defect.norm() > 1e-10 * (1.0 + q.y.norm_sqr()) {
                    return Err(Error::InvalidParam(format!("({}, {}) is not on the curve", q.x, q.y)));
                }
            }
            if p1 == p2 {
                return Ok(vec![C::zero(); g]);
            }
            let order = chain_order(&c.branch_points);
            let sorted: Vec<C<T>> = order.iter().map(|&i| c.branch_points[i]).collect();
            let (x1, x2) = (from_c64::<T>(p1.x), from_c64::<T>(p2.x));
            // Both legs must share the base; pick the one with most room.
            let (b, distance) = (0..sorted.len())
                .map(|b| (b, segment_clearance(sorted[b], x1, &sorted, b).min(segment_clearance(sorted[b], x2, &sorted, b))))
                .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            if distance < PATH_CLEARANCE {
                return Err(Error::PathThroughBranchPoint { distance });
            }
            let a = branch_segment(&sorted, b, x1, from_c64(p1.y), g, cfg)?;
            let z = branch_segment(&sorted, b, x2, from_c64(p2.y), g, cfg)?;
            Ok(a.into_iter().zip(z).map(|(u, v)| u - v).collect())
        }
    }
}

/// One sample of the Betti map.
#[derive(Clone, Debug)]
pub struct BettiEvaluation<T: Real> {
    pub lambda: Vec<C<T>>,
    /// Real solution of `Λ = βΩ`.
    pub beta: Vec<T>,
    /// `beta − beta_int`, in `[−½, ½)`.
    pub beta_frac: Vec<T>,
    pub beta_int: Vec<i64>,
    /// `L = ΛΩ₁⁻¹`.
    pub l: Vec<C<T>>,
    /// `‖Λ − βΩ‖_max`.
    pub residual_reconstruction: f64,
    /// Largest imaginary part of the solved `β`.
    pub residual_realness: f64,
    /// Distance between `β` and `(β₁, β₂)` recovered from `L` and `Z`.
    pub residual_siegel: f64,
}

fn row_times<T: Real>(row: &[C<T>], m: &CMat<T>) -> Vec<C<T>> {
    (0..m.ncols()).map(|j| row.iter().enumerate().fold(C::zero(), |s, (k, r)| s + *r * m[(k, j)])).collect()
}

/// Solve `(Λ, Λ̄) = β(Ω, Ω̄)` and cross-check through the Siegel point.
pub fn betti_coords<T: Real>(lambda: &[C<T>], pd: &PeriodData<T>) -> Result<BettiEvaluation<T>> {
    let g = pd.genus();
    if lambda.len() != g {
        return Err(Error::Arity { expected: g, got: lambda.len() });
    }
    let omega = pd.omega();
    let wide = omega.hcat(&omega.conj());
    let cond = condition_number(&wide).as_f64();
    if !(cond <= 1e12) {
        return Err(Error::IllConditioned { cond });
    }
    let rhs: Vec<C<T>> = lambda.iter().copied().chain(lambda.iter().map(|z| z.conj())).collect();
    let x = solve_row(&wide, &rhs)?;
    let residual_realness = x.iter().fold(0.0f64, |m, z| m.max(z.im.abs().as_f64()));
    let beta: Vec<T> = x.iter().map(|z| z.re).collect();
    let beta_c: Vec<C<T>> = beta.iter().map(|&b| C::new(b, T::zero())).collect();
    let rebuilt = row_times(&beta_c, &omega);
    let residual_reconstruction = lambda.iter().zip(&rebuilt).fold(0.0f64, |m, (a, b)| m.max(cabs(*a - *b).as_f64()));

    let l = row_times(lambda, &inverse(&pd.omega1)?);
    let im_l: Vec<C<T>> = l.iter().map(|z| C::new(z.im, T::zero())).collect();
    let beta2 = solve_row(&pd.z.im().complexify(), &im_l)?;
    let beta2: Vec<C<T>> = beta2.iter().map(|z| C::new(z.re, T::zero())).collect();
    let shift = row_times(&beta2, &pd.z);
    let beta1: Vec<T> = l.iter().zip(&shift).map(|(a, b)| (*a - *b).re).collect();
    let residual_siegel = beta1
        .iter()
        .chain(beta2.iter().map(|z| &z.re))
        .zip(&beta)
        .fold(0.0f64, |m, (a, b)| m.max((*a - *b).abs().as_f64()));

    let beta_int: Vec<i64> = beta.iter().map(|b| (*b + T::of(0.5)).floor().as_f64() as i64).collect();
    let beta_frac = beta.iter().zip(&beta_int).map(|(b, n)| *b - T::of(*n as f64)).collect();
    Ok(BettiEvaluation { lambda: lambda.to_vec(), beta, beta_frac, beta_int, l, residual_reconstruction, residual_realness, residual_siegel })
}

/// Periods and Betti coordinates at a point in one call.
pub fn evaluate<T: Real>(p: &FamilyPoint, sec: &SectionSpec, cfg: &QuadratureConfig) -> Result<(PeriodData<T>, BettiEvaluation<T>)> {
    let pd = periods::<T>(p, cfg)?;
    let c = curve_data::<T>(p)?;
    let lambda = abelian_log(&c, sec, cfg)?;
    let ev = betti_coords(&lambda, &pd)?;
    Ok((pd, ev))
}

/// Serializable record of one evaluation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BettiRecord {
    pub s: Vec<C64>,
    pub lambda: Vec<C64>,
    pub beta: Vec<f64>,
    pub beta_frac: Vec<f64>,
    pub beta_int: Vec<i64>,
    pub residuals: Residuals,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Residuals {
    pub reconstruction: f64,
    pub realness: f64,
    pub siegel: f64,
}

impl<T: Real> BettiEvaluation<T> {
    pub fn record(&self, p: &FamilyPoint) -> BettiRecord {
        BettiRecord {
            s: p.params.clone(),
            lambda: self.lambda.iter().map(|z| to_c64(*z)).collect(),
            beta: self.beta.iter().map(|b| b.as_f64()).collect(),
            beta_frac: self.beta_frac.iter().map(|b| b.as_f64()).collect(),
            beta_int: self.beta_int.clone(),
            residuals: Residuals {
                reconstruction: self.residual_reconstruction,
                realness: self.residual_realness,
                siegel: self.residual_siegel,
            },
        }
    }
}

/// Periods, logarithm and Betti coordinates at a point continued from a
/// reference evaluation, with the logarithm moved by the lattice vector that
/// keeps `β` closest to the reference.
struct Continued<T: Real> {
    pd: PeriodData<T>,
    sec: SectionSpec,
    lambda: Vec<C<T>>,
    beta: Vec<T>,
}

fn continued<T: Real>(from: &PeriodData<T>, beta_ref: &[T], p: &FamilyPoint, sec: &SectionSpec, cfg: &QuadratureConfig) -> Result<Continued<T>> {
    let pd = continue_to(from, p, cfg)?;
    let sec = sec.follow(p);
    let c = curve_data::<T>(p)?;
    let lambda = abelian_log(&c, &sec, cfg)?;
    let ev = betti_coords(&lambda, &pd)?;
    let n: Vec<T> = ev.beta.iter().zip(beta_ref).map(|(b, r)| (*b - *r).round()).collect();
    let omega = pd.omega();
    let shift = row_times(&n.iter().map(|&v| C::new(v, T::zero())).collect::<Vec<_>>(), &omega);
    let lambda = lambda.iter().zip(shift).map(|(a, s)| *a - s).collect();
    let beta = ev.beta.iter().zip(&n).map(|(b, k)| *b - *k).collect();
    Ok(Continued { pd, sec, lambda, beta })
}

/// First derivatives of every Betti-map ingredient at one parameter value,
/// from central differences in one continued frame.
#[derive(Clone, Debug)]
pub struct Stencil<T: Real> {
    pub t: Vec<C64>,
    pub steps: Vec<f64>,
    pub center: PeriodData<T>,
    pub eval: BettiEvaluation<T>,
    /// Holomorphic derivatives `∂_i`, one entry per parameter.
    pub d_lambda: Vec<Vec<C<T>>>,
    pub d_omega: Vec<CMat<T>>,
    pub d_l: Vec<Vec<C<T>>>,
    pub d_z: Vec<CMat<T>>,
    /// `∂β/∂Re t_i` and `∂β/∂Im t_i`.
    pub d_beta_re: Vec<Vec<T>>,
    pub d_beta_im: Vec<Vec<T>>,
    /// Largest `|∂̄Λ|` seen on the stencil.
    pub cauchy_riemann: f64,
}

fn wirtinger<T: Real>(re: C<T>, im: C<T>) -> (C<T>, C<T>) {
    let i = C::new(T::zero(), T::one());
    let half = T::of(0.5);
    ((re - i * im) * half, (re + i * im) * half)
}

impl<T: Real> Stencil<T> {
    pub fn compute(family: &Family, t: &[C64], sec: &SectionSpec, h_rel: f64, cfg: &QuadratureConfig) -> Result<Self> {
        let p0 = family.point(t)?;
        let sec0 = sec.follow(&p0);
        let (center, eval) = evaluate::<T>(&p0, &sec0, cfg)?;
        let d = family.dim();
        let g = center.genus();
        let steps: Vec<f64> = t.iter().map(|z| h_rel * (1.0 + z.norm())).collect();
        let shifts: [C64; 4] = [Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0), Complex::new(0.0, 1.0), Complex::new(0.0, -1.0)];
        let jobs: Vec<(usize, usize)> = (0..d).flat_map(|i| (0..4).map(move |k| (i, k))).collect();
        let results: Vec<Result<Continued<T>>> = jobs
            .par_iter()
            .map(|&(i, k)| {
                let mut tt = t.to_vec();
                tt[i] += shifts[k] * steps[i];
                let p = family.point(&tt)?;
                continued(&center, &eval.beta, &p, &sec0, cfg)
            })
            .collect();
        let mut samples = Vec::with_capacity(results.len());
        for r in results {
            samples.push(r?);
        }
        let z_of = |pd: &PeriodData<T>| pd.z.clone();
        let l_of = |s: &Continued<T>| -> Result<Vec<C<T>>> { Ok(row_times(&s.lambda, &inverse(&s.pd.omega1)?)) };
        let mut out = Stencil {
            t: t.to_vec(),
            steps: steps.clone(),
            eval,
            d_lambda: Vec::with_capacity(d),
            d_omega: Vec::with_capacity(d),
            d_l: Vec::with_capacity(d),
            d_z: Vec::with_capacity(d),
            d_beta_re: Vec::with_capacity(d),
            d_beta_im: Vec::with_capacity(d),
            cauchy_riemann: 0.0,
            center,
        };
        for i in 0..d {
            let s = &samples[4 * i..4 * i + 4];
            let inv = T::one() / T::of(2.0 * steps[i]);
            let vdiff = |a: &[C<T>], b: &[C<T>]| -> Vec<C<T>> { a.iter().zip(b).map(|(x, y)| (*x - *y) * inv).collect() };
            let mdiff = |a: &CMat<T>, b: &CMat<T>| a.sub(b).map(|z| *z * inv);
            let pair = |re: Vec<C<T>>, im: Vec<C<T>>| -> (Vec<C<T>>, f64) {
                let mut dz = Vec::with_capacity(re.len());
                let mut cr = 0.0f64;
                for (a, b) in re.into_iter().zip(im) {
                    let (h, ah) = wirtinger(a, b);
                    dz.push(h);
                    cr = cr.max(cabs(ah).as_f64());
                }
                (dz, cr)
            };
            let (dl, cr) = pair(vdiff(&s[0].lambda, &s[1].lambda), vdiff(&s[2].lambda, &s[3].lambda));
            out.cauchy_riemann = out.cauchy_riemann.max(cr);
            out.d_lambda.push(dl);
            let (l0, l1, l2, l3) = (l_of(&s[0])?, l_of(&s[1])?, l_of(&s[2])?, l_of(&s[3])?);
            out.d_l.push(pair(vdiff(&l0, &l1), vdiff(&l2, &l3)).0);
            let mat_pair = |re: CMat<T>, im: CMat<T>| Mat::from_fn(re.nrows(), re.ncols(), |a, b| wirtinger(re[(a, b)], im[(a, b)]).0);
            out.d_omega.push(mat_pair(mdiff(&s[0].pd.omega(), &s[1].pd.omega()), mdiff(&s[2].pd.omega(), &s[3].pd.omega())));
            out.d_z.push(mat_pair(mdiff(&z_of(&s[0].pd), &z_of(&s[1].pd)), mdiff(&z_of(&s[2].pd), &z_of(&s[3].pd))));
            out.d_beta_re.push(s[0].beta.iter().zip(&s[1].beta).map(|(a, b)| (*a - *b) * inv).collect());
            out.d_beta_im.push(s[2].beta.iter().zip(&s[3].beta).map(|(a, b)| (*a - *b) * inv).collect());
        }
        debug_assert!(out.d_lambda.iter().all(|v| v.len() == g));
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.t.len()
    }

    pub fn genus(&self) -> usize {
        self.center.genus()
    }

    /// The `2d × 2g` real Jacobian; row `2i` is `∂/∂Re t_i`, row `2i+1` is
    /// `∂/∂Im t_i`.
    pub fn jacobian_matrix(&self) -> Mat<f64> {
        let d = self.dim();
        let g2 = 2 * self.genus();
        Mat::from_fn(2 * d, g2, |r, k| {
            let src = if r % 2 == 0 { &self.d_beta_re[r / 2] } else { &self.d_beta_im[r / 2] };
            src[k].as_f64()
        })
    }

    pub fn jacobian(&self, policy: &RankPolicy) -> Result<BettiJacobian> {
        let j = self.jacobian_matrix();
        let cert = real_rank(&j, policy)?;
        Ok(BettiJacobian { j, singular_values: cert.singular_values, rank: cert.rank, gap: cert.gap, step: self.steps.clone() })
    }

    /// `(I_ν)_{ij} = ∂_iΛ_j + Σ_k ν_k ∂_iΩ_{kj}`.
    pub fn matrix_i(&self, nu: &[C<T>]) -> CMat<T> {
        let g = self.genus();
        Mat::from_fn(self.dim(), g, |i, j| {
            (0..2 * g).fold(self.d_lambda[i][j], |s, k| s + nu[k] * self.d_omega[i][(k, j)])
        })
    }

    /// `(H_μ)_{ij} = ∂_iL_j + Σ_k μ_k ∂_iZ_{kj}`.
    pub fn matrix_h(&self, mu: &[C<T>]) -> CMat<T> {
        self.matrix_h_scaled(C::new(T::one(), T::zero()), mu)
    }

    /// `μ₀·∂_iL_j + Σ_k μ_k ∂_iZ_{kj}`.
    pub fn matrix_h_scaled(&self, mu0: C<T>, mu: &[C<T>]) -> CMat<T> {
        let g = self.genus();
        Mat::from_fn(self.dim(), g, |i, j| (0..g).fold(mu0 * self.d_l[i][j], |s, k| s + mu[k] * self.d_z[i][(k, j)]))
    }

    /// `ν = −β` as a complex vector.
    pub fn minus_beta(&self) -> Vec<C<T>> {
        self.eval.beta.iter().map(|b| C::new(-*b, T::zero())).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BettiJacobian {
    pub j: Mat<f64>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// `σ_r / σ_{r+1}` at the accepted cut.
    pub gap: f64,
    pub step: Vec<f64>,
}

pub fn betti_jacobian<T: Real>(family: &Family, t: &[C64], sec: &SectionSpec, h_rel: f64, cfg: &QuadratureConfig, policy: &RankPolicy) -> Result<BettiJacobian> {
    Stencil::<T>::compute(family, t, sec, h_rel, cfg)?.jacobian(policy)
}

pub fn matrix_i<T: Real>(family: &Family, t: &[C64], sec: &SectionSpec, nu: &[C<T>], h_rel: f64, cfg: &QuadratureConfig) -> Result<CMat<T>> {
    let st = Stencil::<T>::compute(family, t, sec, h_rel, cfg)?;
    if nu.len() != 2 * st.genus() {
        return Err(Error::Arity { expected: 2 * st.genus(), got: nu.len() });
    }
    Ok(st.matrix_i(nu))
}

pub fn matrix_h<T: Real>(family: &Family, t: &[C64], sec: &SectionSpec, mu: &[C<T>], h_rel: f64, cfg: &QuadratureConfig) -> Result<CMat<T>> {
    let st = Stencil::<T>::compute(family, t, sec, h_rel, cfg)?;
    if mu.len() != st.genus() {
        return Err(Error::Arity { expected: st.genus(), got: mu.len() });
    }
    Ok(st.matrix_h(mu))
}

/// Axis-aligned box in `ℂ^d`: real and imaginary parts are sampled
/// independently and uniformly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRegion {
    pub lower: Vec<C64>,
    pub upper: Vec<C64>,
}

impl ScanRegion {
    pub fn real_cube(d: usize, half_width: f64) -> Self {
        ScanRegion { lower: vec![Complex::new(-half_width, 0.0); d], upper: vec![Complex::new(half_width, 0.0); d] }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<C64> {
        let pick = |rng: &mut dyn rand::RngCore, a: f64, b: f64| if a < b { rng.gen_range(a..b) } else { a };
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| Complex::new(pick(rng, lo.re, hi.re), pick(rng, lo.im, hi.im)))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScanSample {
    pub t: Vec<C64>,
    pub rank: Option<usize>,
    pub singular_values: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScanReport {
    pub max_rank: usize,
    pub argmax: Option<Vec<C64>>,
    pub histogram: BTreeMap<usize, usize>,
    /// Samples that failed before a rank could be read (degenerate points,
    /// continuation failures).
    pub skipped: usize,
    pub ambiguous: usize,
    pub samples: Vec<ScanSample>,
}

/// Generic rank of `β` over random samples of a region.
#[allow(clippy::too_many_arguments)]
pub fn rank_scan<T: Real>(
    family: &Family,
    region: &ScanRegion,
    n_samples: usize,
    sec: &SectionSpec,
    seed: u64,
    h_rel: f64,
    cfg: &QuadratureConfig,
    policy: &RankPolicy,
) -> Result<ScanReport> {
    family.validate()?;
    if region.lower.len() != family.dim() || region.upper.len() != family.dim() {
        return Err(Error::Arity { expected: family.dim(), got: region.lower.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<C64>> = (0..n_samples).map(|_| region.sample(&mut rng)).collect();
    let samples: Vec<ScanSample> = points
        .into_par_iter()
        .map(|t| match Stencil::<T>::compute(family, &t, sec, h_rel, cfg) {
            Ok(st) => {
                let j = st.jacobian_matrix();
                match real_rank(&j, policy) {
                    Ok(cert) => ScanSample { t, rank: Some(cert.rank), singular_values: cert.singular_values, error: None },
                    Err(e) => ScanSample {
                        t,
                        rank: None,
                        singular_values: crate::linalg::singular_values(&j),
                        error: Some(e.to_string()),
                    },
                }
            }
            Err(e) => ScanSample { t, rank: None, singular_values: Vec::new(), error: Some(e.to_string()) },
        })
        .collect();
    let mut report = ScanReport { max_rank: 0, argmax: None, histogram: BTreeMap::new(), skipped: 0, ambiguous: 0, samples: Vec::new() };
    for s in &samples {
        match s.rank {
            Some(r) => {
                *report.histogram.entry(r).or_default() += 1;
                if report.argmax.is_none() || r > report.max_rank {
                    report.max_rank = r;
                    report.argmax = Some(s.t.clone());
                }
            }
            None if s.singular_values.is_empty() => report.skipped += 1,
            None => report.ambiguous += 1,
        }
    }
    report.samples = samples;
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub max_condition: f64,
    pub h_rel: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iter: 50, tol: 1e-10, max_condition: 1e10, h_rel: DEFAULT_STEP }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TorsionSolution {
    pub t: Vec<C64>,
    pub point: FamilyPoint,
    pub iterations: usize,
    /// `‖Λ − (target + n)Ω‖_max` for the integer shift `n` nearest `β − target`.
    pub residual: f64,
    /// Parameters moved by the solver; the rest stay frozen.
    pub active: Vec<usize>,
    pub beta: Vec<f64>,
}

struct NewtonState<T: Real> {
    t: Vec<C64>,
    c: Continued<T>,
    f: Vec<C<T>>,
    residual: f64,
}

fn newton_state<T: Real>(from: &PeriodData<T>, beta_ref: &[T], family: &Family, t: Vec<C64>, sec: &SectionSpec, target: &[T], cfg: &QuadratureConfig) -> Result<NewtonState<T>> {
    let p = family.point(&t)?;
    let c = continued(from, beta_ref, &p, sec, cfg)?;
    // The section is torsion iff β ∈ target + ℤ^{2g}: aim at the nearest coset point.
    let aim: Vec<C<T>> = c.beta.iter().zip(target).map(|(b, q)| C::new(*q + (*b - *q).round(), T::zero())).collect();
    let shift = row_times(&aim, &c.pd.omega());
    let f: Vec<C<T>> = c.lambda.iter().zip(shift).map(|(a, s)| *a - s).collect();
    let residual = f.iter().fold(0.0f64, |m, z| m.max(cabs(*z).as_f64()));
    Ok(NewtonState { t, c, f, residual })
}

/// Greedy pivoted choice of `k` rows of `a` spanning the largest volume.
fn pivot_rows(a: &CMat<f64>, k: usize) -> Vec<usize> {
    let mut rows: Vec<Vec<C64>> = a.rows_vec();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let (best, _) = rows
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .map(|(i, r)| (i, r.iter().map(|z| z.norm_sqr()).sum::<f64>()))
            .fold((usize::MAX, -1.0), |b, c| if c.1 > b.1 { c } else { b });
        chosen.push(best);
        let pivot = rows[best].clone();
        let pn: f64 = pivot.iter().map(|z| z.norm_sqr()).sum();
        if pn == 0.0 {
            continue;
        }
        for (i, r) in rows.iter_mut().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let dot: C64 = r.iter().zip(&pivot).map(|(x, p)| x * p.conj()).sum::<C64>() / pn;
            for (x, p) in r.iter_mut().zip(&pivot) {
                *x -= dot * p;
            }
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Damped Newton for `Λ(t) = target·Ω(t)` in `g` of the family parameters.
pub fn torsion_target_solve<T: Real>(
    family: &Family,
    t0: &[C64],
    sec: &SectionSpec,
    target: &[Rational],
    opts: &NewtonOptions,
    cfg: &QuadratureConfig,
) -> Result<TorsionSolution> {
    let p0 = family.point(t0)?;
    let sec = sec.follow(&p0);
    let (pd0, ev0) = evaluate::<T>(&p0, &sec, cfg)?;
    let g = pd0.genus();
    let d = family.dim();
    if target.len() != 2 * g {
        return Err(Error::Arity { expected: 2 * g, got: target.len() });
    }
    if d < g {
        return Err(Error::Unsupported(format!("{d} parameters cannot reach a {g}-dimensional target")));
    }
    let target: Vec<T> = target.iter().map(|q| T::of(q.to_f64().unwrap_or(f64::NAN))).collect();
    let finish = |st: &NewtonState<T>, iterations: usize, active: Vec<usize>| -> Result<TorsionSolution> {
        Ok(TorsionSolution {
            point: family.point(&st.t)?,
            t: st.t.clone(),
            iterations,
            residual: st.residual,
            active,
            beta: st.c.beta.iter().map(|b| b.as_f64()).collect(),
        })
    };
    let mut st = newton_state(&pd0, &ev0.beta, family, t0.to_vec(), &sec, &target, cfg)?;
    if st.residual < opts.tol {
        return finish(&st, 0, Vec::new());
    }
    let mut active: Vec<usize> = Vec::new();
    for iter in 1..=opts.max_iter {
        // Holomorphic Jacobian ∂_i F_j by central differences.
        let steps: Vec<f64> = st.t.iter().map(|z| opts.h_rel * (1.0 + z.norm())).collect();
        let beta_ref = st.c.beta.clone();
        let cols: Vec<Result<Vec<C<T>>>> = (0..d)
            .into_par_iter()
            .map(|i| {
                if !active.is_empty() && !active.contains(&i) {
                    return Ok(vec![C::zero(); g]);
                }
                let eval = |sgn: f64| -> Result<Vec<C<T>>> {
                    let mut tt = st.t.clone();
                    tt[i] += sgn * steps[i];
                    let s = newton_state(&st.c.pd, &beta_ref, family, tt, &st.c.sec, &target, cfg)?;
                    Ok(s.f)
                };
                let (a, b) = (eval(1.0)?, eval(-1.0)?);
                let inv = T::one() / T::of(2.0 * steps[i]);
                Ok(a.into_iter().zip(b).map(|(x, y)| (x - y) * inv).collect())
            })
            .collect();
        let mut jac: CMat<T> = Mat::zeros(d, g);
        for (i, col) in cols.into_iter().enumerate() {
            for (j, v) in col?.into_iter().enumerate() {
                jac[(i, j)] = v;
            }
        }
        if active.is_empty() {
            active = pivot_rows(&jac.to_c64(), g);
        }
        let sub: CMat<T> = Mat::from_fn(g, g, |a, j| jac[(active[a], j)]);
        let cond = condition_number(&sub).as_f64();
        if !(cond <= opts.max_condition) {
            return Err(Error::JacobianSingular { cond });
        }
        // δ · sub = −F (rows of sub are parameters).
        let neg: Vec<C<T>> = st.f.iter().map(|z| -*z).collect();
        let delta = solve_row(&sub, &neg)?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let mut tt = st.t.clone();
            for (a, &i) in active.iter().enumerate() {
                tt[i] += to_c64(delta[a]) * lambda;
            }
            if let Ok(next) = newton_state(&st.c.pd, &st.c.beta, family, tt, &st.c.sec, &target, cfg) {
                if next.residual < st.residual * (1.0 - 0.25 * lambda) || next.residual < opts.tol {
                    accepted = Some(next);
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some(next) => st = next,
            None => return Err(Error::NewtonDiverged { iterations: iter, residual: st.residual }),
        }
        if st.residual < opts.tol {
            return finish(&st, iter, active);
        }
    }
    Err(Error::NewtonDiverged { iterations: opts.max_iter, residual: st.residual })
}

/// The rational vector with denominator `den` nearest to `beta`.
pub fn nearest_rational(beta: &[f64], den: i64) -> Vec<Rational> {
    beta.iter()
        .map(|b| Rational::new(((b * den as f64).round() as i64).into(), den.into()))
        .collect()
}

/// Distance from `beta` to the lattice `(1/n)ℤ^k`.
pub fn distance_to_lattice(beta: &[f64], n: u32) -> f64 {
    let n = n as f64;
    beta.iter().fold(0.0f64, |m, b| m.max((b * n - (b * n).round()).abs() / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{make_point, FamilyModel};

    fn re(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| Complex::new(x, 0.0)).collect()
    }

    #[test]
    fn zero_section_has_zero_beta() {
        let p = make_point(FamilyModel::odd(2), re(&[2.0, 3.0, 5.0])).unwrap();
        let cfg = QuadratureConfig::default();
        let pd = periods::<f64>(&p, &cfg).unwrap();
        let ev = betti_coords(&[C::zero(), C::zero()], &pd).unwrap();
        assert!(ev.beta.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn lattice_vectors_have_integral_beta() {
        let p = make_point(FamilyModel::odd(2), vec![Complex::new(2.0, 1.0), Complex::new(-1.0, 0.5), Complex::new(0.3, -1.0)]).unwrap();
        let cfg = QuadratureConfig::default();
        let pd = periods::<f64>(&p, &cfg).unwrap();
        let n = [3.0, -1.0, 0.0, 2.0];
        let lambda = row_times(&n.iter().map(|&v| Complex::new(v, 0.0)).collect::<Vec<_>>(), &pd.omega());
        let ev = betti_coords(&lambda, &pd).unwrap();
        for (b, want) in ev.beta.iter().zip(n) {
            assert!((b - want).abs() < 1e-10);
        }
        assert_eq!(ev.beta_int, vec![3, -1, 0, 2]);
    }

    #[test]
    fn lemniscatic_infinity_difference_is_two_torsion() {
        let p = make_point(FamilyModel::even(1), re(&[-1.0, 0.0, 0.0, 0.0])).unwrap();
        let (_, ev) = evaluate::<f64>(&p, &SectionSpec::InfinityDifference, &QuadratureConfig::default()).unwrap();
        assert!(distance_to_lattice(&ev.beta, 2) < 1e-10, "{:?}", ev.beta);
        assert!(distance_to_lattice(&ev.beta, 1) > 0.4, "{:?}", ev.beta);
    }

    #[test]
    fn pivoting_prefers_independent_rows() {
        let a = Mat::from_rows(vec![
            vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)],
            vec![Complex::new(1.0, 0.0), Complex::new(1e-3, 0.0)],
            vec![Complex::new(0.0, 0.0), Complex::new(0.5, 0.0)],
        ]);
        assert_eq!(pivot_rows(&a, 2), vec![1, 2]);
    }
}
