//! Period matrices `Ω = (Ω₁; Ω₂)` of `x^j dx / y`, the Siegel point
//! `Z = Ω₂Ω₁⁻¹`, and continuation of periods in a fixed symplectic frame.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex;
use serde::Serialize;

use crate::curve::{curve_data, CurveData, FamilyPoint};
use crate::error::{Error, Result};
use crate::homology::{build_cycle_basis, is_symplectic, partial_root, CycleBasis};
use crate::linalg::{condition_number, inverse, symmetric_eigenvalues, CMat, Lu, Mat};
use crate::quadrature::{integrate_chebyshev, QuadratureConfig};
use crate::scalar::{Real, C};
use crate::C64;

#[derive(Clone, Debug)]
pub struct PeriodData<T: Real> {
    pub point: FamilyPoint,
    pub omega1: CMat<T>,
    pub omega2: CMat<T>,
    pub z: CMat<T>,
    pub basis: CycleBasis,
    /// Periods over the raw chain cycles, one row per cycle.
    pub raw: CMat<T>,
    /// Integer rows expressing the reported symplectic cycles in the raw
    /// cycles; equals the basis transform unless the data was continued.
    pub frame: Mat<i64>,
    pub quadrature_error: f64,
}

impl<T: Real> PeriodData<T> {
    pub fn genus(&self) -> usize {
        self.omega1.nrows()
    }

    /// The stacked `2g × g` period matrix.
    pub fn omega(&self) -> CMat<T> {
        self.omega1.vcat(&self.omega2)
    }

    /// `‖Z − Zᵀ‖_max`.
    pub fn symmetry_residual(&self) -> f64 {
        self.z.sub(&self.z.transpose()).max_abs().as_f64()
    }

    /// Smallest eigenvalue of the symmetric part of `Im Z`.
    pub fn min_imag_eigenvalue(&self) -> f64 {
        let im = self.z.im();
        let sym = Mat::from_fn(im.nrows(), im.ncols(), |i, j| (im[(i, j)] + im[(j, i)]) * T::of(0.5));
        symmetric_eigenvalues(&sym).first().map_or(f64::NAN, |v| v.as_f64())
    }

    fn from_frame(point: FamilyPoint, basis: CycleBasis, raw: CMat<T>, frame: Mat<i64>, quadrature_error: f64) -> Result<Self> {
        let g = raw.ncols();
        let f = frame.map(|&x| Complex::new(T::of(x as f64), T::zero()));
        let omega = f.mul(&raw);
        let omega1 = omega.row_block(0, g);
        let omega2 = omega.row_block(g, 2 * g);
        let cond = condition_number(&omega1).as_f64();
        if !(cond <= 1e12) {
            return Err(Error::IllConditioned { cond });
        }
        let z = omega2.mul(&inverse(&omega1)?);
        Ok(PeriodData { point, omega1, omega2, z, basis, raw, frame, quadrature_error })
    }

    /// The same lattice re-expressed through an integral symplectic change of
    /// frame: the new rows are `N·Ω`.
    pub fn reframed(&self, n: &Mat<i64>) -> Result<Self> {
        let frame = crate::homology::int_mul(n, &self.frame);
        Self::from_frame(self.point.clone(), self.basis.clone(), self.raw.clone(), frame, self.quadrature_error)
    }
}

/// `∫` over chain edge `k` of `x^j dx / y₊` for `j = 0 … g−1`.
fn edge_integrals<T: Real>(sorted: &[C<T>], k: usize, g: usize, cfg: &QuadratureConfig) -> Result<(Vec<C<T>>, f64)> {
    let half = T::of(0.5);
    let (a, b) = (sorted[k], sorted[k + 1]);
    let mid = (a + b) * half;
    let d = (b - a) * half;
    let minus_i = Complex::new(T::zero(), -T::one());
    // On the edge, y₊ = i·d·√(1−τ²)·r(τ) with r² = ∏_{others}(x − e), so
    // dx/y₊ = −i dτ / (r √(1−τ²)).
    let res = integrate_chebyshev(cfg, |tau: T| {
        let x = mid + d * tau;
        let w = minus_i / partial_root(x, mid, sorted, &[k, k + 1]);
        let mut out = Vec::with_capacity(g);
        let mut p = w;
        for _ in 0..g {
            out.push(p);
            p = p * x;
        }
        out
    })?;
    Ok((res.values, res.error.as_f64()))
}

/// Periods of `x^j dx/y` over the basis cycles.
pub fn period_matrix<T: Real>(c: &CurveData<T>, basis: &CycleBasis, cfg: &QuadratureConfig) -> Result<PeriodData<T>> {
    cfg.validate()?;
    let g = c.genus;
    let sorted: Vec<C<T>> = basis.order.iter().map(|&i| c.branch_points[i]).collect();
    let mut raw = Mat::zeros(2 * g, g);
    let mut err = 0.0f64;
    for (row, cycle) in basis.cycles.iter().enumerate() {
        let (vals, e) = edge_integrals(&sorted, cycle.edge(), g, cfg)?;
        for (j, v) in vals.into_iter().enumerate() {
            raw[(row, j)] = v * T::of(2.0);
        }
        err = err.max(2.0 * e);
    }
    PeriodData::from_frame(c.point.clone(), basis.clone(), raw, basis.transform_to_symplectic.clone(), err)
}

/// Curve data, chain basis and periods in one call.
pub fn periods<T: Real>(p: &FamilyPoint, cfg: &QuadratureConfig) -> Result<PeriodData<T>> {
    let c = curve_data::<T>(p)?;
    let basis = build_cycle_basis(&c.branch_points, c.genus)?;
    period_matrix(&c, &basis, cfg)
}

/// Real matrix `X` with `(A, Ā) = X·(B, B̄)`; when `A` and `B` are two frames
/// of the same lattice, `X` is the integral change of frame.
pub fn lattice_relation<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Result<Mat<T>> {
    let lhs = a.hcat(&a.conj());
    let rhs = b.hcat(&b.conj());
    Ok(lhs.mul(&inverse(&rhs)?).re())
}

/// Round a near-integral matrix, returning it with the largest rounding offset.
pub fn round_integral<T: Real>(x: &Mat<T>) -> (Mat<i64>, f64) {
    let n = x.map(|v| v.round().as_f64() as i64);
    let off = x.data().iter().fold(0.0f64, |m, v| m.max((*v - v.round()).abs().as_f64()));
    (n, off)
}

/// Largest lattice-rounding offset accepted in one continuation step.
pub const MAX_STEP_OFFSET: f64 = 0.1;

/// Periods at `target` expressed in the symplectic frame of `pd`.
pub fn continue_periods<T: Real>(pd: &PeriodData<T>, target: &FamilyPoint, cfg: &QuadratureConfig) -> Result<PeriodData<T>> {
    if *target == pd.point {
        return Ok(pd.clone());
    }
    let fresh = periods::<T>(target, cfg)?;
    let x = lattice_relation(&pd.omega(), &fresh.omega())?;
    let (n, offset) = round_integral(&x);
    if offset > MAX_STEP_OFFSET || !is_symplectic(&n) {
        return Err(Error::MonodromyStep { offset });
    }
    fresh.reframed(&n)
}

/// Continue along the straight segment to `target`, bisecting any step whose
/// lattice coordinates are not clearly integral.
pub fn continue_to<T: Real>(pd: &PeriodData<T>, target: &FamilyPoint, cfg: &QuadratureConfig) -> Result<PeriodData<T>> {
    fn go<T: Real>(pd: &PeriodData<T>, target: &FamilyPoint, cfg: &QuadratureConfig, depth: usize) -> Result<PeriodData<T>> {
        match continue_periods(pd, target, cfg) {
            Err(Error::MonodromyStep { .. }) if depth > 0 => {
                let mid: Vec<C64> = pd.point.params.iter().zip(&target.params).map(|(a, b)| (a + b) * 0.5).collect();
                let mid = pd.point.with_params(mid)?;
                let half = go(pd, &mid, cfg, depth - 1)?;
                go(&half, target, cfg, depth - 1)
            }
            other => other,
        }
    }
    go(pd, target, cfg, 12)
}

/// Continue around a closed polygon of parameter points, returning the
/// integral matrix `M` with `Ω_end = M·Ω_start` in the starting frame.
pub fn monodromy<T: Real>(start: &PeriodData<T>, loop_points: &[FamilyPoint], cfg: &QuadratureConfig) -> Result<(Mat<i64>, f64)> {
    let mut cur = start.clone();
    for p in loop_points {
        cur = continue_to(&cur, p, cfg)?;
    }
    cur = continue_to(&cur, &start.point, cfg)?;
    let x = lattice_relation(&cur.omega(), &start.omega())?;
    Ok(round_integral(&x))
}

/// Klein's `j` from a point of the upper half plane.
pub fn j_invariant(tau: C64) -> C64 {
    use std::f64::consts::PI;
    // Reduce to the fundamental domain so the q-series converges fast.
    let mut t = tau;
    for _ in 0..100 {
        t.re -= t.re.round();
        if t.norm_sqr() < 1.0 - 1e-15 {
            t = -1.0 / t;
        } else {
            break;
        }
    }
    let q = Complex::from_polar((-2.0 * PI * t.im).exp(), 2.0 * PI * t.re);
    let sigma = |n: u64, k: u32| -> f64 { (1..=n).filter(|d| n % d == 0).map(|d| (d as f64).powi(k as i32)).sum() };
    let mut e4 = Complex::new(1.0, 0.0);
    let mut e6 = Complex::new(1.0, 0.0);
    let mut qn = Complex::new(1.0, 0.0);
    for n in 1..200u64 {
        qn *= q;
        if qn.norm() < 1e-30 {
            break;
        }
        e4 += 240.0 * sigma(n, 3) * qn;
        e6 -= 504.0 * sigma(n, 5) * qn;
    }
    let e43 = e4 * e4 * e4;
    1728.0 * e43 / (e43 - e6 * e6)
}

/// `j` of a genus-one period point.
pub fn j_from_periods<T: Real>(pd: &PeriodData<T>) -> Result<C64> {
    if pd.genus() != 1 {
        return Err(Error::Unsupported("j-invariant needs genus 1".into()));
    }
    Ok(j_invariant(crate::scalar::to_c64(pd.z[(0, 0)])))
}

/// Integral `M` with `Ω_a ≈ M·Ω_b` for two period matrices of the same lattice,
/// with the rounding offset as a certificate.
pub fn symplectic_equivalence<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Result<(Mat<i64>, f64)> {
    let x = lattice_relation(a, b)?;
    Ok(round_integral(&x))
}

/// Exported view of a period computation.
#[derive(Serialize)]
pub struct PeriodExport {
    pub point: FamilyPoint,
    pub precision: &'static str,
    pub omega1: Vec<Vec<[f64; 2]>>,
    pub omega2: Vec<Vec<[f64; 2]>>,
    pub z: Vec<Vec<[f64; 2]>>,
    pub intersection_matrix: Mat<i64>,
    pub transform_to_symplectic: Mat<i64>,
    pub conjugation_adapted: bool,
    pub quadrature_error: f64,
    pub symmetry_residual: f64,
    pub min_imag_eigenvalue: f64,
}

pub fn complex_rows<T: Real>(m: &CMat<T>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect()).collect()
}

impl<T: Real> PeriodData<T> {
    pub fn export(&self) -> PeriodExport {
        PeriodExport {
            point: self.point.clone(),
            precision: T::LABEL,
            omega1: complex_rows(&self.omega1),
            omega2: complex_rows(&self.omega2),
            z: complex_rows(&self.z),
            intersection_matrix: self.basis.intersection_matrix.clone(),
            transform_to_symplectic: self.frame.clone(),
            conjugation_adapted: self.basis.conjugation_adapted,
            quadrature_error: self.quadrature_error,
            symmetry_residual: self.symmetry_residual(),
            min_imag_eigenvalue: self.min_imag_eigenvalue(),
        }
    }
}

type CacheKey = (TypeId, Vec<u8>);

/// Process-wide period cache: many readers, one writer at a time.
pub struct PeriodCache {
    map: RwLock<HashMap<CacheKey, Arc<dyn Any + Send + Sync>>>,
}

impl PeriodCache {
    pub fn new() -> Self {
        PeriodCache { map: RwLock::new(HashMap::new()) }
    }

    pub fn global() -> &'static PeriodCache {
        static CACHE: OnceLock<PeriodCache> = OnceLock::new();
        CACHE.get_or_init(PeriodCache::new)
    }

    pub fn key(p: &FamilyPoint, cfg: &QuadratureConfig) -> Vec<u8> {
        let mut k = p.canonical_bytes();
        k.extend_from_slice(&(cfg.nodes as u64).to_le_bytes());
        k.extend_from_slice(&cfg.refine_tol.to_bits().to_le_bytes());
        k.extend_from_slice(&(cfg.max_nodes as u64).to_le_bytes());
        k
    }

    pub fn get_or_compute<T: Real>(&self, p: &FamilyPoint, cfg: &QuadratureConfig) -> Result<Arc<PeriodData<T>>> {
        let key = (TypeId::of::<T>(), Self::key(p, cfg));
        if let Some(hit) = self.map.read().expect("cache lock").get(&key) {
            if let Ok(pd) = hit.clone().downcast::<PeriodData<T>>() {
                return Ok(pd);
            }
        }
        let pd = Arc::new(periods::<T>(p, cfg)?);
        self.map.write().expect("cache lock").insert(key, pd.clone());
        Ok(pd)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.write().expect("cache lock").clear();
    }
}

impl Default for PeriodCache {
    fn default() -> Self {
        Self::new()
    }
}

/// LU of the real `2g × 2g` matrix `(Ω, Ω̄)` viewed as complex.
pub fn lattice_lu<T: Real>(omega: &CMat<T>) -> Result<Lu<T>> {
    Lu::new(&omega.hcat(&omega.conj()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{make_point, FamilyModel};

    fn re(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| Complex::new(x, 0.0)).collect()
    }

    #[test]
    fn lemniscatic_curves_have_j_1728() {
        let cfg = QuadratureConfig::default();
        let odd = make_point(FamilyModel::odd(1), re(&[-1.0])).unwrap();
        let pd = periods::<f64>(&odd, &cfg).unwrap();
        assert!(pd.min_imag_eigenvalue() > 0.0, "Im Z = {}", pd.z[(0, 0)]);
        assert!((j_from_periods(&pd).unwrap() - 1728.0).norm() < 1e-6);
        let even = make_point(FamilyModel::even(1), re(&[-1.0, 0.0, 0.0, 0.0])).unwrap();
        let pd = periods::<f64>(&even, &cfg).unwrap();
        assert!(pd.min_imag_eigenvalue() > 0.0, "Im Z = {}", pd.z[(0, 0)]);
        assert!((j_from_periods(&pd).unwrap() - 1728.0).norm() < 1e-6);
    }

    #[test]
    fn j_series_at_special_points() {
        assert!((j_invariant(Complex::new(0.0, 1.0)) - 1728.0).norm() < 1e-9);
        let rho = Complex::new(-0.5, 3f64.sqrt() / 2.0);
        assert!(j_invariant(rho).norm() < 1e-6);
        // Modular invariance.
        let t = Complex::new(0.123, 0.77);
        assert!((j_invariant(t) - j_invariant(-1.0 / (t + 2.0))).norm() < 1e-8 * j_invariant(t).norm());
    }

    #[test]
    fn genus_two_riemann_relations() {
        let cfg = QuadratureConfig::default();
        let p = make_point(FamilyModel::odd(2), re(&[2.0, 3.0, 5.0])).unwrap();
        let pd = periods::<f64>(&p, &cfg).unwrap();
        assert!(pd.symmetry_residual() < 1e-12, "{}", pd.symmetry_residual());
        assert!(pd.min_imag_eigenvalue() > 0.0);
    }

    #[test]
    fn zero_step_is_identity() {
        let cfg = QuadratureConfig::default();
        let p = make_point(FamilyModel::odd(2), re(&[2.0, 3.0, 5.0])).unwrap();
        let pd = periods::<f64>(&p, &cfg).unwrap();
        let same = continue_periods(&pd, &p, &cfg).unwrap();
        assert_eq!(same.omega(), pd.omega());
    }

    #[test]
    fn cache_returns_the_same_data() {
        let cfg = QuadratureConfig::default();
        let cache = PeriodCache::new();
        let p = make_point(FamilyModel::odd(1), re(&[-1.0])).unwrap();
        let a = cache.get_or_compute::<f64>(&p, &cfg).unwrap();
        let b = cache.get_or_compute::<f64>(&p, &cfg).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
    }
}
