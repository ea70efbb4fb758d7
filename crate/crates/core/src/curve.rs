//! Hyperelliptic family models and the curve data attached to a parameter point.

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Poly, QPoly};
use crate::roots::{min_separation, roots};
use crate::scalar::{from_c64, Real, C};
use crate::{Rational, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// `y² = x(x−1)(x−s₀)⋯(x−s_{2g−2})`
    OddDeg,
    /// `y² = x^{2g+2} + s_{2g+1}x^{2g+1} + ⋯ + s₀`
    EvenDeg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FamilyModel {
    pub kind: ModelKind,
    pub genus: usize,
}

impl FamilyModel {
    pub fn odd(genus: usize) -> Self {
        FamilyModel { kind: ModelKind::OddDeg, genus }
    }

    pub fn even(genus: usize) -> Self {
        FamilyModel { kind: ModelKind::EvenDeg, genus }
    }

    /// Number of free parameters.
    pub fn arity(&self) -> usize {
        match self.kind {
            ModelKind::OddDeg => 2 * self.genus - 1,
            ModelKind::EvenDeg => 2 * self.genus + 2,
        }
    }

    pub fn degree(&self) -> usize {
        match self.kind {
            ModelKind::OddDeg => 2 * self.genus + 1,
            ModelKind::EvenDeg => 2 * self.genus + 2,
        }
    }

    /// Expand `f_s` for the given parameters (no validation).
    pub fn polynomial<T: Real>(&self, params: &[C<T>]) -> Poly<C<T>> {
        match self.kind {
            ModelKind::OddDeg => {
                let mut rs = vec![C::zero(), C::one()];
                rs.extend_from_slice(params);
                Poly::from_roots(&rs)
            }
            ModelKind::EvenDeg => {
                let mut cs = params.to_vec();
                cs.push(C::one());
                Poly::new(cs)
            }
        }
    }

    /// Exact `f_s` for rational parameters.
    pub fn rational_polynomial(&self, params: &[Rational]) -> QPoly {
        match self.kind {
            ModelKind::OddDeg => {
                let mut rs = vec![Rational::zero(), Rational::one()];
                rs.extend_from_slice(params);
                Poly::from_roots(&rs)
            }
            ModelKind::EvenDeg => {
                let mut cs = params.to_vec();
                cs.push(Rational::one());
                Poly::new(cs)
            }
        }
    }
}

/// A validated parameter point.  Parameters are stored in double precision;
/// higher-precision evaluations lift them exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct FamilyPoint {
    pub model: ModelKind,
    pub genus: usize,
    pub params: Vec<C64>,
    #[serde(default)]
    pub real: bool,
}

#[derive(Deserialize)]
struct RawPoint {
    model: ModelKind,
    genus: usize,
    params: Vec<C64>,
}

impl TryFrom<RawPoint> for FamilyPoint {
    type Error = Error;
    fn try_from(raw: RawPoint) -> Result<Self> {
        make_point(FamilyModel { kind: raw.model, genus: raw.genus }, raw.params)
    }
}

impl FamilyPoint {
    pub fn family(&self) -> FamilyModel {
        FamilyModel { kind: self.model, genus: self.genus }
    }

    pub fn with_params(&self, params: Vec<C64>) -> Result<FamilyPoint> {
        make_point(self.family(), params)
    }

    /// Stable byte encoding used for content addressing.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 16 * self.params.len());
        out.push(match self.model {
            ModelKind::OddDeg => 1,
            ModelKind::EvenDeg => 2,
        });
        out.extend_from_slice(&(self.genus as u64).to_le_bytes());
        for z in &self.params {
            // Normalise −0.0 so equal points hash equally.
            out.extend_from_slice(&(z.re + 0.0).to_bits().to_le_bytes());
            out.extend_from_slice(&(z.im + 0.0).to_bits().to_le_bytes());
        }
        out
    }
}

fn separation_floor(points: &[C64]) -> f64 {
    1e-8 * points.iter().fold(1.0f64, |m, z| m.max(z.norm()))
}

/// Validate a parameter vector against a model.
pub fn make_point(model: FamilyModel, params: Vec<C64>) -> Result<FamilyPoint> {
    if model.genus == 0 {
        return Err(Error::InvalidParam("genus must be positive".into()));
    }
    if params.len() != model.arity() {
        return Err(Error::Arity { expected: model.arity(), got: params.len() });
    }
    if params.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParam("non-finite parameter".into()));
    }
    let branch = match model.kind {
        ModelKind::OddDeg => {
            let mut pts = vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)];
            pts.extend_from_slice(&params);
            let floor = separation_floor(&pts);
            for (i, s) in params.iter().enumerate() {
                if (s - Complex::new(0.0, 0.0)).norm() < floor || (s - Complex::new(1.0, 0.0)).norm() < floor {
                    return Err(Error::InvalidParam(format!("s_{i} = {s} coincides with 0 or 1")));
                }
                for (j, t) in params.iter().enumerate().skip(i + 1) {
                    if (s - t).norm() < floor {
                        return Err(Error::InvalidParam(format!("s_{i} and s_{j} coincide")));
                    }
                }
            }
            pts
        }
        ModelKind::EvenDeg => {
            let f = model.polynomial::<f64>(&params);
            roots(&f)?
        }
    };
    let sep = min_separation(&branch);
    if sep < separation_floor(&branch) {
        return Err(Error::DegenerateDiscriminant(format!("branch points {sep:e} apart")));
    }
    let real = params.iter().all(|z| z.im == 0.0);
    Ok(FamilyPoint { model: model.kind, genus: model.genus, params, real })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfinityStructure {
    OnePoint,
    TwoPoints,
}

#[derive(Clone, Debug)]
pub struct CurveData<T: Real> {
    pub point: FamilyPoint,
    pub model: FamilyModel,
    pub f: Poly<C<T>>,
    pub fprime: Poly<C<T>>,
    pub branch_points: Vec<C<T>>,
    pub genus: usize,
    pub infinity: InfinityStructure,
}

impl<T: Real> CurveData<T> {
    /// `y²` at `x`.
    pub fn eval(&self, x: C<T>) -> C<T> {
        self.f.eval(&x)
    }

    pub fn all_real_branch_points(&self) -> bool {
        self.branch_points.iter().all(|b| b.im.is_zero())
    }
}

/// Expand `f` and locate its roots in precision `T`.
pub fn curve_data<T: Real>(p: &FamilyPoint) -> Result<CurveData<T>> {
    let model = p.family();
    let params: Vec<C<T>> = p.params.iter().map(|z| from_c64(*z)).collect();
    let f = model.polynomial(&params);
    let mut branch_points = match model.kind {
        ModelKind::OddDeg => {
            let mut rs = vec![C::zero(), C::one()];
            rs.extend_from_slice(&params);
            rs
        }
        ModelKind::EvenDeg => roots(&f)?,
    };
    // Real roots of real polynomials come back with roundoff imaginary parts.
    if p.real {
        let scale = branch_points.iter().fold(T::one(), |m, z| m.max(z.norm()));
        for z in &mut branch_points {
            if z.im.abs() < T::of(1e3) * T::unit_roundoff() * scale {
                z.im = T::zero();
            }
        }
    }
    let fprime = f.derivative();
    Ok(CurveData {
        point: p.clone(),
        model,
        f,
        fprime,
        branch_points,
        genus: p.genus,
        infinity: match model.kind {
            ModelKind::OddDeg => InfinityStructure::OnePoint,
            ModelKind::EvenDeg => InfinityStructure::TwoPoints,
        },
    })
}

/// `Σ_r f/(x−r)` over the given roots, which equals `f′` when `f` is monic
/// with exactly those roots.
pub fn h_polynomial<K: crate::poly::Coeff>(f: &Poly<K>, roots: &[K]) -> Poly<K> {
    let mut h = Poly::zero();
    for r in roots {
        let (q, _) = f.div_rem(&Poly::new(vec![-r.clone(), K::one()]));
        h = h + q;
    }
    h
}

/// How random branch points are laid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    /// Arbitrary complex parameters.
    Complex,
    /// Real parameters (conjugation-closed branch locus).
    Real,
    /// Real parameters with every branch point real.
    AllReal,
}

/// Draw a random well-separated point: branch points are sampled with a
/// minimum pairwise distance and, for the even model, expanded into
/// coefficients.
pub fn random_point(model: FamilyModel, layout: Layout, rng: &mut impl Rng) -> Result<FamilyPoint> {
    let min_sep = 0.25;
    for _ in 0..1000 {
        let count = model.degree();
        let mut pts: Vec<C64> = match model.kind {
            ModelKind::OddDeg => vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)],
            ModelKind::EvenDeg => Vec::new(),
        };
        let mut attempts = 0;
        while pts.len() < count && attempts < 10_000 {
            attempts += 1;
            let re = rng.gen_range(-2.0..2.0);
            let im = rng.gen_range(-2.0..2.0);
            let fresh: Vec<C64> = match layout {
                Layout::Complex => vec![Complex::new(re, im)],
                Layout::AllReal => vec![Complex::new(re, 0.0)],
                Layout::Real => {
                    // EvenDeg: conjugate pairs while two or more slots remain;
                    // OddDeg: parameters are the roots themselves, so stay real.
                    if model.kind == ModelKind::EvenDeg && count - pts.len() >= 2 && rng.gen_bool(0.5) {
                        let im = if im.abs() < min_sep { min_sep.copysign(im + 1e-300) } else { im };
                        vec![Complex::new(re, im), Complex::new(re, -im)]
                    } else {
                        vec![Complex::new(re, 0.0)]
                    }
                }
            };
            if fresh.iter().all(|z| pts.iter().all(|p| (p - z).norm() >= min_sep)) {
                pts.extend(fresh);
            }
        }
        if pts.len() != count {
            continue;
        }
        let params = match model.kind {
            ModelKind::OddDeg => pts[2..].to_vec(),
            ModelKind::EvenDeg => {
                let f: Poly<C64> = Poly::from_roots(&pts);
                let mut cs = f.into_coeffs();
                cs.pop();
                if layout != Layout::Complex {
                    for c in &mut cs {
                        c.im = 0.0;
                    }
                }
                cs
            }
        };
        if let Ok(p) = make_point(model, params) {
            return Ok(p);
        }
    }
    Err(Error::InvalidParam("could not sample a well-separated point".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{q, qpoly};

    fn re(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| Complex::new(x, 0.0)).collect()
    }

    #[test]
    fn odd_point_validation() {
        assert!(make_point(FamilyModel::odd(2), re(&[2.0, 3.0, 5.0])).is_ok());
        assert!(matches!(make_point(FamilyModel::odd(2), re(&[2.0, 2.0, 5.0])), Err(Error::InvalidParam(_))));
        assert!(matches!(make_point(FamilyModel::odd(2), re(&[1.0, 3.0, 5.0])), Err(Error::InvalidParam(_))));
        assert!(matches!(make_point(FamilyModel::odd(2), re(&[2.0, 3.0])), Err(Error::Arity { expected: 3, got: 2 })));
    }

    #[test]
    fn lemniscatic_even_point() {
        let p = make_point(FamilyModel::even(1), re(&[-1.0, 0.0, 0.0, 0.0])).unwrap();
        let cd = curve_data::<f64>(&p).unwrap();
        for b in [Complex::new(1.0, 0.0), Complex::new(0.0, 1.0), Complex::new(-1.0, 0.0), Complex::new(0.0, -1.0)] {
            assert!(cd.branch_points.iter().any(|z| (z - b).norm() < 1e-14));
        }
        assert_eq!(cd.fprime.eval(&Complex::new(1.0, 0.0)), Complex::new(4.0, 0.0));
        let sq = make_point(FamilyModel::even(1), re(&[1.0, 0.0, -2.0, 0.0]));
        assert!(matches!(sq, Err(Error::DegenerateDiscriminant(_))));
    }

    #[test]
    fn odd_curve_data() {
        let p = make_point(FamilyModel::odd(1), re(&[-1.0])).unwrap();
        let cd = curve_data::<f64>(&p).unwrap();
        assert_eq!(cd.f.coeffs(), &re(&[0.0, -1.0, 0.0, 1.0])[..]);
        let p = make_point(FamilyModel::odd(2), re(&[2.0, 3.0, 5.0])).unwrap();
        let cd = curve_data::<f64>(&p).unwrap();
        // f'(2) = 2·1·(2−3)·(2−5)
        assert_eq!(cd.fprime.eval(&Complex::new(2.0, 0.0)), Complex::new(6.0, 0.0));
    }

    #[test]
    fn h_sum_is_derivative_exactly() {
        let model = FamilyModel::odd(3);
        let s = [q(2), q(-3), crate::poly::qf(1, 2), q(7), q(5)];
        let f = model.rational_polynomial(&s);
        let mut rs = vec![q(0), q(1)];
        rs.extend_from_slice(&s);
        assert_eq!(h_polynomial(&f, &rs), f.derivative());
        assert_eq!(f.degree(), Some(7));
        assert_eq!(FamilyModel::even(1).rational_polynomial(&[q(-1), q(0), q(0), q(0)]), qpoly(&[-1, 0, 0, 0, 1]));
    }

    #[test]
    fn json_roundtrip_validates() {
        let p = make_point(FamilyModel::odd(2), re(&[2.0, 3.0, 5.0])).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"model":"OddDeg","genus":2,"params":[[2.0,0.0],[3.0,0.0],[5.0,0.0]],"real":true}"#);
        let back: FamilyPoint = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"model":"OddDeg","genus":2,"params":[[2,0],[2,0],[5,0]]}"#;
        assert!(serde_json::from_str::<FamilyPoint>(bad).is_err());
    }

    #[test]
    fn random_points_respect_layout() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for g in 1..=3 {
            let p = random_point(FamilyModel::even(g), Layout::AllReal, &mut rng).unwrap();
            let cd = curve_data::<f64>(&p).unwrap();
            assert!(cd.all_real_branch_points());
            let p = random_point(FamilyModel::even(g), Layout::Real, &mut rng).unwrap();
            assert!(p.real);
            let p = random_point(FamilyModel::odd(g), Layout::Complex, &mut rng).unwrap();
            assert_eq!(p.params.len(), 2 * g - 1);
        }
    }
}
