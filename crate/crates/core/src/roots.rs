//! Polynomial roots: companion-matrix eigenvalues in `f64`, then Newton polishing
//! in the working precision.

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::{cabs, from_c64, to_c64, Real, C};

/// Eigenvalues of the companion matrix of a monic polynomial (double precision).
fn companion_seeds(monic: &[Complex<f64>]) -> Option<Vec<Complex<f64>>> {
    let n = monic.len() - 1;
    let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -monic[i];
    }
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 10_000)?;
    let ev = schur.eigenvalues()?;
    Some(ev.iter().copied().collect())
}

/// Aberth–Ehrlich simultaneous iteration; used when the Schur sweep fails.
fn aberth_seeds(monic: &[Complex<f64>]) -> Option<Vec<Complex<f64>>> {
    let n = monic.len() - 1;
    let p = Poly::new(monic.to_vec());
    let dp = p.derivative();
    let radius = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex<f64>> = (0..n)
        .map(|k| Complex::from_polar(radius * 0.5, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for k in 0..n {
            let ratio = p.eval(&z[k]) / dp.eval(&z[k]);
            let repulsion: Complex<f64> = (0..n).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let w = ratio / (Complex::new(1.0, 0.0) - ratio * repulsion);
            z[k] -= w;
            moved = moved.max(w.norm() / (1.0 + z[k].norm()));
        }
        if moved < 1e-15 {
            return Some(z);
        }
    }
    None
}

/// All complex roots of `p` (leading coefficient nonzero), polished in `T`.
pub fn roots<T: Real>(p: &Poly<C<T>>) -> Result<Vec<C<T>>> {
    let degree = p.degree().ok_or(Error::RootFindingFailure { degree: 0 })?;
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = *p.leading().expect("nonzero");
    let monic: Vec<Complex<f64>> = p.coeffs().iter().map(|c| to_c64(*c / lead)).collect();
    let seeds = companion_seeds(&monic)
        .filter(|s| s.len() == degree && s.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .or_else(|| aberth_seeds(&monic))
        .ok_or(Error::RootFindingFailure { degree })?;

    let dp = p.derivative();
    let mut out = Vec::with_capacity(degree);
    for seed in seeds {
        let mut z: C<T> = from_c64(seed);
        let mut converged = false;
        for _ in 0..60 {
            let d = dp.eval(&z);
            if d.is_zero() {
                break;
            }
            let step = p.eval(&z) / d;
            z = z - step;
            if cabs(step) <= T::unit_roundoff() * T::of(4.0) * (T::one() + cabs(z)) {
                converged = true;
                break;
            }
        }
        // Newton stalls at roundoff level without meeting the step test; accept
        // when the residual is at the noise floor of the evaluation.
        if !converged {
            let scale = p.coeffs().iter().fold(T::zero(), |s, c| s + cabs(*c)) * (T::one() + cabs(z)).powi(degree as i32);
            converged = cabs(p.eval(&z)) <= T::of(1e3) * T::unit_roundoff() * scale;
        }
        if !converged {
            return Err(Error::RootFindingFailure { degree });
        }
        out.push(z);
    }
    Ok(out)
}

/// Smallest pairwise distance between roots.
pub fn min_separation<T: Real>(roots: &[C<T>]) -> T {
    let mut best = T::infinity();
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            best = best.min(cabs(roots[i] - roots[j]));
        }
    }
    best
}
