//! Linear systems of quadratic forms on `K^g` and vectors lying in no kernel.
//!
//! For a web `W = ⟨Q₁, …, Q_g⟩` a vector `p` lies in the kernel of some
//! nonzero member iff the columns `Q_k p` are dependent, i.e. iff
//! `D(p) = det[Q₁p | … | Q_g p]` vanishes.  `D` is homogeneous of degree `g`,
//! so vanishing on the grid `{0, …, g}^g` proves `D ≡ 0`.

use num_complex::Complex;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{complex_rank, det, exact_det, exact_rank, CMat, Mat, RankPolicy};
use crate::poly::{format_rational, Coeff};
use crate::scalar::{cabs, from_c64, Real, C};
use crate::Rational;

/// Relative threshold on `|D(p)|` in floating mode.
pub const REGULAR_THRESHOLD: f64 = 1e-8;
pub const INTEGER_RANGE: i64 = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadricWeb<K> {
    pub g: usize,
    pub basis: Vec<Mat<K>>,
}

/// Flatten the upper triangle of every form into a `g × g(g+1)/2` matrix.
fn flattening<K: Coeff>(g: usize, basis: &[Mat<K>]) -> Mat<K> {
    let cols: Vec<(usize, usize)> = (0..g).flat_map(|a| (a..g).map(move |b| (a, b))).collect();
    Mat::from_fn(basis.len(), cols.len(), |k, c| basis[k][cols[c]].clone())
}

fn check_shapes<K: Coeff>(g: usize, basis: &[Mat<K>]) -> Result<()> {
    if basis.len() != g {
        return Err(Error::Arity { expected: g, got: basis.len() });
    }
    for (k, q) in basis.iter().enumerate() {
        if q.nrows() != g || q.ncols() != g {
            return Err(Error::InvalidParam(format!("form {k} is {}×{}, expected {g}×{g}", q.nrows(), q.ncols())));
        }
        for a in 0..g {
            for b in 0..a {
                if q[(a, b)] != q[(b, a)] {
                    return Err(Error::InvalidParam(format!("form {k} is not symmetric")));
                }
            }
        }
    }
    Ok(())
}

impl QuadricWeb<Rational> {
    pub fn new(basis: Vec<Mat<Rational>>) -> Result<Self> {
        let g = basis.first().map_or(0, |q| q.nrows());
        check_shapes(g, &basis)?;
        if exact_rank(&flattening(g, &basis)) != g {
            return Err(Error::BasisDegeneracy("web basis is linearly dependent".into()));
        }
        Ok(QuadricWeb { g, basis })
    }

    /// Web spanned by monomials `x_a x_b`, as symmetric matrices with
    /// `½` off the diagonal.
    pub fn from_monomials(g: usize, monomials: &[(usize, usize)]) -> Result<Self> {
        let basis = monomials
            .iter()
            .map(|&(a, b)| {
                let mut m = Mat::zeros(g, g);
                if a == b {
                    m[(a, a)] = Rational::one();
                } else {
                    let half = Rational::new(1.into(), 2.into());
                    m[(a, b)] = half.clone();
                    m[(b, a)] = half;
                }
                m
            })
            .collect();
        Self::new(basis)
    }

    pub fn to_complex<T: Real>(&self) -> QuadricWeb<C<T>> {
        let conv = |r: &Rational| from_c64::<T>(Complex::new(r.to_f64().unwrap_or(f64::NAN), 0.0));
        QuadricWeb { g: self.g, basis: self.basis.iter().map(|q| q.map(conv)).collect() }
    }
}

impl<T: Real> QuadricWeb<C<T>> {
    pub fn new_complex(basis: Vec<CMat<T>>) -> Result<Self> {
        let g = basis.first().map_or(0, |q| q.nrows());
        check_shapes(g, &basis)?;
        let flat = flattening(g, &basis);
        if complex_rank(&flat, &RankPolicy::default())?.rank != g {
            return Err(Error::BasisDegeneracy("web basis is numerically dependent".into()));
        }
        Ok(QuadricWeb { g, basis })
    }
}

/// `[Q₁p | … | Q_g p]`.
pub fn column_matrix<K: Coeff>(basis: &[Mat<K>], p: &[K]) -> Mat<K> {
    let g = p.len();
    Mat::from_fn(g, basis.len(), |a, k| (0..g).fold(K::zero(), |s, b| s + basis[k][(a, b)].clone() * p[b].clone()))
}

pub fn d_exact(web: &QuadricWeb<Rational>, p: &[Rational]) -> Rational {
    exact_det(&column_matrix(&web.basis, p))
}

pub fn d_float<T: Real>(web: &QuadricWeb<C<T>>, p: &[C<T>]) -> C<T> {
    det(&column_matrix(&web.basis, p))
}

fn member<K: Coeff>(basis: &[Mat<K>], lambda: &[K]) -> Mat<K> {
    let g = basis[0].nrows();
    basis.iter().zip(lambda).fold(Mat::zeros(g, g), |acc, (q, l)| acc.add(&q.scale(l)))
}

/// Points of `{0, …, g}^g` in lexicographic order.
fn grid(g: usize) -> impl Iterator<Item = Vec<i64>> {
    let side = g as i64 + 1;
    let total = (side as usize).pow(g as u32);
    (0..total).map(move |mut n| {
        (0..g)
            .map(|_| {
                let d = (n % side as usize) as i64;
                n /= side as usize;
                d
            })
            .collect()
    })
}

fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&k| Rational::from_integer(k.into())).collect()
}

fn random_ints(rng: &mut ChaCha8Rng, g: usize) -> Vec<i64> {
    (0..g).map(|_| rng.gen_range(-INTEGER_RANGE..=INTEGER_RANGE)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NondegenerateReport {
    pub found: bool,
    pub witness: Option<Vec<String>>,
    /// In exact mode a negative answer is certified by the grid.
    pub certified: bool,
    pub tested: usize,
    pub note: String,
}

/// Search for `λ` with `det Σ λ_k Q_k ≠ 0`: first `λ = (1, …, 1)`, then
/// `n_trials` integer vectors, then the certification grid.
pub fn has_nondegenerate_member(web: &QuadricWeb<Rational>, n_trials: usize, seed: u64) -> NondegenerateReport {
    let g = web.g;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates = std::iter::once(vec![1; g]).chain((0..n_trials).map(|_| random_ints(&mut rng, g)).collect::<Vec<_>>()).chain(grid(g));
    let mut tested = 0;
    for lam in candidates {
        tested += 1;
        let lam = ints(&lam);
        if !exact_det(&member(&web.basis, &lam)).is_zero() {
            return NondegenerateReport {
                found: true,
                witness: Some(lam.iter().map(format_rational).collect()),
                certified: true,
                tested,
                note: "exact nonzero determinant".into(),
            };
        }
    }
    NondegenerateReport {
        found: false,
        witness: None,
        certified: true,
        tested,
        note: format!("det Σλ_kQ_k has degree ≤ {g} in each λ_k and vanishes on {{0..{g}}}^{g}"),
    }
}

/// Floating counterpart: probabilistic only.
pub fn has_nondegenerate_member_float<T: Real>(web: &QuadricWeb<C<T>>, n_trials: usize, seed: u64) -> NondegenerateReport {
    let g = web.g;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = web.basis.iter().map(|q| q.max_abs()).fold(T::zero(), |a, b| a.max(b));
    let mut tested = 0;
    for t in 0..n_trials.max(1) {
        tested += 1;
        let lam: Vec<C<T>> = if t == 0 { vec![C::new(T::one(), T::zero()); g] } else { gaussian(&mut rng, g) };
        let norm = lam.iter().map(|z| cabs(*z)).fold(T::zero(), |a, b| a.max(b));
        let d = cabs(det(&member(&web.basis, &lam)));
        let bound = (scale * norm * T::of_usize(g)).powi(g as i32);
        if d > bound * T::of(REGULAR_THRESHOLD) {
            return NondegenerateReport {
                found: true,
                witness: Some(lam.iter().map(|z| format!("{:.16e}{:+.16e}i", z.re.as_f64(), z.im.as_f64())).collect()),
                certified: false,
                tested,
                note: "determinant above threshold".into(),
            };
        }
    }
    NondegenerateReport {
        found: false,
        witness: None,
        certified: false,
        tested,
        note: format!("determinant (degree {g}) below threshold at {tested} random points"),
    }
}

fn gaussian<T: Real>(rng: &mut ChaCha8Rng, g: usize) -> Vec<C<T>> {
    (0..g)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            from_c64(Complex::new(re, im))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind")]
pub enum RegularOutcome {
    Regular { p: Vec<String>, d: String, samples: usize },
    IdenticallySingular { grid_points: usize, random_points: usize },
}

/// Exact search: `(1, …, 1)`, then `n_trials` integer samples, then the
/// grid, which either yields a regular vector or proves `D ≡ 0`.
pub fn find_regular_vector(web: &QuadricWeb<Rational>, n_trials: usize, seed: u64) -> RegularOutcome {
    let g = web.g;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = 0;
    let sampled: Vec<Vec<i64>> = std::iter::once(vec![1; g]).chain((0..n_trials).map(|_| random_ints(&mut rng, g)).collect::<Vec<_>>()).collect();
    for p in sampled.iter().cloned().chain(grid(g)) {
        samples += 1;
        let p = ints(&p);
        let d = d_exact(web, &p);
        if !d.is_zero() {
            return RegularOutcome::Regular { p: p.iter().map(format_rational).collect(), d: format_rational(&d), samples };
        }
    }
    RegularOutcome::IdenticallySingular { grid_points: (g + 1).pow(g as u32), random_points: sampled.len() }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FloatRegular {
    pub p: Vec<[f64; 2]>,
    pub d: [f64; 2],
    pub samples: usize,
}

/// Floating search: integer samples first, then complex Gaussian ones,
/// accepting `|D(p)| > 10⁻⁸ · (g·‖Q‖·‖p‖)^g`.
pub fn find_regular_vector_float<T: Real>(web: &QuadricWeb<C<T>>, n_trials: usize, seed: u64) -> Result<FloatRegular> {
    let g = web.g;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = web.basis.iter().map(|q| q.max_abs()).fold(T::zero(), |a, b| a.max(b));
    let half = n_trials.max(2) / 2;
    let mut best = T::zero();
    for t in 0..n_trials.max(2) {
        let p: Vec<C<T>> = if t == 0 {
            vec![C::new(T::one(), T::zero()); g]
        } else if t < half {
            random_ints(&mut rng, g).iter().map(|&k| C::new(T::of(k as f64), T::zero())).collect()
        } else {
            gaussian(&mut rng, g)
        };
        let norm = p.iter().map(|z| cabs(*z)).fold(T::zero(), |a, b| a.max(b));
        let d = d_float(web, &p);
        let rel = cabs(d) / (scale * norm * T::of_usize(g)).powi(g as i32).max(T::min_positive_value());
        best = best.max(rel);
        if rel > T::of(REGULAR_THRESHOLD) {
            return Ok(FloatRegular {
                p: p.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect(),
                d: [d.re.as_f64(), d.im.as_f64()],
                samples: t + 1,
            });
        }
    }
    Err(Error::Inconclusive(format!("|D(p)| relative size at most {:.3e} over {n_trials} samples", best.as_f64())))
}
