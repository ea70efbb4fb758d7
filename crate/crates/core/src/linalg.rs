//! Small dense matrices.  Sizes here never exceed a few dozen, so everything is
//! textbook: partial-pivot LU, one-sided Jacobi SVD, cyclic Jacobi for
//! symmetric eigenvalues, and fraction-exact Gaussian elimination.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Coeff;
use crate::scalar::{cabs, Real, C};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat<K> {
    rows: usize,
    cols: usize,
    data: Vec<K>,
}

pub type CMat<T> = Mat<C<T>>;

impl<K: Clone + Zero> Mat<K> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![K::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> K) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<K>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn row_vector(v: &[K]) -> Self {
        Mat { rows: 1, cols: v.len(), data: v.to_vec() }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[K] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_vec(&self) -> Vec<Vec<K>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn data(&self) -> &[K] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map<L: Clone + Zero>(&self, f: impl Fn(&K) -> L) -> Mat<L> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    /// Rows `r0..r1` as a new matrix.
    pub fn row_block(&self, r0: usize, r1: usize) -> Self {
        Mat::from_fn(r1 - r0, self.cols, |i, j| self[(r0 + i, j)].clone())
    }

    /// `[self | other]`.
    pub fn hcat(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        Mat::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                other[(i, j - self.cols)].clone()
            }
        })
    }

    /// `[self; other]`.
    pub fn vcat(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Mat { rows: self.rows + other.rows, cols: self.cols, data }
    }
}

impl<K: Clone + Zero + One> Mat<K> {
    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { K::one() } else { K::zero() })
    }
}

impl<K> Index<(usize, usize)> for Mat<K> {
    type Output = K;
    fn index(&self, (i, j): (usize, usize)) -> &K {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<K> IndexMut<(usize, usize)> for Mat<K> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut K {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<K: Coeff> Mat<K> {
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in product");
        Mat::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(K::zero(), |acc, k| acc + self[(i, k)].clone() * rhs[(k, j)].clone())
        })
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() + b.clone()).collect() }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() - b.clone()).collect() }
    }

    pub fn scale(&self, s: &K) -> Self {
        self.map(|a| a.clone() * s.clone())
    }
}

impl<T: Real> Mat<C<T>> {
    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn re(&self) -> Mat<T> {
        self.map(|z| z.re)
    }

    pub fn im(&self) -> Mat<T> {
        self.map(|z| z.im)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(cabs(*z)))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.data.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
    }

    /// Real `2r × 2c` form `[[Re, Im], [−Im, Re]]` acting on row vectors; complex rank doubles.
    pub fn realify(&self) -> Mat<T> {
        let (r, c) = (self.rows, self.cols);
        Mat::from_fn(2 * r, 2 * c, |i, j| {
            let z = self[(i % r, j % c)];
            match (i < r, j < c) {
                (true, true) | (false, false) => z.re,
                (true, false) => z.im,
                (false, true) => -z.im,
            }
        })
    }

    pub fn to_c64(&self) -> CMat<f64> {
        self.map(|z| Complex::new(z.re.as_f64(), z.im.as_f64()))
    }
}

impl<T: Real> Mat<T> {
    pub fn max_abs_real(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.abs()))
    }

    pub fn complexify(&self) -> CMat<T> {
        self.map(|x| Complex::new(*x, T::zero()))
    }
}

/// LU factorisation with partial pivoting of a square complex matrix.
pub struct Lu<T: Real> {
    lu: CMat<T>,
    perm: Vec<usize>,
    sign: i32,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &CMat<T>) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1;
        let scale = a.max_abs();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, cabs(lu[(i, k)])))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= scale * T::unit_roundoff() * T::of_usize(n) || pmax.is_zero() {
                return Err(Error::IllConditioned { cond: f64::INFINITY });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - factor * v;
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn det(&self) -> C<T> {
        let n = self.lu.rows;
        let d = (0..n).fold(C::one(), |acc, i| acc * self.lu[(i, i)]);
        if self.sign < 0 { -d } else { d }
    }

    /// Solves `A X = B`.
    pub fn solve(&self, b: &CMat<T>) -> CMat<T> {
        let n = self.lu.rows;
        assert_eq!(b.rows, n);
        let mut x = Mat::from_fn(n, b.cols, |i, j| b[(self.perm[i], j)]);
        for col in 0..b.cols {
            for i in 0..n {
                let mut s = x[(i, col)];
                for k in 0..i {
                    s = s - self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, col)];
                for k in i + 1..n {
                    s = s - self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / self.lu[(i, i)];
            }
        }
        x
    }

    pub fn inverse(&self) -> CMat<T> {
        self.solve(&Mat::identity(self.lu.rows))
    }
}

pub fn inverse<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    Ok(Lu::new(a)?.inverse())
}

pub fn det<T: Real>(a: &CMat<T>) -> C<T> {
    Lu::new(a).map_or(C::zero(), |lu| lu.det())
}

/// Solves the row system `x · A = b` for a row vector `x`.
pub fn solve_row<T: Real>(a: &CMat<T>, b: &[C<T>]) -> Result<Vec<C<T>>> {
    let lu = Lu::new(&a.transpose())?;
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = lu.solve(&rhs);
    Ok((0..b.len()).map(|i| x[(i, 0)]).collect())
}

/// Singular values (descending) by one-sided Jacobi rotations.
pub fn singular_values<T: Real>(a: &Mat<T>) -> Vec<T> {
    // Work on the taller orientation so columns are the short side.
    let m = if a.rows >= a.cols { a.clone() } else { a.transpose() };
    let (rows, cols) = (m.rows, m.cols);
    if cols == 0 {
        return Vec::new();
    }
    let mut u = m;
    let tol = T::unit_roundoff() * T::of(10.0);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..rows {
                    let (up, uq) = (u[(i, p)], u[(i, q)]);
                    alpha = alpha + up * up;
                    beta = beta + uq * uq;
                    gamma = gamma + up * uq;
                }
                if gamma.is_zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                for i in 0..rows {
                    let (up, uq) = (u[(i, p)], u[(i, q)]);
                    u[(i, p)] = cs * up - sn * uq;
                    u[(i, q)] = sn * up + cs * uq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = (0..cols)
        .map(|j| (0..rows).fold(T::zero(), |s, i| s + u[(i, j)] * u[(i, j)]).sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Eigenvalues (ascending) of a real symmetric matrix by cyclic Jacobi.
pub fn symmetric_eigenvalues<T: Real>(a: &Mat<T>) -> Vec<T> {
    let n = a.rows;
    assert_eq!(n, a.cols);
    let mut m = a.clone();
    for _sweep in 0..100 {
        let off = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |s, (i, j)| s + m[(i, j)] * m[(i, j)]);
        if off <= T::unit_roundoff() * T::unit_roundoff() * m.max_abs_real().powi(2) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].is_zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::of(2.0) * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = cs * mkp - sn * mkq;
                    m[(k, q)] = sn * mkp + cs * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = cs * mpk - sn * mqk;
                    m[(q, k)] = sn * mpk + cs * mqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// 2-norm condition number of a complex matrix (via its real form).
pub fn condition_number<T: Real>(a: &CMat<T>) -> T {
    let sv = singular_values(&a.realify());
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        _ => T::infinity(),
    }
}

/// Thresholds for deciding a numerical rank.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankPolicy {
    /// Relative cut `σ > rel_tol·σ₁`.
    pub rel_tol: f64,
    /// Absolute floor below which a singular value is zero regardless of σ₁.
    pub abs_floor: f64,
    /// Required ratio `σ_r / σ_{r+1}` at the cut.
    pub min_gap: f64,
}

impl Default for RankPolicy {
    fn default() -> Self {
        RankPolicy { rel_tol: 1e-6, abs_floor: 1e-7, min_gap: 1e3 }
    }
}

/// Numerical rank with the singular values it was read from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankCertificate {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// `σ_r / σ_{r+1}`, infinite when the cut is at either end.
    pub gap: f64,
}

/// Reads a numerical rank off descending singular values, insisting on a clear gap.
///
/// A zero rank is certified when `σ₁` sits at least `√min_gap` below the
/// absolute floor.  On failure both candidate ranks are reported: the one from
/// the threshold and the one at the largest consecutive ratio.
pub fn certify_rank(sv: &[f64], policy: &RankPolicy) -> Result<RankCertificate> {
    let s1 = sv.first().copied().unwrap_or(0.0);
    let cut = (policy.rel_tol * s1).max(policy.abs_floor);
    let rank = sv.iter().take_while(|&&s| s > cut).count();
    let gap = if rank == 0 {
        if s1 > 0.0 { policy.abs_floor / s1 } else { f64::INFINITY }
    } else if rank == sv.len() {
        f64::INFINITY
    } else {
        sv[rank - 1] / sv[rank].max(f64::MIN_POSITIVE)
    };
    let needed = if rank == 0 { policy.min_gap.sqrt() } else { policy.min_gap };
    if gap > needed {
        return Ok(RankCertificate { rank, singular_values: sv.to_vec(), gap });
    }
    let widest = (1..sv.len())
        .map(|k| (k, sv[k - 1] / sv[k].max(f64::MIN_POSITIVE)))
        .fold((rank, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0;
    let (low, high) = match widest.cmp(&rank) {
        std::cmp::Ordering::Equal => (rank, (rank + 1).min(sv.len())),
        std::cmp::Ordering::Less => (widest, rank),
        std::cmp::Ordering::Greater => (rank, widest),
    };
    Err(Error::RankAmbiguous { low, high })
}

/// Rank of a complex matrix as a complex-linear map.
pub fn complex_rank<T: Real>(a: &CMat<T>, policy: &RankPolicy) -> Result<RankCertificate> {
    let sv: Vec<f64> = singular_values(&a.realify()).into_iter().map(Real::as_f64).collect();
    // The real form duplicates every singular value.
    let halved: Vec<f64> = sv.iter().step_by(2).copied().collect();
    certify_rank(&halved, policy)
}

pub fn real_rank<T: Real>(a: &Mat<T>, policy: &RankPolicy) -> Result<RankCertificate> {
    let sv: Vec<f64> = singular_values(a).into_iter().map(Real::as_f64).collect();
    certify_rank(&sv, policy)
}

/// Row echelon data from exact Gaussian elimination.
pub struct Echelon<K> {
    pub reduced: Mat<K>,
    pub pivots: Vec<usize>,
}

/// Reduced row echelon form over an exact field.
pub fn rref<K: Coeff>(a: &Mat<K>) -> Echelon<K> {
    let mut m = a.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else { continue };
        if p != r {
            for j in 0..m.cols {
                m.data.swap(p * m.cols + j, r * m.cols + j);
            }
        }
        let inv = K::one() / m[(r, c)].clone();
        for j in 0..m.cols {
            m[(r, j)] = m[(r, j)].clone() * inv.clone();
        }
        for i in 0..m.rows {
            if i != r && !m[(i, c)].is_zero() {
                let f = m[(i, c)].clone();
                for j in 0..m.cols {
                    let v = m[(r, j)].clone();
                    m[(i, j)] = m[(i, j)].clone() - f.clone() * v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    Echelon { reduced: m, pivots }
}

pub fn exact_rank<K: Coeff>(a: &Mat<K>) -> usize {
    rref(a).pivots.len()
}

/// Basis of the right null space `{v : A v = 0}` over an exact field.
pub fn exact_nullspace<K: Coeff>(a: &Mat<K>) -> Vec<Vec<K>> {
    let e = rref(a);
    let free: Vec<usize> = (0..a.cols).filter(|c| !e.pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![K::zero(); a.cols];
            v[f] = K::one();
            for (row, &pc) in e.pivots.iter().enumerate() {
                v[pc] = -e.reduced[(row, f)].clone();
            }
            v
        })
        .collect()
}

/// Determinant over an exact field by elimination.
pub fn exact_det<K: Coeff>(a: &Mat<K>) -> K {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut det = K::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else { return K::zero() };
        if p != c {
            for j in 0..n {
                m.data.swap(p * n + j, c * n + j);
            }
            det = -det;
        }
        let piv = m[(c, c)].clone();
        det = det * piv.clone();
        for i in c + 1..n {
            if m[(i, c)].is_zero() {
                continue;
            }
            let f = m[(i, c)].clone() / piv.clone();
            for j in c..n {
                let v = m[(c, j)].clone();
                m[(i, j)] = m[(i, j)].clone() - f.clone() * v;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{q, qf};
    use num_rational::BigRational;

    #[test]
    fn lu_inverse_roundtrip() {
        let a: CMat<f64> = Mat::from_rows(vec![
            vec![Complex::new(2.0, 1.0), Complex::new(0.5, 0.0), Complex::new(0.0, -1.0)],
            vec![Complex::new(1.0, 0.0), Complex::new(-3.0, 2.0), Complex::new(1.0, 1.0)],
            vec![Complex::new(0.0, 2.0), Complex::new(1.0, 0.0), Complex::new(4.0, 0.0)],
        ]);
        let inv = inverse(&a).unwrap();
        let id = a.mul(&inv);
        assert!(id.sub(&Mat::identity(3)).max_abs() < 1e-14);
        let x = solve_row(&a, &[Complex::new(1.0, 0.0), Complex::new(0.0, 1.0), Complex::new(2.0, -1.0)]).unwrap();
        let back = Mat::row_vector(&x).mul(&a);
        assert!((back[(0, 1)] - Complex::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn jacobi_svd_matches_known_values() {
        // diag(3, 2) rotated on both sides has singular values 3, 2.
        let (c, s) = (0.6, 0.8);
        let a = Mat::from_rows(vec![vec![3.0 * c, -2.0 * s], vec![3.0 * s, 2.0 * c], vec![0.0, 0.0]]);
        let sv = singular_values(&a);
        assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14);
        let rank1 = Mat::from_rows(vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]);
        let cert = real_rank(&rank1, &RankPolicy::default()).unwrap();
        assert_eq!(cert.rank, 1);
    }

    #[test]
    fn rank_needs_a_gap() {
        let p = RankPolicy::default();
        assert_eq!(certify_rank(&[1.0, 1e-12], &p).unwrap().rank, 1);
        assert_eq!(certify_rank(&[0.0, 0.0], &p).unwrap().rank, 0);
        assert_eq!(certify_rank(&[1e-11, 1e-12], &p).unwrap().rank, 0);
        assert_eq!(certify_rank(&[1.0, 1e-5], &p).unwrap().rank, 2);
        assert!(matches!(certify_rank(&[1.0, 1e-5, 1e-7], &p), Err(Error::RankAmbiguous { low: 1, high: 2 })));
    }

    #[test]
    fn symmetric_eigen() {
        let a = Mat::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        let ev = symmetric_eigenvalues(&a);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn exact_elimination() {
        let a: Mat<BigRational> = Mat::from_rows(vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)], vec![q(1), q(0), qf(1, 2)]]);
        assert_eq!(exact_rank(&a), 2);
        let ns = exact_nullspace(&a);
        assert_eq!(ns.len(), 1);
        let v = Mat::from_fn(3, 1, |i, _| ns[0][i].clone());
        assert!(a.mul(&v).data().iter().all(Zero::is_zero));
        let b: Mat<BigRational> = Mat::from_rows(vec![vec![q(2), q(1)], vec![q(7), q(4)]]);
        assert_eq!(exact_det(&b), q(1));
    }

    #[test]
    fn realify_doubles_rank() {
        let a: CMat<f64> = Mat::from_rows(vec![vec![Complex::new(1.0, 1.0), Complex::new(2.0, 0.0)], vec![Complex::new(2.0, 2.0), Complex::new(4.0, 0.0)]]);
        assert_eq!(complex_rank(&a, &RankPolicy::default()).unwrap().rank, 1);
    }
}
