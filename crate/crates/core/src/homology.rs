//! Homology bases built from branch-point combinatorics.
//!
//! Branch points are sorted by `(Re, Im)` and joined into an x-monotone chain.
//! Cycle `γ_k` runs along chain edge `k` on the `+` sheet and back on the `−`
//! sheet; only consecutive cycles meet, at their shared vertex, so the raw
//! intersection matrix is tridiagonal.  An integral congruence then brings it
//! to the standard form `J = [[0, I], [−I, 0]]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{cabs, csqrt, to_c64, Real, C};
use crate::C64;

/// One pass along a chain edge, between sorted branch points `from` and `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pass {
    pub from: usize,
    pub to: usize,
    /// `+1` or `−1`: which determination of `y` is used along the edge.
    pub sheet: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub passes: Vec<Pass>,
}

impl Cycle {
    fn around_edge(k: usize) -> Cycle {
        Cycle {
            passes: vec![Pass { from: k, to: k + 1, sheet: 1 }, Pass { from: k + 1, to: k, sheet: -1 }],
        }
    }

    /// The chain edge this cycle encircles.
    pub fn edge(&self) -> usize {
        self.passes[0].from.min(self.passes[0].to)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleBasis {
    /// `order[k]` is the index (in the curve's branch-point list) of the k-th
    /// chain vertex.
    pub order: Vec<usize>,
    /// Chain vertices in double precision, for diagnostics and exports.
    pub vertices: Vec<C64>,
    pub cycles: Vec<Cycle>,
    pub intersection_matrix: Mat<i64>,
    /// Rows express the symplectic basis `(a₁…a_g, b₁…b_g)` in the raw cycles.
    pub transform_to_symplectic: Mat<i64>,
    /// Whether `a`-cycles are the conjugation-invariant ones (all roots real).
    pub conjugation_adapted: bool,
}

/// Sign of the square root of `z` continued from the direction `reference`.
///
/// For `|arg(z/reference)| < π` this is analytic in `z`, which makes a product
/// of such factors continuous along any straight segment that keeps each
/// factor's argument within a half-turn of its reference direction.
pub fn sqrt_from<T: Real>(z: C<T>, reference: C<T>) -> C<T> {
    csqrt(reference) * csqrt(z / reference)
}

/// Unit direction of `z`, or `1` for `z = 0`.
pub fn unit<T: Real>(z: C<T>) -> C<T> {
    let r = cabs(z);
    if r.is_zero() {
        C::new(T::one(), T::zero())
    } else {
        z / r
    }
}

/// Square root of `∏_{i ∉ skip} (x − e_i)` continued along a segment whose
/// midpoint is `mid`.
pub fn partial_root<T: Real>(x: C<T>, mid: C<T>, points: &[C<T>], skip: &[usize]) -> C<T> {
    let mut acc = C::new(T::one(), T::zero());
    for (i, e) in points.iter().enumerate() {
        if skip.contains(&i) {
            continue;
        }
        acc = acc * sqrt_from(x - *e, unit(mid - *e));
    }
    acc
}

/// Sorted chain order of the branch points.
pub fn chain_order<T: Real>(points: &[C<T>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (points[i], points[j]);
        a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap())
    });
    order
}

/// Local intersection number of cycles around chain edges `k` and `k+1`.
///
/// Near the shared vertex `e`, with local parameter `t² = x − e`, cycle `k`
/// enters along `y₊⁽ᵏ⁾` and leaves along `−y₊⁽ᵏ⁾`, while cycle `k+1` leaves
/// along `y₊⁽ᵏ⁺¹⁾`.  The sign of the oriented angle between the two tangent
/// lines is the intersection number.
fn adjacent_intersection<T: Real>(sorted: &[C<T>], k: usize) -> i64 {
    let (a, e, b) = (sorted[k], sorted[k + 1], sorted[k + 2]);
    let i = C::new(T::zero(), T::one());
    let half = T::of(0.5);
    // y₊ direction at τ = 1 on edge k and at τ = −1 on edge k+1.
    let d1 = (e - a) * half;
    let r1 = partial_root(e, (a + e) * half, sorted, &[k, k + 1]);
    let d2 = (b - e) * half;
    let r2 = partial_root(e, (e + b) * half, sorted, &[k + 1, k + 2]);
    let incoming = i * d1 * r1;
    let outgoing = i * d2 * r2;
    let cross = (-incoming).conj() * outgoing;
    if cross.im > T::zero() {
        1
    } else {
        -1
    }
}

fn pairing(k: &Mat<i64>, u: &[i64], v: &[i64]) -> i64 {
    let n = u.len();
    let mut s = 0;
    for a in 0..n {
        if u[a] == 0 {
            continue;
        }
        for b in 0..n {
            s += u[a] * k[(a, b)] * v[b];
        }
    }
    s
}

/// Integral congruence taking a unimodular alternating matrix to `J`.
///
/// Returns `T` with `T·K·Tᵀ = J`, rows ordered `(e₁…e_g, f₁…f_g)`.
pub fn symplectic_reduction(k: &Mat<i64>) -> Result<Mat<i64>> {
    let n = k.nrows();
    if n % 2 != 0 || k.ncols() != n {
        return Err(Error::BasisDegeneracy("intersection matrix has odd size".into()));
    }
    for a in 0..n {
        for b in 0..n {
            if k[(a, b)] != -k[(b, a)] {
                return Err(Error::BasisDegeneracy("intersection matrix is not alternating".into()));
            }
        }
    }
    let mut pool: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    let mut es = Vec::new();
    let mut fs = Vec::new();
    while !pool.is_empty() {
        let e = pool.remove(0);
        // Euclid on the pairings ⟨e, w⟩ until a single survivor remains.
        loop {
            let nz: Vec<usize> = (0..pool.len()).filter(|&i| pairing(k, &e, &pool[i]) != 0).collect();
            if nz.is_empty() {
                return Err(Error::BasisDegeneracy("intersection form is degenerate".into()));
            }
            if nz.len() == 1 {
                break;
            }
            let pivot = *nz.iter().min_by_key(|&&i| pairing(k, &e, &pool[i]).abs()).unwrap();
            let pp = pairing(k, &e, &pool[pivot]);
            for &i in &nz {
                if i == pivot {
                    continue;
                }
                let q = pairing(k, &e, &pool[i]).div_euclid(pp);
                let piv = pool[pivot].clone();
                for (x, y) in pool[i].iter_mut().zip(piv) {
                    *x -= q * y;
                }
            }
        }
        let idx = (0..pool.len()).find(|&i| pairing(k, &e, &pool[i]) != 0).unwrap();
        let mut f = pool.remove(idx);
        let p = pairing(k, &e, &f);
        if p.abs() != 1 {
            return Err(Error::BasisDegeneracy(format!("intersection form is not unimodular (pairing {p})")));
        }
        if p < 0 {
            f.iter_mut().for_each(|x| *x = -*x);
        }
        for v in pool.iter_mut() {
            let (ve, vf) = (pairing(k, v, &e), pairing(k, v, &f));
            for j in 0..n {
                v[j] += -vf * e[j] + ve * f[j];
            }
        }
        es.push(e);
        fs.push(f);
    }
    es.extend(fs);
    Ok(Mat::from_rows(es))
}

pub fn standard_j(g: usize) -> Mat<i64> {
    Mat::from_fn(2 * g, 2 * g, |i, j| {
        if j == i + g {
            1
        } else if i == j + g {
            -1
        } else {
            0
        }
    })
}

pub fn int_mul(a: &Mat<i64>, b: &Mat<i64>) -> Mat<i64> {
    Mat::from_fn(a.nrows(), b.ncols(), |i, j| (0..a.ncols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
}

pub fn is_symplectic(m: &Mat<i64>) -> bool {
    let g = m.nrows() / 2;
    int_mul(&int_mul(m, &standard_j(g)), &m.transpose()) == standard_j(g)
}

/// Symplectic basis with `a`-cycles on the even chain edges (edges 1, 3, …
/// counting from zero) and `b`-cycles spanned by the remaining edges.
fn conjugation_adapted(k: &Mat<i64>, g: usize) -> Option<Mat<i64>> {
    let n = 2 * g;
    let a_edges: Vec<usize> = (0..g).map(|i| 2 * i + 1).collect();
    let b_edges: Vec<usize> = (0..g).map(|i| 2 * i).collect();
    // P[i][j] = ⟨γ_{a_i}, γ_{b_j}⟩ is bidiagonal with unit entries.
    let p = Mat::from_fn(g, g, |i, j| k[(a_edges[i], b_edges[j])]);
    let pinv = unimodular_inverse(&p)?;
    // b_i = Σ_j X[i][j] γ_{b_j} with P·Xᵀ = I.
    let x = pinv.transpose();
    let mut rows = Vec::with_capacity(n);
    for &e in &a_edges {
        rows.push((0..n).map(|c| i64::from(c == e)).collect::<Vec<_>>());
    }
    for i in 0..g {
        let mut v = vec![0i64; n];
        for j in 0..g {
            v[b_edges[j]] += x[(i, j)];
        }
        rows.push(v);
    }
    let t = Mat::from_rows(rows);
    (int_mul(&int_mul(&t, k), &t.transpose()) == standard_j(g)).then_some(t)
}

/// Inverse of an integer matrix with determinant ±1, by exact elimination.
pub fn unimodular_inverse(m: &Mat<i64>) -> Option<Mat<i64>> {
    use num_rational::Ratio;
    let n = m.nrows();
    let a: Mat<Ratio<i64>> = m.map(|x| Ratio::from_integer(*x));
    let aug = a.hcat(&Mat::identity(n));
    let ech = crate::linalg::rref(&aug);
    if ech.pivots.len() < n || ech.pivots[n - 1] != n - 1 {
        return None;
    }
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = &ech.reduced[(i, n + j)];
            if !v.is_integer() {
                return None;
            }
            out[(i, j)] = v.to_integer();
        }
    }
    Some(out)
}

/// Chain-cycle basis of `H₁` for the given branch points.
pub fn build_cycle_basis<T: Real>(branch_points: &[C<T>], genus: usize) -> Result<CycleBasis> {
    let needed = 2 * genus + 1;
    if branch_points.len() < needed {
        return Err(Error::BasisDegeneracy(format!("{} branch points for genus {genus}", branch_points.len())));
    }
    let order = chain_order(branch_points);
    let sorted: Vec<C<T>> = order.iter().map(|&i| branch_points[i]).collect();
    let n = 2 * genus;
    let cycles: Vec<Cycle> = (0..n).map(Cycle::around_edge).collect();
    let mut k = Mat::zeros(n, n);
    for e in 0..n - 1 {
        let s = adjacent_intersection(&sorted, e);
        k[(e, e + 1)] = s;
        k[(e + 1, e)] = -s;
    }
    let all_real = sorted.iter().all(|z| z.im.is_zero());
    let adapted = if all_real { conjugation_adapted(&k, genus) } else { None };
    let conjugation_adapted = adapted.is_some();
    let transform = match adapted {
        Some(t) => t,
        None => symplectic_reduction(&k)?,
    };
    Ok(CycleBasis {
        order,
        vertices: sorted.iter().map(|z| to_c64(*z)).collect(),
        cycles,
        intersection_matrix: k,
        transform_to_symplectic: transform,
        conjugation_adapted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn pts(v: &[(f64, f64)]) -> Vec<C64> {
        v.iter().map(|&(a, b)| Complex::new(a, b)).collect()
    }

    #[test]
    fn genus_one_pair() {
        let b = build_cycle_basis(&pts(&[(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]), 1).unwrap();
        let k = &b.intersection_matrix;
        assert_eq!(k[(0, 1)].abs(), 1);
        let t = &b.transform_to_symplectic;
        assert_eq!(int_mul(&int_mul(t, k), &t.transpose()), standard_j(1));
    }

    #[test]
    fn reduction_of_random_unimodular_forms() {
        // K = A J Aᵀ for unimodular A has to reduce back to J.
        let a = Mat::from_rows(vec![
            vec![1, 2, 0, -1],
            vec![0, 1, 3, 0],
            vec![0, 0, 1, 4],
            vec![0, 0, 0, 1],
        ]);
        let k = int_mul(&int_mul(&a, &standard_j(2)), &a.transpose());
        let t = symplectic_reduction(&k).unwrap();
        assert_eq!(int_mul(&int_mul(&t, &k), &t.transpose()), standard_j(2));
    }

    #[test]
    fn degenerate_form_is_reported() {
        let k = Mat::from_rows(vec![vec![0, 2], vec![-2, 0]]);
        assert!(matches!(symplectic_reduction(&k), Err(Error::BasisDegeneracy(_))));
    }

    #[test]
    fn adapted_basis_for_real_roots() {
        let b = build_cycle_basis(&pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (5.0, 0.0), (7.0, 0.0)]), 2).unwrap();
        assert!(b.conjugation_adapted);
        let t = &b.transform_to_symplectic;
        assert_eq!(int_mul(&int_mul(t, &b.intersection_matrix), &t.transpose()), standard_j(2));
        let c = build_cycle_basis(&pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (3.0, -1.0), (5.0, 0.0)]), 2).unwrap();
        assert!(!c.conjugation_adapted);
    }
}
