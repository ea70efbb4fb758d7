use betti_core::curve::{make_point, random_point, FamilyModel, Layout};
use betti_core::homology::{is_symplectic, standard_j};
use betti_core::linalg::{inverse, Mat};
use betti_core::periods::{continue_periods, j_from_periods, monodromy, periods, symplectic_equivalence};
use betti_core::quadrature::QuadratureConfig;
use betti_core::{Dd, C64};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn re(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| Complex::new(x, 0.0)).collect()
}

/// Legendre-form j: y² = x(x−1)(x−λ).
fn j_legendre(l: C64) -> C64 {
    let one = Complex::new(1.0, 0.0);
    256.0 * (l * l - l + one).powu(3) / (l * l * (l - one) * (l - one))
}

#[test]
fn j_matches_legendre_formula() {
    let cfg = QuadratureConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let l = Complex::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let Ok(p) = make_point(FamilyModel::odd(1), vec![l]) else { continue };
        if (l.norm() < 0.2) || ((l - 1.0).norm() < 0.2) {
            continue;
        }
        let pd = periods::<f64>(&p, &cfg).unwrap();
        let j = j_from_periods(&pd).unwrap();
        let want = j_legendre(l);
        assert!((j - want).norm() < 1e-7 * (1.0 + want.norm()), "λ={l}: {j} vs {want}");
    }
}

#[test]
fn riemann_relations_on_random_points() {
    let cfg = QuadratureConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for g in 1..=3 {
        for i in 0..12 {
            let model = if i % 2 == 0 { FamilyModel::even(g) } else { FamilyModel::odd(g) };
            let layout = [Layout::Complex, Layout::Real, Layout::AllReal][i % 3];
            let p = random_point(model, layout, &mut rng).unwrap();
            let pd = periods::<f64>(&p, &cfg).unwrap();
            assert!(pd.symmetry_residual() < 1e-8, "g={g} {p:?}: {}", pd.symmetry_residual());
            assert!(pd.min_imag_eigenvalue() > 0.0, "g={g} {p:?}");
        }
    }
}

#[test]
fn doubling_nodes_changes_periods_below_1e10() {
    let cfg = QuadratureConfig::default();
    let fine = QuadratureConfig { nodes: 2 * cfg.nodes, max_nodes: 2 * cfg.max_nodes, ..cfg.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for g in 1..=3 {
        let p = random_point(FamilyModel::even(g), Layout::Complex, &mut rng).unwrap();
        let a = periods::<f64>(&p, &cfg).unwrap().omega();
        let b = periods::<f64>(&p, &fine).unwrap().omega();
        let rel = a.sub(&b).max_abs() / a.max_abs();
        assert!(rel < 1e-10, "g={g}: {rel:e}");
    }
}

#[test]
fn extended_precision_agrees_and_tightens() {
    let p = make_point(FamilyModel::odd(2), re(&[2.0, 3.0, 5.0])).unwrap();
    let d = periods::<f64>(&p, &QuadratureConfig::default()).unwrap();
    let q = periods::<Dd>(&p, &QuadratureConfig::extended()).unwrap();
    let diff = d.omega().sub(&q.omega().to_c64()).max_abs();
    assert!(diff < 1e-12, "{diff:e}");
    assert!(q.symmetry_residual() < 1e-25, "{:e}", q.symmetry_residual());
}

#[test]
fn small_step_continuation_is_lipschitz() {
    let cfg = QuadratureConfig::default();
    let p = make_point(FamilyModel::odd(2), re(&[2.0, 3.0, 5.0])).unwrap();
    let pd = periods::<f64>(&p, &cfg).unwrap();
    for h in [1e-4, 1e-3] {
        let q = p.with_params(re(&[2.0 + h, 3.0, 5.0])).unwrap();
        let cont = continue_periods(&pd, &q, &cfg).unwrap();
        let ratio = cont.omega().sub(&pd.omega()).max_abs() / h;
        assert!(ratio < 10.0, "h={h}: ‖ΔΩ‖/h = {ratio}");
    }
}

#[test]
fn loop_around_a_collision_gives_a_symplectic_transvection() {
    let cfg = QuadratureConfig::default();
    // s circles the branch point 1 once; the vanishing cycle encircles {s, 1}.
    let start = make_point(FamilyModel::odd(1), vec![Complex::new(1.3, 0.0)]).unwrap();
    let pd = periods::<f64>(&start, &cfg).unwrap();
    let ring: Vec<_> = (1..16)
        .map(|k| {
            let s = Complex::new(1.0, 0.0) + Complex::from_polar(0.3, 2.0 * std::f64::consts::PI * k as f64 / 16.0);
            make_point(FamilyModel::odd(1), vec![s]).unwrap()
        })
        .collect();
    let (m, offset) = monodromy(&pd, &ring, &cfg).unwrap();
    assert!(offset < 1e-8, "{offset:e}");
    assert!(is_symplectic(&m));
    let id = Mat::from_fn(2, 2, |i, j| i64::from(i == j));
    assert_ne!(m, id);
    // A full twist of two branch points acts as the square of a Dehn twist:
    // M − I has rank one and even entries.
    let d = Mat::from_fn(2, 2, |i, j| m[(i, j)] - id[(i, j)]);
    assert_eq!(d[(0, 0)] * d[(1, 1)] - d[(0, 1)] * d[(1, 0)], 0);
    assert!(d.data().iter().all(|x| x % 2 == 0));
}

#[test]
fn periods_of_an_isomorphic_model_differ_by_sp2g_z() {
    // x ↦ 1 − x maps y² = x(x−1)∏(x−s_i) to the same family with
    // parameters 1 − s_i and y ↦ i·y; the pulled-back differentials are
    // x̃^k dx̃/ỹ = Σ_j A_{jk} x^j dx/y with A_{jk} = i·C(k,j)·(−1)^j.
    let cfg = QuadratureConfig::default();
    let s = [Complex::new(2.0, 0.5), Complex::new(-1.0, 1.0), Complex::new(0.4, -1.2)];
    let p = make_point(FamilyModel::odd(2), s.to_vec()).unwrap();
    let pt = make_point(FamilyModel::odd(2), s.iter().map(|z| 1.0 - z).collect()).unwrap();
    let a = periods::<f64>(&p, &cfg).unwrap();
    let b = periods::<f64>(&pt, &cfg).unwrap();
    let g = 2;
    let binom = |n: usize, k: usize| -> f64 { (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
    let amat = Mat::from_fn(g, g, |j, k| if j <= k { Complex::new(0.0, binom(k, j) * if j % 2 == 0 { 1.0 } else { -1.0 }) } else { Complex::new(0.0, 0.0) });
    let pulled = b.omega().mul(&inverse(&amat).unwrap());
    let (m, offset) = symplectic_equivalence(&pulled, &a.omega()).unwrap();
    assert!(offset < 1e-8, "{offset:e}");
    // The map is biholomorphic, so it preserves intersections.
    assert!(is_symplectic(&m), "{m:?}");
    let _ = standard_j(g);
}
