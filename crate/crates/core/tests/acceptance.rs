//! End-to-end acceptance run: one `[PASS]`/`[FAIL]` line per criterion.

use std::time::{Duration, Instant};

use betti_core::betti::{evaluate, nearest_rational, rank_scan, torsion_target_solve, NewtonOptions, ScanRegion, SectionSpec, Stencil, DEFAULT_STEP};
use betti_core::census::{census_report, Series};
use betti_core::curve::{curve_data, make_point, random_point, FamilyModel, Layout};
use betti_core::family::Family;
use betti_core::ks::{ks_residue, ks_tensor, max_contracted_rank, vandermonde_witness, Parity};
use betti_core::linalg::{complex_rank, exact_nullspace, Mat, RankPolicy};
use betti_core::pell::pell_solve;
use betti_core::periods::periods;
use betti_core::poly::{parse_sparse, q, qf, qpoly, Poly, QPoly};
use betti_core::quadrature::QuadratureConfig;
use betti_core::webs::{find_regular_vector, has_nondegenerate_member, QuadricWeb, RegularOutcome};
use betti_core::{Rational, C64};
use num_complex::Complex;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(n: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let pass = out.pass && took <= budget;
    println!(
        "[{}] {n:>2} {name}: {} ({:.1} s of {:.0} s)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        budget.as_secs_f64()
    );
    pass
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

/// Klein's j from `q = e^{2πiτ}`: `E₄³/Δ` with `Δ = q∏(1 − qⁿ)²⁴`.
fn j_oracle(tau: C64) -> C64 {
    let qq = (Complex::new(0.0, 2.0 * std::f64::consts::PI) * tau).exp();
    let mut e4 = Complex::new(1.0, 0.0);
    let mut prod = Complex::new(1.0, 0.0);
    let mut qn = Complex::new(1.0, 0.0);
    for n in 1..200u32 {
        qn *= qq;
        let sigma3: f64 = (1..=n).filter(|d| n % d == 0).map(|d| (d as f64).powi(3)).sum();
        e4 += 240.0 * sigma3 * qn;
        prod *= (Complex::new(1.0, 0.0) - qn).powu(24);
    }
    e4.powu(3) / (qq * prod)
}

fn oracle_series(f: &QPoly, terms: usize) -> Vec<Rational> {
    let m = f.degree().unwrap() / 2;
    let mut s: Vec<Rational> = vec![Rational::one()];
    for k in 1..terms {
        let target = if k <= 2 * m { f.coeff(2 * m - k) } else { Rational::zero() };
        let known: Rational = (1..k).map(|i| s[i].clone() * s[k - i].clone()).fold(Rational::zero(), |a, b| a + b);
        s.push((target - known) / q(2));
    }
    s
}

/// Least `n` for which some `Q` of degree `n − m` kills `x^{−1} … x^{−(n−1)}` in `Q√f`.
fn oracle_order(f: &QPoly, n_max: usize) -> Option<usize> {
    let m = f.degree().unwrap() / 2;
    let s = oracle_series(f, 2 * n_max + 2 * m + 4);
    (m.max(2)..=n_max).find(|&n| !exact_nullspace(&Mat::from_fn(n - 1, n - m + 1, |r, i| s[m + i + r + 1].clone())).is_empty())
}

fn lattice_distance(beta: &[f64], n: f64) -> f64 {
    beta.iter().map(|b| (b * n - (b * n).round()).abs() / n).fold(0.0, f64::max)
}

fn main() {
    let cfg = QuadratureConfig::default();
    let policy = RankPolicy::default();
    let mut results = Vec::new();

    results.push(criterion(1, "Riemann relations", secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut sym, mut eig, mut failures) = (0.0f64, f64::INFINITY, 0);
        for g in 1..=3 {
            for k in 0..100 {
                let model = if k % 2 == 0 { FamilyModel::even(g) } else { FamilyModel::odd(g) };
                match random_point(model, Layout::Complex, &mut rng).and_then(|p| periods::<f64>(&p, &cfg)) {
                    Ok(pd) => {
                        sym = sym.max(pd.symmetry_residual());
                        eig = eig.min(pd.min_imag_eigenvalue());
                    }
                    Err(_) => failures += 1,
                }
            }
        }
        Outcome { pass: failures == 0 && sym < 1e-8 && eig > 0.0, detail: format!("max |Z-Zt| {sym:.1e}, min eig Im Z {eig:.3e}, {failures} failures") }
    }));

    results.push(criterion(2, "lemniscatic j-invariant", secs(5), || {
        let odd = make_point(FamilyModel::odd(1), vec![Complex::new(-1.0, 0.0)]).unwrap();
        let even = make_point(FamilyModel::even(1), vec![Complex::new(-1.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0)]).unwrap();
        let err = [odd, even]
            .iter()
            .map(|p| {
                let z = periods::<f64>(p, &cfg).unwrap().z[(0, 0)];
                (j_oracle(z) - 1728.0).norm()
            })
            .fold(0.0, f64::max);
        Outcome { pass: err < 1e-6, detail: format!("max |j - 1728| {err:.1e}") }
    }));

    results.push(criterion(3, "Betti reconstruction", secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut rec, mut real, mut failures) = (0.0f64, 0.0f64, 0);
        for k in 0..100 {
            let g = 1 + k % 3;
            let layout = [Layout::Complex, Layout::Real][k % 2];
            match random_point(FamilyModel::even(g), layout, &mut rng).and_then(|p| evaluate::<f64>(&p, &SectionSpec::InfinityDifference, &cfg)) {
                Ok((_, ev)) => {
                    rec = rec.max(ev.residual_reconstruction);
                    real = real.max(ev.residual_realness);
                }
                Err(_) => failures += 1,
            }
        }
        Outcome { pass: failures == 0 && rec < 1e-8 && real < 1e-8, detail: format!("reconstruction {rec:.1e}, realness {real:.1e}, {failures} failures") }
    }));

    results.push(criterion(4, "even ranks and universal rank values", secs(600), || {
        let mut detail = Vec::new();
        let mut pass = true;
        for g in 1..=2 {
            let model = FamilyModel::even(g);
            let region = ScanRegion { lower: vec![Complex::new(-1.0, -1.0); model.arity()], upper: vec![Complex::new(1.0, 1.0); model.arity()] };
            let rep = rank_scan::<f64>(&Family::universal(model), &region, 50, &SectionSpec::InfinityDifference, 40 + g as u64, DEFAULT_STEP, &cfg, &policy).unwrap();
            let all_even = rep.histogram.keys().all(|r| r % 2 == 0);
            pass &= all_even && rep.max_rank == 2 * g;
            detail.push(format!("g={g}: max {} histogram {:?} ambiguous {} skipped {}", rep.max_rank, rep.histogram, rep.ambiguous, rep.skipped));
        }
        Outcome { pass, detail: detail.join("; ") }
    }));

    results.push(criterion(5, "rank formula consistency", secs(600), || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut agree, mut worst) = (0, 0.0f64);
        for k in 0..20 {
            let g = 1 + k % 2;
            let model = FamilyModel::even(g);
            let p = random_point(model, Layout::Complex, &mut rng).unwrap();
            let st = Stencil::<f64>::compute(&Family::universal(model), &p.params, &SectionSpec::InfinityDifference, DEFAULT_STEP, &cfg).unwrap();
            let Ok(jac) = st.jacobian(&policy) else { continue };
            let best = (0..200)
                .map(|_| {
                    let mu: Vec<C64> = (0..g).map(|_| Complex::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
                    complex_rank(&st.matrix_h(&mu), &policy).map_or(0, |c| c.rank)
                })
                .max()
                .unwrap();
            let nu2: Vec<C64> = (0..g).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let z = &st.center.z;
            let nu1: Vec<C64> = (0..g).map(|j| -st.eval.l[j] - (0..g).map(|i| nu2[i] * z[(i, j)]).sum::<C64>()).collect();
            let nu: Vec<C64> = nu1.iter().chain(&nu2).copied().collect();
            worst = worst.max(st.matrix_h(&nu2).mul(&st.center.omega1).sub(&st.matrix_i(&nu)).max_abs());
            agree += (2 * best == jac.rank) as usize;
        }
        Outcome { pass: agree == 20 && worst < 1e-6, detail: format!("{agree}/20 rank identities, max |H Omega1 - I| {worst:.1e}") }
    }));

    results.push(criterion(6, "Pell certificates", secs(30), || {
        let a = pell_solve(&parse_sparse("x^4-1").unwrap(), 8).unwrap();
        let p3 = qpoly(&[0, -2, 0, 1]);
        let f3 = &(&p3 * &p3) - &qpoly(&[1]);
        let b = pell_solve(&f3, 12).unwrap();
        let exact = |f: &QPoly, s: &betti_core::pell::PellSolution<Rational>| &(&s.p * &s.p) - &(&(f * &s.q) * &s.q) == Poly::constant(s.c.clone());
        let ok_a = a.as_ref().is_some_and(|s| s.order == 2 && exact(&parse_sparse("x^4-1").unwrap(), s));
        let ok_b = b.as_ref().is_some_and(|s| s.order == 3 && exact(&f3, s));
        let mut dist = 0.0f64;
        for (f, n) in [(parse_sparse("x^4-1").unwrap(), 2.0), (f3.clone(), 3.0)] {
            let g = f.degree().unwrap() / 2 - 1;
            let params: Vec<C64> = f.coeffs()[..2 * g + 2].iter().map(|c| Complex::new(num_traits::ToPrimitive::to_f64(c).unwrap(), 0.0)).collect();
            let (_, ev) = evaluate::<f64>(&make_point(FamilyModel::even(g), params).unwrap(), &SectionSpec::InfinityDifference, &cfg).unwrap();
            dist = dist.max(lattice_distance(&ev.beta, n));
        }
        Outcome { pass: ok_a && ok_b && dist < 1e-6, detail: format!("order 2 {ok_a}, order 3 {ok_b}, Betti distance {dist:.1e}") }
    }));

    results.push(criterion(7, "Pell solver completeness", secs(120), || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut agree, mut total, mut found) = (0, 0, 0);
        while total < 50 {
            let g = 1 + total % 2;
            let monic = |rng: &mut ChaCha8Rng, d: usize| {
                let mut c: Vec<Rational> = (0..d).map(|_| qf(rng.gen_range(-6..=6), rng.gen_range(1..=3))).collect();
                c.push(Rational::one());
                Poly::new(c)
            };
            let f = if total % 2 == 0 {
                let p = monic(&mut rng, g + 1);
                &(&p * &p) - &Poly::constant(qf(rng.gen_range(1..=5), rng.gen_range(1..=3)))
            } else {
                monic(&mut rng, 2 * g + 2)
            };
            if !f.is_squarefree() {
                continue;
            }
            total += 1;
            let ours = pell_solve(&f, 8).unwrap().map(|s| s.order);
            found += ours.is_some() as usize;
            agree += (ours == oracle_order(&f, 8)) as usize;
        }
        Outcome { pass: agree == 50, detail: format!("{agree}/50 agree with the linear-system oracle ({found} solvable)") }
    }));

    results.push(criterion(8, "torsion density demo", secs(300), || {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fam = Family::universal(FamilyModel::even(1));
        let mut ok = 0;
        for _ in 0..100 {
            let p = random_point(FamilyModel::even(1), Layout::Real, &mut rng).unwrap();
            let Ok((_, ev)) = evaluate::<f64>(&p, &SectionSpec::InfinityDifference, &cfg) else { continue };
            let target = nearest_rational(&ev.beta, 8);
            if let Ok(sol) = torsion_target_solve::<f64>(&fam, &p.params, &SectionSpec::InfinityDifference, &target, &NewtonOptions::default(), &cfg) {
                ok += (sol.residual < 1e-10) as usize;
            }
        }
        Outcome { pass: ok >= 90, detail: format!("{ok}/100 converged") }
    }));

    results.push(criterion(9, "Kodaira-Spencer structure", secs(120), || {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut pass = true;
        let mut detail = Vec::new();
        for g in 1..=3 {
            let p = random_point(FamilyModel::odd(g), Layout::Complex, &mut rng).unwrap();
            let Ok(t) = ks_tensor::<f64>(&p) else {
                pass = false;
                continue;
            };
            let ch = t.checks().unwrap();
            let odd = ch.odd_annihilation.unwrap_or(0.0);
            let best = max_contracted_rank(&t.symmetric_forms, 20, &[vandermonde_witness(g)], 9, &policy).unwrap();
            let det = Complex::new(ch.det[0], ch.det[1]).norm();
            pass &= ch.ratio_law < 1e-10 && odd < 1e-12 && det > 0.0 && ch.condition < 1e10 && ch.residue_gap < 1e-10 && best.max_rank == g;
            detail.push(format!("g={g} ratio {:.0e} odd {odd:.0e} rank {}", ch.ratio_law, best.max_rank));
        }
        // Independent residue pairs on further random points.
        let mut gap = 0.0f64;
        for k in 0..100 {
            let g = 1 + k % 3;
            let p = random_point(FamilyModel::odd(g), Layout::Complex, &mut rng).unwrap();
            let (i, j) = (rng.gen_range(0..2 * g - 1), rng.gen_range(0..2 * g - 1));
            match ks_residue::<f64>(&p, i, j, Parity::Even) {
                Ok(r) => gap = gap.max((r.series - r.contour).norm() / (1.0 + r.series.norm())),
                Err(_) => pass = false,
            }
        }
        pass &= gap < 1e-10;
        detail.push(format!("residue agreement {gap:.0e}"));
        Outcome { pass, detail: detail.join("; ") }
    }));

    results.push(criterion(10, "quadric webs", secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (mut found, mut done, mut worst) = (0, 0, 0);
        while done < 100 {
            let g = 1 + done % 3;
            let basis: Vec<Mat<Rational>> = (0..g)
                .map(|_| {
                    let mut m = Mat::zeros(g, g);
                    for a in 0..g {
                        for b in a..g {
                            let v = q(rng.gen_range(-4..=4));
                            m[(a, b)] = v.clone();
                            m[(b, a)] = v;
                        }
                    }
                    m
                })
                .collect();
            let Ok(w) = QuadricWeb::new(basis) else { continue };
            if !has_nondegenerate_member(&w, 10, done as u64).found {
                continue;
            }
            done += 1;
            if let RegularOutcome::Regular { samples, .. } = find_regular_vector(&w, 19, done as u64) {
                found += (samples <= 20) as usize;
                worst = worst.max(samples);
            }
        }
        let bad = QuadricWeb::from_monomials(4, &[(0, 0), (0, 1), (1, 1), (2, 3)]).unwrap();
        let certified = matches!(find_regular_vector(&bad, 20, 0), RegularOutcome::IdenticallySingular { .. });
        Outcome { pass: found == 100 && certified, detail: format!("{found}/100 regular (at most {worst} samples), counterexample certified {certified}") }
    }));

    results.push(criterion(11, "monodromy census", secs(1), || match census_report(40, 9) {
        Ok(r) => {
            let ok = r.feasible.len() == 40 && r.feasible.iter().all(|&(s, _, m)| s == Series::C && m == 1);
            Outcome { pass: ok, detail: format!("{} cases, feasible exactly C with m = 1: {ok}", r.cases) }
        }
        Err(e) => Outcome { pass: false, detail: e.to_string() },
    }));

    results.push(criterion(12, "half-integrality over the reals", secs(120), || {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut ok = 0;
        for k in 0..20 {
            let g = 1 + k % 3;
            let p = random_point(FamilyModel::even(g), Layout::AllReal, &mut rng).unwrap();
            assert!(curve_data::<f64>(&p).unwrap().all_real_branch_points());
            let (pd, ev) = evaluate::<f64>(&p, &SectionSpec::InfinityDifference, &cfg).unwrap();
            let near = ev.beta.iter().filter(|b| lattice_distance(&[**b], 2.0) < 1e-6).count();
            ok += (pd.basis.conjugation_adapted && near >= g) as usize;
        }
        Outcome { pass: ok == 20, detail: format!("{ok}/20 points with g coordinates in half-integers") }
    }));

    let passed = results.iter().filter(|&&r| r).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
