//! Quick invariant suite run by `betti-lab verify`: one small instance per
//! module, each reported as a pass/fail line.

use betti_core::betti::{distance_to_lattice, evaluate, nearest_rational, torsion_target_solve, NewtonOptions, SectionSpec, Stencil};
use betti_core::census::{census_report, Series};
use betti_core::curve::{curve_data, make_point, random_point, FamilyModel, Layout};
use betti_core::family::Family;
use betti_core::ks::{ks_tensor, max_contracted_rank, vandermonde_witness};
use betti_core::linalg::RankPolicy;
use betti_core::pell::{pell_family, pell_solve};
use betti_core::periods::{j_from_periods, periods};
use betti_core::poly::{parse_sparse, qpoly, q};
use betti_core::quadrature::QuadratureConfig;
use betti_core::webs::{find_regular_vector, QuadricWeb, RegularOutcome};
use betti_core::C64;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String), betti_core::Error>) -> Check {
    match f() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check { name, pass: false, detail: format!("{}: {e}", e.code()) },
    }
}

pub fn suite(seed: u64) -> Vec<Check> {
    let cfg = QuadratureConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    out.push(check("riemann-relations", || {
        let mut worst = (0.0f64, f64::INFINITY);
        for g in 1..=3 {
            for _ in 0..3 {
                let p = random_point(FamilyModel::even(g), Layout::Complex, &mut rng)?;
                let pd = periods::<f64>(&p, &cfg)?;
                worst = (worst.0.max(pd.symmetry_residual()), worst.1.min(pd.min_imag_eigenvalue()));
            }
        }
        Ok((worst.0 < 1e-8 && worst.1 > 0.0, format!("max |Z-Zt| {:.2e}, min eig Im Z {:.3e}", worst.0, worst.1)))
    }));

    out.push(check("lemniscatic-j", || {
        let odd = make_point(FamilyModel::odd(1), vec![Complex::new(-1.0, 0.0)])?;
        let even = make_point(FamilyModel::even(1), vec![Complex::new(-1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)])?;
        let a = j_from_periods(&periods::<f64>(&odd, &cfg)?)?;
        let b = j_from_periods(&periods::<f64>(&even, &cfg)?)?;
        let err = (a - 1728.0).norm().max((b - 1728.0).norm());
        Ok((err < 1e-6, format!("|j - 1728| {err:.2e}")))
    }));

    out.push(check("betti-reconstruction", || {
        let mut worst = 0.0f64;
        for g in 1..=2 {
            for _ in 0..3 {
                let p = random_point(FamilyModel::even(g), Layout::Complex, &mut rng)?;
                let (_, ev) = evaluate::<f64>(&p, &SectionSpec::InfinityDifference, &cfg)?;
                worst = worst.max(ev.residual_reconstruction).max(ev.residual_realness);
            }
        }
        Ok((worst < 1e-8, format!("max residual {worst:.2e}")))
    }));

    out.push(check("jacobian-rank", || {
        let p = random_point(FamilyModel::even(1), Layout::Complex, &mut rng)?;
        let st = Stencil::<f64>::compute(&Family::universal(FamilyModel::even(1)), &p.params, &SectionSpec::InfinityDifference, 1e-5, &cfg)?;
        let jac = st.jacobian(&RankPolicy::default())?;
        Ok((jac.rank == 2, format!("rank {} (gap {:.2e})", jac.rank, jac.gap)))
    }));

    out.push(check("pell-certificates", || {
        let a = pell_solve(&parse_sparse("x^4-1")?, 8)?.map(|s| s.order);
        let fam = pell_family(&qpoly(&[0, -2, 0, 1]), &q(1), &cfg)?;
        let ok = a == Some(2) && fam.solution.order == 3 && fam.betti_distance < 1e-6;
        Ok((ok, format!("orders {:?}/{}, Betti distance {:.2e}", a, fam.solution.order, fam.betti_distance)))
    }));

    out.push(check("torsion-newton", || {
        let fam = Family::universal(FamilyModel::even(1));
        let mut solved = 0;
        for _ in 0..3 {
            let p = random_point(FamilyModel::even(1), Layout::Real, &mut rng)?;
            let (_, ev) = evaluate::<f64>(&p, &SectionSpec::InfinityDifference, &cfg)?;
            let target = nearest_rational(&ev.beta, 8);
            if let Ok(s) = torsion_target_solve::<f64>(&fam, &p.params, &SectionSpec::InfinityDifference, &target, &NewtonOptions::default(), &cfg) {
                solved += (s.residual < 1e-10 && distance_to_lattice(&s.beta, 8) < 1e-8) as usize;
            }
        }
        Ok((solved >= 2, format!("{solved}/3 converged")))
    }));

    out.push(check("kodaira-spencer", || {
        let mut detail = Vec::new();
        let mut ok = true;
        for g in 1..=3 {
            let p = random_point(FamilyModel::odd(g), Layout::Complex, &mut rng)?;
            let t = ks_tensor::<f64>(&p)?;
            let ch = t.checks()?;
            let best = max_contracted_rank(&t.symmetric_forms, 10, &[vandermonde_witness(g)], seed, &RankPolicy::default())?;
            ok &= ch.ratio_law < 1e-10 && ch.residue_gap < 1e-10 && best.max_rank == g && ch.odd_annihilation.map_or(true, |v| v < 1e-12);
            detail.push(format!("g={g}: ratio {:.1e}, rank {}", ch.ratio_law, best.max_rank));
        }
        Ok((ok, detail.join("; ")))
    }));

    out.push(check("quadric-webs", || {
        let diag = QuadricWeb::from_monomials(3, &[(0, 0), (1, 1), (2, 2)])?;
        let bad = QuadricWeb::from_monomials(4, &[(0, 0), (0, 1), (1, 1), (2, 3)])?;
        let a = matches!(find_regular_vector(&diag, 20, seed), RegularOutcome::Regular { .. });
        let b = matches!(find_regular_vector(&bad, 20, seed), RegularOutcome::IdenticallySingular { .. });
        Ok((a && b, format!("diagonal regular {a}, counterexample singular {b}")))
    }));

    out.push(check("census", || {
        let r = census_report(40, 9)?;
        let ok = r.feasible.iter().all(|&(s, _, m)| s == Series::C && m == 1) && r.feasible.len() == 40;
        Ok((ok, format!("{} cases, {} feasible", r.cases, r.feasible.len())))
    }));

    out.push(check("half-integrality", || {
        let p = random_point(FamilyModel::even(2), Layout::AllReal, &mut rng)?;
        let c = curve_data::<f64>(&p)?;
        let (_, ev) = evaluate::<f64>(&p, &SectionSpec::InfinityDifference, &cfg)?;
        let near = ev.beta.iter().filter(|b| (2.0 * *b - (2.0 * *b).round()).abs() < 1e-6).count();
        Ok((c.all_real_branch_points() && near >= p.genus, format!("{near} of {} coordinates in ½ℤ", ev.beta.len())))
    }));

    out
}

pub fn table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for c in checks {
        s.push_str(&format!("{:<width$}  {}  {}\n", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail));
    }
    s
}
