use betti_core::betti::{
    evaluate, nearest_rational, rank_scan, torsion_target_solve, NewtonOptions, ScanRegion, SectionSpec, Stencil, DEFAULT_STEP,
};
use betti_core::census::census_report;
use betti_core::curve::FamilyPoint;
use betti_core::family::Family;
use betti_core::ks::{contracted_rank, ks_matrix_exact, ks_tensor, max_contracted_rank, vandermonde_witness};
use betti_core::linalg::{exact_det, Mat, RankPolicy};
use betti_core::pell::{default_n_max, pell_family, pell_solve, PellReport};
use betti_core::periods::{complex_rows, periods};
use betti_core::poly::format_rational;
use betti_core::quadrature::QuadratureConfig;
use betti_core::webs::{find_regular_vector, find_regular_vector_float, has_nondegenerate_member, has_nondegenerate_member_float, QuadricWeb};
use betti_core::{Dd, Precision, Rational, Real, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cache::DiskCache;
use crate::inputs::{EntryInput, PolyInput, RatInput};
use crate::output::to_json_roundtrip;
use crate::{verify, CliError, Ctx, Job, Produced, Subcommand};

type Res<T> = Result<T, CliError>;

macro_rules! with_precision {
    ($prec:expr, $f:ident ( $($arg:expr),* )) => {
        match $prec {
            Precision::Double => $f::<f64>($($arg),*),
            Precision::Dd => $f::<Dd>($($arg),*),
        }
    };
}

fn params<P: DeserializeOwned>(job: &Job) -> Res<P> {
    Ok(serde_json::from_value(job.params.clone())?)
}

fn to_value<S: Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("results serialize")
}

fn quadrature(given: &Option<QuadratureConfig>, ctx: &Ctx) -> QuadratureConfig {
    match (given, ctx.precision) {
        (Some(q), _) => QuadratureConfig { precision: ctx.precision, ..q.clone() },
        (None, Precision::Double) => QuadratureConfig::default(),
        (None, Precision::Dd) => QuadratureConfig::extended(),
    }
}

fn cache_key<T: Real>(kind: &str, p: &FamilyPoint, extra: &[&Value]) -> String {
    let bytes = p.canonical_bytes();
    let encoded: Vec<String> = extra.iter().map(|v| to_json_roundtrip(v)).collect();
    let mut parts: Vec<&[u8]> = vec![T::LABEL.as_bytes(), &bytes];
    parts.extend(encoded.iter().map(|s| s.as_bytes()));
    DiskCache::key(kind, &parts)
}

pub(crate) fn dispatch(job: &Job, ctx: &Ctx) -> Res<Produced> {
    match job.subcommand {
        Subcommand::Periods => with_precision!(ctx.precision, run_periods(job, ctx)),
        Subcommand::Betti => with_precision!(ctx.precision, run_betti(job, ctx)),
        Subcommand::Jacobian => with_precision!(ctx.precision, run_jacobian(job, ctx)),
        Subcommand::RankScan => with_precision!(ctx.precision, run_rank_scan(job, ctx)),
        Subcommand::Pell => run_pell(job),
        Subcommand::PellFamily => run_pell_family(job, ctx),
        Subcommand::Ks => with_precision!(ctx.precision, run_ks(job, ctx)),
        Subcommand::Webs => run_webs(job, ctx),
        Subcommand::Census => run_census(job),
        Subcommand::TorsionSolve => with_precision!(ctx.precision, run_torsion(job, ctx)),
        Subcommand::Verify => run_verify(job, ctx),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodsParams {
    point: FamilyPoint,
    #[serde(default)]
    quadrature: Option<QuadratureConfig>,
}

fn run_periods<T: Real>(job: &Job, ctx: &Ctx) -> Res<Produced> {
    let p: PeriodsParams = params(job)?;
    let cfg = quadrature(&p.quadrature, ctx);
    let key = cache_key::<T>("periods", &p.point, &[&to_value(&cfg)]);
    if let Some(hit) = ctx.cache.get(&key) {
        return Ok(Produced::json(hit));
    }
    let v = to_value(&periods::<T>(&p.point, &cfg)?.export());
    ctx.cache.put(&key, &v)?;
    Ok(Produced::json(v))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BettiParams {
    #[serde(default)]
    point: Option<FamilyPoint>,
    #[serde(default)]
    points: Vec<FamilyPoint>,
    #[serde(default)]
    section: Option<SectionSpec>,
    #[serde(default)]
    quadrature: Option<QuadratureConfig>,
}

fn run_betti<T: Real>(job: &Job, ctx: &Ctx) -> Res<Produced> {
    let p: BettiParams = params(job)?;
    let cfg = quadrature(&p.quadrature, ctx);
    let sec = p.section.unwrap_or(SectionSpec::InfinityDifference);
    let points: Vec<FamilyPoint> = p.point.into_iter().chain(p.points).collect();
    if points.is_empty() {
        return Err(CliError::Schema("betti needs `point` or `points`".into()));
    }
    let extra = [to_value(&sec), to_value(&cfg)];
    let keys: Vec<String> = points.iter().map(|pt| cache_key::<T>("betti", pt, &[&extra[0], &extra[1]])).collect();
    let hits: Vec<Option<Value>> = keys.iter().map(|k| ctx.cache.get(k)).collect();
    // Misses are computed in parallel; the cache is written from this thread only.
    let computed: Vec<Res<Option<Value>>> = points
        .par_iter()
        .zip(&hits)
        .map(|(pt, hit)| {
            if hit.is_some() {
                return Ok(None);
            }
            let (_, ev) = evaluate::<T>(pt, &sec.follow(pt), &cfg)?;
            Ok(Some(to_value(&ev.record(pt))))
        })
        .collect();
    let mut records = Vec::with_capacity(points.len());
    for ((hit, fresh), key) in hits.into_iter().zip(computed).zip(&keys) {
        match (hit, fresh?) {
            (Some(v), _) => records.push(v),
            (None, Some(v)) => {
                ctx.cache.put(key, &v)?;
                records.push(v);
            }
            (None, None) => unreachable!("every miss is computed"),
        }
    }
    Ok(Produced::json(json!({ "records": records })))
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JacobianParams {
    family: Family,
    t: Vec<C64>,
    #[serde(default)]
    section: Option<SectionSpec>,
    #[serde(default = "default_step")]
    h_rel: f64,
    #[serde(default)]
    policy: Option<RankPolicy>,
    #[serde(default)]
    quadrature: Option<QuadratureConfig>,
}

fn run_jacobian<T: Real>(job: &Job, ctx: &Ctx) -> Res<Produced> {
    let p: JacobianParams = params(job)?;
    let cfg = quadrature(&p.quadrature, ctx);
    let sec = p.section.unwrap_or(SectionSpec::InfinityDifference);
    let st = Stencil::<T>::compute(&p.family, &p.t, &sec, p.h_rel, &cfg)?;
    let point = p.family.point(&p.t)?;
    let rec = st.eval.record(&point);
    let jac = st.jacobian(&p.policy.unwrap_or_default())?;
    Ok(Produced::json(json!({
        "s": rec.s,
        "beta": rec.beta,
        "residuals": rec.residuals,
        "rank": jac.rank,
        "singular_values": jac.singular_values,
        "gap": jac.gap,
        "j": jac.j.rows_vec(),
        "step": jac.step,
        "cauchy_riemann": st.cauchy_riemann,
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanParams {
    family: Family,
    #[serde(default)]
    region: Option<ScanRegion>,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default)]
    section: Option<SectionSpec>,
    #[serde(default = "default_step")]
    h_rel: f64,
    #[serde(default)]
    policy: Option<RankPolicy>,
    #[serde(default)]
    quadrature: Option<QuadratureConfig>,
}

fn default_samples() -> usize {
    50
}

#[derive(Serialize)]
struct ScanCsvRow {
    sample: usize,
    t: String,
    rank: Option<usize>,
    singular_values: String,
    error: String,
}

fn run_rank_scan<T: Real>(job: &Job, ctx: &Ctx) -> Res<Produced> {
    let p: ScanParams = params(job)?;
    let cfg = quadrature(&p.quadrature, ctx);
    let sec = p.section.unwrap_or(SectionSpec::InfinityDifference);
    let region = p.region.unwrap_or_else(|| ScanRegion::real_cube(p.family.dim(), 1.0));
    let report = rank_scan::<T>(&p.family, &region, p.samples, &sec, ctx.seed, p.h_rel, &cfg, &p.policy.unwrap_or_default())?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for (k, s) in report.samples.iter().enumerate() {
        w.serialize(ScanCsvRow {
            sample: k,
            t: s.t.iter().map(|z| format!("{:.16e}{:+.16e}i", z.re, z.im)).collect::<Vec<_>>().join(";"),
            rank: s.rank,
            singular_values: s.singular_values.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(";"),
            error: s.error.clone().unwrap_or_default(),
        })
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?).expect("CSV is UTF-8");
    Ok(Produced { result: to_value(&report), csv: Some(csv), table: None, failed: false })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PellParams {
    f: PolyInput,
    #[serde(default)]
    n_max: Option<usize>,
}

fn run_pell(job: &Job) -> Res<Produced> {
    let p: PellParams = params(job)?;
    let f = p.f.to_poly()?;
    let n_max = p.n_max.unwrap_or_else(|| default_n_max(f.degree().unwrap_or(0)));
    let sol = pell_solve(&f, n_max)?;
    Ok(Produced::json(to_value(&PellReport::new(sol.as_ref(), n_max))))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct PellFamilyParams {
    P: PolyInput,
    p: RatInput,
    #[serde(default)]
    quadrature: Option<QuadratureConfig>,
}

fn run_pell_family(job: &Job, ctx: &Ctx) -> Res<Produced> {
    let p: PellFamilyParams = params(job)?;
    let cfg = QuadratureConfig { precision: Precision::Double, ..quadrature(&p.quadrature, ctx) };
    let fam = pell_family(&p.P.to_poly()?, &p.p.to_rational()?, &cfg)?;
    let mut v = to_value(&PellReport::new(Some(&fam.solution), fam.solution.order));
    let obj = v.as_object_mut().expect("report is an object");
    obj.insert("f".into(), json!(fam.f.to_string()));
    obj.insert("point".into(), to_value(&fam.point));
    obj.insert("beta".into(), to_value(&fam.beta));
    obj.insert("betti_distance".into(), json!(fam.betti_distance));
    Ok(Produced::json(v))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KsParams {
    point: FamilyPoint,
    #[serde(default)]
    rational_params: Option<Vec<RatInput>>,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default)]
    policy: Option<RankPolicy>,
}

fn default_trials() -> usize {
    20
}

fn run_ks<T: Real>(job: &Job, ctx: &Ctx) -> Res<Produced> {
    let p: KsParams = params(job)?;
    let policy = p.policy.unwrap_or_default();
    let t = ks_tensor::<T>(&p.point)?;
    let checks = t.checks()?;
    let g = p.point.genus;
    let best = max_contracted_rank(&t.symmetric_forms, p.trials, &[vandermonde_witness(g)], ctx.seed, &policy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let sampled: Vec<usize> = (0..p.trials)
        .map(|_| {
            let w: Vec<_> = (0..g).map(|_| betti_core::scalar::c::<T>(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            contracted_rank(&t.symmetric_forms, &w, &policy)
        })
        .collect::<Result<_, _>>()?;
    let mut out = json!({
        "M": complex_rows(&t.m),
        "c": t.c.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect::<Vec<_>>(),
        "det": checks.det,
        "checks": checks,
        "ranks": {"max_contracted_rank": best.max_rank, "witness": best.witness, "ambiguous": best.ambiguous, "sampled": sampled},
    });
    if let Some(rp) = p.rational_params {
        let s: Vec<Rational> = rp.iter().map(RatInput::to_rational).collect::<Result<_, _>>()?;
        let m = ks_matrix_exact(&s, g)?;
        let rows: Vec<Vec<String>> = m.rows_vec().iter().map(|r| r.iter().map(format_rational).collect()).collect();
        out["exact"] = json!({"M": rows, "det": format_rational(&exact_det(&m))});
    }
    Ok(Produced::json(out))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WebsParams {
    forms: Vec<Vec<Vec<EntryInput>>>,
    #[serde(default = "default_trials")]
    trials: usize,
}

fn run_webs(job: &Job, ctx: &Ctx) -> Res<Produced> {
    let p: WebsParams = params(job)?;
    let exact = p.forms.iter().flatten().flatten().all(|e| matches!(e, EntryInput::Exact(_)));
    let shape = |m: &Vec<Vec<EntryInput>>| {
        if m.iter().any(|r| r.len() != m.len()) {
            Err(CliError::Schema("forms must be square".into()))
        } else {
            Ok(m.len())
        }
    };
    let n: Vec<usize> = p.forms.iter().map(shape).collect::<Result<_, _>>()?;
    if exact {
        let basis = p
            .forms
            .iter()
            .zip(&n)
            .map(|(m, &k)| -> Res<Mat<Rational>> {
                let rows: Vec<Vec<Rational>> = m
                    .iter()
                    .map(|r| r.iter().map(|e| match e {
                        EntryInput::Exact(x) => x.to_rational(),
                        EntryInput::Complex(_) => unreachable!("checked above"),
                    }).collect())
                    .collect::<Result<_, _>>()?;
                Ok(Mat::from_fn(k, k, |a, b| rows[a][b].clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let web = QuadricWeb::new(basis)?;
        let nondeg = has_nondegenerate_member(&web, p.trials, ctx.seed);
        let regular = find_regular_vector(&web, p.trials, ctx.seed);
        Ok(Produced::json(json!({"mode": "exact", "g": web.g, "nondegenerate": nondeg, "regular": regular})))
    } else {
        let basis = p
            .forms
            .iter()
            .zip(&n)
            .map(|(m, &k)| -> Res<Mat<C64>> {
                let rows: Vec<Vec<C64>> = m.iter().map(|r| r.iter().map(EntryInput::to_complex).collect()).collect::<Result<_, _>>()?;
                Ok(Mat::from_fn(k, k, |a, b| rows[a][b]))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let web = QuadricWeb::new_complex(basis)?;
        let nondeg = has_nondegenerate_member_float(&web, p.trials, ctx.seed);
        let regular = find_regular_vector_float(&web, p.trials, ctx.seed)?;
        Ok(Produced::json(json!({"mode": "float", "g": web.g, "nondegenerate": nondeg, "regular": regular})))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CensusParams {
    #[serde(default = "default_ell")]
    ell_max: usize,
    #[serde(default = "default_m")]
    m_max: usize,
}

fn default_ell() -> usize {
    40
}

fn default_m() -> usize {
    9
}

fn run_census(job: &Job) -> Res<Produced> {
    let p: CensusParams = params(job)?;
    let report = census_report(p.ell_max, p.m_max)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &report.rows {
        w.serialize(row).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?).expect("CSV is UTF-8");
    let feasible: Vec<Value> = report.feasible.iter().map(|(s, l, m)| json!({"series": s.to_string(), "ell": l, "m": m})).collect();
    Ok(Produced {
        result: json!({"ell_max": report.ell_max, "m_max": report.m_max, "cases": report.cases, "feasible": feasible}),
        csv: Some(csv),
        table: None,
        failed: false,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TorsionParams {
    family: Family,
    t0: Vec<C64>,
    #[serde(default)]
    target: Option<Vec<RatInput>>,
    #[serde(default)]
    denominator: Option<i64>,
    #[serde(default)]
    section: Option<SectionSpec>,
    #[serde(default)]
    options: Option<NewtonOptions>,
    #[serde(default)]
    quadrature: Option<QuadratureConfig>,
}

fn run_torsion<T: Real>(job: &Job, ctx: &Ctx) -> Res<Produced> {
    let p: TorsionParams = params(job)?;
    let cfg = quadrature(&p.quadrature, ctx);
    let sec = p.section.unwrap_or(SectionSpec::InfinityDifference);
    let target: Vec<Rational> = match (&p.target, p.denominator) {
        (Some(t), None) => t.iter().map(RatInput::to_rational).collect::<Result<_, _>>()?,
        (None, Some(den)) if den > 0 => {
            let p0 = p.family.point(&p.t0)?;
            let (_, ev) = evaluate::<T>(&p0, &sec.follow(&p0), &cfg)?;
            let beta: Vec<f64> = ev.beta.iter().map(|b| b.as_f64()).collect();
            nearest_rational(&beta, den)
        }
        _ => return Err(CliError::Schema("give exactly one of `target` or a positive `denominator`".into())),
    };
    let sol = torsion_target_solve::<T>(&p.family, &p.t0, &sec, &target, &p.options.unwrap_or_default(), &cfg)?;
    let mut v = to_value(&sol);
    v["target"] = json!(target.iter().map(format_rational).collect::<Vec<_>>());
    Ok(Produced::json(v))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyParams {}

fn run_verify(job: &Job, ctx: &Ctx) -> Res<Produced> {
    let _: VerifyParams = params(job)?;
    let checks = verify::suite(ctx.seed);
    let failed = checks.iter().any(|c| !c.pass);
    let table = verify::table(&checks);
    Ok(Produced { result: json!({"checks": checks, "passed": !failed}), csv: None, table: Some(table), failed })
}
