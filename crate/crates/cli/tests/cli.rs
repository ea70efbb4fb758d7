use std::path::Path;
use std::process::Command;

use betti_lab::{run, Job, RunOptions, Subcommand};
use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_betti-lab"))
}

fn result(job: &Job, opts: &RunOptions) -> (i32, Value) {
    let out = run(job, opts);
    (out.exit_code, serde_json::from_str(&out.json).unwrap())
}

#[test]
fn pell_job_reports_order_two() {
    let job = Job::from_json(r#"{"subcommand": "pell", "f": "x^4-1"}"#).unwrap();
    let (code, v) = result(&job, &RunOptions::default());
    assert_eq!(code, 0);
    assert_eq!(v["schema"], "betti-lab/1");
    assert_eq!(v["result"]["found"], true);
    assert_eq!(v["result"]["order"], 2);
    // Dense coefficients, constant first, give the same answer.
    let dense = Job::new(Subcommand::Pell, json!({"f": ["-1", 0, 0, 0, 1]}));
    assert_eq!(result(&dense, &RunOptions::default()).1["result"], v["result"]);
}

#[test]
fn census_csv_has_only_c_series_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.json");
    std::fs::write(&job, r#"{"subcommand": "census", "ell_max": 40, "m_max": 9}"#).unwrap();
    let out = bin().arg("--job").arg(&job).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(dir.path().join("census.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["series", "ell", "m", "r", "rep_dim_2d", "g", "domain_dim", "feasible"]);
    let mut feasible = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        if &rec[7] == "true" {
            feasible += 1;
            assert_eq!((&rec[0], &rec[2]), ("C", "1"));
        }
    }
    assert_eq!(feasible, 40);
}

#[test]
fn malformed_json_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("bad.json");
    std::fs::write(&job, r#"{"subcommand": "pell", "f": "#).unwrap();
    let out = bin().arg("--job").arg(&job).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"]["code"], "SchemaError");

    let unknown = Job::new(Subcommand::Pell, json!({"poly": "x^4-1"}));
    let (code, v) = result(&unknown, &RunOptions::default());
    assert_eq!((code, v["error"]["code"].as_str()), (2, Some("SchemaError")));
    assert!(Job::from_json(r#"{"subcommand": "frobnicate"}"#).is_err());
}

#[test]
fn module_errors_exit_with_one() {
    let job = Job::new(Subcommand::Pell, json!({"f": "x^4 - 2x^2 + 1"}));
    let (code, v) = result(&job, &RunOptions::default());
    assert_eq!((code, v["error"]["code"].as_str()), (1, Some("NonSquarefree")));
}

#[test]
fn scans_are_byte_identical_across_runs() {
    let job = Job::from_json(
        r#"{"subcommand": "rank-scan", "seed": 11,
            "params": {"family": {"kind": "Universal", "model": {"kind": "EvenDeg", "genus": 1}}, "samples": 4}}"#,
    )
    .unwrap();
    let a = run(&job, &RunOptions::default());
    let b = run(&job, &RunOptions::default());
    assert_eq!(a.exit_code, 0, "{}", a.json);
    assert_eq!(a.json, b.json);
    assert_eq!(a.csv, b.csv);
    let v: Value = serde_json::from_str(&a.json).unwrap();
    assert_eq!(v["seed"], 11);
    assert_eq!(v["result"]["max_rank"], 2);
    // A different seed moves the samples.
    let c = run(&job, &RunOptions { seed: Some(12), ..Default::default() });
    assert_ne!(a.json, c.json);
}

fn cache_files(dir: &Path) -> usize {
    std::fs::read_dir(dir.join("cache")).map(|d| d.count()).unwrap_or(0)
}

#[test]
fn cache_never_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { out: Some(dir.path().to_path_buf()), ..Default::default() };
    let point = json!({"model": "EvenDeg", "genus": 2, "params": [[0.3, 0.1], [-1.2, 0.0], [0.5, 0.7], [0.1, 0.0], [-0.4, 0.2], [0.2, -0.3]]});
    for (sub, params) in [
        (Subcommand::Periods, json!({"point": point})),
        (Subcommand::Betti, json!({"points": [point, {"model": "EvenDeg", "genus": 1, "params": [[-1, 0], [0, 0], [0, 0], [0, 0]]}]})),
    ] {
        let job = Job::new(sub, params);
        let cold = run(&job, &opts);
        assert_eq!(cold.exit_code, 0, "{}", cold.json);
        assert!(cache_files(dir.path()) > 0);
        let warm = run(&job, &opts);
        assert_eq!(cold.json, warm.json);
        std::fs::remove_dir_all(dir.path().join("cache")).unwrap();
        let again = run(&job, &opts);
        assert_eq!(cold.json, again.json);
        let uncached = run(&job, &RunOptions::default());
        assert_eq!(cold.json, uncached.json);
    }
}

#[test]
fn double_double_periods() {
    let job = Job::new(Subcommand::Periods, json!({"point": {"model": "OddDeg", "genus": 1, "params": [[-1, 0]]}}));
    let (code, v) = result(&job, &RunOptions { precision: Some(betti_core::Precision::Dd), ..Default::default() });
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["precision"], "dd");
    assert_eq!(v["result"]["precision"], "dd");
    assert!(v["result"]["symmetry_residual"].as_f64().unwrap() < 1e-25);
}

#[test]
fn webs_counterexample_and_diagonal() {
    let e = |a: usize, b: usize| -> Value {
        let mut m = vec![vec![json!(0); 4]; 4];
        if a == b {
            m[a][a] = json!(1);
        } else {
            m[a][b] = json!("1/2");
            m[b][a] = json!("1/2");
        }
        json!(m)
    };
    let job = Job::new(Subcommand::Webs, json!({"forms": [e(0, 0), e(0, 1), e(1, 1), e(2, 3)]}));
    let (code, v) = result(&job, &RunOptions::default());
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["mode"], "exact");
    assert_eq!(v["result"]["regular"]["kind"], "IdenticallySingular");

    let diag = json!([[[1, 0], [0, 0]], [[0, 0], [0, 1]]]);
    let (_, v) = result(&Job::new(Subcommand::Webs, json!({"forms": diag})), &RunOptions::default());
    assert_eq!(v["result"]["regular"]["p"], json!(["1", "1"]));
    let complex = json!([[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]], [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 1.0]]]]);
    let (code, v) = result(&Job::new(Subcommand::Webs, json!({"forms": complex})), &RunOptions::default());
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["mode"], "float");
}

#[test]
fn ks_job_reports_exact_matrix() {
    let job = Job::new(
        Subcommand::Ks,
        json!({"point": {"model": "OddDeg", "genus": 2, "params": [[2, 0], [3, 0], [5, 0]]}, "rational_params": [2, 3, 5]}),
    );
    let (code, v) = result(&job, &RunOptions::default());
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["exact"]["M"][0][0], "1/3");
    assert_eq!(v["result"]["ranks"]["max_contracted_rank"], 2);
}

#[test]
fn torsion_solve_to_nearest_eighth() {
    let job = Job::new(
        Subcommand::TorsionSolve,
        json!({
            "family": {"kind": "Universal", "model": {"kind": "EvenDeg", "genus": 1}},
            "t0": [[0.3, 0], [-0.7, 0], [0.2, 0], [-0.1, 0]],
            "denominator": 8
        }),
    );
    let (code, v) = result(&job, &RunOptions::default());
    assert_eq!(code, 0, "{v}");
    assert!(v["result"]["residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["result"]["target"].as_array().unwrap().len(), 2);
}

#[test]
fn pell_family_and_jacobian_jobs() {
    let (code, v) = result(&Job::new(Subcommand::PellFamily, json!({"P": "x^3 - 2x", "p": 1})), &RunOptions::default());
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["order"], 3);
    assert!(v["result"]["betti_distance"].as_f64().unwrap() < 1e-6);

    let job = Job::new(
        Subcommand::Jacobian,
        json!({"family": {"kind": "Universal", "model": {"kind": "EvenDeg", "genus": 1}}, "t": [[0.3, 0.2], [-0.7, 0.1], [0.2, 0], [-0.1, 0.4]]}),
    );
    let (code, v) = result(&job, &RunOptions::default());
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["rank"], 2);
    assert_eq!(v["result"]["j"].as_array().unwrap().len(), 8);
}

#[test]
fn verify_passes() {
    let out = bin().arg("verify").output().unwrap();
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{table}");
    assert!(table.lines().count() >= 10);
    assert!(!table.contains("FAIL"));
}
