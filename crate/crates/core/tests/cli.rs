use std::process::{Command, Output};

use serde_json::Value;

fn recipgeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recipgeo"))
        .args(args)
        .env_remove("RECIPGEO_SEED")
        .output()
        .expect("binary runs")
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn value(rows: &[Vec<String>], quantity: &str) -> f64 {
    num(&rows.iter().find(|r| r[0] == quantity).unwrap()[3])
}

#[test]
fn eval_cost_values() {
    let out = recipgeo(&["eval", "--alpha", "0.5,0.5", "--point", "1,1"]);
    assert!(out.status.success());
    assert_eq!(num(&csv_rows(&out)[0][0]), 0.0);

    let out = recipgeo(&["eval", "--alpha", "1", "--point", "2"]);
    let j = num(&csv_rows(&out)[0][0]);
    assert!((j - 0.25).abs() < 1e-15);
}

#[test]
fn malformed_input_exits_2() {
    for args in [
        &["eval", "--alpha", "0.5,abc", "--point", "1,1"][..],
        &["eval", "--alpha", "1,1", "--point", "1"],
        &["eval", "--alpha", "1", "--point", "0"],
        &[
            "geodesic",
            "--alpha",
            "1,1",
            "--point",
            "1,2",
            "--velocity",
            "1,0",
            "--span",
            "0",
        ],
        &["nonsense"],
    ] {
        let out = recipgeo(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn hessian_rank_and_determinant() {
    let log = csv_rows(&recipgeo(&[
        "hessian",
        "--alpha",
        "1,2,3",
        "--chart",
        "log",
        "--point",
        "0.1,0.2,-0.3",
    ]));
    assert_eq!(value(&log, "rank"), 1.0);

    let ratio = csv_rows(&recipgeo(&["hessian", "--alpha", "1,1", "--point", "2,1"]));
    assert!((value(&ratio, "determinant") + 0.328125).abs() < 1e-14);
}

#[test]
fn json_output_carries_meta() {
    let out = recipgeo(&[
        "ricci", "--alpha", "0.5,0.5", "--point", "4,1", "--format", "json",
    ]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["meta"]["chart"], "ratio");
    assert_eq!(v["meta"]["seed"], 0);
    let r = v["rows"][0]["ricci_xy"].as_f64().unwrap();
    assert!((r + 8.0 / 9.0).abs() < 1e-12);
}

#[test]
fn seed_comes_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_recipgeo"))
        .args(["eval", "--alpha", "1", "--point", "2", "--format", "json"])
        .env("RECIPGEO_SEED", "17")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["meta"]["seed"], 17);
}

#[test]
fn file_output_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("geo.csv");
    let out = recipgeo(&[
        "geodesic",
        "--alpha",
        "-2,1",
        "--point",
        "1,2",
        "--velocity",
        "-1,3",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let mut r = csv::Reader::from_path(&path).unwrap();
    assert_eq!(r.headers().unwrap().iter().next(), Some("lambda"));
    assert!(r.records().count() > 10);
    let meta: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("geo.csv.meta.json")).unwrap())
            .unwrap();
    assert!(meta["termination"].is_string());
}

#[test]
fn geodesic_from_singular_start_exits_3() {
    let out = recipgeo(&[
        "geodesic",
        "--alpha",
        "0.5,0.5",
        "--point",
        "1,1",
        "--velocity",
        "1,0",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn flow_blowup_exits_3_after_writing() {
    let out = recipgeo(&[
        "flow", "--alpha", "0.5,0.5", "--chart", "log", "--point", "1,1", "--sign", "ascent",
        "--span", "0,3",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let rows = csv_rows(&out);
    let last_tau = num(&rows.last().unwrap()[0]);
    let tau_star = 2.0 * ((1f64.exp() + 1.0) / (1f64.exp() - 1.0)).ln();
    assert!(last_tau <= tau_star + 1e-6 && last_tau > 0.9 * tau_star);
    assert!(String::from_utf8_lossy(&out.stderr).contains("blow"));
}

#[test]
fn flow_descent_reaches_zero_cost() {
    let out = recipgeo(&[
        "flow",
        "--alpha",
        "1,-0.5,2",
        "--chart",
        "log",
        "--point",
        "0.2,0.1,0.3",
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    let last = rows.last().unwrap();
    assert!(num(&last[2]) < 1e-12);
}

#[test]
fn locus_grid_and_flags() {
    let out = recipgeo(&[
        "locus",
        "--alpha",
        "0.3333333333333333,0.5",
        "--grid",
        "21",
        "--range",
        "2",
    ]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 21 * 21);
    let flags: Vec<i64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(flags.iter().any(|f| f & 1 != 0));
    assert!(flags.iter().any(|f| f & 2 != 0));
    assert_eq!(
        recipgeo(&["locus", "--alpha", "1,1", "--range", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn verify_is_deterministic_and_detects_perturbation() {
    let a = recipgeo(&["verify", "--seed", "3"]);
    let b = recipgeo(&["verify", "--seed", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let bad = recipgeo(&["verify", "--perturb-christoffel"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
}

#[test]
fn fisher_matches_log_hessian() {
    let rows = csv_rows(&recipgeo(&[
        "fisher", "--alpha", "1,1", "--chart", "log", "--point", "0.3,0.2",
    ]));
    let fisher: Vec<f64> = rows
        .iter()
        .filter(|r| r[0] == "fisher")
        .map(|r| num(&r[3]))
        .collect();
    let hess: Vec<f64> = rows
        .iter()
        .filter(|r| r[0] == "hessian_log")
        .map(|r| num(&r[3]))
        .collect();
    assert_eq!(fisher, hess);
    assert!((value(&rows, "fisher_1d_quadrature") - 0.5f64.cosh()).abs() < 1e-6);
}
