use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sympsteer")).args(args).current_dir(dir).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn matrix(v: &Value) -> Vec<f64> {
    v["data"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn every_subcommand_has_a_selftest() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["jacobi"],
        &["brackets"],
        &["certify1"],
        &["certify2"],
        &["steer"],
        &["franks"],
        &["appendix", "rank"],
        &["appendix", "base-case"],
        &["appendix", "verify"],
        &["persist", "split"],
        &["persist", "dominate"],
        &["persist", "angle"],
        &["persist", "probe"],
        &["persist", "shear"],
    ];
    for case in cases {
        let mut args = case.to_vec();
        args.push("--selftest");
        let out = run(&args, dir.path());
        assert_eq!(code(&out), 0, "{case:?}: {}", stderr(&out));
        assert!(stderr(&out).contains("checks ok"));
    }
}

#[test]
fn jacobi_constant_curvature_is_a_rotation() {
    let dir = tempfile::tempdir().unwrap();
    let t = 1.2;
    let out = run(&["jacobi", "--preset", "constant:1", "--m", "2", "--T", "1.2"], dir.path());
    assert_eq!(code(&out), 0);
    let got = matrix(&json(&out)["matrix"]);
    let (c, s) = (f64::cos(t), f64::sin(t));
    let expected = [
        c, 0.0, s, 0.0, //
        0.0, c, 0.0, s, //
        -s, 0.0, c, 0.0, //
        0.0, -s, 0.0, c,
    ];
    for (a, b) in got.iter().zip(expected) {
        assert!((a - b).abs() <= 1e-8);
    }
}

#[test]
fn appendix_rank_reports_the_computed_rank() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["appendix", "rank", "--d", "50"], dir.path());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "6\n");
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("expected 7"));
    let small = run(&["appendix", "rank", "--d", "3"], dir.path());
    assert_eq!(code(&small), 2);
}

#[test]
fn base_case_and_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let quadratic = run(&["appendix", "base-case", "--d", "50"], dir.path());
    assert_eq!(code(&quadratic), 1);
    assert!(stderr(&quadratic).contains("infeasible"));
    let out = run(&["appendix", "base-case", "--d", "12", "--fallback", "--out", "pair.json"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let verify = run(&["appendix", "verify", "--pair", "pair.json"], dir.path());
    assert_eq!(code(&verify), 0);
    assert_eq!(json(&verify)["member"], Value::Bool(true));
    assert_eq!(json(&verify)["positivity"]["value"], Value::String("1".into()));
    fs::write(dir.path().join("ones.json"), r#"{"f": {"num": [1], "den": [1]}, "g": {"num": ["1"], "den": ["1"]}}"#).unwrap();
    let bad = run(&["appendix", "verify", "--pair", "ones.json"], dir.path());
    assert_eq!(code(&bad), 1);
    assert!(stderr(&bad).contains("∫f"));
}

#[test]
fn steer_reaches_random_target_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("flat-m2.toml"), "m = 2\nT = 1.0\n[drift]\npreset = \"flat\"\n").unwrap();
    let args = ["steer", "--system", "flat-m2.toml", "--target", "random:1e-3", "--seed", "0", "--report", "r.json"];
    let first = run(&args, dir.path());
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let report = json(&first);
    assert!(report["residual"].as_f64().unwrap() <= 1e-6);
    assert!((report["distance"].as_f64().unwrap() - 1e-3).abs() < 1e-9);
    assert_eq!(fs::read(dir.path().join("r.json")).unwrap(), first.stdout);
    let second = run(&args, dir.path());
    assert_eq!(first.stdout, second.stdout);
    let other = run(&["steer", "--system", "flat-m2.toml", "--target", "random:1e-3", "--seed", "1"], dir.path());
    assert_ne!(first.stdout, other.stdout);
}

#[test]
fn steer_sweep_emits_csv_with_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["steer", "--preset", "flat", "--m", "2", "--deltas", "1e-4,1e-3,1e-2,1e-1", "--out", "sweep.csv"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let file = fs::File::open(dir.path().join("sweep.csv")).unwrap();
    let (rows, exponent) = sympsteer::io::read_sweep(file).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.residual <= 1e-6));
    let e = exponent.unwrap();
    assert!((0.4..=0.6).contains(&e), "{e}");
}

#[test]
fn steer_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sys.toml"), "m = 2\nT = 1.0\nextra = 1\n[drift]\npreset = \"flat\"\n").unwrap();
    let out = run(&["steer", "--system", "sys.toml", "--target", "random:1e-3"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("sys.toml"));
    let far = run(&["steer", "--preset", "flat", "--m", "1", "--target", "random:2"], dir.path());
    assert_eq!(code(&far), 2);
    assert!(stderr(&far).contains("trust radius"));
    fs::write(dir.path().join("t.json"), r#"{"dim": 4, "data": [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 2]}"#).unwrap();
    let nonsymp = run(&["steer", "--preset", "flat", "--m", "2", "--target", "t.json"], dir.path());
    assert_eq!(code(&nonsymp), 2);
    assert!(stderr(&nonsymp).contains("t.json"));
}

#[test]
fn franks_end_to_end_with_sigma_dump() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "franks", "--preset", "flat", "--m", "2", "--T", "1", "--r-g", "0.5", "--target", "random:1e-3", "--axis-nodes", "9",
        "--sigma-csv", "sigma.csv",
    ];
    let out = run(&args, dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(&out);
    assert!(report["residual"].as_f64().unwrap() <= 1e-6);
    assert!(report["route_gap"].as_f64().unwrap() <= 1e-7);
    assert_eq!(report["checks"].as_array().unwrap().len(), 6);
    let csv = fs::read_to_string(dir.path().join("sigma.csv")).unwrap();
    assert!(csv.starts_with("t,x_1,x_2,sigma\n"));
    assert_eq!(csv.lines().count(), 1 + 9 * 129 * 129);
    let blocked = run(&["franks", "--preset", "flat", "--T", "1", "--r-g", "0.5", "--intersections", "0.5:0.5", "--target", "random:1e-3"], dir.path());
    assert_eq!(code(&blocked), 2);
}

const SEQUENCE: &str = r#"{"period": 2, "maps": [{"dim": 2, "data": [2, 1, 0, 0.5]}, {"dim": 2, "data": [1, 0, 0.3, 1]}]}"#;

#[test]
fn persist_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("seq.json"), SEQUENCE).unwrap();
    let split = run(&["persist", "split", "--sequence", "seq.json"], dir.path());
    assert_eq!(code(&split), 0);
    assert_eq!(json(&split)["report"]["status"], Value::String("hyperbolic".into()));
    let dom = run(&["persist", "dominate", "--sequence", "seq.json", "--m-steps", "2", "--delta", "0.5"], dir.path());
    assert_eq!(code(&dom), 0);
    let strict = run(&["persist", "dominate", "--sequence", "seq.json", "--m-steps", "1", "--delta", "1e-3"], dir.path());
    assert_eq!(code(&strict), 1);
    let angle = run(&["persist", "angle", "--sequence", "seq.json"], dir.path());
    assert_eq!(json(&angle)["angles"].as_array().unwrap().len(), 2);
    let shear = run(&["persist", "shear", "--sequence", "seq.json"], dir.path());
    assert_eq!(code(&shear), 0);
    assert!(json(&shear)["eigen_residual"].as_f64().unwrap() <= 1e-8);
    let mane = run(&["persist", "dominate", "--sequence", "seq.json", "--mane"], dir.path());
    assert_eq!(code(&mane), 0, "{}", stderr(&mane));
    assert_eq!(json(&mane)["pass"], Value::Bool(true));
}

#[test]
fn persist_probe_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("seq.json"), SEQUENCE).unwrap();
    let probe = |seed: &str| run(&["persist", "probe", "--sequence", "seq.json", "--epsilon", "1e-2", "--samples", "50", "--seed", seed], dir.path());
    let (a, b, c) = (probe("7"), probe("7"), probe("8"));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(json(&a)["samples"], Value::from(50));
}

#[test]
fn persist_input_errors_are_located() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("short.json"), r#"{"period": 1, "maps": [{"dim": 2, "data": [1, 1, 1]}]}"#).unwrap();
    let out = run(&["persist", "split", "--sequence", "short.json"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("short.json"));
    fs::write(dir.path().join("skew.json"), r#"{"period": 1, "maps": [{"dim": 2, "data": [1, 1, 0, 2]}]}"#).unwrap();
    let out = run(&["persist", "split", "--sequence", "skew.json"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("skew.json"));
    let fixed = run(&["persist", "split", "--sequence", "skew.json", "--resymplectify"], dir.path());
    assert_eq!(code(&fixed), 0, "{}", stderr(&fixed));
    let missing = run(&["persist", "shear", "--sequence", "nope.json"], dir.path());
    assert_eq!(code(&missing), 2);
    assert!(stderr(&missing).contains("nope.json"));
}

#[test]
fn certificates_from_system_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "m = 2\nT = 1.0\n[drift]\npreset = \"constant_curvature\"\nc = 1.0\n").unwrap();
    let c1 = run(&["certify1", "--system", "c.toml"], dir.path());
    assert_eq!(code(&c1), 1);
    assert_eq!(json(&c1)["rank"], Value::from(9));
    let osc = run(&["certify1", "--preset", "oscillatory:1,3", "--m", "2"], dir.path());
    assert_eq!(code(&osc), 0, "{}", stderr(&osc));
    assert_eq!(json(&osc)["rank"], Value::from(10));
    let c2 = run(&["certify2", "--system", "c.toml"], dir.path());
    assert_eq!(code(&c2), 0);
    let br = run(&["brackets", "--system", "c.toml", "--t", "0.4"], dir.path());
    assert_eq!(code(&br), 0);
    fs::write(
        dir.path().join("z.json"),
        r#"{"m": 1, "T": 1.0, "drift": {"preset": "matrix", "matrix": {"dim": 2, "data": [0, 0, 0, 0]}}, "generators": [{"dim": 2, "data": [0, 0, 0, 0]}]}"#,
    )
    .unwrap();
    let zero = run(&["certify1", "--system", "z.json"], dir.path());
    assert_eq!(code(&zero), 1);
    assert_eq!(json(&zero)["rank"], Value::from(0));
    let no_curv = run(&["jacobi", "--system", "z.json"], dir.path());
    assert_eq!(code(&no_curv), 2);
}
