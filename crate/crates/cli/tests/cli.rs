use std::path::Path;
use std::process::{Command, Output};

use hutchinson::operator::load_matrix_market;
use hutchinson::SymmetricOperator;
use serde_json::Value;

fn hutch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hutch")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn plan_values_and_domain_errors() {
    let v = json(&hutch(&["plan", "--eps", "0.1", "--delta", "0.001", "--method", "this-work", "--format", "json"]));
    assert_eq!(v["n"], 1014);
    assert_eq!(v["schema_version"], 1);
    let v = json(&hutch(&["plan", "--eps", "0.1", "--delta", "0.001", "--method", "avron-fig", "--rank", "7840", "--format", "json"]));
    assert_eq!(v["n"], 9525);

    let bad = hutch(&["plan", "--eps", "0.5", "--delta", "0.001"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("3/8"));
    assert_eq!(hutch(&["plan", "--eps", "0.1", "--delta", "0.001", "--method", "avron-fig"]).status.code(), Some(2));
    assert_eq!(hutch(&["plan", "--eps", "0.1", "--delta", "0.001", "--method", "nope"]).status.code(), Some(2));
}

#[test]
fn compare_table() {
    let out = hutch(&["compare", "--eps", "0.05:0.25:5", "--delta", "0.001", "--rank", "7840"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,this_work,roosta,avron_fig,avron_table"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert!(r[1] < r[2] && r[1] < r[3] && r[1] < r[4]);
    }
    assert_eq!(rows[4], vec![0.25, 74.0, 730.0, 1524.0, 753370.0]);

    assert_eq!(hutch(&["compare", "--eps", "0.3:0.5:3", "--rank", "7840"]).status.code(), Some(2));
}

#[test]
fn estimate_examples() {
    let v = json(&hutch(&["estimate", "--gen", "identity:5", "--n", "10", "--seed", "1", "--format", "json"]));
    assert_eq!(v["estimate"], 5.0);
    assert_eq!(v["input"], "identity:5");
    assert!(v["stream"].as_str().unwrap().starts_with("chacha20"));

    let v = json(&hutch(&["estimate", "--gen", "diag-uniform:100:7", "--n", "1", "--seed", "9", "--format", "json"]));
    assert_eq!(v["estimate"], v["exact_trace"]);
    assert_eq!(v["relative_error"], 0.0);

    let v = json(&hutch(&["estimate", "--gen", "wishart:64:64:3", "--eps", "0.1", "--delta", "0.001", "--seed", "0x5", "--format", "json"]));
    assert_eq!(v["n"], 1014);
    assert_eq!(v["seed"], 5);
    assert!(v["relative_error"].as_f64().unwrap().abs() <= 0.1);
}

#[test]
fn estimate_input_errors() {
    assert_eq!(hutch(&["estimate", "--matrix-market", "/no/such/file.mtx", "--n", "3"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.mtx");
    std::fs::write(&junk, "not a matrix\n").unwrap();
    assert_eq!(hutch(&["estimate", "--matrix-market", junk.to_str().unwrap(), "--n", "3"]).status.code(), Some(3));
    assert_eq!(hutch(&["estimate", "--gen", "identity:3"]).status.code(), Some(2));
    assert_eq!(hutch(&["estimate", "--gen", "bogus:3", "--n", "1"]).status.code(), Some(2));
}

fn gen_and_load(spec: &str, dir: &Path) -> hutchinson::DenseSymmetric {
    let path = dir.join("m.mtx");
    let out = hutch(&["gen", spec, "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    load_matrix_market(&path).unwrap()
}

#[test]
fn gen_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let i3 = gen_and_load("identity:3", dir.path());
    assert_eq!(i3.as_row_major(), hutchinson::DenseSymmetric::identity(3).unwrap().as_row_major());
    let p = gen_and_load("rank:8:3:11", dir.path());
    assert!((p.exact_trace() - 3.0).abs() < 1e-12);
    let w = gen_and_load("wishart:4:2:0", dir.path());
    assert_eq!(w.dim(), 4);
    assert!(w.check_psd().is_ok());

    let est = json(&hutch(&[
        "estimate",
        "--matrix-market",
        dir.path().join("m.mtx").to_str().unwrap(),
        "--n",
        "50",
        "--format",
        "json",
    ]));
    assert_eq!(est["exact_trace"], w.exact_trace());

    assert_eq!(hutch(&["gen", "identity:3", "--out", "/no/such/dir/x.mtx"]).status.code(), Some(3));
}

#[test]
fn audit_exit_codes_and_reports() {
    let out = hutch(&["audit", "moments", "--suite-seed", "0", "--dmax", "8"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("0 failed"));

    let ratio = hutch(&["audit", "ratio", "--dmax", "100"]);
    assert_eq!(ratio.status.code(), Some(0));
    assert!(stdout(&ratio).contains("d=25"));
    assert_eq!(hutch(&["audit", "ratio", "--dmax", "100", "--strict"]).status.code(), Some(4));
    assert_eq!(hutch(&["audit", "ratio", "--dmax", "2"]).status.code(), Some(2));
    assert_eq!(hutch(&["audit", "tails", "--eps", "0.4"]).status.code(), Some(2));
    assert_eq!(hutch(&["audit", "nonsense"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("hyper");
    let out = hutch(&["audit", "hyper", "--num", "5", "--seed", "3", "--out", prefix.to_str().unwrap(), "--strict"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("hyper.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["seed"], 3);
    assert_eq!(report["passed"], 20);
    let csv = std::fs::read_to_string(dir.path().join("hyper.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("suite,input,quantity,bound,holds,margin"));
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn audit_coverage_small() {
    let v = json(&hutch(&[
        "audit", "coverage", "--gen", "diag-uniform:50:1", "--eps", "0.2", "--delta", "0.1", "--reps", "10", "--format", "json",
    ]));
    assert_eq!(v["cases"][0]["quantity"], 0.0);
    assert_eq!(hutch(&["audit", "coverage", "--eps", "0.1:0.2:2", "--reps", "1"]).status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_output() {
    let run = |t: &str| hutch(&["--threads", t, "audit", "tails", "--witness", "--format", "csv"]).stdout;
    assert_eq!(run("1"), run("4"));
}
