//! Acceptance suite: one line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test -p hutchinson-cli --test acceptance`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use hutchinson::audit::{self, SuiteMatrix};
use hutchinson::bounds::{sample_size, tail_theorem, taylor_ratio, BoundQuery, Method, HUTCHINSON_SCALE};
use hutchinson::oracle::{exact_distribution, variance_formula};
use hutchinson::operator::GeneratorSpec;
use hutchinson::SymmetricOperator;
use serde_json::Value;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn suite() -> Result<Vec<SuiteMatrix>, String> {
    audit::standard_suite(0).map_err(|e| e.to_string())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn unbiasedness() -> Outcome {
    let mut worst = 0.0_f64;
    for item in suite()? {
        let dist = exact_distribution(&item.matrix).map_err(|e| e.to_string())?;
        let r = rel(dist.mean(), item.matrix.exact_trace());
        ensure(r <= 1e-12, || format!("{}: relative deviation {r:e}", item.label))?;
        worst = worst.max(r);
    }
    Ok(format!("22 matrices, max relative deviation {worst:.1e} ≤ 1e-12"))
}

fn no_violations(report: hutchinson::Result<audit::AuditReport>) -> Outcome {
    let report = report.map_err(|e| e.to_string())?;
    if let Some(c) = report.violations().next() {
        return Err(format!("{} {}: {} > {}", c.input, c.params, c.quantity, c.bound));
    }
    ensure(!report.cases.is_empty(), || "no cases ran".into())?;
    Ok(format!("{} cases, 0 violations", report.cases.len()))
}

fn moments() -> Outcome {
    no_violations(audit::audit_moments(&suite()?, 8))
}

fn variance() -> Outcome {
    let mut worst = 0.0_f64;
    for item in suite()? {
        let a = &item.matrix;
        let dist = exact_distribution(a).map_err(|e| e.to_string())?;
        let tr = a.exact_trace();
        let off_diagonal: f64 = (0..a.dim())
            .flat_map(|i| (0..a.dim()).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).powi(2))
            .sum::<f64>()
            * 2.0;
        let r = rel(dist.abs_moment(2) * tr * tr, off_diagonal);
        ensure(r <= 1e-10, || format!("{}: relative deviation {r:e}", item.label))?;
        ensure(rel(variance_formula(a), off_diagonal) <= 1e-12, || format!("{}: variance formula", item.label))?;
        worst = worst.max(r);
    }
    let w = exact_distribution(&SuiteMatrix::witness().matrix).map_err(|e| e.to_string())?;
    ensure(w.abs_moment(2) == 0.25, || format!("witness Var(err) = {}", w.abs_moment(2)))?;
    Ok(format!("max relative deviation {worst:.1e} ≤ 1e-10; witness Var(err) = 0.25"))
}

fn hypercontractivity() -> Outcome {
    no_violations(audit::audit_hypercontractivity(100, 8, 6, 0))
}

fn mgf() -> Outcome {
    let t: Vec<f64> = (1..=7).map(|i| 0.05 * i as f64).collect();
    no_violations(audit::audit_mgf(&suite()?, &t))
}

fn n(method: Method, eps: f64, delta: f64, rank: Option<u64>) -> Result<u64, String> {
    let q = BoundQuery::new(eps, delta);
    let q = if let Some(r) = rank { q.with_rank(r) } else { q };
    sample_size(&q, method).map_err(|e| e.to_string())
}

fn planner_numbers() -> Outcome {
    let cases = [
        (Method::ThisWork, None, 1014),
        (Method::Roosta, None, 4561),
        (Method::AvronFig, Some(7840), 9525),
        (Method::AvronTable, Some(7840), 4_708_561),
    ];
    for (method, rank, expected) in cases {
        let got = n(method, 0.1, 0.001, rank)?;
        ensure(got == expected, || format!("{method}: {got} ≠ {expected}"))?;
    }
    Ok("1014 / 4561 / 9525 / 4708561".into())
}

fn ordering() -> Outcome {
    for eps in [0.05, 0.1, 0.15, 0.2, 0.25] {
        let this = n(Method::ThisWork, eps, 0.001, None)?;
        let roosta = n(Method::Roosta, eps, 0.001, None)?;
        let avron = n(Method::AvronFig, eps, 0.001, Some(7840))?;
        ensure(this < roosta && roosta < avron, || format!("eps={eps}: {this}, {roosta}, {avron}"))?;
    }
    Ok("this-work < roosta < avron-fig on 5 rows".into())
}

fn planner_tail_consistency() -> Outcome {
    let mut worst = 0.0_f64;
    for eps in [0.05, 0.1, 0.15, 0.2, 0.25] {
        for delta in [0.1, 0.01, 0.001, 1e-4, 1e-5] {
            let size = n(Method::ThisWork, eps, delta, None)?;
            let tail = tail_theorem(eps, size).map_err(|e| e.to_string())?;
            ensure(tail <= delta, || format!("eps={eps} delta={delta}: tail {tail:e}"))?;
            worst = worst.max(tail / delta);
        }
    }
    Ok(format!("25 grid points, max tail/δ = {worst:.4}"))
}

fn coverage() -> Outcome {
    let spec = GeneratorSpec::wishart(256, 256, 0);
    let report = audit::audit_coverage(&spec, 0.1, 0.05, 2000, 0, Method::ThisWork).map_err(|e| e.to_string())?;
    ensure(report.config.get("n").map(String::as_str) == Some("440"), || format!("planned n = {:?}", report.config.get("n")))?;
    let case = report.cases.first().ok_or("no coverage case")?;
    ensure(case.holds, || format!("miss rate {} > 0.05", case.quantity))?;
    Ok(format!("n = 440, miss rate {} ≤ 0.05 over 2000 reps", case.quantity))
}

fn hutch(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_hutch")).args(args).output().map_err(|e| e.to_string())
}

fn witness() -> Outcome {
    let out = hutch(&["audit", "tails", "--witness", "--format", "json"])?;
    ensure(out.status.success(), || format!("exit {:?}", out.status.code()))?;
    let report: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let cases = report["cases"].as_array().ok_or("no cases")?;
    let param = |c: &Value, key: &str| {
        c["params"].as_str().unwrap_or("").split_whitespace().find_map(|kv| kv.strip_prefix(key)?.strip_prefix('=')).map(str::to_owned)
    };
    let flagged: Vec<&Value> = cases
        .iter()
        .filter(|c| c["holds"] == false && param(c, "side").as_deref() == Some("two-sided"))
        .collect();
    ensure(flagged.len() == 1, || format!("{} two-sided violations", flagged.len()))?;
    let c = flagged[0];
    ensure(c["input"].as_str().is_some_and(|s| s.starts_with("witness")), || format!("flagged {}", c["input"]))?;
    ensure(param(c, "eps").as_deref() == Some("0.3"), || format!("flagged {}", c["params"]))?;
    let (q, b) = (c["quantity"].as_f64().unwrap_or(f64::NAN), c["bound"].as_f64().unwrap_or(f64::NAN));
    ensure(q == 1.0 && (b - 0.7985).abs() < 1e-4, || format!("quantity {q}, bound {b}"))?;
    let one_sided = cases
        .iter()
        .filter(|c| !c["input"].as_str().unwrap_or("").starts_with("witness"))
        .filter(|c| matches!(param(c, "side").as_deref(), Some("upper" | "lower")))
        .count();
    ensure(one_sided == 22 * 7 * 2 * 2, || format!("{one_sided} one-sided suite cases"))?;
    let informative = cases.len() - 3 - one_sided;
    ensure(informative == 0, || format!("{informative} unexpected cases"))?;
    Ok(format!("1 two-sided violation (quantity 1 vs bound {b:.6}); {one_sided} one-sided cases reported"))
}

fn ratio_scan() -> Outcome {
    let r2 = taylor_ratio(2).map_err(|e| e.to_string())?;
    ensure(r2 == HUTCHINSON_SCALE, || format!("taylor_ratio(2) = {r2}"))?;
    let scan = audit::scan_ratio(100).map_err(|e| e.to_string())?;
    ensure(scan.first_exceed == Some(25), || format!("first exceedance {:?}", scan.first_exceed))?;
    Ok(format!("ratio(2) = 8/3; first ratio > 8/3 at d = 25 (minimum at d = {})", scan.argmin))
}

fn reproducibility() -> Outcome {
    let run = |threads: &str| -> Result<Vec<u8>, String> {
        let args = ["--threads", threads, "estimate", "--gen", "wishart:256:256:3", "--n", "1000", "--seed", "7", "--format", "json"];
        let out = hutch(&args)?;
        ensure(out.status.success(), || format!("threads {threads}: exit {:?}", out.status.code()))?;
        Ok(out.stdout)
    };
    let one = run("1")?;
    for threads in ["2", "8"] {
        ensure(run(threads)? == one, || format!("output differs at --threads {threads}"))?;
    }
    Ok("bit-identical JSON at --threads 1, 2, 8".into())
}

fn main() -> ExitCode {
    type Criterion = (u32, &'static str, fn() -> Outcome, Option<Duration>);
    let secs = |s: u64| Some(Duration::from_secs(s));
    let criteria: [Criterion; 12] = [
        (1, "unbiasedness", unbiasedness, secs(1)),
        (2, "moment bound", moments, secs(5)),
        (3, "variance cross-check", variance, None),
        (4, "hypercontractivity", hypercontractivity, secs(10)),
        (5, "mgf envelope", mgf, secs(5)),
        (6, "planner numbers", planner_numbers, None),
        (7, "planner ordering", ordering, None),
        (8, "planner/tail consistency", planner_tail_consistency, None),
        (9, "coverage", coverage, secs(60)),
        (10, "audit witness", witness, None),
        (11, "ratio scan", ratio_scan, None),
        (12, "reproducibility", reproducibility, None),
    ];
    let mut failures = 0;
    for (id, name, check, limit) in criteria {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, limit) {
            if elapsed > limit {
                outcome = Err(format!("took {elapsed:.2?}, limit {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {id:>2} {name}: {detail} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 12 - failures);
    if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
