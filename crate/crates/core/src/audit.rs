//! Checks the published inequalities against exact oracles and Monte Carlo.
//!
//! Every bound is evaluated verbatim. A case holds when
//! `quantity ≤ bound + 1e−12 · max(1, |bound|)`; failures are reported with
//! enough input (generator spec plus parameters) to replay them with one
//! oracle call.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundQuery, Method, SubGamma, EPS_LIMIT, HUTCHINSON_SCALE};
use crate::error::{Error, Result};
use crate::estimator::{estimate_trace, relative_error};
use crate::numeric::mix64;
use crate::operator::{generate, DenseSymmetric, GeneratorSpec, SymmetricOperator};
use crate::oracle::{exact_distribution, ChaosDistribution, ChaosPolynomial, Side};
use crate::SCHEMA_VERSION;

const VIOLATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCase {
    pub suite: String,
    /// Generator spec or other replayable descriptor of the input.
    pub input: String,
    /// Case parameters such as `d=3` or `eps=0.3 side=upper form=theorem`.
    pub params: String,
    pub quantity: f64,
    pub bound: f64,
    pub holds: bool,
    pub margin: f64,
}

impl AuditCase {
    pub fn new(suite: &str, input: &str, params: String, quantity: f64, bound: f64) -> Self {
        let holds = quantity <= bound + VIOLATION_TOLERANCE * bound.abs().max(1.0);
        Self {
            suite: suite.to_string(),
            input: input.to_string(),
            params,
            quantity,
            bound,
            holds,
            margin: bound - quantity,
        }
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.split_whitespace().find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub suite: String,
    pub seed: Option<u64>,
    pub config: BTreeMap<String, String>,
    pub passed: usize,
    pub failed: usize,
    pub cases: Vec<AuditCase>,
    pub notes: Vec<String>,
}

impl AuditReport {
    pub fn new(suite: &str, cases: Vec<AuditCase>) -> Self {
        let passed = cases.iter().filter(|c| c.holds).count();
        Self {
            schema_version: SCHEMA_VERSION,
            suite: suite.to_string(),
            seed: None,
            config: BTreeMap::new(),
            passed,
            failed: cases.len() - passed,
            cases,
            notes: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_config(mut self, key: &str, value: impl ToString) -> Self {
        self.config.insert(key.to_string(), value.to_string());
        self
    }

    pub fn violations(&self) -> impl Iterator<Item = &AuditCase> {
        self.cases.iter().filter(|c| !c.holds)
    }

    /// Appends another report's cases, keeping counts consistent.
    pub fn extend(&mut self, other: AuditReport) {
        self.passed += other.passed;
        self.failed += other.failed;
        self.cases.extend(other.cases);
        self.notes.extend(other.notes);
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// One row per case: `suite,input,quantity,bound,holds,margin`. The
    /// input column carries the descriptor followed by the case parameters.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["suite", "input", "quantity", "bound", "holds", "margin"])?;
        for c in &self.cases {
            let input = if c.params.is_empty() { c.input.clone() } else { format!("{} {}", c.input, c.params) };
            w.serialize((&c.suite, input, c.quantity, c.bound, c.holds, c.margin))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A matrix under audit together with its replayable descriptor.
#[derive(Debug, Clone)]
pub struct SuiteMatrix {
    pub label: String,
    pub matrix: DenseSymmetric,
}

impl SuiteMatrix {
    pub fn generated(spec: &GeneratorSpec) -> Result<Self> {
        Ok(Self { label: spec.to_string(), matrix: generate(spec)? })
    }

    pub fn witness() -> Self {
        Self {
            label: "witness:[[1,0.5],[0.5,1]]".to_string(),
            matrix: DenseSymmetric::from_rows(&[[1.0, 0.5], [0.5, 1.0]]).expect("witness is symmetric"),
        }
    }
}

/// 20 Wishart matrices `wishart:10:10:(s..s+20)`, `I₁₀` and `diag-uniform:10:s`.
pub fn standard_suite(suite_seed: u64) -> Result<Vec<SuiteMatrix>> {
    let mut specs: Vec<GeneratorSpec> =
        (0..20).map(|i| GeneratorSpec::wishart(10, 10, suite_seed.wrapping_add(i))).collect();
    specs.push(GeneratorSpec::identity(10));
    specs.push(GeneratorSpec::diagonal_uniform(10, suite_seed));
    specs.iter().map(SuiteMatrix::generated).collect()
}

/// Wishart matrices for every `k` in `ks` and seed in `seeds`.
pub fn wishart_sweep(m: usize, ks: &[usize], seeds: std::ops::Range<u64>) -> Result<Vec<SuiteMatrix>> {
    ks.iter()
        .flat_map(|&k| seeds.clone().map(move |s| GeneratorSpec::wishart(m, k, s)))
        .map(|spec| SuiteMatrix::generated(&spec))
        .collect()
}

fn check_psd(item: &SuiteMatrix) -> Result<()> {
    item.matrix.check_psd().map(|_| ())
}

fn per_matrix<F>(suite: &[SuiteMatrix], f: F) -> Result<Vec<AuditCase>>
where
    F: Fn(&SuiteMatrix) -> Result<Vec<AuditCase>> + Sync + Send,
{
    let nested: Vec<Vec<AuditCase>> = suite.par_iter().map(f).collect::<Result<_>>()?;
    Ok(nested.concat())
}

/// Exact `‖err‖_d` against `d − 1` for `d = 2..=d_max`.
pub fn audit_moments(suite: &[SuiteMatrix], d_max: u32) -> Result<AuditReport> {
    if d_max < 2 {
        return Err(Error::domain(format!("d_max must be at least 2, got {d_max}")));
    }
    let cases = per_matrix(suite, |item| {
        check_psd(item)?;
        let dist = exact_distribution(&item.matrix)?;
        (2..=d_max)
            .map(|d| Ok(AuditCase::new("moments", &item.label, format!("d={d}"), dist.abs_norm(d), bounds::moment_bound(d)?)))
            .collect()
    })?;
    Ok(AuditReport::new("moments", cases).with_config("d_max", d_max))
}

/// Which published tail expression a case is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailForm {
    /// `exp(−ε² / (2(1 − (8/3)ε)))`.
    Theorem,
    /// `exp(−ε² / (v + cε))` with `(v, c) = (1, 8/3)`.
    Lemma,
}

impl TailForm {
    pub const ALL: [TailForm; 2] = [TailForm::Theorem, TailForm::Lemma];

    pub fn id(self) -> &'static str {
        match self {
            TailForm::Theorem => "theorem",
            TailForm::Lemma => "lemma",
        }
    }

    pub fn bound(self, eps: f64) -> Result<f64> {
        match self {
            TailForm::Theorem => bounds::tail_theorem(eps, 1),
            TailForm::Lemma => SubGamma::one_shot().tail(eps),
        }
    }
}

fn check_open_grid(name: &str, grid: &[f64]) -> Result<()> {
    match grid.iter().find(|&&x| !(x > 0.0 && x < EPS_LIMIT)) {
        Some(x) => Err(Error::domain(format!("{name} grid value {x} outside (0, 3/8)"))),
        None => Ok(()),
    }
}

/// Exact one-shot tails against each requested bound form.
pub fn audit_tails(suite: &[SuiteMatrix], eps_grid: &[f64], sides: &[Side], forms: &[TailForm]) -> Result<AuditReport> {
    check_open_grid("ε", eps_grid)?;
    let cases = per_matrix(suite, |item| {
        check_psd(item)?;
        let dist = exact_distribution(&item.matrix)?;
        let mut out = Vec::new();
        for &eps in eps_grid {
            for &side in sides {
                let tail = dist.tail(eps, side);
                for &form in forms {
                    let params = format!("eps={eps} side={} form={}", side.id(), form.id());
                    out.push(AuditCase::new("tails", &item.label, params, tail, form.bound(eps)?));
                }
            }
        }
        Ok(out)
    })?;
    Ok(AuditReport::new("tails", cases).with_config("eps_grid", format!("{eps_grid:?}")))
}

/// The 2×2 witness at ε = 0.3 against the theorem form on all three sides,
/// followed by the one-sided cases of `suite` in both forms.
pub fn audit_tails_witness(suite: &[SuiteMatrix], eps_grid: &[f64]) -> Result<AuditReport> {
    let mut report = audit_tails(&[SuiteMatrix::witness()], &[0.3], &Side::ALL, &[TailForm::Theorem])?;
    report.extend(audit_tails(suite, eps_grid, &[Side::Upper, Side::Lower], &TailForm::ALL)?);
    report.notes.push(
        "two-sided witness cases test the |err| reading; one-sided suite cases are informative".to_string(),
    );
    Ok(report.with_config("witness", true).with_config("eps_grid", format!("{eps_grid:?}")))
}

/// Exact `ln E exp(±t · err)` against the `Γ(1, 8/3)` envelope.
pub fn audit_mgf(suite: &[SuiteMatrix], t_grid: &[f64]) -> Result<AuditReport> {
    check_open_grid("t", t_grid)?;
    let envelope = SubGamma::one_shot();
    let cases = per_matrix(suite, |item| {
        check_psd(item)?;
        let dist = exact_distribution(&item.matrix)?;
        let mut out = Vec::new();
        for &t in t_grid {
            let bound = envelope.mgf_envelope(t)?;
            for (sign, name) in [(1.0, "+"), (-1.0, "-")] {
                out.push(AuditCase::new("mgf", &item.label, format!("t={t} sign={name}"), dist.log_mgf(sign * t), bound));
            }
        }
        Ok(out)
    })?;
    Ok(AuditReport::new("mgf", cases).with_config("t_grid", format!("{t_grid:?}")))
}

/// `‖F‖_d ≤ (d − 1)‖F‖₂` for `d = 3..=d_max` on the given chaoses.
pub fn audit_chaoses(chaoses: &[(String, ChaosPolynomial)], d_max: u32) -> Result<AuditReport> {
    if d_max < 3 {
        return Err(Error::domain(format!("d_max must be at least 3, got {d_max}")));
    }
    let nested: Vec<Vec<AuditCase>> = chaoses
        .par_iter()
        .map(|(label, chaos)| {
            let dist = ChaosDistribution::new(chaos)?;
            let two = dist.norm(2);
            Ok((3..=d_max)
                .map(|d| AuditCase::new("hyper", label, format!("d={d}"), dist.norm(d), f64::from(d - 1) * two))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(AuditReport::new("hyper", nested.concat()).with_config("d_max", d_max))
}

/// `num_random` chaoses on `m` variables with standard-normal weights.
pub fn audit_hypercontractivity(num_random: u64, m: usize, d_max: u32, seed: u64) -> Result<AuditReport> {
    let chaoses = (0..num_random)
        .map(|i| Ok((format!("chaos:normal:{m}:{seed}:{i}"), ChaosPolynomial::random_normal(m, seed, i)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(audit_chaoses(&chaoses, d_max)?.with_seed(seed).with_config("m", m).with_config("num_random", num_random))
}

/// Seed of repetition `rep` in a coverage run.
pub fn coverage_rep_seed(seed: u64, rep: u64) -> u64 {
    mix64(mix64(seed) ^ rep)
}

/// Plans `n` with `method`, runs `reps` independent estimates and compares
/// the empirical miss rate `P(|err| > ε)` with `δ`.
pub fn audit_coverage(
    spec: &GeneratorSpec,
    eps: f64,
    delta: f64,
    reps: u64,
    seed: u64,
    method: Method,
) -> Result<AuditReport> {
    let item = SuiteMatrix::generated(spec)?;
    audit_coverage_matrix(&item, eps, delta, reps, seed, method)
}

pub fn audit_coverage_matrix(
    item: &SuiteMatrix,
    eps: f64,
    delta: f64,
    reps: u64,
    seed: u64,
    method: Method,
) -> Result<AuditReport> {
    let a = &item.matrix;
    let mut query = BoundQuery::new(eps, delta);
    if method.needs_rank() {
        let rank = if a.dim() <= crate::operator::DEFAULT_EIGEN_CAP { a.rank()? } else { a.dim() };
        query = query.with_rank(rank.max(1) as u64);
    }
    let n = bounds::sample_size(&query, method)?;
    let trace = a.trace_hint().ok_or(Error::UnknownTrace)?;
    relative_error(trace, trace)?;

    let errors: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let est = estimate_trace(a, n, coverage_rep_seed(seed, r))?;
            relative_error(est.mean, trace)
        })
        .collect::<Result<_>>()?;

    let config = |r: AuditReport| {
        r.with_seed(seed)
            .with_config("eps", eps)
            .with_config("delta", delta)
            .with_config("reps", reps)
            .with_config("method", method)
            .with_config("n", n)
    };
    if errors.is_empty() {
        return Ok(config(AuditReport::new("coverage", Vec::new())));
    }
    let misses = errors.iter().filter(|e| e.abs() > eps).count();
    let miss_rate = misses as f64 / reps as f64;
    let worst = errors.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let params = format!("method={method} n={n} reps={reps} eps={eps} delta={delta} seed={seed}");
    let mut report = config(AuditReport::new("coverage", vec![AuditCase::new("coverage", &item.label, params, miss_rate, delta)]));
    report.notes.push(format!("misses={misses} max_abs_err={worst:e}"));
    Ok(report)
}

/// Shape of the sequence `a_{d+1}/a_d` on `2..=d_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioScan {
    pub d_max: u32,
    /// First `d` with ratio strictly above 8/3.
    pub first_exceed: Option<u32>,
    /// First `d` with `ratio(d) > ratio(d − 1)`.
    pub first_increase: Option<u32>,
    pub argmin: u32,
    pub minimum: f64,
    pub argmax: u32,
    pub supremum: f64,
}

pub fn scan_ratio(d_max: u32) -> Result<RatioScan> {
    if d_max < 3 {
        return Err(Error::domain(format!("d_max must be at least 3, got {d_max}")));
    }
    let ratios: Vec<(u32, f64)> = (2..=d_max).map(|d| Ok((d, bounds::taylor_ratio(d)?))).collect::<Result<_>>()?;
    let first_exceed = ratios.iter().find(|(_, r)| *r > HUTCHINSON_SCALE).map(|(d, _)| *d);
    let first_increase = ratios.windows(2).find(|w| w[1].1 > w[0].1).map(|w| w[1].0);
    let (argmin, minimum) = ratios.iter().copied().fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let (argmax, supremum) =
        ratios.iter().copied().fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    Ok(RatioScan { d_max, first_exceed, first_increase, argmin, minimum, argmax, supremum })
}

/// `taylor_ratio(d)` against 8/3 for `d = 2..=d_max`, with a monotonicity summary.
pub fn audit_ratio(d_max: u32) -> Result<AuditReport> {
    let scan = scan_ratio(d_max)?;
    let cases = (2..=d_max)
        .map(|d| Ok(AuditCase::new("ratio", "taylor-ratio", format!("d={d}"), bounds::taylor_ratio(d)?, HUTCHINSON_SCALE)))
        .collect::<Result<Vec<_>>>()?;
    let mut report = AuditReport::new("ratio", cases).with_config("d_max", d_max);
    report.notes.push(match scan.first_increase {
        Some(d) => format!("ratio decreases up to d={} (minimum {:.6}) and increases from d={d}", scan.argmin, scan.minimum),
        None => format!("ratio decreasing on 2..={d_max}"),
    });
    report.notes.push(match scan.first_exceed {
        Some(d) => format!("ratio first exceeds 8/3 at d={d}; supremum observed {:.9} at d={}", scan.supremum, scan.argmax),
        None => format!("ratio stays at or below 8/3 on 2..={d_max}; supremum {:.9} at d={}", scan.supremum, scan.argmax),
    });
    Ok(report)
}
