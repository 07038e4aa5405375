use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hutchinson::audit::{self, AuditReport, SuiteMatrix};
use hutchinson::bounds::{sample_size, BoundQuery, Method, EPS_LIMIT};
use hutchinson::operator::{generate, load_matrix_market, save_matrix_market, DenseSymmetric, DEFAULT_EIGEN_CAP};
use hutchinson::sampler::STREAM_ID;
use hutchinson::{estimate_trace, relative_error, ErrorKind, SymmetricOperator, SCHEMA_VERSION};
use serde_json::{json, Value};

use crate::{AuditArgs, CompareArgs, EstimateArgs, Format, GenArgs, PlanArgs, Suite};

#[derive(Debug)]
pub enum CliError {
    Lib(hutchinson::Error),
    Usage(String),
    File { path: PathBuf, source: io::Error },
    Strict { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.kind() == ErrorKind::Input => 3,
            CliError::File { .. } => 3,
            CliError::Lib(_) | CliError::Usage(_) => 2,
            CliError::Strict { .. } => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Usage(msg) => f.write_str(msg),
            CliError::File { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Strict { failed } => write!(f, "{failed} audit case(s) violated their bound"),
        }
    }
}

impl From<hutchinson::Error> for CliError {
    fn from(e: hutchinson::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn with_path<T>(path: &Path, r: hutchinson::Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        hutchinson::Error::Io(source) => CliError::File { path: path.to_path_buf(), source },
        other => CliError::Lib(other),
    })
}

/// Evenly spaced grid `start:stop:count`, or a single value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(Vec<f64>);

impl Grid {
    fn values(&self) -> &[f64] {
        &self.0
    }

    fn within_eps_limit(&self, name: &str) -> Result<&[f64]> {
        match self.0.iter().find(|&&x| !(x > 0.0 && x < EPS_LIMIT)) {
            Some(x) => Err(CliError::Usage(format!("{name} = {x} violates 0 < {name} < 3/8"))),
            None => Ok(&self.0),
        }
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("invalid number {t:?}: {e}"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [x] => Ok(Grid(vec![num(x)?])),
            [a, b, c] => {
                let (start, stop) = (num(a)?, num(b)?);
                let count: usize = c.trim().parse().map_err(|e| format!("invalid count {c:?}: {e}"))?;
                if count == 0 {
                    return Err("grid count must be at least 1".into());
                }
                if count == 1 {
                    return Ok(Grid(vec![start]));
                }
                let step = (stop - start) / (count - 1) as f64;
                // Rounded to 12 significant digits so `0.05:0.25:5` yields 0.15, not 0.15000000000000002.
                let tidy = |x: f64| format!("{x:.11e}").parse::<f64>().unwrap_or(x);
                Ok(Grid((0..count).map(|i| if i + 1 == count { stop } else { tidy(start + step * i as f64) }).collect()))
            }
            _ => Err(format!("expected start:stop:count or a single value, got {s:?}")),
        }
    }
}

fn print_json(value: &Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(hutchinson::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::Writer::from_writer(out)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Lib(e.into())
}

fn load(args: &EstimateArgs) -> Result<(String, DenseSymmetric)> {
    match (&args.gen, &args.matrix_market) {
        (Some(spec), _) => Ok((spec.to_string(), generate(spec)?)),
        (None, Some(path)) => Ok((format!("matrix-market:{}", path.display()), with_path(path, load_matrix_market(path))?)),
        (None, None) => Err(CliError::Usage("one of --gen or --matrix-market is required".into())),
    }
}

fn query(eps: f64, delta: f64, rank: Option<u64>) -> BoundQuery {
    let q = BoundQuery::new(eps, delta);
    match rank {
        Some(r) => q.with_rank(r),
        None => q,
    }
}

pub fn estimate(args: &EstimateArgs, format: Format) -> Result<()> {
    let (input, a) = load(args)?;
    let (n, plan) = match (args.n, args.eps, args.delta) {
        (Some(n), _, _) => (n, Value::Null),
        (None, Some(eps), Some(delta)) => {
            let rank = args.rank.or_else(|| args.method.needs_rank().then_some(a.dim() as u64));
            let n = sample_size(&query(eps, delta, rank), args.method)?;
            (n, json!({ "method": args.method.id(), "eps": eps, "delta": delta, "rank": rank, "n": n }))
        }
        _ => return Err(CliError::Usage("give --n, or both --eps and --delta".into())),
    };
    let est = estimate_trace(&a, n, args.seed)?;
    let exact = a.exact_trace();
    let rel = relative_error(est.mean, exact).ok();

    match format {
        Format::Json => print_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "stream": STREAM_ID,
            "input": input,
            "dim": a.dim(),
            "plan": plan,
            "n": est.n,
            "seed": est.seed,
            "estimate": est.mean,
            "sample_variance": est.sample_variance,
            "standard_error": est.standard_error(),
            "min_q": est.min_q,
            "max_q": est.max_q,
            "exact_trace": exact,
            "relative_error": rel,
        })),
        Format::Csv => {
            let mut w = csv_writer(io::stdout().lock());
            w.write_record(["input", "seed", "n", "estimate", "sample_variance", "min_q", "max_q", "exact_trace", "relative_error"])
                .map_err(csv_err)?;
            w.serialize((&input, est.seed, est.n, est.mean, est.sample_variance, est.min_q, est.max_q, exact, rel))
                .map_err(csv_err)?;
            w.flush()?;
            Ok(())
        }
        Format::Text => {
            println!("input           {input}");
            println!("stream          {STREAM_ID}");
            println!("seed            {}", est.seed);
            if let Value::Object(p) = &plan {
                println!("planned with    {} (eps={}, delta={})", p["method"].as_str().unwrap_or(""), p["eps"], p["delta"]);
            }
            println!("n               {}", est.n);
            println!("estimate        {}", est.mean);
            println!("standard error  {}", est.standard_error());
            println!("exact trace     {exact}");
            if let Some(r) = rel {
                println!("relative error  {r:e}");
            }
            Ok(())
        }
    }
}

pub fn plan(args: &PlanArgs, format: Format) -> Result<()> {
    let n = sample_size(&query(args.eps, args.delta, args.rank), args.method)?;
    match format {
        Format::Json => print_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "method": args.method.id(),
            "eps": args.eps,
            "delta": args.delta,
            "rank": args.rank,
            "n": n,
        })),
        Format::Csv => {
            let mut w = csv_writer(io::stdout().lock());
            w.write_record(["method", "eps", "delta", "rank", "n"]).map_err(csv_err)?;
            w.serialize((args.method.id(), args.eps, args.delta, args.rank, n)).map_err(csv_err)?;
            w.flush()?;
            Ok(())
        }
        Format::Text => {
            let rank = args.rank.map(|r| format!(", rank={r}")).unwrap_or_default();
            println!("n = {n}  ({}, eps={}, delta={}{rank})", args.method, args.eps, args.delta);
            Ok(())
        }
    }
}

const COMPARE_ORDER: [Method; 4] = [Method::ThisWork, Method::Roosta, Method::AvronFig, Method::AvronTable];

pub fn compare(args: &CompareArgs, format: Format) -> Result<()> {
    let grid = args.eps.within_eps_limit("ε")?;
    let rows = grid
        .iter()
        .map(|&eps| {
            let q = BoundQuery::new(eps, args.delta).with_rank(args.rank);
            let ns = COMPARE_ORDER.iter().map(|&m| sample_size(&q, m)).collect::<hutchinson::Result<Vec<_>>>()?;
            Ok((eps, ns))
        })
        .collect::<Result<Vec<_>>>()?;

    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    if format == Format::Json {
        let rows: Vec<Value> = rows
            .iter()
            .map(|(eps, ns)| json!({ "eps": eps, "this_work": ns[0], "roosta": ns[1], "avron_fig": ns[2], "avron_table": ns[3] }))
            .collect();
        let doc = json!({ "schema_version": SCHEMA_VERSION, "delta": args.delta, "rank": args.rank, "rows": rows });
        let mut sink = sink;
        serde_json::to_writer_pretty(&mut sink, &doc).map_err(hutchinson::Error::from)?;
        writeln!(sink)?;
        sink.flush()?;
        return Ok(());
    }
    let mut w = csv_writer(sink);
    w.write_record(["eps", "this_work", "roosta", "avron_fig", "avron_table"]).map_err(csv_err)?;
    for (eps, ns) in &rows {
        w.serialize((eps, ns[0], ns[1], ns[2], ns[3])).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn gen(args: &GenArgs, format: Format) -> Result<()> {
    let a = generate(&args.spec)?;
    with_path(&args.out, save_matrix_market(&a, &args.out))?;
    let rank = if a.dim() <= DEFAULT_EIGEN_CAP { Some(a.rank()?) } else { None };
    let trace = a.exact_trace();
    match format {
        Format::Json => print_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "generator": args.spec.to_string(),
            "path": args.out.display().to_string(),
            "dim": a.dim(),
            "trace": trace,
            "rank": rank,
        })),
        Format::Csv => {
            let mut w = csv_writer(io::stdout().lock());
            w.write_record(["generator", "path", "dim", "trace", "rank"]).map_err(csv_err)?;
            w.serialize((args.spec.to_string(), args.out.display().to_string(), a.dim(), trace, rank)).map_err(csv_err)?;
            w.flush()?;
            Ok(())
        }
        Format::Text => {
            let rank = rank.map(|r| format!(" rank={r}")).unwrap_or_default();
            println!("wrote {} ({}): dim={} trace={trace}{rank}", args.out.display(), args.spec, a.dim());
            Ok(())
        }
    }
}

fn audit_one(suite: Suite, args: &AuditArgs) -> Result<AuditReport> {
    let matrices = || -> Result<Vec<SuiteMatrix>> { Ok(audit::standard_suite(args.suite_seed)?) };
    let tagged = |r: AuditReport| r.with_config("suite_seed", args.suite_seed);
    Ok(match suite {
        Suite::Moments => tagged(audit::audit_moments(&matrices()?, args.dmax.unwrap_or(8))?),
        Suite::Tails => {
            let default = Grid(vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35]);
            let grid = args.eps.as_ref().unwrap_or(&default).within_eps_limit("ε")?;
            let report = if args.witness {
                audit::audit_tails_witness(&matrices()?, grid)?
            } else {
                audit::audit_tails(&matrices()?, grid, &hutchinson::oracle::Side::ALL, &audit::TailForm::ALL)?
            };
            tagged(report)
        }
        Suite::Mgf => tagged(audit::audit_mgf(&matrices()?, args.t.within_eps_limit("t")?)?),
        Suite::Hyper => audit::audit_hypercontractivity(args.num, args.m, args.dmax.unwrap_or(6), args.seed)?,
        Suite::Coverage => {
            let eps = match args.eps.as_ref().map(Grid::values) {
                None => 0.1,
                Some([eps]) => *eps,
                Some(_) => return Err(CliError::Usage("coverage takes a single --eps value".into())),
            };
            audit::audit_coverage(&args.gen, eps, args.delta, args.reps, args.seed, args.method)?
        }
        Suite::Ratio => audit::audit_ratio(args.dmax.unwrap_or(100))?,
        Suite::All => {
            let mut all = AuditReport::new("all", Vec::new()).with_seed(args.seed);
            for s in [Suite::Moments, Suite::Tails, Suite::Mgf, Suite::Hyper, Suite::Coverage, Suite::Ratio] {
                let part = audit_one(s, args)?;
                for (k, v) in &part.config {
                    all.config.insert(format!("{}.{k}", part.suite), v.clone());
                }
                all.extend(part);
            }
            all
        }
    })
}

fn write_report_files(report: &AuditReport, prefix: &Path) -> Result<()> {
    let with_ext = |ext: &str| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(ext);
        PathBuf::from(p)
    };
    let mut json = create(&with_ext(".json"))?;
    report.write_json(&mut json)?;
    writeln!(json)?;
    json.flush()?;
    report.write_csv(create(&with_ext(".csv"))?)?;
    Ok(())
}

fn print_summary(report: &AuditReport) {
    println!(
        "audit {}: {} cases, {} passed, {} failed",
        report.suite,
        report.cases.len(),
        report.passed,
        report.failed
    );
    for c in report.violations() {
        println!(
            "  VIOLATED [{}] {} {}: quantity {} > bound {} (margin {:e})",
            c.suite, c.input, c.params, c.quantity, c.bound, c.margin
        );
    }
    for note in &report.notes {
        println!("  note: {note}");
    }
}

pub fn audit(args: &AuditArgs, format: Format) -> Result<()> {
    let report = audit_one(args.suite, args)?;
    if let Some(prefix) = &args.out {
        write_report_files(&report, prefix)?;
    }
    match format {
        Format::Json => {
            let mut out = io::stdout().lock();
            report.write_json(&mut out)?;
            writeln!(out)?;
        }
        Format::Csv => report.write_csv(io::stdout().lock())?,
        Format::Text => print_summary(&report),
    }
    if args.strict && report.failed > 0 {
        return Err(CliError::Strict { failed: report.failed });
    }
    Ok(())
}
