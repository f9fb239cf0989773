//! Command-line front end: loads a function spec, runs one command and
//! renders the report as JSON or CSV.
//!
//! Exit status is 0 on success, 1 for validation errors (unreadable or
//! malformed spec, bad point, box or flags) and 2 for failures that surface
//! during evaluation. Failures print a JSON error record on stdout.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::autodiff::evaluate_jet;
use crate::classify::{classify_quasi_sum, verify_theorem_41, verify_theorem_42, ClassificationResult};
use crate::domain::{DomainBox, Sampling};
use crate::elasticity::{all_pairs, detect_ces, hicks_from_jet, Elasticity, PairValue};
use crate::error::Error;
use crate::geometry::{GeometryConsistency, GraphGeometry};
use crate::prodfun::spec::FunctionSpec;
use crate::prodfun::{FamilyTag, FunctionExpr, QuasiSumSpec};
use crate::tolerance::Tolerances;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative half-width of the validation box built around `--at` when no
/// `--box` is given.
const POINT_BOX_REL: f64 = 1e-6;
const DEFAULT_BOX: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Value, gradient and Hessian at --at.
    Eval,
    /// Hicks elasticities at --at, or the CES detection report over --box.
    Elasticity,
    /// Graph-hypersurface invariants at --at.
    Curvature,
    /// Quasi-sum classification over --box.
    Classify,
    /// Theorem check over --box; needs --theorem.
    Verify,
    /// Table of x, f, W, G, flatness residual and H12 over a log-spaced grid.
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum TheoremArg {
    #[value(name = "1.1")]
    #[serde(rename = "1.1")]
    T11,
    #[value(name = "4.1")]
    #[serde(rename = "4.1")]
    T41,
    #[value(name = "4.2")]
    #[serde(rename = "4.2")]
    T42,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "prodgeom", version, about = "Elasticity of substitution and graph curvature of production functions")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Function spec (JSON).
    #[arg(long = "fn", value_name = "PATH")]
    pub function: PathBuf,
    /// Evaluation point, comma separated.
    #[arg(long, value_name = "P1,P2,..")]
    pub at: Option<String>,
    /// Sampling box, `lo:hi` per axis, comma separated. Defaults to [0.5, 2]^n.
    #[arg(long = "box", value_name = "LO:HI,..")]
    pub domain: Option<String>,
    /// Sample count; for scan, an upper bound on the number of grid points.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Input pair for elasticity at a point, 1-based.
    #[arg(long, value_name = "I,J")]
    pub pair: Option<String>,
    #[arg(long, value_enum)]
    pub theorem: Option<TheoremArg>,
    /// Output format; scan defaults to csv, everything else to json.
    #[arg(long, value_enum)]
    pub out: Option<OutputFormat>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core, 1 runs serially.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Failure {
    status: i32,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { status: if e.is_validation() { 1 } else { 2 }, kind: e.kind(), message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { status: 1, kind: "usage", message: message.into() }
}

// --- number formatting -------------------------------------------------

/// 17 significant digits, enough to round-trip any f64.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

struct SigFormatter(PrettyFormatter<'static>);

impl Formatter for SigFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with every float printed by [`format_f64`]; non-finite
/// floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("reports serialize to JSON");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.to_string(),
            (None, Some(i)) => i.to_string(),
            _ => format_f64(n.as_f64().expect("number is representable")),
        },
        Value::String(s) => s.clone(),
        _ => unreachable!("containers are flattened"),
    }
}

fn flatten(path: &str, v: &Value, out: &mut String) {
    let child = |key: &str| if path.is_empty() { key.to_string() } else { format!("{path}.{key}") };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&child(k), x, out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&child(&i.to_string()), x, out);
            }
        }
        _ => {
            let _ = writeln!(out, "{},{}", csv_field(path), csv_field(&scalar_text(v)));
        }
    }
}

/// `path,value` rows, one per leaf of the JSON report.
pub fn to_flat_csv<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("reports serialize to JSON");
    let mut out = String::from("path,value\n");
    flatten("", &v, &mut out);
    out
}

// --- reports -----------------------------------------------------------

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: Command,
    spec_digest: &'a str,
    seed: u64,
    samples: usize,
    tolerances: Tolerances,
    result: T,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    tool: &'static str,
    version: &'static str,
    command: Command,
    spec_digest: Option<&'a str>,
    status: i32,
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: &'a str,
}

#[derive(Serialize)]
struct EvalResult {
    family: FamilyTag,
    point: Vec<f64>,
    value: f64,
    gradient: Vec<f64>,
    hessian: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct PointElasticities {
    point: Vec<f64>,
    pairs: Vec<PairValue>,
}

#[derive(Serialize)]
struct CurvatureResult {
    #[serde(flatten)]
    geometry: GraphGeometry,
    consistency: GeometryConsistency,
}

#[derive(Serialize)]
struct ClassifyResult {
    family: FamilyTag,
    representation: QuasiSumSpec,
    #[serde(flatten)]
    classification: ClassificationResult,
}

#[derive(Serialize)]
struct TheoremOneOne {
    theorem: TheoremArg,
    #[serde(flatten)]
    result: ClassifyResult,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct ScanRow {
    point: Vec<f64>,
    f: f64,
    W: f64,
    G: f64,
    flatness_residual: f64,
    H12: Elasticity,
}

#[derive(Serialize)]
struct ScanResult {
    per_axis: usize,
    rows: Vec<ScanRow>,
}

// --- argument plumbing -------------------------------------------------

fn parse_point(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>().map_err(|_| Error::InvalidPoint(format!("cannot parse coordinate {s:?}")))
        })
        .collect()
}

fn parse_pair(text: &str, n: usize) -> Result<(usize, usize), Failure> {
    let idx: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--pair expects two 1-based indices, got {text:?}")))?;
    match idx.as_slice() {
        [i, j] if *i >= 1 && *j >= 1 => {
            for k in [*i, *j] {
                if k > n {
                    return Err(Error::IndexOutOfRange { index: k - 1, inputs: n }.into());
                }
            }
            Ok((i - 1, j - 1))
        }
        _ => Err(usage(format!("--pair expects two 1-based indices, got {text:?}"))),
    }
}

/// Number of grid nodes per axis: the largest `k >= 2` with `k^n <= samples`.
pub fn grid_nodes_per_axis(samples: usize, n: usize) -> usize {
    let fits = |k: usize| (0..n).try_fold(1usize, |acc, _| acc.checked_mul(k)).is_some_and(|t| t <= samples);
    let mut k = 2;
    while fits(k + 1) {
        k += 1;
    }
    k
}

struct Loaded {
    expr: FunctionExpr,
    point: Option<Vec<f64>>,
    domain: DomainBox,
}

fn load(cfg: &RunConfig, text: &str) -> Result<Loaded, Failure> {
    let spec = FunctionSpec::parse(text)?;
    let n = spec.inputs();
    let point = cfg.at.as_deref().map(parse_point).transpose()?;
    if let Some(p) = &point {
        crate::domain::check_point(p, n)?;
    }
    let given = cfg.domain.as_deref().map(DomainBox::parse).transpose()?;
    if let Some(b) = &given {
        b.check_dim(n)?;
    }
    let default_box = || DomainBox::cube(DEFAULT_BOX.0, DEFAULT_BOX.1, n);
    let point_command = matches!(cfg.command, Command::Eval | Command::Curvature)
        || (cfg.command == Command::Elasticity && point.is_some());
    let build_box = match (&given, &point) {
        (Some(b), _) => b.clone(),
        (None, Some(p)) if point_command => DomainBox::around(p, POINT_BOX_REL)?,
        _ => default_box()?,
    };
    let expr = spec.build(&build_box)?;
    let domain = match given {
        Some(b) => b,
        None => default_box()?,
    };
    Ok(Loaded { expr, point, domain })
}

fn need_point(loaded: &Loaded, command: &str) -> Result<Vec<f64>, Failure> {
    loaded.point.clone().ok_or_else(|| usage(format!("{command} needs --at")))
}

fn render<T: Serialize>(cfg: &RunConfig, digest: &str, result: T) -> String {
    let env = Envelope {
        tool: "prodgeom",
        version: VERSION,
        command: cfg.command,
        spec_digest: digest,
        seed: cfg.seed,
        samples: cfg.samples,
        tolerances: Tolerances::default(),
        result,
    };
    match cfg.out.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => to_json(&env),
        OutputFormat::Csv => to_flat_csv(&env),
    }
}

fn scan_csv(cfg: &RunConfig, digest: &str, n: usize, result: &ScanResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tool,prodgeom");
    let _ = writeln!(out, "# version,{VERSION}");
    let _ = writeln!(out, "# spec_digest,{digest}");
    let _ = writeln!(out, "# samples,{}", cfg.samples);
    let _ = writeln!(out, "# per_axis,{}", result.per_axis);
    if let Value::Object(tol) = serde_json::to_value(Tolerances::default()).expect("tolerances serialize") {
        for (k, v) in tol {
            let _ = writeln!(out, "# tolerance.{k},{}", scalar_text(&v));
        }
    }
    let header: Vec<String> =
        (1..=n).map(|i| format!("x{i}")).chain(["f", "W", "G", "flatness_residual", "H12"].map(String::from)).collect();
    let _ = writeln!(out, "{}", header.join(","));
    for row in &result.rows {
        let h12 = match row.H12 {
            Elasticity::Finite(v) => format_f64(v),
            Elasticity::Infinite => "infinite".into(),
            Elasticity::Degenerate => "degenerate".into(),
        };
        let cells: Vec<String> = row
            .point
            .iter()
            .chain([&row.f, &row.W, &row.G, &row.flatness_residual])
            .map(|&v| format_f64(v))
            .chain(std::iter::once(h12))
            .collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn scan_row(expr: &FunctionExpr, p: &[f64]) -> Result<ScanRow, Error> {
    let jet = evaluate_jet(expr, p)?;
    let g = GraphGeometry::from_jet(p, &jet);
    Ok(ScanRow {
        point: p.to_vec(),
        f: g.value,
        W: g.w,
        G: g.gauss_kronecker,
        flatness_residual: g.flatness_residual,
        H12: hicks_from_jet(&jet, p, 0, 1)?,
    })
}

fn classify_result(loaded: &Loaded, sampling: Sampling) -> Result<ClassifyResult, Failure> {
    let representation = loaded.expr.to_quasi_sum().ok_or(Error::NotQuasiSum)?;
    let classification = classify_quasi_sum(&representation, &loaded.domain, sampling)?;
    Ok(ClassifyResult { family: loaded.expr.tag(), representation, classification })
}

fn execute(cfg: &RunConfig, text: &str, digest: &str) -> Result<String, Failure> {
    if cfg.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    if cfg.theorem.is_some() && cfg.command != Command::Verify {
        return Err(usage("--theorem only applies to verify"));
    }
    let loaded = load(cfg, text)?;
    let n = loaded.expr.inputs();
    let sampling = Sampling::with_seed(cfg.samples, cfg.seed);

    Ok(match cfg.command {
        Command::Eval => {
            let point = need_point(&loaded, "eval")?;
            let jet = evaluate_jet(&loaded.expr, &point)?;
            render(
                cfg,
                digest,
                EvalResult {
                    family: loaded.expr.tag(),
                    value: jet.value(),
                    gradient: jet.gradient().to_vec(),
                    hessian: jet.hessian_rows(),
                    point,
                },
            )
        }
        Command::Elasticity => match &loaded.point {
            Some(point) => {
                let pairs = match cfg.pair.as_deref() {
                    Some(t) => vec![parse_pair(t, n)?],
                    None => all_pairs(n),
                };
                let jet = evaluate_jet(&loaded.expr, point)?;
                let pairs = pairs
                    .into_iter()
                    .map(|(i, j)| Ok(PairValue { i: i + 1, j: j + 1, value: hicks_from_jet(&jet, point, i, j)? }))
                    .collect::<Result<Vec<_>, Error>>()?;
                render(cfg, digest, PointElasticities { point: point.clone(), pairs })
            }
            None => render(cfg, digest, detect_ces(&loaded.expr, &loaded.domain, sampling)?),
        },
        Command::Curvature => {
            let point = need_point(&loaded, "curvature")?;
            let geometry = crate::geometry::graph_geometry(&loaded.expr, &point)?;
            let consistency = geometry.consistency();
            render(cfg, digest, CurvatureResult { geometry, consistency })
        }
        Command::Classify => render(cfg, digest, classify_result(&loaded, sampling)?),
        Command::Verify => match cfg.theorem {
            None => return Err(usage("verify needs --theorem")),
            Some(TheoremArg::T11) => render(
                cfg,
                digest,
                TheoremOneOne { theorem: TheoremArg::T11, result: classify_result(&loaded, sampling)? },
            ),
            Some(TheoremArg::T41) => render(cfg, digest, verify_theorem_41(&loaded.expr, &loaded.domain, sampling)?),
            Some(TheoremArg::T42) => render(cfg, digest, verify_theorem_42(&loaded.expr, &loaded.domain, sampling)?),
        },
        Command::Scan => {
            if n < 2 {
                return Err(usage("scan needs at least two inputs"));
            }
            let per_axis = grid_nodes_per_axis(cfg.samples, n);
            let grid = loaded.domain.log_grid(per_axis);
            let rows: Vec<ScanRow> = if cfg.jobs == 1 {
                grid.iter().map(|p| scan_row(&loaded.expr, p)).collect::<Result<_, _>>()?
            } else {
                grid.par_iter().map(|p| scan_row(&loaded.expr, p)).collect::<Result<_, _>>()?
            };
            let result = ScanResult { per_axis, rows };
            match cfg.out.unwrap_or(OutputFormat::Csv) {
                OutputFormat::Csv => scan_csv(cfg, digest, n, &result),
                OutputFormat::Json => render(cfg, digest, result),
            }
        }
    })
}

/// Runs one command. Reads the spec file but writes nothing.
pub fn run(cfg: &RunConfig) -> Outcome {
    let fail = |f: Failure, digest: Option<&str>| {
        let record = ErrorRecord {
            tool: "prodgeom",
            version: VERSION,
            command: cfg.command,
            spec_digest: digest,
            status: f.status,
            error: ErrorBody { kind: f.kind, message: &f.message },
        };
        Outcome { status: f.status, stdout: to_json(&record), stderr: format!("prodgeom: {}\n", f.message) }
    };

    let bytes = match std::fs::read(&cfg.function) {
        Ok(b) => b,
        Err(e) => {
            let f = Failure {
                status: 1,
                kind: "unreadable_spec",
                message: format!("cannot read {}: {e}", cfg.function.display()),
            };
            return fail(f, None);
        }
    };
    let digest = hex::encode(Sha256::digest(&bytes));
    let Ok(text) = String::from_utf8(bytes) else {
        return fail(usage("function spec is not UTF-8"), Some(&digest));
    };

    let result = if cfg.jobs == 0 {
        execute(cfg, &text, &digest)
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build() {
            Ok(pool) => pool.install(|| execute(cfg, &text, &digest)),
            Err(e) => Err(Failure { status: 2, kind: "thread_pool", message: e.to_string() }),
        }
    };
    match result {
        Ok(stdout) => Outcome { status: 0, stdout, stderr: String::new() },
        Err(f) => fail(f, Some(&digest)),
    }
}

/// Parses arguments and runs. Help and version exit 0, argument errors 1.
pub fn main_with_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome { status: 1, stdout: String::new(), stderr: text }
            } else {
                Outcome { status: 0, stdout: text, stderr: String::new() }
            }
        }
    }
}
