//! Command-line front end. Every command produces a JSON report
//! `{"manifest": {...}, "body": {...}}`; the body depends only on the inputs
//! and the seed, so reruns are byte-identical.
//!
//! Exit codes: 0 success, 1 negative verdict, 2 usage or schema error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::expr::{parse, ParseError};
use crate::jet::{mi_enumerate, Jet, JetFamily};
use crate::operator::{OperatorDoc, OperatorError, OperatorHandle, Section};
use crate::peetre::{
    estimate_order_sweep, probe_section, reconstruct, reconstruct_linear, stream, ProbeConfig, ProbeError,
};
use crate::whitney::{
    certify_smoothness, check_against_limit, check_taylor_condition, cone_glue, cone_samples, ConeGeometry,
    ConeRegion, TolRule, WhitneyError, DEFAULT_SCALES, DEFAULT_STEPS,
};

#[derive(Debug, Parser)]
#[command(name = "jetcalc", version, about = "Jet calculus and order probing of local operators")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Jet of a section at a point.
    Prolong(ProlongArgs),
    /// Whitney's Taylor condition on a jet family.
    WhitneyCheck(WhitneyArgs),
    /// Glue two functions across the nappes of a cone.
    ConeGlue(ConeArgs),
    /// Estimate the order of an operator at points.
    EstimateOrder(OrderArgs),
    /// Reconstruct the finite-order operator behind a handle.
    Reconstruct(ReconstructArgs),
}

#[derive(Debug, Args)]
pub struct ProlongArgs {
    /// Section component; repeat for several components.
    #[arg(long)]
    pub expr: Vec<String>,
    /// Section JSON file.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Comma-separated point.
    #[arg(long)]
    pub at: String,
    #[arg(long)]
    pub order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WhitneyMode {
    /// All ordered pairs of points.
    Pairs,
    /// Entries against the limit jet.
    Limit,
}

#[derive(Debug, Args)]
pub struct WhitneyArgs {
    /// Jet family JSON file.
    #[arg(long)]
    pub file: PathBuf,
    /// Taylor order `m`.
    #[arg(long)]
    pub order: usize,
    /// Comma-separated scale ladder.
    #[arg(long)]
    pub scales: Option<String>,
    /// Constant tolerance; the default is `tol(δ) = δ`.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value = "pairs")]
    pub mode: WhitneyMode,
}

#[derive(Debug, Args)]
pub struct ConeArgs {
    /// `u` then `v`.
    #[arg(long, num_args = 1)]
    pub expr: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 6)]
    pub order: usize,
    /// Sample points per nappe.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Order of the smoothness certificate at the apex.
    #[arg(long, default_value_t = 4)]
    pub certify: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Operator JSON file.
    #[arg(long)]
    pub file: PathBuf,
    /// Comma-separated point; repeatable.
    #[arg(long)]
    pub at: Vec<String>,
    /// Tensor grid `lo:hi:count` in every coordinate.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OrderArgs {
    #[command(flatten)]
    pub probe: ProbeArgs,
    #[arg(long)]
    pub k_max: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReconstructMode {
    Generic,
    Linear,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub probe: ProbeArgs,
    #[arg(long)]
    pub order: usize,
    #[arg(long, value_enum, default_value = "generic")]
    pub mode: ReconstructMode,
    /// Compare `P_k(j^k_x s)` with `h(s)(x)` on random sections.
    #[arg(long)]
    pub check: bool,
    /// Random sections per point for `--check`.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Schema(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Schema(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Schema(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Schema(e.to_string())
    }
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        match e {
            OperatorError::Eval(_) | OperatorError::Jet(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Schema(e.to_string()),
        }
    }
}

impl From<ProbeError> for CliError {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::Operator(inner) => inner.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<WhitneyError> for CliError {
    fn from(e: WhitneyError) -> Self {
        match e {
            WhitneyError::Eval(_) => CliError::Numerical(e.to_string()),
            WhitneyError::JetMismatch { .. } => CliError::Schema(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub config: Value,
    pub version: String,
    pub wall_clock_seconds: f64,
}

/// A finished command: manifest, body, and whether the verdict was positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub manifest: RunManifest,
    pub body: Value,
    #[serde(skip)]
    pub verdict: bool,
}

impl Report {
    /// The body as it is written, for replay comparisons.
    pub fn body_text(&self) -> String {
        serde_json::to_string_pretty(&self.body).expect("JSON values serialize")
    }

    pub fn exit_code(&self) -> i32 {
        if self.verdict {
            0
        } else {
            1
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Inputs(Vec<InputDigest>);

impl Inputs {
    fn text(&mut self, name: &str, text: &str) {
        self.0.push(InputDigest { name: name.into(), sha256: sha256_hex(text.as_bytes()) });
    }

    fn file(&mut self, path: &PathBuf) -> Result<String, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        self.0.push(InputDigest { name: path.display().to_string(), sha256: sha256_hex(&bytes) });
        String::from_utf8(bytes).map_err(|_| CliError::Schema(format!("{} is not UTF-8", path.display())))
    }
}

fn parse_point(text: &str) -> Result<Vec<f64>, CliError> {
    let point = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Usage(format!("bad point {text:?}")))?;
    if point.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!("bad point {text:?}")));
    }
    Ok(point)
}

fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    parse_point(text)
}

/// Points from repeated `--at` and an optional tensor `--grid lo:hi:count`.
fn probe_points(args: &ProbeArgs, n: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let mut points = args.at.iter().map(|a| parse_point(a)).collect::<Result<Vec<_>, _>>()?;
    if let Some(grid) = &args.grid {
        let parts: Vec<&str> = grid.split(':').collect();
        let bad = || CliError::Usage(format!("bad grid {grid:?}; expected lo:hi:count"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].parse().map_err(|_| bad())?;
        let count: usize = parts[2].parse().map_err(|_| bad())?;
        if count == 0 {
            return Err(bad());
        }
        let axis: Vec<f64> = (0..count)
            .map(|i| if count == 1 { lo } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 })
            .collect();
        let mut grid_points = vec![vec![]];
        for _ in 0..n {
            grid_points = grid_points
                .into_iter()
                .flat_map(|p: Vec<f64>| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points.extend(grid_points);
    }
    if points.is_empty() {
        return Err(CliError::Usage("give at least one --at or a --grid".into()));
    }
    if let Some(p) = points.iter().find(|p| p.len() != n) {
        return Err(CliError::Usage(format!("point {p:?} does not have dimension {n}")));
    }
    Ok(points)
}

fn load_operator(inputs: &mut Inputs, path: &PathBuf) -> Result<OperatorHandle, CliError> {
    let text = inputs.file(path)?;
    let doc: OperatorDoc = serde_json::from_str(&text).map_err(|e| CliError::Schema(e.to_string()))?;
    Ok(doc.build()?)
}

fn probe_config(args: &ProbeArgs) -> ProbeConfig {
    let mut cfg = ProbeConfig::with_seed(args.seed);
    if let Some(tol) = args.tol {
        cfg.tol = tol;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    cfg
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

struct Outcome {
    body: Value,
    verdict: bool,
    seed: Option<u64>,
    config: Value,
}

fn cmd_prolong(args: &ProlongArgs, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let point = parse_point(&args.at)?;
    let section = match (&args.file, args.expr.is_empty()) {
        (Some(path), true) => {
            let text = inputs.file(path)?;
            serde_json::from_str::<Section>(&text).map_err(|e| CliError::Schema(e.to_string()))?
        }
        (None, false) => {
            for (i, e) in args.expr.iter().enumerate() {
                inputs.text(&format!("expr[{i}]"), e);
            }
            let texts: Vec<&str> = args.expr.iter().map(String::as_str).collect();
            Section::parse(point.len(), &texts)?
        }
        _ => return Err(CliError::Usage("give either --expr or --file".into())),
    };
    if section.dim() != point.len() {
        return Err(CliError::Usage(format!("point has dimension {}, section {}", point.len(), section.dim())));
    }
    let jets = section.jets(&point, args.order, None)?;
    Ok(Outcome {
        body: json!({ "jets": jets }),
        verdict: true,
        seed: None,
        config: json!({ "at": point, "order": args.order }),
    })
}

fn cmd_whitney_check(args: &WhitneyArgs, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let text = inputs.file(&args.file)?;
    let family: JetFamily = serde_json::from_str(&text).map_err(|e| CliError::Schema(e.to_string()))?;
    let scales = match &args.scales {
        Some(s) => parse_list(s)?,
        None => DEFAULT_SCALES.to_vec(),
    };
    if scales.iter().any(|&s| s <= 0.0) {
        return Err(CliError::Usage("scales must be positive".into()));
    }
    let tol = match args.tol {
        Some(value) => TolRule::Constant { value },
        None => TolRule::Linear { slope: 1.0 },
    };
    let report = match args.mode {
        WhitneyMode::Pairs => check_taylor_condition(&family, args.order, &scales, tol)?,
        WhitneyMode::Limit => check_against_limit(&family, args.order, &scales, tol)?,
    };
    let verdict = report.holds();
    Ok(Outcome {
        body: json!({ "holds": verdict, "vacuous": report.is_vacuous(), "report": report }),
        verdict,
        seed: None,
        config: json!({ "m": args.order, "scales": scales, "tol": tol, "mode": format!("{:?}", args.mode).to_lowercase() }),
    })
}

fn cmd_cone_glue(args: &ConeArgs, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    if args.expr.len() != 2 {
        return Err(CliError::Usage("cone-glue takes --expr u --expr v".into()));
    }
    if args.dim == 0 {
        return Err(CliError::Usage("--dim must be positive".into()));
    }
    inputs.text("u", &args.expr[0]);
    inputs.text("v", &args.expr[1]);
    let u = parse(&args.expr[0], args.dim)?;
    let v = parse(&args.expr[1], args.dim)?;
    let geom = ConeGeometry::new(args.dim);
    let f = cone_glue(&u, &v, geom, args.order)?;
    let mut agreement = serde_json::Map::new();
    let mut verdict = true;
    for (name, region, target, seed) in [
        ("k1", ConeRegion::K1, &u, args.seed),
        ("k2", ConeRegion::K2, &v, args.seed.wrapping_add(1)),
    ] {
        let mut worst: f64 = 0.0;
        for p in cone_samples(geom, region, args.samples, 1e-3, seed) {
            let a = f.evaluate(&p, None).map_err(|e| CliError::Numerical(e.to_string()))?;
            let b = target.evaluate(&p, None).map_err(|e| CliError::Numerical(e.to_string()))?;
            worst = worst.max((a - b).abs());
        }
        verdict &= worst <= args.tol;
        agreement.insert(name.into(), json!({ "samples": args.samples, "max_abs_diff": worst }));
    }
    let apex = vec![0.0; args.dim];
    let certificate = certify_smoothness(|p: &[f64]| f.evaluate(p, None), &apex, args.certify, &DEFAULT_STEPS);
    verdict &= certificate.passed;
    Ok(Outcome {
        body: json!({ "expr": f, "agreement": agreement, "certificate": certificate }),
        verdict,
        seed: Some(args.seed),
        config: json!({ "dim": args.dim, "m": args.order, "samples": args.samples, "certify": args.certify, "tol": args.tol }),
    })
}

fn cmd_estimate_order(args: &OrderArgs, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let h = load_operator(inputs, &args.probe.file)?;
    let points = probe_points(&args.probe, h.meta().n)?;
    let cfg = probe_config(&args.probe);
    let k_max = args.k_max.unwrap_or(cfg.working_order.saturating_sub(2));
    let verdicts = estimate_order_sweep(&h, &points, k_max, &cfg)?;
    let column: Vec<Value> = verdicts.iter().map(|v| to_value(&v.estimate)).collect();
    Ok(Outcome {
        body: json!({ "operator": h.meta(), "column": column, "verdicts": verdicts }),
        verdict: true,
        seed: Some(cfg.seed),
        config: json!({ "k_max": k_max, "probe": cfg }),
    })
}

/// `max |P_k(j^k_x s) - h(s)(x)| / (1 + |h(s)(x)|)` over random sections.
fn round_trip(h: &OperatorHandle, points: &[Vec<f64>], k: usize, samples: usize, cfg: &ProbeConfig) -> Result<Value, CliError> {
    use rayon::prelude::*;
    let meta = h.meta();
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(p, x)| -> Result<f64, CliError> {
            let p_k = reconstruct(h, x, k)?;
            let mut worst: f64 = 0.0;
            for i in 0..samples {
                let s = probe_section(&mut stream(cfg.seed, 5, p as u64, i as u64), meta.n, meta.r, cfg);
                let want = h.apply(&s, x, None)?;
                let got = p_k.eval(&s.jets(x, k, None)?)?;
                for (a, b) in got.iter().zip(&want) {
                    worst = worst.max((a - b).abs() / (1.0 + b.abs()));
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let max = rows.iter().cloned().fold(0.0, f64::max);
    Ok(json!({ "samples": samples, "per_point": rows, "max_relative_residual": max, "passed": max <= 1e-8 }))
}

fn cmd_reconstruct(args: &ReconstructArgs, inputs: &mut Inputs) -> Result<Outcome, CliError> {
    let h = load_operator(inputs, &args.probe.file)?;
    let points = probe_points(&args.probe, h.meta().n)?;
    let cfg = probe_config(&args.probe);
    let meta = h.meta().clone();
    let config = json!({ "k": args.order, "mode": format!("{:?}", args.mode).to_lowercase(), "check": args.check, "samples": args.samples, "probe": cfg });
    let (mut body, mut verdict) = match args.mode {
        ReconstructMode::Linear => {
            let table = reconstruct_linear(&h, &points, args.order, &cfg)?;
            let verdict = !table.flagged;
            (json!({ "operator": meta, "table": table }), verdict)
        }
        ReconstructMode::Generic => {
            // P_k on the zero jet and on each unit jet
            let indices = mi_enumerate(meta.n, args.order);
            let mut rows = Vec::new();
            for x in &points {
                let p_k = reconstruct(&h, x, args.order)?;
                let zero: Vec<Jet> = (0..meta.r).map(|_| Jet::zero(x.clone(), args.order)).collect();
                let at_zero = p_k.eval(&zero)?;
                let mut units = Vec::new();
                for b in 0..meta.r {
                    let mut per_index = Vec::new();
                    for index in &indices {
                        let mut jets = zero.clone();
                        jets[b].set(index, 1.0);
                        per_index.push(p_k.eval(&jets)?);
                    }
                    units.push(per_index);
                }
                rows.push(json!({ "point": x, "at_zero": at_zero, "at_unit": units }));
            }
            (json!({ "operator": meta, "indices": indices, "rows": rows }), true)
        }
    };
    if args.check {
        let check = round_trip(&h, &points, args.order, args.samples, &cfg)?;
        verdict &= check["passed"].as_bool() == Some(true);
        body["round_trip"] = check;
    }
    Ok(Outcome { body, verdict, seed: Some(cfg.seed), config })
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let started = Instant::now();
    let mut inputs = Inputs(Vec::new());
    let run = |inputs: &mut Inputs| -> Result<(String, Outcome), CliError> {
        Ok(match &cli.command {
            Command::Prolong(a) => ("prolong".into(), cmd_prolong(a, inputs)?),
            Command::WhitneyCheck(a) => ("whitney-check".into(), cmd_whitney_check(a, inputs)?),
            Command::ConeGlue(a) => ("cone-glue".into(), cmd_cone_glue(a, inputs)?),
            Command::EstimateOrder(a) => ("estimate-order".into(), cmd_estimate_order(a, inputs)?),
            Command::Reconstruct(a) => ("reconstruct".into(), cmd_reconstruct(a, inputs)?),
        })
    };
    let (command, outcome) = match cli.jobs {
        Some(0) => return Err(CliError::Usage("--jobs must be positive".into())),
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(|| run(&mut inputs))?,
        None => run(&mut inputs)?,
    };
    Ok(Report {
        manifest: RunManifest {
            command,
            inputs: inputs.0,
            seed: outcome.seed,
            config: outcome.config,
            version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
        body: outcome.body,
        verdict: outcome.verdict,
    })
}

/// Parses arguments, runs, writes the report; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("jetcalc: {e}");
            return e.exit_code();
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("reports serialize");
    let written = match &cli.out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("jetcalc: {e}");
        return 2;
    }
    report.exit_code()
}
