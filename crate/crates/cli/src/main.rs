//! `quadineq`: evaluate, audit, certify and search from the command line.
//!
//! Exit status: 0 when every check passed (or the certificate is complete
//! and valid), 1 on a violation, an incomplete certificate or a rejected
//! certificate, 2 on usage or input errors. Reports are JSON with every
//! float written to 17 significant digits and contain nothing
//! run-dependent, so identical invocations produce identical bytes.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use quadineq::certifier::{certify, verify_certificate, Certificate};
use quadineq::geometry::{derive_seed, sample, ConfigDocument, Quadrilateral, SampleStrategy};
use quadineq::json::{format_f17, F17};
use quadineq::kernel::{
    audit, audit_batch, edge_terms, normalized_residual, residual, AuditReport, BatchConfig, ResidualPath,
    SignResolution,
};
use quadineq::search::{margin_trend, minimize_residual};

#[derive(Parser, Debug)]
#[command(name = "quadineq", version, about = "Certified numerics for a degree-six quadrilateral inequality")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Metrics, edge terms and the residual along every path for one input.
    Eval(EvalArgs),
    /// Audit every identity and inequality over seeded random samples.
    Audit(AuditArgs),
    /// Branch-and-bound certification of a positive residual lower bound.
    Certify(CertifyArgs),
    /// Replay and verify a certificate file.
    CheckCert(CheckCertArgs),
    /// Multi-start search for small normalized residuals.
    Search(SearchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Strategy {
    FrameUniform,
    PointRejection,
}

impl From<Strategy> for SampleStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::FrameUniform => SampleStrategy::FrameUniform,
            Strategy::PointRejection => SampleStrategy::PointRejection,
        }
    }
}

#[derive(Args, Debug)]
struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Input {
    /// Four vertices as inline JSON `[[x,y],...]`, or a file holding that
    /// array or a `{"points": ...}` document.
    #[arg(long)]
    points: Option<String>,
    /// A frame as inline JSON `{"p":[p1,p2,p3,p4],"w":w}`, or a file holding
    /// that object or a `{"frame": ...}` document.
    #[arg(long)]
    frame: Option<String>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    input: Input,
    /// Tolerance for the identity checks of the single-input audit.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 0.01)]
    margin: f64,
    #[arg(long, value_enum, default_value = "frame-uniform")]
    strategy: Strategy,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long, default_value_t = 0.1)]
    margin: f64,
    #[arg(long, default_value_t = 0.0)]
    target: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_boxes: usize,
    /// Certificate file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CheckCertArgs {
    /// Certificate file to verify.
    cert: PathBuf,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    starts: usize,
    #[arg(long, default_value_t = 0.005)]
    margin: f64,
    /// Objective evaluations per start beyond the start point.
    #[arg(long, default_value_t = 2000)]
    budget: usize,
    /// Comma-separated decreasing margins; runs a warm-started trend
    /// instead of a single search and ignores `--margin`.
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<f64>>,
    #[command(flatten)]
    output: Output,
}

/// An error with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Eval(a) => run_eval(a),
        Command::Audit(a) => run_audit(a),
        Command::Certify(a) => run_certify(a),
        Command::CheckCert(a) => run_check_cert(a),
        Command::Search(a) => run_search(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn report(command: &str, config: Value, sign_resolution: SignResolution, result: Value) -> String {
    let doc = json!({
        "version": quadineq::VERSION,
        "command": command,
        "config": config,
        "sign_resolution": sign_resolution,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("reports serialize");
    s.push('\n');
    s
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => print_out(text),
    }
}

/// Writes to standard output; a closed pipe is not an error.
fn print_out(text: &str) -> Result<(), Failure> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(usage(format!("cannot write output: {e}"))),
        _ => Ok(()),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values are finite")
}

fn f(x: f64) -> Value {
    to_value(&F17(x))
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--tol must be positive, got {tol}")))
    }
}

/// Resolution of the sign question on a fixed reference batch, embedded in
/// reports whose own computation does not touch it.
fn reference_sign_resolution() -> SignResolution {
    let cfg = BatchConfig { samples: 64, ..BatchConfig::default() };
    audit_batch(&cfg).expect("reference batch samples").sign_resolution
}

/// Reads `--points`/`--frame`: inline JSON when it starts with `[` or `{`,
/// otherwise a file path.
fn read_input(input: &Input) -> Result<(Quadrilateral, Value), Failure> {
    let (kind, raw) = match (&input.points, &input.frame) {
        (Some(p), None) => ("points", p),
        (None, Some(f)) => ("frame", f),
        _ => return Err(usage("exactly one of --points and --frame is required")),
    };
    let trimmed = raw.trim_start();
    let (origin, text) = if trimmed.starts_with('[') || trimmed.starts_with('{') {
        ("<inline>".to_string(), raw.clone())
    } else {
        let text = fs::read_to_string(raw).map_err(|e| usage(format!("cannot read {raw}: {e}")))?;
        (raw.clone(), text)
    };
    let value: Value = serde_json::from_str(&text).map_err(|e| usage(located(&origin, &text, &e)))?;
    let doc_value = match value {
        Value::Object(ref m) if m.len() == 1 && m.contains_key(kind) => value,
        other => json!({ kind: other }),
    };
    let doc: ConfigDocument =
        serde_json::from_value(doc_value).map_err(|e| usage(format!("{origin}: invalid {kind} input: {e}")))?;
    let q = doc.quadrilateral().map_err(|e| usage(format!("{origin}: {e}")))?;
    Ok((q, to_value(&doc)))
}

/// A parse error with the offending line quoted.
fn located(origin: &str, text: &str, e: &serde_json::Error) -> String {
    let line = text.lines().nth(e.line().saturating_sub(1)).unwrap_or("");
    format!("{origin}:{}:{}: {e}\n  | {line}", e.line(), e.column())
}

fn run_eval(a: EvalArgs) -> Outcome {
    check_tol(a.tol)?;
    let (q, input) = read_input(&a.input)?;
    let m = q.metrics();
    let audit_report = audit(&q, a.tol);
    let passed = audit_report.passed();
    if a.output.format == Format::Csv {
        let mut csv = String::from("a,b,c,d,e,f,a123,a124,a134,a234,edge,expanded,factored,normalized\n");
        let row: Vec<String> = [m.a, m.b, m.c, m.d, m.e, m.f, m.a123, m.a124, m.a134, m.a234]
            .into_iter()
            .chain(ResidualPath::ALL.map(|p| residual(&m, p)))
            .chain([normalized_residual(&m)])
            .map(format_f17)
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
        emit(a.output.out.as_deref(), &csv)?;
        return Ok(passed);
    }
    let residuals: serde_json::Map<String, Value> = ResidualPath::ALL
        .iter()
        .map(|&p| (to_value(&p).as_str().expect("path name").to_string(), f(residual(&m, p))))
        .collect();
    let quarter = |v: [f64; 4]| Value::Array(v.into_iter().map(f).collect());
    let result = json!({
        "quadrilateral": to_value(&q),
        "frame": to_value(&q.frame()),
        "metrics": {
            "a": f(m.a), "b": f(m.b), "c": f(m.c), "d": f(m.d), "e": f(m.e), "f": f(m.f),
            "a123": f(m.a123), "a124": f(m.a124), "a134": f(m.a134), "a234": f(m.a234),
            "alpha": quarter(m.alpha), "beta": quarter(m.beta), "gamma": quarter(m.gamma),
            "x": f(m.x), "y": f(m.y), "w": f(m.w), "wp": f(m.wp),
        },
        "edge_terms": to_value(&edge_terms(&m)),
        "residual": residuals,
        "normalized_residual": f(normalized_residual(&m)),
        "audit": to_value(&audit_report),
        "passed": passed,
    });
    let config = json!({ "input": input, "tol": f(a.tol), "format": a.output.format });
    emit(a.output.out.as_deref(), &report("eval", config, audit_report.sign_resolution, result))?;
    Ok(passed)
}

fn run_audit(a: AuditArgs) -> Outcome {
    check_tol(a.tol)?;
    if !(0.0..=0.2).contains(&a.margin) {
        return Err(usage(format!("--margin must lie in [0, 0.2], got {}", a.margin)));
    }
    let strategy = SampleStrategy::from(a.strategy);
    if a.output.format == Format::Csv {
        let mut csv = String::from("index,seed,edge,expanded,factored,normalized\n");
        for i in 0..a.samples {
            let s = derive_seed(a.seed, i);
            let m = sample(s, strategy, a.margin).map_err(|e| usage(e.to_string()))?.metrics();
            let vals: Vec<String> = ResidualPath::ALL
                .map(|p| residual(&m, p))
                .into_iter()
                .chain([normalized_residual(&m)])
                .map(format_f17)
                .collect();
            csv.push_str(&format!("{i},{s},{}\n", vals.join(",")));
        }
        emit(a.output.out.as_deref(), &csv)?;
    }
    let cfg = BatchConfig { seed: a.seed, samples: a.samples, margin: a.margin, strategy, tol: a.tol };
    let r: AuditReport = audit_batch(&cfg).map_err(|e| usage(e.to_string()))?;
    let passed = r.passed();
    if a.output.format == Format::Json {
        let config = json!({
            "samples": a.samples, "seed": a.seed, "tol": f(a.tol), "margin": f(a.margin),
            "strategy": a.strategy, "format": a.output.format,
        });
        let result = json!({ "audit": to_value(&r), "passed": passed });
        emit(a.output.out.as_deref(), &report("audit", config, r.sign_resolution, result))?;
    }
    Ok(passed)
}

fn run_certify(a: CertifyArgs) -> Outcome {
    let cert = certify(a.margin, a.target, a.max_boxes).map_err(|e| usage(e.to_string()))?;
    let mut text = cert.to_json();
    text.push('\n');
    fs::write(&a.out, text).map_err(|e| usage(format!("cannot write {}: {e}", a.out.display())))?;
    let config = json!({
        "margin": f(a.margin), "target": f(a.target), "max_boxes": a.max_boxes,
        "out": a.out.display().to_string(),
    });
    let result = json!({
        "complete": cert.complete,
        "c_star": f(cert.c_star),
        "upper_bound": f(cert.upper_bound),
        "box_count": cert.box_count,
        "leaves": cert.leaves.len(),
        "outside": cert.outside.len(),
    });
    print_out(&report("certify", config, reference_sign_resolution(), result))?;
    Ok(cert.complete)
}

fn run_check_cert(a: CheckCertArgs) -> Outcome {
    let origin = a.cert.display().to_string();
    let text = fs::read_to_string(&a.cert).map_err(|e| usage(format!("cannot read {origin}: {e}")))?;
    let cert: Certificate = serde_json::from_str(&text).map_err(|e| usage(located(&origin, &text, &e)))?;
    let valid = verify_certificate(&cert).map_err(|e| usage(format!("{origin}: {e}")))?;
    let config = json!({ "cert": origin });
    let result = json!({
        "valid": valid,
        "complete": cert.complete,
        "c_star": f(cert.c_star),
        "margin": f(cert.margin),
        "box_count": cert.box_count,
    });
    print_out(&report("check-cert", config, reference_sign_resolution(), result))?;
    Ok(valid && cert.complete)
}

fn run_search(a: SearchArgs) -> Outcome {
    let config = json!({
        "seed": a.seed, "starts": a.starts, "margin": f(a.margin), "budget": a.budget,
        "schedule": a.schedule.as_ref().map(|s| s.iter().map(|&m| f(m)).collect::<Vec<_>>()),
        "format": a.output.format,
    });
    let (result, csv, clean) = match &a.schedule {
        Some(margins) => {
            let t = margin_trend(a.seed, a.starts, margins, a.budget).map_err(|e| usage(e.to_string()))?;
            let clean = t.results.iter().all(|r| !r.has_candidates());
            let mut csv = String::from("margin,start,iteration,best\n");
            for r in &t.results {
                for row in r.trajectories_csv().lines().skip(1) {
                    csv.push_str(&format!("{},{row}\n", format_f17(r.margin)));
                }
            }
            (to_value(&t), csv, clean)
        }
        None => {
            let r = minimize_residual(a.seed, a.starts, a.margin, a.budget).map_err(|e| usage(e.to_string()))?;
            (to_value(&r), r.trajectories_csv(), !r.has_candidates())
        }
    };
    let text = match a.output.format {
        Format::Json => report("search", config, reference_sign_resolution(), result),
        Format::Csv => csv,
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(clean)
}
