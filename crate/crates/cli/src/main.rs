mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sfmew::config::parse_points;
use sfmew::constraints::assemble;
use sfmew::{
    compute_invariants, cotton_york, parse, scan_points, verify_closed_form, AlphaExprs, Error,
    Mode, MoebiusStructure, Orientation, PointInvariants, Poly, RunConfig, Tolerances,
};

#[derive(Parser, Debug)]
#[command(name = "sfmew", version)]
#[command(about = "Local obstructions to scalar-flat Moebius Einstein-Weyl structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify every sample point and write report.json and grid.csv
    Analyze(Common),
    /// Check a closed-form alpha at the sample points
    Verify {
        #[command(flatten)]
        common: Common,
        /// Components of alpha: two expressions, or four (real parts, then
        /// imaginary parts) in complex mode
        #[arg(long, num_args = 1, required = true, allow_hyphen_values = true)]
        alpha: Vec<String>,
        /// Treat the four alpha expressions as real and imaginary parts
        #[arg(long)]
        complex: bool,
    },
    /// Dump the conformal invariants at the sample points
    Invariants(Common),
    /// Dump the constraint polynomials at the sample points
    Constraints(Common),
    /// Rescale the structure by e^(2 omega) and dump its data
    Rescale {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        omega: String,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Run configuration (TOML)
    #[arg(long)]
    config: PathBuf,

    /// Output directory; JSON dumps are also printed to stdout
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_parser = ["real", "complex"])]
    mode: Option<String>,

    /// +1 or -1
    #[arg(long, allow_hyphen_values = true)]
    orientation: Option<i64>,

    #[arg(long)]
    jet_order: Option<usize>,

    /// Sample points "x,y;x,y", overriding the configured region
    #[arg(long, allow_hyphen_values = true)]
    points: Option<String>,
}

enum Failure {
    Verify,
    Config(String),
    Expression(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify => 1,
            Failure::Config(_) => 2,
            Failure::Expression(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_expression_error() {
            Failure::Expression(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!(
        "configuration error: cannot write {}: {e}",
        path.display()
    ))
}

fn load(c: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(&c.config)?;
    if let Some(m) = &c.mode {
        cfg.mode = if m == "complex" {
            Mode::Complex
        } else {
            Mode::Real
        };
    }
    if let Some(o) = c.orientation {
        cfg.orientation = Orientation::from_sign(o)
            .ok_or_else(|| Error::Config(format!("orientation must be +1 or -1, got {o}")))?;
    }
    if let Some(j) = c.jet_order {
        cfg.tolerances.jet_order = j;
    }
    if let Some(p) = &c.points {
        cfg.points = Some(parse_points(p)?);
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Metadata {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: String,
}

impl Metadata {
    fn new(command: &'static str, c: &Common) -> Self {
        Metadata {
            tool: "sfmew",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: c.config.display().to_string(),
        }
    }
}

#[derive(Serialize)]
struct StructureEcho {
    u: String,
    #[serde(rename = "P11")]
    p11: String,
    #[serde(rename = "P12")]
    p12: String,
    #[serde(rename = "P22")]
    p22: String,
    orientation: i64,
}

impl StructureEcho {
    fn from_config(cfg: &RunConfig) -> Self {
        let s = &cfg.structure;
        StructureEcho {
            u: s.u.clone(),
            p11: s.p11.clone(),
            p12: s.p12.clone(),
            p22: s.p22.clone(),
            orientation: cfg.orientation.sign() as i64,
        }
    }

    fn from_structure(s: &MoebiusStructure) -> Self {
        StructureEcho {
            u: s.u.to_string(),
            p11: s.rho[0].to_string(),
            p12: s.rho[1].to_string(),
            p22: s.rho[2].to_string(),
            orientation: s.orientation.sign() as i64,
        }
    }
}

/// Prints a JSON dump and writes it to `<out>/<name>` when an output
/// directory was given.
fn emit<T: Serialize>(c: &Common, name: &str, value: &T) -> Outcome {
    let text = output::to_json(value);
    if let Some(dir) = &c.out {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        let path = dir.join(name);
        std::fs::write(&path, &text).map_err(|e| io_failure(&path, e))?;
    }
    print!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    metadata: Metadata,
    structure: StructureEcho,
    mode: Mode,
    tolerances: &'a Tolerances,
    summary: &'a str,
    conclusion: &'a str,
    histogram: &'a std::collections::BTreeMap<sfmew::VerdictTag, usize>,
    verdicts: &'a [sfmew::Verdict],
}

fn analyze(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let s = cfg.structure()?;
    let rep = scan_points(&s, &cfg.sample_points(), &cfg.tolerances, cfg.mode)?;
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let report = AnalyzeReport {
        metadata: Metadata::new("analyze", c),
        structure: StructureEcho::from_config(&cfg),
        mode: cfg.mode,
        tolerances: &cfg.tolerances,
        summary: &rep.summary,
        conclusion: &rep.conclusion,
        histogram: &rep.histogram,
        verdicts: &rep.verdicts,
    };
    let json = dir.join("report.json");
    output::write_json(&json, &report).map_err(|e| io_failure(&json, e))?;
    let csv = dir.join("grid.csv");
    output::write_grid_csv(&csv, &rep.verdicts).map_err(|e| io_failure(&csv, e))?;
    println!("{}", rep.summary);
    println!("{}", rep.conclusion);
    for (tag, n) in &rep.histogram {
        println!("  {tag}: {n}");
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport {
    metadata: Metadata,
    structure: StructureEcho,
    alpha: Vec<String>,
    complex: bool,
    tolerance: f64,
    max_residual: f64,
    passed: bool,
    points: Vec<sfmew::analyzer::VerificationReport>,
}

fn verify(c: &Common, alpha: &[String], complex: bool) -> Outcome {
    let cfg = load(c)?;
    let complex = complex || cfg.mode == Mode::Complex || alpha.len() == 4;
    let want = if complex { 4 } else { 2 };
    if alpha.len() != want {
        return Err(Error::Config(format!(
            "expected {want} --alpha expressions, got {}",
            alpha.len()
        ))
        .into());
    }
    let s = cfg.structure()?;
    let e: Vec<_> = alpha.iter().map(|a| parse(a)).collect::<Result<_, _>>()?;
    let exprs = AlphaExprs {
        re: [e[0].clone(), e[1].clone()],
        im: complex.then(|| [e[2].clone(), e[3].clone()]),
    };
    let mut points = Vec::new();
    for p in cfg.sample_points() {
        points.push(verify_closed_form(&s, &exprs, p, &cfg.tolerances)?);
    }
    let max_residual = points.iter().map(|r| r.residuals.max).fold(0.0, f64::max);
    let passed = points.iter().all(|r| r.passed) && max_residual < cfg.tolerances.residual;
    let report = VerifyReport {
        metadata: Metadata::new("verify", c),
        structure: StructureEcho::from_config(&cfg),
        alpha: alpha.to_vec(),
        complex,
        tolerance: cfg.tolerances.residual,
        max_residual,
        passed,
        points,
    };
    emit(c, "verify.json", &report)?;
    if passed {
        Ok(())
    } else {
        eprintln!(
            "verification failed: max residual {max_residual:e} (tolerance {:e})",
            cfg.tolerances.residual
        );
        Err(Failure::Verify)
    }
}

#[derive(Serialize)]
struct PointRecord<T> {
    point: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Evaluates `f` at every point; numerical failures (a flat point, say) are
/// recorded per point, expression errors abort.
fn per_point<T>(
    points: &[[f64; 2]],
    mut f: impl FnMut([f64; 2]) -> sfmew::Result<T>,
) -> Result<Vec<PointRecord<T>>, Failure> {
    let mut out = Vec::new();
    for &p in points {
        match f(p) {
            Ok(v) => out.push(PointRecord {
                point: p,
                data: Some(v),
                error: None,
            }),
            Err(e) if e.is_expression_error() || matches!(e, Error::OrderExceeded { .. }) => {
                return Err(e.into())
            }
            Err(e) => out.push(PointRecord {
                point: p,
                data: None,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct PointDump<T> {
    metadata: Metadata,
    structure: StructureEcho,
    points: Vec<PointRecord<T>>,
}

fn invariants(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let s = cfg.structure()?;
    let points = per_point(&cfg.sample_points(), |p| {
        compute_invariants(&s, p, &cfg.tolerances)
    })?;
    emit(
        c,
        "invariants.json",
        &PointDump {
            metadata: Metadata::new("invariants", c),
            structure: StructureEcho::from_config(&cfg),
            points,
        },
    )
}

#[derive(Serialize)]
struct ConstraintRecord {
    rho: f64,
    #[serde(rename = "P0")]
    p0: Poly,
    #[serde(rename = "P1")]
    p1: Poly,
    #[serde(rename = "P2")]
    p2: Poly,
    #[serde(rename = "P3")]
    p3: Poly,
}

fn constraints(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let s = cfg.structure()?;
    let points = per_point(&cfg.sample_points(), |p| {
        let inv = compute_invariants(&s, p, &cfg.tolerances)?;
        let k = assemble(&inv)?;
        Ok(ConstraintRecord {
            rho: inv.rho,
            p0: k.p0,
            p1: k.p1,
            p2: k.p2,
            p3: k.p3,
        })
    })?;
    emit(
        c,
        "constraints.json",
        &PointDump {
            metadata: Metadata::new("constraints", c),
            structure: StructureEcho::from_config(&cfg),
            points,
        },
    )
}

#[derive(Serialize)]
struct RescaledPoint {
    omega: f64,
    /// `Y_abc` as `[Y_111, Y_112, Y_121, Y_122, Y_211, ...]`.
    y_abc: Vec<f64>,
    invariants: PointInvariants,
}

#[derive(Serialize)]
struct RescaleDump {
    metadata: Metadata,
    omega: String,
    original: StructureEcho,
    structure: StructureEcho,
    points: Vec<PointRecord<RescaledPoint>>,
}

fn rescale(c: &Common, omega: &str) -> Outcome {
    let cfg = load(c)?;
    let s = cfg.structure()?;
    let w = parse(omega)?;
    let r = s.conformal_rescale(&w);
    let tol = &cfg.tolerances;
    let points = per_point(&cfg.sample_points(), |p| {
        Ok(RescaledPoint {
            omega: w.eval(p)?,
            y_abc: cotton_york(&r, p, tol)?.y_abc.values(),
            invariants: compute_invariants(&r, p, tol)?,
        })
    })?;
    emit(
        c,
        "rescale.json",
        &RescaleDump {
            metadata: Metadata::new("rescale", c),
            omega: omega.to_string(),
            original: StructureEcho::from_config(&cfg),
            structure: StructureEcho::from_structure(&r),
            points,
        },
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Analyze(c) => analyze(c),
        Command::Verify {
            common,
            alpha,
            complex,
        } => verify(common, alpha, *complex),
        Command::Invariants(c) => invariants(c),
        Command::Constraints(c) => constraints(c),
        Command::Rescale { common, omega } => rescale(common, omega),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Verify => {}
                Failure::Config(m) | Failure::Expression(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
