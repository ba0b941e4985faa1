//! `pavf`: runs the Hénon–Heiles and Klein–Gordon–Schrödinger experiments.
//!
//! Exit status: 0 on success, 1 on IO errors or failed `verify` checks,
//! 2 on bad configuration, 3 when an implicit solve fails to converge.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pavf_core::harness::{
    cost_benchmark, kgs_spatial_accuracy, kgs_temporal_accuracy, run_experiment, write_summary, AccuracyStudy, CostRow,
    ExperimentSpec, HhOrbit, KgsAccuracyConfig, KgsSetup, RunReport, RunStatus, Sinks,
};
use pavf_core::verify::{run_all, VerifyConfig};
use pavf_core::{Error, Method, NonlinearSolveConfig, SolitonParams, SolveMode};

#[derive(Parser)]
#[command(name = "pavf", version, about = "Partitioned AVF integrator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hénon–Heiles orbit with energy drift per step.
    HhOrbit(HhArgs),
    /// Hénon–Heiles section points on q1 = 0, p1 > 0.
    HhPoincare(HhArgs),
    /// Wall-clock comparison of the Hénon–Heiles schemes.
    HhBench(HhBenchArgs),
    /// KGS soliton run with energy and mass drift per step.
    KgsRun(KgsArgs),
    /// KGS convergence tables against the exact soliton.
    KgsAccuracy(AccuracyArgs),
    /// Wall-clock comparison of the KGS schemes.
    KgsBench(KgsBenchArgs),
    /// Runs the seeded property suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct Common {
    /// Comma-separated methods: avf, pavf, pavf-adjoint, pavf-c, pavf-p.
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Convergence tolerance of the implicit solves.
    #[arg(long, default_value_t = 1e-14)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Use Newton instead of fixed-point iteration in generic solves.
    #[arg(long)]
    newton: bool,
}

impl Common {
    fn methods(&self, default: &[Method]) -> Vec<Method> {
        if self.method.is_empty() {
            default.to_vec()
        } else {
            self.method.clone()
        }
    }

    fn solver(&self) -> NonlinearSolveConfig {
        NonlinearSolveConfig {
            abs_tol: self.tol,
            max_iter: self.max_iter,
            mode: if self.newton { SolveMode::Newton } else { SolveMode::FixedPoint },
        }
    }
}

#[derive(Args)]
struct HhArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.2)]
    tau: f64,
    #[arg(long, default_value_t = 2000.0)]
    t_final: f64,
    /// Initial condition: chaotic (H = 1/6) or box (H = 0.02).
    #[arg(long, default_value = "chaotic")]
    orbit: HhOrbit,
    /// Write every n-th step.
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Args)]
struct HhBenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.2)]
    tau: f64,
    #[arg(long, default_value_t = 1e4)]
    t_final: f64,
    #[arg(long, default_value = "chaotic")]
    orbit: HhOrbit,
    /// Timed repetitions after the warm-up run.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
}

#[derive(Args, Clone)]
struct Domain {
    /// Grid spacing.
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    #[arg(long, default_value_t = -50.0, allow_hyphen_values = true)]
    x_left: f64,
    #[arg(long, default_value_t = 50.0, allow_hyphen_values = true)]
    x_right: f64,
    /// Soliton as `c:x0`; repeat for several. Defaults to `-0.8:20`.
    #[arg(long = "soliton", value_parser = parse_soliton, allow_hyphen_values = true)]
    solitons: Vec<SolitonParams>,
    /// Two mirror-image solitons `(-0.8, 20)` and `(0.8, -20)`.
    #[arg(long, conflicts_with = "solitons")]
    collision: bool,
}

impl Domain {
    fn setup(&self) -> KgsSetup {
        let solitons = if self.collision {
            KgsSetup::collision().solitons
        } else if self.solitons.is_empty() {
            KgsSetup::one_soliton().solitons
        } else {
            self.solitons.clone()
        };
        KgsSetup {
            x_left: self.x_left,
            x_right: self.x_right,
            h: self.h,
            solitons,
        }
    }
}

fn parse_soliton(s: &str) -> Result<SolitonParams, String> {
    let (c, x0) = s.split_once(':').ok_or("expected c:x0")?;
    let c: f64 = c.trim().parse().map_err(|e| format!("bad velocity: {e}"))?;
    let x0: f64 = x0.trim().parse().map_err(|e| format!("bad centre: {e}"))?;
    SolitonParams::new(c, x0).map_err(|e| e.to_string())
}

#[derive(Args)]
struct KgsArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    domain: Domain,
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    #[arg(long, default_value_t = 50.0)]
    t_final: f64,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Also write the fields at the final time.
    #[arg(long)]
    profile: bool,
}

#[derive(Args)]
struct KgsBenchArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    domain: Domain,
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    #[arg(long, default_value_t = 50.0)]
    t_final: f64,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Refinement {
    Temporal,
    Spatial,
    Both,
}

#[derive(Args)]
struct AccuracyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = Refinement::Both)]
    refinement: Refinement,
    /// Time steps of the temporal study.
    #[arg(long, value_delimiter = ',')]
    taus: Vec<f64>,
    /// Fixed spacing of the temporal study.
    #[arg(long)]
    h: Option<f64>,
    /// Spacings of the spatial study.
    #[arg(long, value_delimiter = ',')]
    hs: Vec<f64>,
    /// Fixed step of the spatial study.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Random states per model and check.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

enum Failure {
    Config(String),
    Solver(String),
    Other(String),
    ChecksFailed(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_solver_failure() {
            Failure::Solver(e.to_string())
        } else {
            match e {
                Error::Config(_) | Error::InvalidGrouping(_) | Error::InfeasibleEnergy { .. } => {
                    Failure::Config(e.to_string())
                }
                other => Failure::Other(other.to_string()),
            }
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> CliResult {
    let mut w = create(dir, name)?;
    write_summary(value, &mut w)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Runs one spec and writes `<stem>.csv` (series), `<stem>.json` (summary)
/// and any extra files. Returns the report so the caller can check status.
fn run_to_files(spec: &ExperimentSpec, common: &Common, stem: &str, poincare: bool, profile: bool) -> CliResult<RunReport> {
    let dir = &common.out;
    let csv = common.format == Format::Csv;
    let mut series = if csv && !poincare { Some(create(dir, &format!("{stem}.csv"))?) } else { None };
    let mut section = if poincare && csv { Some(create(dir, &format!("{stem}.csv"))?) } else { None };
    let mut fields = if profile && csv {
        Some(create(dir, &format!("{}-profile.csv", stem))?)
    } else {
        None
    };
    let report = run_experiment(
        spec,
        Sinks {
            series: series.as_mut().map(|w| w as &mut dyn Write),
            poincare: section.as_mut().map(|w| w as &mut dyn Write),
            profile: fields.as_mut().map(|w| w as &mut dyn Write),
        },
    )?;
    write_json(dir, &format!("{stem}.json"), &report)?;
    for w in report.warnings.iter() {
        eprintln!("warning: {w}");
    }
    let drift = match report.max_rm {
        Some(rm) => format!("max RH {:.3e}, max RM {:.3e}", report.max_rh, rm),
        None => format!("max RH {:.3e}", report.max_rh),
    };
    match &report.status {
        RunStatus::Completed => println!("{stem}: {} steps, {drift}, {:.3}s", report.steps, report.wall_seconds),
        RunStatus::SolverFailed { step, message } => eprintln!("{stem}: solver failed at step {step}: {message}"),
    }
    Ok(report)
}

fn finish_runs(reports: &[RunReport]) -> CliResult {
    match reports.iter().find_map(|r| match &r.status {
        RunStatus::SolverFailed { step, message } => Some(format!("{} step {step}: {message}", r.spec.method)),
        RunStatus::Completed => None,
    }) {
        Some(msg) => Err(Failure::Solver(msg)),
        None => Ok(()),
    }
}

fn hh(args: &HhArgs, poincare: bool) -> CliResult {
    let kind = if poincare { "hh-poincare" } else { "hh-orbit" };
    let orbit = match args.orbit {
        HhOrbit::Chaotic => "chaotic",
        HhOrbit::Box => "box",
    };
    let mut reports = Vec::new();
    for m in args.common.methods(&[Method::Pavf]) {
        let mut spec = ExperimentSpec::henon_heiles(args.orbit, m, args.tau, args.t_final).with_stride(args.stride);
        spec.solver = args.common.solver();
        reports.push(run_to_files(&spec, &args.common, &format!("{kind}-{orbit}-{}", m.slug()), poincare, false)?);
    }
    finish_runs(&reports)
}

fn kgs_run(args: &KgsArgs) -> CliResult {
    let mut reports = Vec::new();
    for m in args.common.methods(&[Method::Pavf]) {
        let mut spec = ExperimentSpec::kgs(args.domain.setup(), m, args.tau, args.t_final).with_stride(args.stride);
        spec.solver = args.common.solver();
        reports.push(run_to_files(&spec, &args.common, &format!("kgs-run-{}", m.slug()), false, args.profile)?);
    }
    finish_runs(&reports)
}

fn write_costs(common: &Common, stem: &str, rows: &[CostRow]) -> CliResult {
    for r in rows {
        println!(
            "{:<13} median {:.4}s over {} runs, {} steps, {} iterations",
            r.method.label(),
            r.median_seconds,
            r.samples.len(),
            r.steps,
            r.total_iterations
        );
    }
    match common.format {
        Format::Json => write_json(&common.out, &format!("{stem}.json"), &rows),
        Format::Csv => {
            let mut w = create(&common.out, &format!("{stem}.csv"))?;
            writeln!(w, "method,median_seconds,steps,iterations")?;
            for r in rows {
                writeln!(w, "{},{:?},{},{}", r.method.slug(), r.median_seconds, r.steps, r.total_iterations)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn bench(common: &Common, specs: Vec<ExperimentSpec>, repeats: usize, stem: &str) -> CliResult {
    let specs: Vec<ExperimentSpec> = specs
        .into_iter()
        .map(|mut s| {
            s.solver = common.solver();
            s
        })
        .collect();
    let rows = cost_benchmark(&specs, repeats)?;
    write_costs(common, stem, &rows)
}

fn write_studies(common: &Common, studies: &[AccuracyStudy]) -> CliResult {
    for s in studies {
        println!(
            "{:<13} {:?}: fitted order L2 {:.3}, Linf {:.3}",
            s.method.label(),
            s.refinement,
            s.fitted_order_l2,
            s.fitted_order_linf
        );
    }
    match common.format {
        Format::Json => write_json(&common.out, "kgs-accuracy.json", &studies),
        Format::Csv => {
            let mut w = create(&common.out, "kgs-accuracy.csv")?;
            writeln!(w, "method,refinement,step,error_l2,error_linf,order_l2,order_linf")?;
            let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
            for s in studies {
                let kind = match s.refinement {
                    pavf_core::harness::Refinement::Temporal => "temporal",
                    pavf_core::harness::Refinement::Spatial => "spatial",
                };
                for r in &s.rows {
                    writeln!(
                        w,
                        "{},{kind},{:?},{:?},{:?},{},{}",
                        s.method.slug(),
                        r.step,
                        r.error_l2,
                        r.error_linf,
                        opt(r.order_l2),
                        opt(r.order_linf)
                    )?;
                }
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn kgs_accuracy(args: &AccuracyArgs) -> CliResult {
    let mut cfg = KgsAccuracyConfig {
        solver: args.common.solver(),
        ..Default::default()
    };
    if !args.taus.is_empty() {
        cfg.taus = args.taus.clone();
    }
    if !args.hs.is_empty() {
        cfg.hs = args.hs.clone();
    }
    if let Some(h) = args.h {
        cfg.h = h;
    }
    if let Some(tau) = args.tau {
        cfg.tau = tau;
    }
    if let Some(t) = args.t_final {
        cfg.t_final = t;
    }
    let mut studies = Vec::new();
    for m in args.common.methods(&Method::COMPARED) {
        if args.refinement != Refinement::Spatial {
            studies.push(kgs_temporal_accuracy(m, &cfg)?);
        }
        if args.refinement != Refinement::Temporal {
            studies.push(kgs_spatial_accuracy(m, &cfg)?);
        }
    }
    write_studies(&args.common, &studies)
}

fn verify(args: &VerifyArgs) -> CliResult {
    let cfg = VerifyConfig {
        seed: args.seed,
        samples: args.samples,
        ..Default::default()
    };
    let results = run_all(&cfg)?;
    for r in &results {
        println!(
            "{} ({}) {}: worst {:.3e} (tolerance {:.0e}, {} samples)",
            if r.passed() { "PASS" } else { "FAIL" },
            r.suite,
            r.name,
            r.worst,
            r.tolerance,
            r.samples
        );
    }
    match args.format {
        Format::Json => write_json(&args.out, "verify.json", &results)?,
        Format::Csv => {
            let mut w = create(&args.out, "verify.csv")?;
            writeln!(w, "suite,check,samples,worst,tolerance,passed")?;
            for r in &results {
                writeln!(w, "{},{},{},{:?},{:?},{}", r.suite, r.name, r.samples, r.worst, r.tolerance, r.passed())?;
            }
            w.flush()?;
        }
    }
    match results.iter().filter(|r| !r.passed()).count() {
        0 => Ok(()),
        n => Err(Failure::ChecksFailed(n)),
    }
}

fn dispatch(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::HhOrbit(a) => hh(a, false),
        Command::HhPoincare(a) => hh(a, true),
        Command::HhBench(a) => {
            let specs = a
                .common
                .methods(&Method::COMPARED)
                .into_iter()
                .map(|m| ExperimentSpec::henon_heiles(a.orbit, m, a.tau, a.t_final))
                .collect();
            bench(&a.common, specs, a.repeats, "hh-bench")
        }
        Command::KgsRun(a) => kgs_run(a),
        Command::KgsAccuracy(a) => kgs_accuracy(a),
        Command::KgsBench(a) => {
            let specs = a
                .common
                .methods(&Method::COMPARED)
                .into_iter()
                .map(|m| ExperimentSpec::kgs(a.domain.setup(), m, a.tau, a.t_final))
                .collect();
            bench(&a.common, specs, a.repeats, "kgs-bench")
        }
        Command::Verify(a) => verify(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: solver did not converge: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::ChecksFailed(n)) => {
            eprintln!("error: {n} check(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
