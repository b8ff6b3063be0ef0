use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use queuegrad::diagnostics::{check_trace, fit_rate, CheckStatus};
use queuegrad::instances::{MatrixNorm, ProblemSpec};
use queuegrad::oracle::{self, ReferenceSolution};
use queuegrad::solvers::{self, constraint_onsets, AlgorithmId, InnerConfig, RunConfig, Runner, Step};
use queuegrad::sweep;
use queuegrad::{ConstantsPack, ConvexProgram};

use crate::problem_file::{load_problem, write_problem_file};
use crate::trace_csv::{fmt_f64, read_trace_file, write_trace_file};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

/// Raised when a trace fails at least one invariant check.
#[derive(Debug)]
pub struct VerificationFailed(pub Vec<String>);

impl fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "verification failed: {}", self.0.join(", "))
    }
}

impl std::error::Error for VerificationFailed {}

/// Exit code for an error: 2 for numerical failures, 3 for failed
/// verification, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<VerificationFailed>() {
            return EXIT_VERIFICATION;
        }
        if let Some(e) = cause.downcast_ref::<queuegrad::Error>() {
            return match e {
                queuegrad::Error::NumericalFailure(_) | queuegrad::Error::ConvergenceFailure { .. } => EXIT_NUMERICAL,
                _ => EXIT_CONFIG,
            };
        }
    }
    EXIT_CONFIG
}

#[derive(Debug, Parser)]
#[command(
    name = "queuegrad",
    version,
    about = "Virtual-queue primal-dual solvers for small constrained convex programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one algorithm and write its trace as CSV.
    Solve(SolveArgs),
    /// Check a trace against the method's invariants.
    Verify(VerifyArgs),
    /// Fit the convergence rate of a trace and report constraint onsets.
    Rate(RateArgs),
    /// Run all three algorithms side by side.
    Compare(CompareArgs),
    /// Solve exactly with the reference solver.
    Oracle(OracleArgs),
    /// Run the queue-gradient method for several multiples of the automatic step.
    Sweep(SweepArgs),
    /// Write a seeded random problem file.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepArg {
    Auto,
    Value(f64),
}

impl std::str::FromStr for StepArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(StepArg::Auto);
        }
        s.parse::<f64>()
            .map(StepArg::Value)
            .map_err(|_| format!("step must be 'auto' or a number, got '{s}'"))
    }
}

impl From<StepArg> for Step {
    fn from(s: StepArg) -> Step {
        match s {
            StepArg::Auto => Step::Auto,
            StepArg::Value(v) => Step::Explicit(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartArg {
    Lower,
    Upper,
    Point(Vec<f64>),
}

impl std::str::FromStr for StartArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lower" => Ok(StartArg::Lower),
            "upper" => Ok(StartArg::Upper),
            _ => s
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(StartArg::Point)
                .map_err(|_| format!("x-init must be 'lower', 'upper' or a comma-separated vector, got '{s}'")),
        }
    }
}

fn start_point(spec: &ProblemSpec, arg: Option<&StartArg>) -> Vec<f64> {
    match arg {
        None => spec.default_start(),
        Some(StartArg::Lower) => spec.lower().to_vec(),
        Some(StartArg::Upper) => spec.upper().to_vec(),
        Some(StartArg::Point(p)) => p.clone(),
    }
}

/// Problem, constants and multiplier options shared by several commands.
#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Problem JSON file, or random:<lp|qp>:<n>:<m>:<seed>.
    pub problem: String,
    /// Upper bound on the multiplier norm; derived from a Slater point if omitted.
    #[arg(long)]
    pub lambda_bound: Option<f64>,
    /// Use a power-iteration spectral norm instead of the Frobenius norm.
    #[arg(long)]
    pub spectral_norm: bool,
}

struct Loaded {
    spec: ProblemSpec,
    program: ConvexProgram,
    constants: ConstantsPack,
}

impl ProblemArgs {
    fn load(&self) -> Result<Loaded> {
        let spec = load_problem(&self.problem)?;
        let norm = if self.spectral_norm {
            MatrixNorm::Spectral
        } else {
            MatrixNorm::Frobenius
        };
        let (program, constants) = spec.build_with(norm)?;
        let constants = match self.lambda_bound {
            Some(b) => constants.with_lambda_bound(b),
            None => sweep::with_slater_bound(&spec, &program, constants),
        };
        Ok(Loaded {
            spec,
            program,
            constants,
        })
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value = "new")]
    pub algorithm: AlgorithmId,
    #[arg(long, default_value_t = 100_000)]
    pub iterations: usize,
    /// Step parameter (γ, c or α): 'auto' or a number.
    #[arg(long, default_value = "auto")]
    pub step: StepArg,
    /// Starting point: lower, upper or a comma-separated vector.
    #[arg(long, allow_hyphen_values = true)]
    pub x_init: Option<StartArg>,
    /// Trace CSV to write.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Omit the x_1..x_n columns (the trace can then not be verified).
    #[arg(long)]
    pub no_x_columns: bool,
    /// Subgradient baseline: drop ∇f from the primal step.
    #[arg(long)]
    pub without_objective_gradient: bool,
    /// Dual-type baseline: inner solver tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub inner_tol: f64,
    /// Dual-type baseline: inner solver iteration cap.
    #[arg(long, default_value_t = 100_000)]
    pub inner_max_iterations: usize,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct VerifyArgs {
    pub trace: PathBuf,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Optimal value; enables the objective and duality bounds.
    #[arg(long)]
    pub f_star: Option<f64>,
    /// Compute the optimal value with the reference solver.
    #[arg(long, conflicts_with = "f_star")]
    pub oracle: bool,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct RateArgs {
    pub trace: PathBuf,
    /// Optimal value used for the gap.
    #[arg(long, required_unless_present = "problem")]
    pub f_star: Option<f64>,
    /// Problem file; the optimal value then comes from the reference solver.
    #[arg(long, conflicts_with = "f_star")]
    pub problem: Option<String>,
    #[arg(long, default_value_t = 1e3)]
    pub from: f64,
    #[arg(long, default_value_t = 1e5)]
    pub to: f64,
    /// CSV with the log-log gap series and the constraint series.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CompareArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub x_init: Option<StartArg>,
    /// Optimal value; computed with the reference solver when omitted.
    #[arg(long)]
    pub f_star: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Problem JSON file, or random:<lp|qp>:<n>:<m>:<seed>.
    pub problem: String,
    /// Grid points per axis for quadratic programs.
    #[arg(long, default_value_t = 200)]
    pub grid_points: usize,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    /// Comma-separated multiples of the automatic step.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2,4")]
    pub multiples: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x_init: Option<StartArg>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = ["lp", "qp"])]
    pub family: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn run_cli(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Rate(a) => cmd_rate(&a, out),
        Command::Compare(a) => cmd_compare(&a, out),
        Command::Oracle(a) => cmd_oracle(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Generate(a) => cmd_generate(&a, out),
    }
}

fn max_entry(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<()> {
    let Loaded {
        spec,
        program,
        constants,
    } = args.problem.load()?;
    let mut config = RunConfig::new(args.iterations, start_point(&spec, args.x_init.as_ref()));
    config.step = args.step.into();
    config.include_objective_gradient = !args.without_objective_gradient;
    config.inner = InnerConfig {
        tol: args.inner_tol,
        max_iterations: args.inner_max_iterations,
    };
    let trace = solvers::run(args.algorithm, &program, &constants, &config)?;
    let last = trace.last().clone();
    writeln!(out, "algorithm  {}", trace.algorithm)?;
    writeln!(out, "{:<10} {}", args.algorithm.step_name(), trace.step)?;
    writeln!(out, "iterations {}", last.t)?;
    writeln!(out, "f(xbar)    {}", last.f_avg)?;
    writeln!(out, "max g(xbar) {}", max_entry(&last.g_avg))?;
    if let Some(path) = &args.output {
        write_trace_file(path, &trace, !args.no_x_columns)?;
        writeln!(out, "wrote {} records to {}", trace.records.len(), path.display())?;
    }
    if let Some(err) = trace.aborted {
        return Err(err).context(format!("run stopped after {} iterations", last.t));
    }
    Ok(())
}

fn reference(spec: &ProblemSpec, grid_points: usize) -> Result<ReferenceSolution> {
    Ok(match spec {
        ProblemSpec::Lp(s) => oracle::lp_vertex_solve(s)?,
        ProblemSpec::Qp(s) => oracle::qp_grid_polish(s, grid_points)?,
    })
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<()> {
    let csv = read_trace_file(&args.trace)?;
    let Loaded {
        spec,
        program,
        constants,
    } = args.problem.load()?;
    let f_star = match (args.f_star, args.oracle) {
        (Some(v), _) => Some(v),
        (None, true) => Some(reference(&spec, 200)?.f_star),
        (None, false) => None,
    };
    let trace = csv.to_solver_trace(&program)?;
    let report = check_trace(&trace, &program, &constants, f_star, None)?;
    write!(out, "{report}")?;
    let failed: Vec<String> = report.failures().map(|c| c.name.to_string()).collect();
    if !failed.is_empty() {
        return Err(VerificationFailed(failed).into());
    }
    let skipped = report
        .checks
        .iter()
        .filter(|c| matches!(c.status, CheckStatus::Skipped(_)))
        .count();
    writeln!(out, "all applicable checks passed ({skipped} skipped)")?;
    Ok(())
}

pub fn cmd_rate(args: &RateArgs, out: &mut dyn Write) -> Result<()> {
    let csv = read_trace_file(&args.trace)?;
    let f_star = match (&args.f_star, &args.problem) {
        (Some(v), _) => *v,
        (None, Some(p)) => reference(&load_problem(p)?, 200)?.f_star,
        (None, None) => bail!("pass --f-star or --problem"),
    };
    let gaps: Vec<(f64, f64)> = csv
        .rows
        .iter()
        .filter(|r| r.t >= 1)
        .map(|r| (r.t as f64, f_star - r.f_xbar))
        .collect();
    let in_window: Vec<f64> = gaps
        .iter()
        .filter(|(t, _)| *t >= args.from && *t <= args.to)
        .map(|(_, g)| *g)
        .collect();
    let sign = if in_window.iter().all(|g| *g > 0.0) {
        "positive (f(xbar) below f*)"
    } else if in_window.iter().all(|g| *g < 0.0) {
        "negative (f(xbar) above f*)"
    } else {
        "mixed"
    };
    writeln!(out, "f*         {f_star}")?;
    writeln!(out, "gap sign   {sign} over t in [{}, {}]", args.from, args.to)?;

    if let Some(path) = &args.output {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .with_context(|| format!("creating {}", path.display()))?;
        let m = csv.rows[0].g_xbar.len();
        let mut head = vec!["t".to_string(), "log10_t".into(), "gap".into(), "log10_abs_gap".into()];
        head.extend((1..=m).map(|k| format!("g_xbar_{k}")));
        w.write_record(&head)?;
        for r in csv.rows.iter().filter(|r| r.t >= 1) {
            let gap = f_star - r.f_xbar;
            let mut row = vec![
                r.t.to_string(),
                fmt_f64((r.t as f64).log10()),
                fmt_f64(gap),
                fmt_f64(gap.abs().log10()),
            ];
            row.extend(r.g_xbar.iter().map(|g| fmt_f64(*g)));
            w.write_record(&row)?;
        }
        w.flush()?;
        writeln!(out, "series     {}", path.display())?;
    }

    let onsets = constraint_onsets(csv.rows.iter().map(|r| (r.t, r.g_xbar.as_slice())));
    for (k, o) in onsets.iter().enumerate() {
        match o {
            Some(t) => writeln!(out, "onset g_{}  t = {t}", k + 1)?,
            None => writeln!(out, "onset g_{}  still violated at the last record", k + 1)?,
        }
    }

    // the signed gap can be negative throughout (a feasible average sits
    // above f*), so the fit uses its magnitude
    let magnitude: Vec<(f64, f64)> = gaps.iter().map(|(t, g)| (*t, g.abs())).collect();
    let fit = fit_rate(&magnitude, (args.from, args.to))
        .context("no fit: the gap is zero or the window holds too few records")?;
    writeln!(
        out,
        "slope      {:.6} (intercept {:.6}, rms residual {:.3e}, {} points)",
        fit.slope, fit.intercept, fit.residual, fit.points
    )?;
    Ok(())
}

fn checkpoints(iterations: usize) -> Vec<usize> {
    let mut ts: Vec<usize> = [100, 1_000, 10_000, iterations]
        .into_iter()
        .filter(|&t| t <= iterations)
        .collect();
    ts.dedup();
    ts
}

struct Column {
    algorithm: AlgorithmId,
    step: f64,
    values: Vec<(f64, f64)>,
    note: Option<String>,
}

fn run_column(loaded: &Loaded, algorithm: AlgorithmId, config: &RunConfig, ts: &[usize]) -> Column {
    let mut column = Column {
        algorithm,
        step: f64::NAN,
        values: Vec::new(),
        note: None,
    };
    let result = (|| -> queuegrad::Result<()> {
        let mut runner = Runner::new(algorithm, &loaded.program, &loaded.constants, config)?;
        column.step = runner.step_parameter();
        for &t in ts {
            while runner.t() < t {
                runner.advance()?;
            }
            let r = runner.record()?;
            column.values.push((r.f_avg, max_entry(&r.g_avg)));
        }
        Ok(())
    })();
    if let Err(e) = result {
        column.note = Some(e.to_string());
    }
    column
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<()> {
    let loaded = args.problem.load()?;
    if args.iterations == 0 {
        return Err(queuegrad::Error::Config("iterations must be ≥ 1".into()).into());
    }
    let f_star = match args.f_star {
        Some(v) => Some(v),
        None => reference(&loaded.spec, 200).ok().map(|r| r.f_star),
    };
    let config = RunConfig::new(args.iterations, start_point(&loaded.spec, args.x_init.as_ref()));
    let ts = checkpoints(args.iterations);
    let columns = sweep::map(&AlgorithmId::ALL, |&a| run_column(&loaded, a, &config, &ts));

    match f_star {
        Some(v) => writeln!(out, "f* = {v}; entries are f* - f(xbar(t))")?,
        None => writeln!(out, "no reference optimum; entries are f(xbar(t))")?,
    }
    write!(out, "{:>10}", "t")?;
    for c in &columns {
        write!(out, " {:>22}", c.algorithm.as_str())?;
    }
    writeln!(out)?;
    for (i, t) in ts.iter().enumerate() {
        write!(out, "{t:>10}")?;
        for c in &columns {
            match c.values.get(i) {
                Some((f, _)) => write!(out, " {:>22.12e}", f_star.map_or(*f, |s| s - f))?,
                None => write!(out, " {:>22}", "n/a")?,
            }
        }
        writeln!(out)?;
    }
    write!(out, "{:>10}", "max g")?;
    for c in &columns {
        match c.values.last() {
            Some((_, g)) if c.values.len() == ts.len() => write!(out, " {g:>22.12e}")?,
            _ => write!(out, " {:>22}", "n/a")?,
        }
    }
    writeln!(out)?;
    write!(out, "{:>10}", "step")?;
    for c in &columns {
        write!(out, " {:>22.12e}", c.step)?;
    }
    writeln!(out)?;
    for c in columns.iter().filter(|c| c.note.is_some()) {
        writeln!(out, "{}: {}", c.algorithm, c.note.as_deref().unwrap_or_default())?;
    }
    Ok(())
}

pub fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<()> {
    let spec = load_problem(&args.problem)?;
    let sol = reference(&spec, args.grid_points)?;
    writeln!(out, "method      {}", sol.method.as_str())?;
    writeln!(out, "f*          {}", sol.f_star)?;
    let xs: Vec<String> = sol.x_star.iter().map(|v| v.to_string()).collect();
    writeln!(out, "x*          [{}]", xs.join(", "))?;
    writeln!(out, "violation   {:e}", sol.certificate)?;
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let loaded = args.problem.load()?;
    let config = RunConfig::new(args.iterations, start_point(&loaded.spec, args.x_init.as_ref()));
    let rows = sweep::gamma_sweep(&loaded.program, &loaded.constants, &config, &args.multiples)?;
    writeln!(
        out,
        "{:>8} {:>24} {:>24} {:>24}",
        "multiple", "gamma", "f(xbar)", "max g(xbar)"
    )?;
    for (k, (gamma, result)) in args.multiples.iter().zip(rows) {
        match result {
            Ok(s) if s.aborted.is_none() => writeln!(
                out,
                "{k:>8} {gamma:>24.12e} {:>24.12e} {:>24.12e}",
                s.last.f_avg,
                max_entry(&s.last.g_avg)
            )?,
            Ok(s) => writeln!(out, "{k:>8} {gamma:>24.12e} stopped: {}", s.aborted.unwrap())?,
            Err(e) => writeln!(out, "{k:>8} {gamma:>24.12e} error: {e}")?,
        }
    }
    Ok(())
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let source = format!("random:{}:{}:{}:{}", args.family, args.n, args.m, args.seed);
    let spec = load_problem(&source)?;
    match &args.output {
        Some(path) => {
            write_problem_file(path, &spec)?;
            writeln!(out, "wrote {}", path.display())?;
        }
        None => {
            let file = crate::problem_file::ProblemFile::from_spec(&spec);
            writeln!(out, "{}", serde_json::to_string_pretty(&file)?)?;
        }
    }
    Ok(())
}
