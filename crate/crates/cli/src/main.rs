//! Command-line front end for the coupled Riccati solvers: load and validate
//! problem files, run the iteration variants, and emit reports, traces, and
//! sweep tables as plain files.
//!
//! Exit codes: 0 success; 1 validation failure; 2 malformed input or usage;
//! 3 failed solver precondition; 4 solver failure; 5 non-convergence.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ccare::care::{pbh_detectable, pbh_stabilizable, DEFAULT_PBH_TOL};
use ccare::iteration::{
    compare_run, orderings_to_csv, report_to_text, run, shift_sweep, sweep_table_to_csv,
    trace_to_csv, InitSpec, IterationConfig, IterationError, ShiftSpec, Variant,
};
use ccare::model::{
    auto_shifts, builtin_example, parse_sym_matrix_list, CcareProblem, ModelError, ProblemFile,
    ShiftVector,
};

const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const EXIT_NOT_CONVERGED: u8 = 5;

#[derive(Parser)]
#[command(name = "ccare", version, about = "Coupled algebraic Riccati equation solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one iteration variant; writes report.txt and trace.csv
    Solve(RunArgs),
    /// Run both variants from the same start; writes two reports and ordering.csv
    Compare(RunArgs),
    /// Run every shift in a list with both variants; writes sweep.csv
    Sweep(SweepArgs),
    /// Check a problem file against the data invariants and PBH tests
    Validate(ValidateArgs),
    /// Write a bundled example problem file
    Example(ExampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Regular,
    Accelerated,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Regular => Variant::Regular,
            VariantArg::Accelerated => Variant::Accelerated,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Problem file (JSON)
    problem: PathBuf,
    #[arg(long, value_enum, default_value = "accelerated")]
    variant: VariantArg,
    /// How the run starts.
    #[arg(long, default_value = "zero", help = "Initial iterates: zero | identity:<c> | file:<path>")]
    init: String,
    /// How shifts are chosen.
    #[arg(long, default_value = "auto:0.01", help = "Shifts: auto[:<margin>] | <value> | <v1>,<v2>,...")]
    rho: String,
    /// Stopping tolerance on the per-sweep delta
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    base: RunArgs,
    /// Semicolon-separated shift list, each entry a value or per-mode commas
    #[arg(long)]
    rhos: String,
}

#[derive(Args)]
struct ValidateArgs {
    problem: PathBuf,
    /// Shifts to check the PBH preconditions under
    #[arg(long, default_value = "auto:0.01")]
    rho: String,
}

#[derive(Args)]
struct ExampleArgs {
    /// Example name (currently: ivanov_example1)
    name: String,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// A failure that already knows its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(EXIT_SOLVER, format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Validate(args) => cmd_validate(&args),
        Command::Example(args) => cmd_example(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_problem(path: &Path) -> Result<CcareProblem, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))?;
    let file = ProblemFile::from_json(&text)
        .map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
    file.to_problem().map_err(|e| match e {
        ModelError::Parse { .. } => Failure::new(EXIT_PARSE, e.to_string()),
        other => Failure::new(EXIT_PARSE, other.to_string()),
    })
}

fn parse_rho(spec: &str, modes: usize) -> Result<ShiftSpec, Failure> {
    if spec == "auto" {
        return Ok(ShiftSpec::Auto { margin: 0.01 });
    }
    if let Some(rest) = spec.strip_prefix("auto:") {
        let margin: f64 = rest
            .parse()
            .map_err(|_| Failure::new(EXIT_PARSE, format!("bad shift margin '{rest}'")))?;
        return Ok(ShiftSpec::Auto { margin });
    }
    let values: Result<Vec<f64>, _> = spec.split(',').map(str::trim).map(str::parse).collect();
    let values =
        values.map_err(|_| Failure::new(EXIT_PARSE, format!("bad shift list '{spec}'")))?;
    let values = if values.len() == 1 { vec![values[0]; modes] } else { values };
    if values.len() != modes {
        return Err(Failure::new(
            EXIT_PARSE,
            format!("{} shifts given for {} modes", values.len(), modes),
        ));
    }
    let rho = ShiftVector::new(values).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
    Ok(ShiftSpec::Explicit(rho))
}

fn parse_init(spec: &str, p: &CcareProblem) -> Result<InitSpec, Failure> {
    if spec == "zero" {
        return Ok(InitSpec::Zero);
    }
    if let Some(rest) = spec.strip_prefix("identity:") {
        let c: f64 = rest
            .parse()
            .map_err(|_| Failure::new(EXIT_PARSE, format!("bad identity scale '{rest}'")))?;
        return Ok(InitSpec::ScaledIdentity(c));
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::new(EXIT_PARSE, format!("cannot read {path}: {e}")))?;
        let mats = parse_sym_matrix_list(&text, p.n(), p.n_modes())
            .map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
        return Ok(InitSpec::Explicit(mats));
    }
    Err(Failure::new(EXIT_PARSE, format!("bad init spec '{spec}' (zero | identity:<c> | file:<path>)")))
}

fn build_config(args: &RunArgs, p: &CcareProblem) -> Result<IterationConfig, Failure> {
    Ok(IterationConfig {
        variant: args.variant.into(),
        tol: args.tol,
        max_iter: args.max_iter,
        shifts: parse_rho(&args.rho, p.n_modes())?,
        initial: parse_init(&args.init, p)?,
        ..IterationConfig::default()
    })
}

fn run_failure(e: IterationError) -> Failure {
    match e {
        IterationError::PreconditionFailed { .. } => Failure::new(EXIT_PRECONDITION, e.to_string()),
        IterationError::Model(ModelError::Parse { .. }) => Failure::new(EXIT_PARSE, e.to_string()),
        other => Failure::new(EXIT_SOLVER, other.to_string()),
    }
}

/// Write via a sibling temp file and rename, so readers never see partial
/// output.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let tmp = dir.join(format!("{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

fn cmd_solve(args: &RunArgs) -> Result<u8, Failure> {
    let problem = load_problem(&args.problem)?;
    let config = build_config(args, &problem)?;
    let report = run(&problem, &config).map_err(run_failure)?;
    let report_path = write_atomic(&args.out, "report.txt", &report_to_text(&report))?;
    let trace_path = write_atomic(&args.out, "trace.csv", &trace_to_csv(&report))?;
    println!("wrote {} and {}", report_path.display(), trace_path.display());
    if report.converged {
        println!("converged in {} sweeps, final residual {:.6e}", report.iterations, report.final_residual);
        Ok(EXIT_OK)
    } else {
        println!("did not converge within {} sweeps", report.iterations);
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn cmd_compare(args: &RunArgs) -> Result<u8, Failure> {
    let problem = load_problem(&args.problem)?;
    let config = build_config(args, &problem)?;
    let report = compare_run(&problem, &config).map_err(run_failure)?;
    write_atomic(&args.out, "report_accelerated.txt", &report_to_text(&report.accelerated))?;
    write_atomic(&args.out, "report_regular.txt", &report_to_text(&report.regular))?;
    write_atomic(&args.out, "ordering.csv", &orderings_to_csv(&report.orderings))?;
    println!(
        "accelerated: {} sweeps, regular: {} sweeps, {} orderings recorded",
        report.accelerated.iterations,
        report.regular.iterations,
        report.orderings.len()
    );
    if report.accelerated.converged && report.regular.converged {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<u8, Failure> {
    let problem = load_problem(&args.base.problem)?;
    let config = build_config(&args.base, &problem)?;
    let entries: Vec<&str> = args.rhos.split(';').map(str::trim).filter(|s| !s.is_empty()).collect();
    if entries.is_empty() {
        return Err(Failure::new(EXIT_PARSE, "empty shift list"));
    }
    let mut shifts = Vec::with_capacity(entries.len());
    for entry in entries {
        match parse_rho(entry, problem.n_modes())? {
            ShiftSpec::Explicit(rho) => shifts.push(rho),
            ShiftSpec::Auto { margin } => {
                let rho = auto_shifts(&problem, margin)
                    .map_err(|e| Failure::new(EXIT_SOLVER, e.to_string()))?;
                shifts.push(rho);
            }
        }
    }
    let rows = shift_sweep(&problem, &config, &shifts);
    let path = write_atomic(&args.base.out, "sweep.csv", &sweep_table_to_csv(&rows))?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    if rows.iter().any(|r| r.error.is_some()) {
        Ok(EXIT_SOLVER)
    } else if rows.iter().any(|r| !r.converged) {
        Ok(EXIT_NOT_CONVERGED)
    } else {
        Ok(EXIT_OK)
    }
}

fn cmd_validate(args: &ValidateArgs) -> Result<u8, Failure> {
    let problem = load_problem(&args.problem)?;
    for note in problem.validation_notes() {
        println!("note: {note}");
    }
    let violations = problem
        .validate()
        .map_err(|e| Failure::new(EXIT_SOLVER, e.to_string()))?;
    if !violations.is_empty() {
        for v in &violations {
            println!("violation: {v}");
        }
        return Ok(EXIT_INVALID);
    }
    // Resolve shifts and check the PBH preconditions mode by mode.
    let rho = match parse_rho(&args.rho, problem.n_modes())? {
        ShiftSpec::Explicit(rho) => rho,
        ShiftSpec::Auto { margin } => auto_shifts(&problem, margin)
            .map_err(|e| Failure::new(EXIT_SOLVER, e.to_string()))?,
    };
    let mut failed = false;
    for i in 0..problem.n_modes() {
        let mut shifted = problem.a(i).clone();
        for d in 0..problem.n() {
            shifted[(d, d)] -= rho.get(i);
        }
        let stab = pbh_stabilizable(&shifted, problem.s(i), DEFAULT_PBH_TOL)
            .map_err(|e| Failure::new(EXIT_SOLVER, e.to_string()))?;
        if !stab {
            println!("violation: mode {}: (A - rho I, S) fails the PBH stabilizability test", i + 1);
            failed = true;
        }
        let det = pbh_detectable(&shifted, problem.q(i), DEFAULT_PBH_TOL)
            .map_err(|e| Failure::new(EXIT_SOLVER, e.to_string()))?;
        if !det {
            println!("violation: mode {}: (A - rho I, Q) fails the PBH detectability test", i + 1);
            failed = true;
        }
    }
    if failed {
        return Ok(EXIT_INVALID);
    }
    println!(
        "ok: problem valid, PBH conditions hold under shifts [{}]",
        rho.as_slice().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
    );
    Ok(EXIT_OK)
}

fn cmd_example(args: &ExampleArgs) -> Result<u8, Failure> {
    let Some(file) = builtin_example(&args.name) else {
        return Err(Failure::new(
            EXIT_PARSE,
            format!("unknown example '{}'; available: ivanov_example1", args.name),
        ));
    };
    let path = write_atomic(&args.out, &format!("{}.json", args.name), &file.to_json())?;
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}
