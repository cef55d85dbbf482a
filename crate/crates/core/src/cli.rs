//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 parse or validation failure,
//! 3 solver failure, 4 I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{self, BenchError, SweepPlan, DEFAULT_DENSITIES, DEFAULT_SIZES};
use crate::format::{self, FormatError};
use crate::generator::{generate_dd_matrix, generate_rhs, GenError, GenSpec};
use crate::markov::reachability_probabilities;
use crate::solvers::{default_workers, InitialGuess, Method, ShadowVector, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "markov-reach", version, about = "Markov chain reachability probabilities with Jacobi and BiCGStab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute reachability probabilities for a chain file.
    Solve(SolveArgs),
    /// Time solver sweeps over generated systems and write CSV.
    Bench(BenchArgs),
    /// Write a generated matrix and right-hand side.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Jacobi,
    Bicgstab,
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    /// Worker threads for parallel solvers [default: available parallelism].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Convergence tolerance.
    #[arg(long = "tol", default_value_t = 1e-10)]
    pub tol: f64,
    /// Iteration limit.
    #[arg(long = "max-iters", default_value_t = 10_000)]
    pub max_iters: usize,
}

impl SolverFlags {
    fn config(&self, initial_guess: InitialGuess) -> SolverConfig {
        SolverConfig {
            tolerance: self.tol,
            max_iterations: self.max_iters,
            initial_guess,
            workers: self.workers.unwrap_or_else(default_workers),
            parallel_dot: false,
            shadow: ShadowVector::default(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub method: Family,
    /// Use the parallel variant.
    #[arg(long)]
    pub parallel: bool,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Start from a seeded random vector instead of zeros.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also print the probability of every state.
    #[arg(long)]
    pub full_vector: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated matrix sizes.
    #[arg(long, value_delimiter = ',', conflicts_with = "table1")]
    pub sizes: Vec<usize>,
    /// Comma-separated densities.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["table1", "nnz"])]
    pub densities: Vec<f64>,
    /// Comma-separated exact entry counts, instead of densities.
    #[arg(long, value_delimiter = ',', conflicts_with = "table1")]
    pub nnz: Vec<usize>,
    /// Sweep the 18 model-checking matrix shapes.
    #[arg(long)]
    pub table1: bool,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Comma-separated methods (jacobi-seq, jacobi-par, bicgstab-seq, bicgstab-par).
    #[arg(long, value_delimiter = ',', default_value = "jacobi-seq,jacobi-par,bicgstab-seq,bicgstab-par")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write per-cell mean and standard deviation to `<stem>.summary.csv`.
    #[arg(long)]
    pub summarize: bool,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["density", "nnz"]))]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub nnz: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Matrix output; the right-hand side goes to `<out>.rhs` unless `--rhs-out` is given.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub rhs_out: Option<PathBuf>,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        let code = if e.is_io() { EXIT_IO } else { EXIT_INVALID };
        CliError::new(code, e.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        let code = match e {
            BenchError::InvalidPlan(_) | BenchError::Generator(_) => EXIT_INVALID,
            BenchError::Io { .. } | BenchError::Csv { .. } => EXIT_IO,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::new(EXIT_INVALID, e.to_string())
    }
}

/// Probability text with as many decimals as the tolerance resolves,
/// trailing zeros trimmed.
pub fn format_probability(p: f64, tolerance: f64) -> String {
    let digits = (-tolerance.log10()).ceil().clamp(1.0, 17.0) as usize;
    let s = format!("{p:.digits$}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (chain, goals) = format::read_dtmc_file(&args.input)?;
    let method = match (args.method, args.parallel) {
        (Family::Jacobi, false) => Method::JacobiSeq,
        (Family::Jacobi, true) => Method::JacobiPar,
        (Family::Bicgstab, false) => Method::BicgstabSeq,
        (Family::Bicgstab, true) => Method::BicgstabPar,
    };
    let guess = args.seed.map_or(InitialGuess::Zeros, InitialGuess::SeededRandom);
    let config = args.solver.config(guess);
    config.validate().map_err(|e| CliError::new(EXIT_USAGE, e.to_string()))?;

    let result = reachability_probabilities(&chain, &goals, method, &config)
        .map_err(|e| CliError::new(EXIT_SOLVER, e.to_string()))?;

    let io = |e: std::io::Error| CliError::new(EXIT_IO, e.to_string());
    writeln!(out, "{}", format_probability(result.initial_probability(), config.tolerance)).map_err(io)?;
    if args.full_vector {
        for (s, p) in result.probabilities.iter().enumerate() {
            writeln!(out, "{s} {}", format_probability(*p, config.tolerance)).map_err(io)?;
        }
    }
    Ok(())
}

pub fn bench_plan(args: &BenchArgs) -> Result<SweepPlan, CliError> {
    let plan = if args.table1 {
        SweepPlan::table1()
    } else {
        let sizes: &[usize] = if args.sizes.is_empty() { &DEFAULT_SIZES } else { &args.sizes };
        if !args.nnz.is_empty() {
            SweepPlan::grid_nnz(sizes, &args.nnz)
        } else {
            let densities: &[f64] = if args.densities.is_empty() { &DEFAULT_DENSITIES } else { &args.densities };
            SweepPlan::grid(sizes, densities)
        }
    };
    let plan = plan
        .with_trials(args.trials)
        .with_methods(&args.methods)
        .with_base_seed(args.base_seed)
        .with_config(args.solver.config(InitialGuess::Zeros));
    plan.validate()?;
    Ok(plan)
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let plan = bench_plan(args)?;
    let records = bench::run_sweep(&plan)?;
    bench::write_records(&args.output, &records)?;
    let failed = records.iter().filter(|r| !r.converged).count();
    let _ = writeln!(out, "wrote {} rows to {} ({failed} not converged)", records.len(), args.output.display());
    if args.summarize {
        let path = bench::summary_path(&args.output);
        bench::write_summary(&path, &bench::summarize(&records))?;
        let _ = writeln!(out, "wrote summary to {}", path.display());
    }
    Ok(())
}

fn rhs_path(args: &GenerateArgs) -> PathBuf {
    args.rhs_out.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".rhs");
        PathBuf::from(p)
    })
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = match (args.density, args.nnz) {
        (Some(d), None) => GenSpec::density(args.n, d, args.seed),
        (None, Some(m)) => GenSpec::nnz(args.n, m, args.seed),
        _ => return Err(CliError::new(EXIT_USAGE, "exactly one of --density and --nnz is required")),
    };
    let matrix = generate_dd_matrix(&spec)?;
    let rhs = generate_rhs(args.n, bench::rhs_seed(args.seed));
    let rhs_out = rhs_path(args);
    format::write_file(&args.out, &format::write_matrix(&matrix))?;
    format::write_file(&rhs_out, &format::write_vector(&rhs))?;
    let _ = writeln!(
        out,
        "wrote {}x{} matrix with {} entries to {} and rhs to {}",
        matrix.n(),
        matrix.n(),
        matrix.nnz(),
        args.out.display(),
        rhs_out.display()
    );
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Generate(a) => cmd_generate(a, out),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let rendered = e.render();
            let _ = if code == EXIT_OK { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
