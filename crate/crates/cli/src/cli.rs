//! The `symfd` command line.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, unknown problems,
//! malformed input), 2 on numerical or validation failures. Output files are
//! written only after the computation succeeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use symfd_core::assembly::{assemble_with, Executor, Grid};
use symfd_core::error::{Error, Result};
use symfd_core::fields::{builtin_problem, Problem, Source, BUILTIN_PROBLEMS};
use symfd_core::harness::{
    consistency_probe, convergence_study, doubling_levels, linf_error, solve_system,
    ConvergenceRow, SolverChoice, Tolerance,
};
use symfd_core::kdim::nullity_table;
use symfd_core::scheme::Scheme;
use symfd_core::solver::Preconditioner;

use crate::output::{convergence_csv, kdim_csv, probe_csv, write_matrix_market};
use crate::parallel::RayonExecutor;
use crate::problem_file::load_problem;

#[derive(Debug, Parser)]
#[command(
    name = "symfd",
    version,
    about = "Compact symmetric finite differences for -div(a grad u) = f"
)]
struct Cli {
    /// Worker threads (0 = all cores). `--threads 1` gives reproducible runs.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Write 0 in the seconds column so output is byte-for-byte reproducible.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Assemble and solve on one grid.
    Solve {
        #[command(flatten)]
        target: Target,
        /// Cells per axis.
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        solver: SolverArgs,
        /// CG tolerance (default: min(1e-2, 0.1 h^4), at least 1e-12).
        #[arg(long)]
        tol: Option<f64>,
        /// Write the system matrix in Matrix Market format.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
        /// CSV output (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve on N = n-start, 2 n-start, ... n-end and report observed orders.
    Convergence {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        n_start: usize,
        #[arg(long)]
        n_end: usize,
        #[command(flatten)]
        solver: SolverArgs,
        /// CG tolerances, one per level (the last repeats) or a single value.
        #[arg(long, value_delimiter = ',')]
        tol: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure the truncation error of a scheme on the exact solution.
    Consistency {
        #[command(flatten)]
        target: Target,
        /// Comma-separated cells per axis, e.g. 8,16,32,64.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count free stencil parameters K_M for M = -1 ..= max-m.
    Kdim {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        max_m: i32,
        /// Drop offsets with all components nonzero.
        #[arg(long)]
        exclude_corners: bool,
    },
    /// List built-in problems.
    ListProblems,
}

#[derive(Debug, Args)]
struct Target {
    /// Built-in problem name or path to a problem file.
    #[arg(long)]
    problem: String,
    /// 1d-o2 .. 1d-o12, 2d-o4, 2d-o6, 3d-o4 or dd-o4.
    #[arg(long)]
    scheme: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverKind {
    Cg,
    Direct,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrecondKind {
    None,
    Diagonal,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "cg")]
    solver: SolverKind,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value = "none")]
    precondition: PrecondKind,
}

impl SolverArgs {
    fn choice(&self, tolerance: Tolerance) -> Result<SolverChoice> {
        if let Tolerance::Fixed(t) = tolerance {
            check_tol(t)?;
        }
        if let Tolerance::PerLevel(v) = &tolerance {
            v.iter().try_for_each(|&t| check_tol(t))?;
        }
        Ok(match self.solver {
            SolverKind::Direct => SolverChoice::Direct,
            SolverKind::Cg => SolverChoice::Cg {
                tolerance,
                max_iter: self.max_iter,
                preconditioner: match self.precondition {
                    PrecondKind::None => Preconditioner::None,
                    PrecondKind::Diagonal => Preconditioner::Diagonal,
                },
            },
        })
    }
}

fn check_tol(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "tolerance must lie in (0, 1), got {t}"
        )))
    }
}

/// Resolves a built-in name or a problem file.
pub fn resolve_problem(name: &str) -> Result<Problem> {
    match builtin_problem(name) {
        Ok(p) => Ok(p),
        Err(Error::UnknownProblem(_)) if Path::new(name).is_file() => load_problem(Path::new(name)),
        Err(e) => Err(e),
    }
}

fn resolve(target: &Target) -> Result<(Problem, Scheme)> {
    let scheme = Scheme::parse(&target.scheme)?;
    let problem = resolve_problem(&target.problem)?;
    scheme.check_dim(problem.dim)?;
    Ok((problem, scheme))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve(
    target: &Target,
    n: usize,
    solver: &SolverArgs,
    tol: Option<f64>,
    dump: &Option<PathBuf>,
    out: &Option<PathBuf>,
    exec: &RayonExecutor,
) -> Result<()> {
    let (problem, scheme) = resolve(target)?;
    let choice = solver.choice(tol.map_or(Tolerance::Default, Tolerance::Fixed))?;
    let grid = Grid::for_problem(&problem, n)?;
    let t0 = exec.now();
    let sys = assemble_with(&problem, scheme, &grid, exec)?;
    if let Some(path) = dump {
        let file = File::create(path)
            .map_err(|e| Error::Validation(format!("cannot create {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        write_matrix_market(&sys.matrix, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::Validation(format!("cannot write {}: {e}", path.display())))?;
    }
    let rep = solve_system(&sys, &choice, 0, exec)?;
    let seconds = exec.now() - t0;
    let error_inf = match problem.exact {
        Some(_) => linf_error(&problem, &grid, &rep.solution)?,
        None => f64::NAN,
    };
    let row = ConvergenceRow {
        n,
        h: grid.h(),
        error_inf,
        order: None,
        iterations: rep.iterations,
        relative_residual: rep.relative_residual,
        seconds,
    };
    emit(out, &convergence_csv(&[row]))
}

fn list_problems() -> String {
    let mut s = String::new();
    for name in BUILTIN_PROBLEMS {
        let p = builtin_problem(name).expect("built-in problems parse");
        let _ = writeln!(s, "{name}: dim {} on ({}, {})^{}", p.dim, p.l1, p.l2, p.dim);
        let _ = writeln!(s, "  a = {}", p.a);
        if let (Source::Manufactured, Some(u)) = (&p.source, &p.exact) {
            let _ = writeln!(s, "  u = {u}");
        }
    }
    s
}

fn execute(cli: Cli) -> Result<()> {
    let exec = RayonExecutor::new(cli.threads, !cli.no_timing)?;
    match &cli.command {
        Command::Solve {
            target,
            n,
            solver,
            tol,
            dump_matrix,
            out,
        } => solve(target, *n, solver, *tol, dump_matrix, out, &exec),
        Command::Convergence {
            target,
            n_start,
            n_end,
            solver,
            tol,
            out,
        } => {
            let (problem, scheme) = resolve(target)?;
            let levels = doubling_levels(*n_start, *n_end)?;
            let tolerance = match tol.len() {
                0 => Tolerance::Default,
                1 => Tolerance::Fixed(tol[0]),
                _ => Tolerance::PerLevel(tol.clone()),
            };
            let choice = solver.choice(tolerance)?;
            let rows = convergence_study(&problem, scheme, &levels, &choice, &exec)?;
            emit(out, &convergence_csv(&rows))
        }
        Command::Consistency {
            target,
            n_list,
            out,
        } => {
            let (problem, scheme) = resolve(target)?;
            let report = consistency_probe(&problem, scheme, n_list, &exec)?;
            emit(out, &probe_csv(&report))?;
            println!("slope,{:.3}", report.slope);
            Ok(())
        }
        Command::Kdim {
            dim,
            max_m,
            exclude_corners,
        } => {
            if *dim == 0 || *dim > 6 {
                return Err(Error::Usage(format!(
                    "dim must be between 1 and 6, got {dim}"
                )));
            }
            if *max_m < -1 || *max_m > 16 {
                return Err(Error::Usage(format!(
                    "max-m must be between -1 and 16, got {max_m}"
                )));
            }
            let table = nullity_table(*dim, *max_m, *exclude_corners)?;
            print!("{}", kdim_csv(&table));
            Ok(())
        }
        Command::ListProblems => {
            print!("{}", list_problems());
            Ok(())
        }
    }
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_usage() {
        1
    } else {
        2
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::NotConverged(rep) = &e {
                eprintln!(
                    "  best iterate has relative residual {:e}",
                    rep.relative_residual
                );
            }
            exit_code(&e)
        }
    }
}
