//! Solving on a grid, error measurement, convergence studies and
//! consistency probes.

use alloc::format;
use alloc::vec::Vec;

use crate::assembly::{assemble_with, exact_on_grid, Executor, Grid, LinearSystem};
use crate::error::{Error, Result};
use crate::fields::Problem;
use crate::scheme::{Scheme, SchemeEvaluator};
use crate::solver::{
    conjugate_gradient, default_tolerance, dense_cholesky, CgOptions, ExecOperator, Preconditioner,
    SolveReport,
};

/// CG stopping tolerance per grid level.
#[derive(Debug, Clone, PartialEq)]
pub enum Tolerance {
    /// `min(1e-2, 0.1 h^4)`, at least `1e-12`.
    Default,
    Fixed(f64),
    /// One value per level; the last value repeats.
    PerLevel(Vec<f64>),
}

impl Tolerance {
    pub fn at(&self, level: usize, h: f64) -> f64 {
        match self {
            Tolerance::Default => default_tolerance(h),
            Tolerance::Fixed(t) => *t,
            Tolerance::PerLevel(v) => v
                .get(level)
                .or(v.last())
                .copied()
                .unwrap_or(default_tolerance(h)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverChoice {
    Cg {
        tolerance: Tolerance,
        max_iter: usize,
        preconditioner: Preconditioner,
    },
    Direct,
}

impl Default for SolverChoice {
    fn default() -> Self {
        SolverChoice::Cg {
            tolerance: Tolerance::Default,
            max_iter: 100_000,
            preconditioner: Preconditioner::None,
        }
    }
}

/// Result of one grid level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub n: usize,
    pub h: f64,
    /// Max-norm error at the unknowns, when an exact solution is known.
    pub error_inf: Option<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Assembly plus solve, in seconds (`0.0` without a clock).
    pub seconds: f64,
    pub solution: Vec<f64>,
}

/// `max_i |u_i - u(x_i)|` over the unknowns.
pub fn linf_error(problem: &Problem, grid: &Grid, u: &[f64]) -> Result<f64> {
    let exact = exact_on_grid(problem, grid)?;
    if exact.len() != u.len() {
        return Err(Error::Usage(
            "solution length does not match the grid".into(),
        ));
    }
    Ok(u.iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

pub fn solve_system<E: Executor>(
    sys: &LinearSystem,
    solver: &SolverChoice,
    level: usize,
    exec: &E,
) -> Result<SolveReport> {
    match solver {
        SolverChoice::Direct => dense_cholesky(&sys.matrix, &sys.rhs),
        SolverChoice::Cg {
            tolerance,
            max_iter,
            preconditioner,
        } => {
            let opts = CgOptions {
                tol: tolerance.at(level, sys.grid.h()),
                max_iter: *max_iter,
                preconditioner: *preconditioner,
            };
            conjugate_gradient(
                &ExecOperator {
                    matrix: &sys.matrix,
                    exec,
                },
                &sys.rhs,
                &opts,
            )
        }
    }
}

/// Assembles and solves on an `n`-cell grid.
pub fn solve_level<E: Executor>(
    problem: &Problem,
    scheme: Scheme,
    n: usize,
    solver: &SolverChoice,
    level: usize,
    exec: &E,
) -> Result<LevelResult> {
    let grid = Grid::for_problem(problem, n)?;
    let t0 = exec.now();
    let sys = assemble_with(problem, scheme, &grid, exec)?;
    let rep = solve_system(&sys, solver, level, exec)?;
    let seconds = exec.now() - t0;
    let error_inf = match problem.exact {
        Some(_) => Some(linf_error(problem, &grid, &rep.solution)?),
        None => None,
    };
    Ok(LevelResult {
        n,
        h: grid.h(),
        error_inf,
        iterations: rep.iterations,
        relative_residual: rep.relative_residual,
        seconds,
        solution: rep.solution,
    })
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub error_inf: f64,
    /// Observed order against the previous row.
    pub order: Option<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub seconds: f64,
}

/// Observed order between two levels.
pub fn observed_order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    libm::log(e_coarse / e_fine) / libm::log(h_coarse / h_fine)
}

/// `N = n_start, 2 n_start, ...` up to and including `n_end`.
pub fn doubling_levels(n_start: usize, n_end: usize) -> Result<Vec<usize>> {
    if n_start < 2 || n_end < n_start {
        return Err(Error::Usage(format!(
            "invalid level range {n_start}..{n_end}"
        )));
    }
    let mut v = Vec::new();
    let mut n = n_start;
    while n <= n_end {
        v.push(n);
        n *= 2;
    }
    Ok(v)
}

pub fn convergence_study<E: Executor>(
    problem: &Problem,
    scheme: Scheme,
    levels: &[usize],
    solver: &SolverChoice,
    exec: &E,
) -> Result<Vec<ConvergenceRow>> {
    if problem.exact.is_none() {
        return Err(Error::Usage(format!(
            "problem `{}` has no exact solution",
            problem.name
        )));
    }
    scheme.check_dim(problem.dim)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for (k, &n) in levels.iter().enumerate() {
        let r = solve_level(problem, scheme, n, solver, k, exec)?;
        let e = r.error_inf.unwrap_or(f64::NAN);
        let order = rows
            .last()
            .map(|p| observed_order(p.error_inf, e, p.h, r.h));
        rows.push(ConvergenceRow {
            n,
            h: r.h,
            error_inf: e,
            order,
            iterations: r.iterations,
            relative_residual: r.relative_residual,
            seconds: r.seconds,
        });
    }
    Ok(rows)
}

/// Truncation error of a scheme on one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub n: usize,
    pub h: f64,
    /// `max |sum_p C_p u(x + p h) - f_h|` over the interior nodes.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    /// Least-squares slope of `log residual` against `log h` over the last
    /// three rows (or all rows if fewer).
    pub slope: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| libm::log(*v)).collect();
    let ly: Vec<f64> = y.iter().map(|v| libm::log(*v)).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn consistency_probe<E: Executor>(
    problem: &Problem,
    scheme: Scheme,
    levels: &[usize],
    exec: &E,
) -> Result<ProbeReport> {
    let u = problem
        .exact
        .as_ref()
        .ok_or_else(|| Error::Usage(format!("problem `{}` has no exact solution", problem.name)))?;
    if levels.len() < 2 {
        return Err(Error::Usage(
            "a consistency probe needs at least two levels".into(),
        ));
    }
    let mut rows = Vec::with_capacity(levels.len());
    for &n in levels {
        let grid = Grid::for_problem(problem, n)?;
        let ev = SchemeEvaluator::new(scheme, problem, grid.h())?;
        ev.validate_points(&mut grid.all_points())?;
        let res: Vec<Result<f64>> = exec.map(grid.unknowns(), &|r| {
            let st = ev.stencil(&grid.point(&grid.node(r)))?;
            Ok(st.residual(&mut |x| u.evaluate(x))?.abs())
        });
        let mut residual = 0.0f64;
        for r in res {
            residual = residual.max(r?);
        }
        rows.push(ProbeRow {
            n,
            h: grid.h(),
            residual,
        });
    }
    let tail = &rows[rows.len().saturating_sub(3)..];
    let hs: Vec<f64> = tail.iter().map(|r| r.h).collect();
    let rs: Vec<f64> = tail.iter().map(|r| r.residual).collect();
    Ok(ProbeReport {
        slope: log_slope(&hs, &rs),
        rows,
    })
}
