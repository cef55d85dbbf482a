//! Jacobi iteration.
//!
//! Each sweep recomputes every `x_i` from the frozen previous iterate `x'`:
//! `x_i = (b_i - Σ_{j≠i} M_ij·x'_j) / M_ii`. The sweep stops once
//! `max_i |x_i - x'_i| ≤ tolerance`.

use std::time::Instant;

use super::blocks::RowBlocks;
use super::{check_inputs, residual_inf_norm, SolveError, SolveResult, SolverConfig};
use crate::sparse::CsrMatrix;

/// Current iterate and the previous one (`x'`).
#[derive(Debug, Clone)]
pub struct JacobiWorkspace {
    pub x: Vec<f64>,
    pub x_prev: Vec<f64>,
}

impl JacobiWorkspace {
    fn new(x0: Vec<f64>) -> Self {
        let x_prev = vec![0.0; x0.len()];
        Self { x: x0, x_prev }
    }

    /// Makes the current iterate the previous one.
    fn advance(&mut self) {
        std::mem::swap(&mut self.x, &mut self.x_prev);
    }
}

/// Diagonal of `m`, failing on the first zero entry.
fn nonzero_diagonal(m: &CsrMatrix) -> Result<Vec<f64>, SolveError> {
    let diag = m.diagonal();
    match diag.iter().position(|&d| d == 0.0) {
        Some(i) => Err(SolveError::ZeroDiagonal(i)),
        None => Ok(diag),
    }
}

/// New value of `x_i`; off-diagonal terms subtracted in ascending column order.
#[inline]
fn update_row(m: &CsrMatrix, b: &[f64], diag: &[f64], prev: &[f64], i: usize) -> f64 {
    let (cols, vals) = m.row(i);
    let mut d = b[i];
    for (&j, &v) in cols.iter().zip(vals) {
        if j != i {
            d -= v * prev[j];
        }
    }
    d / diag[i]
}

/// Updates rows `first..first + out.len()` and reports whether all of them moved by at most `tol`.
#[inline]
fn sweep_rows(
    m: &CsrMatrix,
    b: &[f64],
    diag: &[f64],
    prev: &[f64],
    first: usize,
    out: &mut [f64],
    tol: f64,
) -> bool {
    let mut accurate = true;
    for (k, xi) in out.iter_mut().enumerate() {
        let i = first + k;
        *xi = update_row(m, b, diag, prev, i);
        // NaN compares false and so counts as inaccurate
        if !((*xi - prev[i]).abs() <= tol) {
            accurate = false;
        }
    }
    accurate
}

fn finish(
    m: &CsrMatrix,
    b: &[f64],
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
    start: Instant,
) -> Result<SolveResult, SolveError> {
    let residual_inf = residual_inf_norm(m, &x, b)?;
    if !converged {
        return Err(SolveError::NotConverged { iterations, residual_inf, x });
    }
    Ok(SolveResult { x, iterations, converged, residual_inf, wall_time: start.elapsed() })
}

pub fn jacobi_solve(m: &CsrMatrix, b: &[f64], config: &SolverConfig) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    check_inputs(m, b, config)?;
    let diag = nonzero_diagonal(m)?;
    let n = m.n();
    if n == 0 {
        return Ok(SolveResult::trivial());
    }

    let mut ws = JacobiWorkspace::new(config.initial_guess.vector(n));
    for iteration in 1..=config.max_iterations {
        ws.advance();
        if sweep_rows(m, b, &diag, &ws.x_prev, 0, &mut ws.x, config.tolerance) {
            return finish(m, b, ws.x, iteration, true, start);
        }
    }
    finish(m, b, ws.x, config.max_iterations, false, start)
}

/// Jacobi with rows split into `config.workers` contiguous blocks.
///
/// Each sweep writes disjoint blocks of `x` while reading the shared `x'`,
/// waits for every block, then combines the per-block convergence flags
/// with a logical AND. Iterates are bitwise equal to [`jacobi_solve`].
pub fn jacobi_solve_parallel(
    m: &CsrMatrix,
    b: &[f64],
    config: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    check_inputs(m, b, config)?;
    let diag = nonzero_diagonal(m)?;
    let n = m.n();
    if n == 0 {
        return Ok(SolveResult::trivial());
    }

    let blocks = RowBlocks::new(n, config.workers)?;
    let tol = config.tolerance;
    let mut ws = JacobiWorkspace::new(config.initial_guess.vector(n));
    let outcome = blocks.install(|| {
        for iteration in 1..=config.max_iterations {
            ws.advance();
            let prev = &ws.x_prev;
            let diag = &diag;
            let converged = blocks.all(&mut ws.x, |first, out| sweep_rows(m, b, diag, prev, first, out, tol));
            if converged {
                return (iteration, true);
            }
        }
        (config.max_iterations, false)
    });
    finish(m, b, ws.x, outcome.0, outcome.1, start)
}
