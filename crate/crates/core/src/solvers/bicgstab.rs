//! Unpreconditioned BiCGStab.
//!
//! One iteration:
//!
//! ```text
//! y' = y;  y = q·r
//! p  = r + (y·a)/(y'·w) · (p - w·v)
//! v  = M·p
//! a  = y / (q·v)
//! s  = r - a·v
//! t  = M·s
//! w  = (t·s) / (t·t)
//! x  = x + a·p + w·s
//! r  = s - w·t
//! ```
//!
//! starting from `r = b - M·x0`, `y = a = w = 1` and `p = v = 0`. The shadow
//! residual `q` is a seeded random vector by default, or `r0` itself; see
//! [`ShadowVector`](super::ShadowVector).
//! The loop stops once `max_i |s_i| ≤ tolerance`, after `x` and `r` have
//! been updated. If `t·t` vanishes while `s` is already within tolerance,
//! `w` is taken as 0 and the iteration finishes normally.

use std::time::Instant;

use super::blocks::RowBlocks;
use super::{
    check_inputs, dot, residual_inf_norm, vanishes, BreakdownKind, SolveError, SolveResult, SolverConfig,
};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct BiCgWorkspace {
    pub r: Vec<f64>,
    /// Shadow residual, fixed for the whole solve.
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub y: f64,
    pub y_prev: f64,
    pub a: f64,
    pub w: f64,
}

impl BiCgWorkspace {
    fn new(r: Vec<f64>, q: Vec<f64>) -> Self {
        let n = r.len();
        Self {
            q,
            r,
            p: vec![0.0; n],
            v: vec![0.0; n],
            s: vec![0.0; n],
            t: vec![0.0; n],
            y: 1.0,
            y_prev: 1.0,
            a: 1.0,
            w: 1.0,
        }
    }
}

#[inline]
fn within(v: &[f64], tol: f64) -> bool {
    v.iter().all(|e| e.abs() <= tol)
}

/// The vector and reduction kernels one iteration needs. The sequential and
/// parallel solvers differ only in how these are executed.
trait Kernels: Sync {
    /// Runs `f` on this executor's workers.
    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R;
    fn dot(&self, x: &[f64], y: &[f64]) -> f64;
    /// `out = M·x`.
    fn matvec(&self, m: &CsrMatrix, x: &[f64], out: &mut [f64]);
    /// `p = r + beta·(p - w·v)`.
    fn update_direction(&self, p: &mut [f64], r: &[f64], v: &[f64], beta: f64, w: f64);
    /// `s = r - a·v`.
    fn update_s(&self, s: &mut [f64], r: &[f64], v: &[f64], a: f64);
    /// `x += a·p + w·s`, `r = s - w·t`; returns whether every `|s_i| ≤ tol`.
    fn update_solution(&self, x: &mut [f64], r: &mut [f64], p: &[f64], s: &[f64], t: &[f64], a: f64, w: f64, tol: f64) -> bool;
}

#[inline]
fn direction_rows(first: usize, p: &mut [f64], r: &[f64], v: &[f64], beta: f64, w: f64) {
    for (k, pi) in p.iter_mut().enumerate() {
        let i = first + k;
        *pi = r[i] + beta * (*pi - w * v[i]);
    }
}

#[inline]
fn s_rows(first: usize, s: &mut [f64], r: &[f64], v: &[f64], a: f64) {
    for (k, si) in s.iter_mut().enumerate() {
        let i = first + k;
        *si = r[i] - a * v[i];
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn solution_rows(first: usize, x: &mut [f64], r: &mut [f64], p: &[f64], s: &[f64], t: &[f64], a: f64, w: f64, tol: f64) -> bool {
    let mut small = true;
    for k in 0..x.len() {
        let i = first + k;
        x[k] = x[k] + a * p[i] + w * s[i];
        if !(s[i].abs() <= tol) {
            small = false;
        }
        r[k] = s[i] - w * t[i];
    }
    small
}

struct Sequential;

impl Kernels for Sequential {
    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        f()
    }

    fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, y)
    }

    fn matvec(&self, m: &CsrMatrix, x: &[f64], out: &mut [f64]) {
        m.matvec_rows(0, x, out);
    }

    fn update_direction(&self, p: &mut [f64], r: &[f64], v: &[f64], beta: f64, w: f64) {
        direction_rows(0, p, r, v, beta, w);
    }

    fn update_s(&self, s: &mut [f64], r: &[f64], v: &[f64], a: f64) {
        s_rows(0, s, r, v, a);
    }

    fn update_solution(&self, x: &mut [f64], r: &mut [f64], p: &[f64], s: &[f64], t: &[f64], a: f64, w: f64, tol: f64) -> bool {
        solution_rows(0, x, r, p, s, t, a, w, tol)
    }
}

struct Blocked {
    blocks: RowBlocks,
    parallel_dot: bool,
}

impl Kernels for Blocked {
    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.blocks.install(f)
    }

    fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        if self.parallel_dot {
            self.blocks.blocked_dot(x, y)
        } else {
            dot(x, y)
        }
    }

    fn matvec(&self, m: &CsrMatrix, x: &[f64], out: &mut [f64]) {
        self.blocks.for_each(out, |first, chunk| m.matvec_rows(first, x, chunk));
    }

    fn update_direction(&self, p: &mut [f64], r: &[f64], v: &[f64], beta: f64, w: f64) {
        self.blocks.for_each(p, |first, chunk| direction_rows(first, chunk, r, v, beta, w));
    }

    fn update_s(&self, s: &mut [f64], r: &[f64], v: &[f64], a: f64) {
        self.blocks.for_each(s, |first, chunk| s_rows(first, chunk, r, v, a));
    }

    fn update_solution(&self, x: &mut [f64], r: &mut [f64], p: &[f64], s: &[f64], t: &[f64], a: f64, w: f64, tol: f64) -> bool {
        self.blocks.all2(x, r, |first, xc, rc| solution_rows(first, xc, rc, p, s, t, a, w, tol))
    }
}

enum Outcome {
    Converged(usize),
    Exhausted,
    Breakdown(BreakdownKind, usize),
}

fn iterate<K: Kernels>(k: &K, m: &CsrMatrix, x: &mut [f64], ws: &mut BiCgWorkspace, config: &SolverConfig) -> Outcome {
    let tol = config.tolerance;
    for iteration in 1..=config.max_iterations {
        ws.y_prev = ws.y;
        ws.y = k.dot(&ws.q, &ws.r);
        let denom = ws.y_prev * ws.w;
        if vanishes(denom) {
            return Outcome::Breakdown(BreakdownKind::RhoOmega, iteration);
        }
        let beta = (ws.y * ws.a) / denom;
        k.update_direction(&mut ws.p, &ws.r, &ws.v, beta, ws.w);
        k.matvec(m, &ws.p, &mut ws.v);

        let qv = k.dot(&ws.q, &ws.v);
        if vanishes(qv) {
            return Outcome::Breakdown(BreakdownKind::ShadowV, iteration);
        }
        ws.a = ws.y / qv;
        k.update_s(&mut ws.s, &ws.r, &ws.v, ws.a);
        k.matvec(m, &ws.s, &mut ws.t);

        let ts = k.dot(&ws.t, &ws.s);
        let tt = k.dot(&ws.t, &ws.t);
        ws.w = if !vanishes(tt) {
            ts / tt
        } else if within(&ws.s, tol) {
            0.0
        } else {
            return Outcome::Breakdown(BreakdownKind::TT, iteration);
        };

        if k.update_solution(x, &mut ws.r, &ws.p, &ws.s, &ws.t, ws.a, ws.w, tol) {
            return Outcome::Converged(iteration);
        }
    }
    Outcome::Exhausted
}

fn run<K: Kernels>(k: &K, m: &CsrMatrix, b: &[f64], config: &SolverConfig) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let n = m.n();
    let mut x = config.initial_guess.vector(n);

    let outcome = k.install(|| {
        let mut r = vec![0.0; n];
        k.matvec(m, &x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        if within(&r, config.tolerance) {
            return Outcome::Converged(0);
        }
        let q = config.shadow.vector(&r);
        let mut ws = BiCgWorkspace::new(r, q);
        iterate(k, m, &mut x, &mut ws, config)
    });

    match outcome {
        Outcome::Converged(iterations) => {
            let residual_inf = residual_inf_norm(m, &x, b)?;
            Ok(SolveResult { x, iterations, converged: true, residual_inf, wall_time: start.elapsed() })
        }
        Outcome::Exhausted => {
            let residual_inf = residual_inf_norm(m, &x, b)?;
            Err(SolveError::NotConverged { iterations: config.max_iterations, residual_inf, x })
        }
        Outcome::Breakdown(which, iterations) => Err(SolveError::Breakdown { which, iterations }),
    }
}

pub fn bicgstab_solve(m: &CsrMatrix, b: &[f64], config: &SolverConfig) -> Result<SolveResult, SolveError> {
    check_inputs(m, b, config)?;
    run(&Sequential, m, b, config)
}

/// BiCGStab with the element-wise updates and both matrix-vector products
/// split into row blocks across `config.workers` workers. Dot products stay
/// sequential in ascending index order, so iterates are bitwise equal to
/// [`bicgstab_solve`] unless `config.parallel_dot` is set.
pub fn bicgstab_solve_parallel(
    m: &CsrMatrix,
    b: &[f64],
    config: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    check_inputs(m, b, config)?;
    let k = Blocked { blocks: RowBlocks::new(m.n(), config.workers)?, parallel_dot: config.parallel_dot };
    run(&k, m, b, config)
}
