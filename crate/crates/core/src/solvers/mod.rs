//! Iterative solvers for `M·x = b` with `M` in compressed row storage.
//!
//! Each method comes in a sequential and a data-parallel form. The parallel
//! forms split rows into contiguous blocks, one per worker, and keep every
//! reduction that feeds a scalar (dot products, the convergence test) in a
//! fixed order, so they return bitwise the same iterates as the sequential
//! forms.

mod bicgstab;
mod blocks;
mod jacobi;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sparse::CsrMatrix;

pub use bicgstab::{bicgstab_solve, bicgstab_solve_parallel, BiCgWorkspace};
pub use jacobi::{jacobi_solve, jacobi_solve_parallel, JacobiWorkspace};

/// Scalars with magnitude below this are treated as zero denominators.
pub const BREAKDOWN_THRESHOLD: f64 = 1e-300;

/// Starting iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialGuess {
    #[default]
    Zeros,
    /// Uniform values in [0, 1) from a ChaCha8 stream seeded with the given value.
    SeededRandom(u64),
}

impl InitialGuess {
    pub fn vector(&self, n: usize) -> Vec<f64> {
        match *self {
            InitialGuess::Zeros => vec![0.0; n],
            InitialGuess::SeededRandom(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n).map(|_| rng.gen::<f64>()).collect()
            }
        }
    }
}

/// BiCGStab shadow residual `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShadowVector {
    /// `q = r0`.
    InitialResidual,
    /// Uniform values in [0, 1) from a ChaCha8 stream. Falls back to `r0`
    /// when `q·r0` vanishes.
    SeededRandom(u64),
}

impl Default for ShadowVector {
    fn default() -> Self {
        ShadowVector::SeededRandom(DEFAULT_SHADOW_SEED)
    }
}

pub const DEFAULT_SHADOW_SEED: u64 = 0x5EED_0F5A_AD00;

impl ShadowVector {
    pub fn vector(&self, r0: &[f64]) -> Vec<f64> {
        match *self {
            ShadowVector::InitialResidual => r0.to_vec(),
            ShadowVector::SeededRandom(seed) => {
                let q = InitialGuess::SeededRandom(seed).vector(r0.len());
                if vanishes(dot(&q, r0)) {
                    r0.to_vec()
                } else {
                    q
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Convergence threshold on the per-element stopping quantity.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_guess: InitialGuess,
    /// Worker count for the parallel variants.
    pub workers: usize,
    /// Parallel BiCGStab only: compute dot products as per-block partial sums.
    /// Breaks bitwise equality with the sequential solver.
    pub parallel_dot: bool,
    pub shadow: ShadowVector,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 10_000,
            initial_guess: InitialGuess::Zeros,
            workers: default_workers(),
            parallel_dot: false,
            shadow: ShadowVector::default(),
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl SolverConfig {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tolerance > 0.0) {
            return Err(SolveError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(SolveError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(SolveError::InvalidConfig("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖b - M·x‖∞` at exit.
    pub residual_inf: f64,
    pub wall_time: Duration,
}

impl SolveResult {
    /// Result for a 0-dimensional system.
    pub fn trivial() -> Self {
        Self {
            x: Vec::new(),
            iterations: 0,
            converged: true,
            residual_inf: 0.0,
            wall_time: Duration::ZERO,
        }
    }
}

/// The scalar denominator that vanished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakdownKind {
    /// `y'·w` in the direction update.
    RhoOmega,
    /// `q·v` in the step length.
    ShadowV,
    /// `t·t` in the stabilisation weight.
    TT,
}

impl fmt::Display for BreakdownKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BreakdownKind::RhoOmega => "y'*w = 0",
            BreakdownKind::ShadowV => "q.v = 0",
            BreakdownKind::TT => "t.t = 0",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),
    #[error("not converged after {iterations} iterations (residual {residual_inf:e})")]
    NotConverged {
        iterations: usize,
        residual_inf: f64,
        /// Last iterate.
        x: Vec<f64>,
    },
    #[error("BiCGStab breakdown at iteration {iterations}: {which}")]
    Breakdown { which: BreakdownKind, iterations: usize },
}

impl SolveError {
    /// Iterations performed before the error, when a solve was started.
    pub fn iterations(&self) -> Option<usize> {
        match self {
            SolveError::NotConverged { iterations, .. } | SolveError::Breakdown { iterations, .. } => {
                Some(*iterations)
            }
            _ => None,
        }
    }
}

/// Solver selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    JacobiSeq,
    JacobiPar,
    BicgstabSeq,
    BicgstabPar,
}

impl Method {
    pub const ALL: [Method; 4] =
        [Method::JacobiSeq, Method::JacobiPar, Method::BicgstabSeq, Method::BicgstabPar];

    pub fn name(&self) -> &'static str {
        match self {
            Method::JacobiSeq => "jacobi-seq",
            Method::JacobiPar => "jacobi-par",
            Method::BicgstabSeq => "bicgstab-seq",
            Method::BicgstabPar => "bicgstab-par",
        }
    }

    pub fn is_parallel(&self) -> bool {
        matches!(self, Method::JacobiPar | Method::BicgstabPar)
    }

    /// The other half of the sequential/parallel pair.
    pub fn counterpart(&self) -> Method {
        match self {
            Method::JacobiSeq => Method::JacobiPar,
            Method::JacobiPar => Method::JacobiSeq,
            Method::BicgstabSeq => Method::BicgstabPar,
            Method::BicgstabPar => Method::BicgstabSeq,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected jacobi-seq, jacobi-par, bicgstab-seq or bicgstab-par)"))
    }
}

pub fn solve(method: Method, m: &CsrMatrix, b: &[f64], config: &SolverConfig) -> Result<SolveResult, SolveError> {
    match method {
        Method::JacobiSeq => jacobi_solve(m, b, config),
        Method::JacobiPar => jacobi_solve_parallel(m, b, config),
        Method::BicgstabSeq => bicgstab_solve(m, b, config),
        Method::BicgstabPar => bicgstab_solve_parallel(m, b, config),
    }
}

/// `‖b - M·x‖∞`.
pub fn residual_inf_norm(m: &CsrMatrix, x: &[f64], b: &[f64]) -> Result<f64, SolveError> {
    if x.len() != m.n() {
        return Err(SolveError::DimensionMismatch { expected: m.n(), found: x.len() });
    }
    if b.len() != m.n() {
        return Err(SolveError::DimensionMismatch { expected: m.n(), found: b.len() });
    }
    Ok((0..m.n())
        .map(|i| (b[i] - m.row_dot(i, x)).abs())
        .fold(0.0, f64::max))
}

/// Ascending-index dot product.
#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(y) {
        acc += a * b;
    }
    acc
}

#[inline]
pub(crate) fn vanishes(d: f64) -> bool {
    !(d.abs() >= BREAKDOWN_THRESHOLD)
}

/// Shared entry checks.
pub(crate) fn check_inputs(m: &CsrMatrix, b: &[f64], config: &SolverConfig) -> Result<(), SolveError> {
    config.validate()?;
    if b.len() != m.n() {
        return Err(SolveError::DimensionMismatch { expected: m.n(), found: b.len() });
    }
    Ok(())
}
