//! Reachability probabilities of discrete-time Markov chains.
//!
//! The states of a chain are partitioned into those reaching the goal set
//! with probability 1, with probability 0, and the undecided rest. The
//! undecided states give a sparse system `(I - A)·x = b`, solved with Jacobi
//! or BiCGStab, each in a sequential and a data-parallel variant.
//!
//! The `rayon` feature (on by default) runs the parallel variants on a
//! thread pool; without it they execute their row blocks in sequence.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::unnecessary_fold, clippy::too_many_arguments)]

pub mod bench;
pub mod cli;
pub mod format;
pub mod generator;
pub mod markov;
pub mod solvers;
pub mod sparse;

pub use markov::{
    build_system, partition_states, reachability_probabilities, GoalSet, LinearSystem, MarkovChain,
    Reachability, StatePartition,
};
pub use solvers::{
    bicgstab_solve, bicgstab_solve_parallel, jacobi_solve, jacobi_solve_parallel, residual_inf_norm,
    InitialGuess, Method, ShadowVector, SolveError, SolveResult, SolverConfig,
};
pub use sparse::{CsrMatrix, SparseError, Triplet};
