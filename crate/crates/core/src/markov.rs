//! Discrete-time Markov chains, the three-way state partition and the
//! linear system `(I - A)·x = b` whose solution gives reachability
//! probabilities for the undecided states.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::solvers::{solve, Method, SolveError, SolveResult, SolverConfig};
use crate::sparse::{CsrMatrix, Triplet};

/// Allowed deviation of a row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("chain has no states")]
    NoStates,
    #[error("transition matrix has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("initial state {initial} out of range for {n} states")]
    InitialOutOfRange { initial: usize, n: usize },
    #[error("row sum of state {state} is {sum}, expected 1")]
    RowSumError { state: usize, sum: f64 },
    #[error("probability P({from}, {to}) = {value} outside (0, 1]")]
    ProbabilityOutOfRange { from: usize, to: usize, value: f64 },
    #[error("goal set is empty")]
    EmptyGoalSet,
    #[error("goal state {state} out of range for {n} states")]
    GoalOutOfRange { state: usize, n: usize },
}

/// A chain `(S, P, s0)` with states `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    transitions: CsrMatrix,
    initial: usize,
}

impl MarkovChain {
    /// Builds and validates a chain.
    pub fn new(transitions: CsrMatrix, initial: usize) -> Result<Self, ModelError> {
        let chain = Self { transitions, initial };
        chain.validate()?;
        Ok(chain)
    }

    /// Builds a chain from `(from, to, probability)` triples and validates it.
    pub fn from_transitions<I, T>(n: usize, initial: usize, transitions: I) -> Result<Self, ChainBuildError>
    where
        I: IntoIterator<Item = T>,
        T: Into<Triplet>,
    {
        let p = CsrMatrix::from_triplets(n, transitions)?;
        Ok(Self::new(p, initial)?)
    }

    /// Checks the chain invariants: non-empty state set, every stored
    /// probability in (0, 1], every row summing to 1 within
    /// [`ROW_SUM_TOLERANCE`], and `initial < n`.
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n();
        if n == 0 {
            return Err(ModelError::NoStates);
        }
        if self.initial >= n {
            return Err(ModelError::InitialOutOfRange { initial: self.initial, n });
        }
        for s in 0..n {
            let (cols, vals) = self.transitions.row(s);
            let mut sum = 0.0;
            for (&t, &p) in cols.iter().zip(vals) {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(ModelError::ProbabilityOutOfRange { from: s, to: t, value: p });
                }
                sum += p;
            }
            if !((sum - 1.0).abs() <= ROW_SUM_TOLERANCE) {
                return Err(ModelError::RowSumError { state: s, sum });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.transitions.n()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn transitions(&self) -> &CsrMatrix {
        &self.transitions
    }

    /// `Σ_{s' ∈ GS} P(s, s')`: the probability of entering a goal state in one step.
    pub fn one_step_probability(&self, s: usize, goals: &GoalSet) -> f64 {
        let (cols, vals) = self.transitions.row(s);
        cols.iter()
            .zip(vals)
            .filter(|(t, _)| goals.contains(**t))
            .map(|(_, p)| p)
            .sum()
    }

    /// Predecessor lists of the underlying digraph (edge `s -> t` iff `P(s, t) > 0`).
    fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.n()];
        for t in self.transitions.triplets() {
            if t.value > 0.0 {
                pred[t.col].push(t.row);
            }
        }
        pred
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainBuildError {
    #[error(transparent)]
    Sparse(#[from] crate::sparse::SparseError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Non-empty set of goal states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalSet {
    members: BTreeSet<usize>,
    n: usize,
}

impl GoalSet {
    pub fn new<I: IntoIterator<Item = usize>>(n: usize, members: I) -> Result<Self, ModelError> {
        let members: BTreeSet<usize> = members.into_iter().collect();
        if members.is_empty() {
            return Err(ModelError::EmptyGoalSet);
        }
        if let Some(&state) = members.iter().find(|&&s| s >= n) {
            return Err(ModelError::GoalOutOfRange { state, n });
        }
        Ok(Self { members, n })
    }

    /// Every state is a goal.
    pub fn all(n: usize) -> Result<Self, ModelError> {
        Self::new(n, 0..n)
    }

    #[inline]
    pub fn contains(&self, s: usize) -> bool {
        self.members.contains(&s)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Number of states of the chain this set was built for.
    pub fn state_count(&self) -> usize {
        self.n
    }
}

/// Which of the three classes a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateClass {
    /// Reaches the goal with probability 1.
    One,
    /// Reaches the goal with probability 0.
    Zero,
    /// Undecided; position in [`StatePartition::undecided`].
    Undecided(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatePartition {
    s_eq1: BTreeSet<usize>,
    s_eq0: BTreeSet<usize>,
    s_q: Vec<usize>,
    class: Vec<StateClass>,
}

impl StatePartition {
    pub fn prob_one(&self) -> &BTreeSet<usize> {
        &self.s_eq1
    }

    pub fn prob_zero(&self) -> &BTreeSet<usize> {
        &self.s_eq0
    }

    /// Undecided states in ascending original index.
    pub fn undecided(&self) -> &[usize] {
        &self.s_q
    }

    pub fn class(&self, s: usize) -> StateClass {
        self.class[s]
    }

    /// Position of `s` among the undecided states.
    pub fn q_index(&self, s: usize) -> Option<usize> {
        match self.class[s] {
            StateClass::Undecided(k) => Some(k),
            _ => None,
        }
    }

    pub fn n(&self) -> usize {
        self.class.len()
    }
}

/// Marks every state with a path to a seed state, walking predecessor edges
/// breadth-first. States in `blocked` are never entered (but may be seeds).
fn backward_reach(pred: &[Vec<usize>], seeds: impl Iterator<Item = usize>, blocked: &dyn Fn(usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; pred.len()];
    let mut queue = VecDeque::new();
    for s in seeds {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(t) = queue.pop_front() {
        for &s in &pred[t] {
            if !seen[s] && !blocked(s) {
                seen[s] = true;
                queue.push_back(s);
            }
        }
    }
    seen
}

/// Splits the states into S=1, S=0 and the undecided rest.
///
/// S=0 is the complement of the states with a path to a goal. S=1 is the
/// complement of the states with a path to S=0 that does not pass through a
/// goal state, so goal states always land in S=1.
pub fn partition_states(chain: &MarkovChain, goals: &GoalSet) -> StatePartition {
    let n = chain.n();
    let pred = chain.predecessors();

    let reaches_goal = backward_reach(&pred, goals.iter(), &|_| false);
    let s_eq0: BTreeSet<usize> = (0..n).filter(|&s| !reaches_goal[s]).collect();

    let reaches_zero = backward_reach(&pred, s_eq0.iter().copied(), &|s| goals.contains(s));
    let s_eq1: BTreeSet<usize> = (0..n).filter(|&s| !reaches_zero[s]).collect();

    let mut s_q = Vec::new();
    let class = (0..n)
        .map(|s| {
            if s_eq1.contains(&s) {
                StateClass::One
            } else if s_eq0.contains(&s) {
                StateClass::Zero
            } else {
                s_q.push(s);
                StateClass::Undecided(s_q.len() - 1)
            }
        })
        .collect();

    StatePartition { s_eq1, s_eq0, s_q, class }
}

/// `(I - A)·x = b` restricted to the undecided states.
///
/// `b_s` is the probability of stepping from `s` straight into S=1. When
/// S=1 consists of the goal states only, this is the one-step goal
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    /// Transition probabilities among undecided states.
    pub a: CsrMatrix,
    /// `I - A`.
    pub matrix: CsrMatrix,
    /// One-step probabilities into S=1.
    pub rhs: Vec<f64>,
    pub partition: StatePartition,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }
}

pub fn build_system(chain: &MarkovChain, goals: &GoalSet) -> LinearSystem {
    let partition = partition_states(chain, goals);
    let p = chain.transitions();
    let q = partition.undecided();

    let mut entries = Vec::new();
    let mut rhs = Vec::with_capacity(q.len());
    for (row, &s) in q.iter().enumerate() {
        let (cols, vals) = p.row(s);
        for (&t, &prob) in cols.iter().zip(vals) {
            if let Some(col) = partition.q_index(t) {
                entries.push(Triplet::new(row, col, prob));
            }
        }
        rhs.push(
            cols.iter()
                .zip(vals)
                .filter(|(t, _)| partition.class(**t) == StateClass::One)
                .map(|(_, p)| p)
                .sum(),
        );
    }
    let a = CsrMatrix::from_triplets(q.len(), entries)
        .expect("reindexed transitions are unique and in range");
    let matrix = a.identity_minus();
    LinearSystem { a, matrix, rhs, partition }
}

/// Reachability probability of every state, together with the solver report.
#[derive(Debug, Clone)]
pub struct Reachability {
    pub probabilities: Vec<f64>,
    pub initial: usize,
    pub solve: SolveResult,
}

impl Reachability {
    /// `Pr(s0 reaches GS)`.
    pub fn initial_probability(&self) -> f64 {
        self.probabilities[self.initial]
    }
}

/// Computes `Pr(s reaches GS)` for every state.
///
/// States in S=1 and S=0 get exactly 1 and 0. Undecided states get the
/// solver's approximation clamped into [0, 1]. An empty undecided set skips
/// the solver and reports 0 iterations.
pub fn reachability_probabilities(
    chain: &MarkovChain,
    goals: &GoalSet,
    method: Method,
    config: &SolverConfig,
) -> Result<Reachability, SolveError> {
    let system = build_system(chain, goals);
    let solve = if system.is_empty() {
        config.validate()?;
        SolveResult::trivial()
    } else {
        solve(method, &system.matrix, &system.rhs, config)?
    };

    let partition = &system.partition;
    let probabilities = (0..chain.n())
        .map(|s| match partition.class(s) {
            StateClass::One => 1.0,
            StateClass::Zero => 0.0,
            StateClass::Undecided(k) => solve.x[k].clamp(0.0, 1.0),
        })
        .collect();
    Ok(Reachability { probabilities, initial: chain.initial(), solve })
}
