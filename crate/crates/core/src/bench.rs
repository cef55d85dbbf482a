//! Timed solver sweeps over generated systems, recorded as CSV.
//!
//! Every (cell, trial) pair gets a freshly generated matrix and right-hand
//! side whose seed depends only on the base seed, the cell and the trial
//! index, so all methods in a trial see the same system and reruns produce
//! the same CSV apart from `wall_time_ns`. Only the solver call is timed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::generator::{generate_dd_matrix, generate_rhs, GenError, GenSpec, Target, TABLE1_SHAPES};
use crate::solvers::{solve, Method, SolveError, SolverConfig};
use crate::sparse::density_of;

pub const CSV_HEADER: &str = "method,n,m,density,trial,seed,iterations,converged,residual_inf,wall_time_ns";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Generator(#[from] GenError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One timed solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    pub n: usize,
    pub m: usize,
    pub density: f64,
    pub trial: usize,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖b - M·x‖∞` of the returned iterate; NaN after a breakdown.
    pub residual_inf: f64,
    pub wall_time_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub target: Target,
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub cells: Vec<Cell>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub base_seed: u64,
    pub config: SolverConfig,
}

/// Sizes used when a sweep names none.
pub const DEFAULT_SIZES: [usize; 3] = [1000, 5000, 10000];
/// Densities used when a sweep names none.
pub const DEFAULT_DENSITIES: [f64; 5] = [0.001, 0.005, 0.01, 0.05, 0.1];

impl SweepPlan {
    /// Every size crossed with every density.
    pub fn grid(sizes: &[usize], densities: &[f64]) -> Self {
        let cells = sizes
            .iter()
            .flat_map(|&n| densities.iter().map(move |&d| Cell { n, target: Target::Density(d) }))
            .collect();
        Self::from_cells(cells)
    }

    /// Every size crossed with every exact entry count.
    pub fn grid_nnz(sizes: &[usize], counts: &[usize]) -> Self {
        let cells = sizes
            .iter()
            .flat_map(|&n| counts.iter().map(move |&m| Cell { n, target: Target::Nnz(m) }))
            .collect();
        Self::from_cells(cells)
    }

    /// The 18 model-checking matrix shapes, one cell each.
    pub fn table1() -> Self {
        Self::from_cells(TABLE1_SHAPES.iter().map(|&(n, m)| Cell { n, target: Target::Nnz(m) }).collect())
    }

    fn from_cells(cells: Vec<Cell>) -> Self {
        Self { cells, trials: 20, methods: Method::ALL.to_vec(), base_seed: 0, config: SolverConfig::default() }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_methods(mut self, methods: &[Method]) -> Self {
        self.methods = methods.to_vec();
        self
    }

    pub fn with_base_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn with_config(mut self, config: SolverConfig) -> Self {
        self.config = config;
        self
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.cells.is_empty() {
            return Err(BenchError::InvalidPlan("no sizes or densities".into()));
        }
        if self.methods.is_empty() {
            return Err(BenchError::InvalidPlan("no methods".into()));
        }
        if self.trials == 0 {
            return Err(BenchError::InvalidPlan("trials must be at least 1".into()));
        }
        self.config.validate().map_err(|e| BenchError::InvalidPlan(e.to_string()))?;
        for cell in &self.cells {
            self.spec(cell, 0).entry_count()?;
        }
        Ok(())
    }

    /// Generator spec for one trial of one cell.
    pub fn spec(&self, cell: &Cell, trial: usize) -> GenSpec {
        GenSpec {
            n: cell.n,
            target: cell.target,
            seed: trial_seed(self.base_seed, cell, trial),
            value_range: (1, 10),
        }
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `base ⊕ hash(cell, trial)`.
pub fn trial_seed(base: u64, cell: &Cell, trial: usize) -> u64 {
    let target = match cell.target {
        Target::Density(d) => d.to_bits(),
        Target::Nnz(m) => mix(m as u64 ^ 0x6E6E_7A00),
    };
    base ^ mix(mix(mix(cell.n as u64) ^ target) ^ trial as u64)
}

/// Seed of the right-hand side paired with a matrix seed.
pub fn rhs_seed(matrix_seed: u64) -> u64 {
    mix(matrix_seed ^ 0x7268_7300)
}

/// Runs the whole plan, one solve at a time. Solver failures are recorded
/// as `converged = false` rows; generator failures abort the sweep.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<TrialRecord>, BenchError> {
    run_sweep_with(plan, |_| {})
}

/// [`run_sweep`] with a callback invoked after each record.
pub fn run_sweep_with(plan: &SweepPlan, mut progress: impl FnMut(&TrialRecord)) -> Result<Vec<TrialRecord>, BenchError> {
    plan.validate()?;
    let mut records = Vec::with_capacity(plan.cells.len() * plan.trials * plan.methods.len());
    for cell in &plan.cells {
        for trial in 0..plan.trials {
            let spec = plan.spec(cell, trial);
            let matrix = generate_dd_matrix(&spec)?;
            let rhs = generate_rhs(cell.n, rhs_seed(spec.seed));
            let m = matrix.nnz();
            let density = density_of(cell.n, m).expect("generated matrices are non-empty");

            for &method in &plan.methods {
                let start = Instant::now();
                let outcome = solve(method, &matrix, &rhs, &plan.config);
                let wall_time_ns = (start.elapsed().as_nanos() as u64).max(1);

                let (iterations, converged, residual_inf) = match outcome {
                    Ok(r) => (r.iterations, r.converged, r.residual_inf),
                    Err(SolveError::NotConverged { iterations, residual_inf, .. }) => (iterations, false, residual_inf),
                    Err(e) => (e.iterations().unwrap_or(0), false, f64::NAN),
                };
                let record = TrialRecord {
                    method,
                    n: cell.n,
                    m,
                    density,
                    trial,
                    seed: spec.seed,
                    iterations,
                    converged,
                    residual_inf,
                    wall_time_ns,
                };
                progress(&record);
                records.push(record);
            }
        }
    }
    Ok(records)
}

pub fn write_records(path: &Path, records: &[TrialRecord]) -> Result<(), BenchError> {
    let csv_err = |source| BenchError::Csv { path: path.display().to_string(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| BenchError::Io { path: path.display().to_string(), source })
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>, BenchError> {
    let csv_err = |source| BenchError::Csv { path: path.display().to_string(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<Vec<_>, _>>().map_err(csv_err)
}

/// Per-(method, n, m) aggregate over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: Method,
    pub n: usize,
    pub m: usize,
    pub density: f64,
    pub trials: usize,
    pub converged: usize,
    pub mean_iterations: f64,
    pub mean_wall_time_ns: f64,
    /// Sample standard deviation; 0 for a single trial.
    pub stddev_wall_time_ns: f64,
}

/// Groups records by method and shape, keeping first-appearance order.
pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<(Method, usize, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.method, r.n, r.m);
        groups.entry(key).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        groups.get_mut(&key).expect("inserted above").push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rows = &groups[&key];
            let k = rows.len() as f64;
            let mean_t = rows.iter().map(|r| r.wall_time_ns as f64).sum::<f64>() / k;
            let var = if rows.len() > 1 {
                rows.iter().map(|r| (r.wall_time_ns as f64 - mean_t).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            CellSummary {
                method: key.0,
                n: key.1,
                m: key.2,
                density: rows[0].density,
                trials: rows.len(),
                converged: rows.iter().filter(|r| r.converged).count(),
                mean_iterations: rows.iter().map(|r| r.iterations as f64).sum::<f64>() / k,
                mean_wall_time_ns: mean_t,
                stddev_wall_time_ns: var.sqrt(),
            }
        })
        .collect()
}

/// `out.csv` -> `out.summary.csv`.
pub fn summary_path(output: &Path) -> PathBuf {
    output.with_extension("summary.csv")
}

pub fn write_summary(path: &Path, summary: &[CellSummary]) -> Result<(), BenchError> {
    let csv_err = |source| BenchError::Csv { path: path.display().to_string(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for s in summary {
        w.serialize(s).map_err(csv_err)?;
    }
    w.flush().map_err(|source| BenchError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_depend_on_cell_and_trial_only() {
        let a = Cell { n: 100, target: Target::Density(0.1) };
        let b = Cell { n: 100, target: Target::Nnz(1000) };
        assert_eq!(trial_seed(5, &a, 0), trial_seed(5, &a, 0));
        assert_ne!(trial_seed(5, &a, 0), trial_seed(5, &a, 1));
        assert_ne!(trial_seed(5, &a, 0), trial_seed(5, &b, 0));
        assert_ne!(trial_seed(5, &a, 0), trial_seed(6, &a, 0));
    }

    #[test]
    fn small_grid_row_count_and_pairing() {
        let plan = SweepPlan::grid(&[100], &[0.1]).with_trials(2).with_base_seed(3);
        let records = run_sweep(&plan).unwrap();
        assert_eq!(records.len(), 8);
        assert!(records.iter().all(|r| r.converged && r.n == 100 && r.m == 1000));
        for pair in records.chunks(4) {
            let it: BTreeMap<Method, usize> = pair.iter().map(|r| (r.method, r.iterations)).collect();
            assert_eq!(it[&Method::JacobiSeq], it[&Method::JacobiPar]);
            assert_eq!(it[&Method::BicgstabSeq], it[&Method::BicgstabPar]);
        }
    }

    #[test]
    fn invalid_plans() {
        assert!(SweepPlan::grid(&[], &[0.1]).validate().is_err());
        assert!(SweepPlan::grid(&[10], &[0.1]).with_trials(0).validate().is_err());
        assert!(SweepPlan::grid(&[10], &[0.1]).with_methods(&[]).validate().is_err());
        assert!(matches!(
            SweepPlan::grid_nnz(&[10], &[5]).validate(),
            Err(BenchError::Generator(GenError::InfeasibleSpec(_)))
        ));
    }

    #[test]
    fn failures_are_recorded_in_row() {
        let cfg = SolverConfig { max_iterations: 1, ..Default::default() };
        let plan = SweepPlan::grid(&[50], &[0.5])
            .with_trials(1)
            .with_methods(&[Method::JacobiSeq])
            .with_config(cfg);
        let records = run_sweep(&plan).unwrap();
        assert_eq!(records.len(), 1);
        assert!(!records[0].converged);
        assert_eq!(records[0].iterations, 1);
        assert!(records[0].residual_inf > 0.0);
    }

    #[test]
    fn summary_statistics() {
        let base = TrialRecord {
            method: Method::JacobiSeq,
            n: 10,
            m: 20,
            density: 0.2,
            trial: 0,
            seed: 1,
            iterations: 4,
            converged: true,
            residual_inf: 0.0,
            wall_time_ns: 100,
        };
        let records = vec![
            base.clone(),
            TrialRecord { trial: 1, iterations: 6, wall_time_ns: 300, ..base.clone() },
            TrialRecord { method: Method::BicgstabSeq, ..base.clone() },
        ];
        let s = summarize(&records);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].method, Method::JacobiSeq);
        assert_eq!(s[0].trials, 2);
        assert_eq!(s[0].mean_iterations, 5.0);
        assert_eq!(s[0].mean_wall_time_ns, 200.0);
        assert!((s[0].stddev_wall_time_ns - 141.42135623730951).abs() < 1e-9);
        assert_eq!(s[1].stddev_wall_time_ns, 0.0);
    }

    #[test]
    fn summary_path_naming() {
        assert_eq!(summary_path(Path::new("runs/out.csv")), PathBuf::from("runs/out.summary.csv"));
    }
}
