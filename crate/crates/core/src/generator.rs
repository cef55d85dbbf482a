//! Seeded random test systems.
//!
//! Matrices have positive integer off-diagonal entries at uniformly random
//! positions and a diagonal large enough for strict diagonal dominance, so
//! both solvers are guaranteed to have something well-posed to work on.
//! These are generic dominant systems, not `I - A` of a stochastic matrix.
//!
//! Draw order from one `ChaCha8Rng` seeded with `seed_from_u64(seed)`:
//! 1. off-diagonal positions via `rand::seq::index::sample` over the
//!    `n·(n-1)` off-diagonal slots, then sorted row-major;
//! 2. one value per off-diagonal position, in row-major order;
//! 3. one diagonal slack per row, in row order.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sparse::{CsrMatrix, Triplet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),
}

/// Number of stored entries to aim for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Fraction of the `n²` slots, diagonal included.
    Density(f64),
    /// Exact stored-entry count, diagonal included.
    Nnz(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub target: Target,
    pub seed: u64,
    /// Inclusive range of off-diagonal values.
    pub value_range: (u32, u32),
}

impl GenSpec {
    pub fn density(n: usize, density: f64, seed: u64) -> Self {
        Self { n, target: Target::Density(density), seed, value_range: (1, 10) }
    }

    pub fn nnz(n: usize, m: usize, seed: u64) -> Self {
        Self { n, target: Target::Nnz(m), seed, value_range: (1, 10) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Stored-entry count this spec produces, or why it cannot be met.
    pub fn entry_count(&self) -> Result<usize, GenError> {
        let n = self.n;
        if n == 0 {
            return Err(GenError::InfeasibleSpec("n must be at least 1".into()));
        }
        let (lo, hi) = self.value_range;
        if lo == 0 || lo > hi {
            return Err(GenError::InfeasibleSpec(format!("value range [{lo}, {hi}] must be positive and ordered")));
        }
        let slots = n.checked_mul(n).ok_or_else(|| GenError::InfeasibleSpec("n² overflows".into()))?;
        let m = match self.target {
            Target::Density(d) => {
                if !(d > 0.0 && d <= 1.0) {
                    return Err(GenError::InfeasibleSpec(format!("density {d} outside (0, 1]")));
                }
                (d * slots as f64).round() as usize
            }
            Target::Nnz(m) => m,
        };
        if m < n {
            return Err(GenError::InfeasibleSpec(format!("{m} entries cannot hold the {n} diagonal entries")));
        }
        if m > slots {
            return Err(GenError::InfeasibleSpec(format!("{m} entries exceed the {slots} slots of an {n}x{n} matrix")));
        }
        Ok(m)
    }
}

/// Generates a strictly diagonally dominant matrix for `spec`.
///
/// Row `i` gets diagonal `Σ_j |M_ij| + k` with `k` uniform in
/// `[1, value_range.1]`.
pub fn generate_dd_matrix(spec: &GenSpec) -> Result<CsrMatrix, GenError> {
    let m = spec.entry_count()?;
    let n = spec.n;
    let off = m - n;
    let (lo, hi) = spec.value_range;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut slots = if n > 1 {
        index::sample(&mut rng, n * (n - 1), off).into_vec()
    } else {
        Vec::new()
    };
    slots.sort_unstable();

    let mut entries = Vec::with_capacity(m);
    let mut row_abs = vec![0.0f64; n];
    for slot in slots {
        let row = slot / (n - 1);
        let c = slot % (n - 1);
        let col = if c < row { c } else { c + 1 };
        let value = f64::from(rng.gen_range(lo..=hi));
        row_abs[row] += value.abs();
        entries.push(Triplet::new(row, col, value));
    }
    for (i, sum) in row_abs.iter().enumerate() {
        let slack = f64::from(rng.gen_range(1..=hi));
        entries.push(Triplet::new(i, i, sum + slack));
    }

    Ok(CsrMatrix::from_triplets(n, entries).expect("sampled positions are distinct and in range"))
}

/// Right-hand side of uniform integers in [1, 10].
pub fn generate_rhs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| f64::from(rng.gen_range(1u32..=10))).collect()
}

/// Matrix shapes `(n, m)` of the reduced model-checking systems: the random
/// quick sort runs followed by the biased die runs.
pub const TABLE1_SHAPES: [(usize, usize); 18] = [
    (92, 211),
    (118, 263),
    (142, 312),
    (173, 379),
    (198, 430),
    (228, 491),
    (250, 536),
    (284, 606),
    (313, 669),
    (667, 1333),
    (1333, 2665),
    (2000, 3999),
    (2668, 5335),
    (3647, 7293),
    (4647, 9293),
    (5647, 11293),
    (6647, 13293),
    (7647, 15293),
];

/// Exact-count specs for every entry of [`TABLE1_SHAPES`], all with seed 0.
pub fn table1_specs() -> Vec<GenSpec> {
    TABLE1_SHAPES.iter().map(|&(n, m)| GenSpec::nnz(n, m, 0)).collect()
}

/// Whether `|M_ii| > Σ_{j≠i} |M_ij|` holds for every row.
pub fn is_strictly_diagonally_dominant(m: &CsrMatrix) -> bool {
    (0..m.n()).all(|i| {
        let (cols, vals) = m.row(i);
        let mut diag = 0.0;
        let mut off = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                diag = v.abs();
            } else {
                off += v.abs();
            }
        }
        diag > off
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_first_biased_die_shape() {
        let a = generate_dd_matrix(&GenSpec::nnz(667, 1333, 99)).unwrap();
        assert_eq!(a.n(), 667);
        assert_eq!(a.nnz(), 1333);
        assert_eq!(format!("{:.3}", a.density().unwrap()), "0.003");
        assert!(a.diagonal().iter().all(|&d| d > 0.0));
        assert!(is_strictly_diagonally_dominant(&a));
    }

    #[test]
    fn single_entry_matrix() {
        let a = generate_dd_matrix(&GenSpec::density(1, 1.0, 5)).unwrap();
        assert_eq!(a.n(), 1);
        assert_eq!(a.nnz(), 1);
        assert!(a.get(0, 0) >= 1.0 && a.get(0, 0) <= 10.0);
    }

    #[test]
    fn same_seed_same_matrix() {
        let spec = GenSpec::density(60, 0.2, 1234);
        assert_eq!(generate_dd_matrix(&spec).unwrap(), generate_dd_matrix(&spec).unwrap());
        assert_ne!(
            generate_dd_matrix(&spec).unwrap(),
            generate_dd_matrix(&spec.clone().with_seed(1235)).unwrap()
        );
    }

    #[test]
    fn density_mode_rounds() {
        let a = generate_dd_matrix(&GenSpec::density(10, 0.155, 3)).unwrap();
        assert_eq!(a.nnz(), 16);
        let full = generate_dd_matrix(&GenSpec::density(7, 1.0, 3)).unwrap();
        assert_eq!(full.nnz(), 49);
    }

    #[test]
    fn infeasible_specs() {
        for spec in [
            GenSpec::nnz(10, 9, 0),
            GenSpec::nnz(3, 10, 0),
            GenSpec::density(100, 0.001, 0),
            GenSpec::density(10, 0.0, 0),
            GenSpec::density(10, 1.5, 0),
            GenSpec::nnz(0, 0, 0),
            GenSpec { value_range: (0, 10), ..GenSpec::nnz(3, 3, 0) },
        ] {
            assert!(matches!(generate_dd_matrix(&spec), Err(GenError::InfeasibleSpec(_))), "{spec:?}");
        }
    }

    #[test]
    fn rhs_examples() {
        let b = generate_rhs(3, 17);
        assert_eq!(b, generate_rhs(3, 17));
        let one = generate_rhs(1, 0);
        assert!((1.0..=10.0).contains(&one[0]) && one[0].fract() == 0.0);
        assert_ne!(generate_rhs(16, 1), generate_rhs(16, 2));
        assert!(generate_rhs(500, 4).iter().all(|v| (1.0..=10.0).contains(v) && v.fract() == 0.0));
    }

    #[test]
    fn table1_specs_shape() {
        let specs = table1_specs();
        assert_eq!(specs.len(), 18);
        assert_eq!(specs[0].target, Target::Nnz(211));
        assert_eq!(specs[0].n, 92);
        assert_eq!(specs[17].n, 7647);
        assert_eq!(specs[17].target, Target::Nnz(15293));
    }
}
