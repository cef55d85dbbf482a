//! Compressed row storage (CSR) for square sparse matrices.
//!
//! A matrix is held as three vectors: `rstart` (length `n + 1`, where
//! `rstart[i]` is the number of stored entries in the first `i` rows),
//! `col` (column of each stored entry) and `nonzero` (its value).
//! Columns are kept sorted and unique within each row, and no stored value
//! is exactly zero, so per-row summation order is fixed and results are
//! reproducible bit for bit.

use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("entry ({row}, {col}) out of range for dimension {n}")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("dimension mismatch: expected length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix has zero dimension")]
    ZeroDimension,
}

/// One `(row, col, value)` entry used to assemble a [`CsrMatrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl Triplet {
    pub fn new(row: usize, col: usize, value: f64) -> Self {
        Self { row, col, value }
    }
}

impl From<(usize, usize, f64)> for Triplet {
    fn from((row, col, value): (usize, usize, f64)) -> Self {
        Self { row, col, value }
    }
}

/// Square sparse matrix in compressed row storage. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    rstart: Vec<usize>,
    col: Vec<usize>,
    nonzero: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles a matrix from triplets in any order.
    ///
    /// Entries whose value is exactly zero are dropped. Duplicate `(row, col)`
    /// pairs are rejected, including pairs where one of the values is zero.
    pub fn from_triplets<I, T>(n: usize, entries: I) -> Result<Self, SparseError>
    where
        I: IntoIterator<Item = T>,
        T: Into<Triplet>,
    {
        let mut entries: Vec<Triplet> = entries.into_iter().map(Into::into).collect();
        for t in &entries {
            if t.row >= n || t.col >= n {
                return Err(SparseError::IndexOutOfRange { row: t.row, col: t.col, n });
            }
        }
        entries.sort_unstable_by_key(|t| (t.row, t.col));
        if let Some(w) = entries
            .windows(2)
            .find(|w| w[0].row == w[1].row && w[0].col == w[1].col)
        {
            return Err(SparseError::DuplicateEntry { row: w[0].row, col: w[0].col });
        }

        let mut rstart = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(entries.len());
        let mut nonzero = Vec::with_capacity(entries.len());
        for t in entries.iter().filter(|t| t.value != 0.0) {
            rstart[t.row + 1] += 1;
            col.push(t.col);
            nonzero.push(t.value);
        }
        for i in 0..n {
            rstart[i + 1] += rstart[i];
        }
        let m = Self { n, rstart, col, nonzero };
        debug_assert!(m.check_invariants().is_ok());
        Ok(m)
    }

    /// Builds a matrix directly from raw CSR vectors, checking every invariant.
    pub fn from_raw(
        n: usize,
        rstart: Vec<usize>,
        col: Vec<usize>,
        nonzero: Vec<f64>,
    ) -> Result<Self, String> {
        let m = Self { n, rstart, col, nonzero };
        m.check_invariants()?;
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            rstart: (0..=n).collect(),
            col: (0..n).collect(),
            nonzero: vec![1.0; n],
        }
    }

    /// The `n x n` matrix with no stored entries.
    pub fn zeros(n: usize) -> Self {
        Self { n, rstart: vec![0; n + 1], col: Vec::new(), nonzero: Vec::new() }
    }

    /// Verifies the structural invariants; returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let m = self.col.len();
        if self.rstart.len() != self.n + 1 {
            return Err(format!("rstart has length {}, expected {}", self.rstart.len(), self.n + 1));
        }
        if self.rstart[0] != 0 || self.rstart[self.n] != m || self.nonzero.len() != m {
            return Err("rstart bounds disagree with col/nonzero lengths".into());
        }
        for i in 0..self.n {
            let (lo, hi) = (self.rstart[i], self.rstart[i + 1]);
            if lo > hi {
                return Err(format!("rstart decreases at row {i}"));
            }
            let cols = &self.col[lo..hi];
            if cols.iter().any(|&c| c >= self.n) {
                return Err(format!("column index out of range in row {i}"));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("columns not strictly increasing in row {i}"));
            }
            if self.nonzero[lo..hi].contains(&0.0) {
                return Err(format!("explicit zero stored in row {i}"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries.
    #[inline]
    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn rstart(&self) -> &[usize] {
        &self.rstart
    }

    pub fn col(&self) -> &[usize] {
        &self.col
    }

    pub fn nonzero(&self) -> &[f64] {
        &self.nonzero
    }

    #[inline]
    fn row_range(&self, i: usize) -> Range<usize> {
        self.rstart[i]..self.rstart[i + 1]
    }

    /// Column indices and values of row `i`, in ascending column order.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_range(i);
        (&self.col[r.clone()], &self.nonzero[r])
    }

    /// Stored value at `(i, j)`, or 0 when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Iterates over stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = Triplet> + '_ {
        (0..self.n).flat_map(move |i| {
            self.row_range(i)
                .map(move |k| Triplet::new(i, self.col[k], self.nonzero[k]))
        })
    }

    /// Dot product of row `i` with `x`, summed in ascending column order.
    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        let mut acc = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            acc += v * x[j];
        }
        acc
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), SparseError> {
        if x.len() != self.n {
            return Err(SparseError::DimensionMismatch { expected: self.n, found: x.len() });
        }
        if y.len() != self.n {
            return Err(SparseError::DimensionMismatch { expected: self.n, found: y.len() });
        }
        self.matvec_rows(0, x, y);
        Ok(())
    }

    /// Writes rows `first..first + out.len()` of `A·x` into `out`.
    ///
    /// Dimensions are the caller's responsibility; this is the kernel each
    /// worker runs on its own row block.
    #[inline]
    pub(crate) fn matvec_rows(&self, first: usize, x: &[f64], out: &mut [f64]) {
        for (k, yi) in out.iter_mut().enumerate() {
            *yi = self.row_dot(first + k, x);
        }
    }

    /// Diagonal entries, with 0 where no diagonal value is stored.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Fraction of stored entries, `m / n²`.
    pub fn density(&self) -> Result<f64, SparseError> {
        density_of(self.n, self.nnz())
    }

    /// Returns `I - A`. Diagonal entries that become exactly 0 are dropped.
    pub fn identity_minus(&self) -> CsrMatrix {
        let mut rstart = Vec::with_capacity(self.n + 1);
        let mut col = Vec::with_capacity(self.nnz() + self.n);
        let mut nonzero = Vec::with_capacity(self.nnz() + self.n);
        rstart.push(0);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut diag_done = false;
            for (&j, &v) in cols.iter().zip(vals) {
                if j == i {
                    let d = 1.0 - v;
                    if d != 0.0 {
                        col.push(i);
                        nonzero.push(d);
                    }
                    diag_done = true;
                    continue;
                }
                if j > i && !diag_done {
                    col.push(i);
                    nonzero.push(1.0);
                    diag_done = true;
                }
                col.push(j);
                nonzero.push(-v);
            }
            if !diag_done {
                col.push(i);
                nonzero.push(1.0);
            }
            rstart.push(col.len());
        }
        let m = CsrMatrix { n: self.n, rstart, col, nonzero };
        debug_assert!(m.check_invariants().is_ok());
        m
    }

    /// Dense row-major copy; intended for small matrices in tests and debugging.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for t in self.triplets() {
            d[t.row][t.col] = t.value;
        }
        d
    }
}

/// `m / n²` for an `n x n` matrix with `m` stored entries.
pub fn density_of(n: usize, m: usize) -> Result<f64, SparseError> {
    if n == 0 {
        return Err(SparseError::ZeroDimension);
    }
    let n = n as f64;
    Ok(m as f64 / (n * n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_3x3() -> CsrMatrix {
        CsrMatrix::from_triplets(3, [(0, 0, 1.0), (1, 2, 2.0), (2, 2, 3.0)]).unwrap()
    }

    #[test]
    fn assembles_worked_example() {
        let a = paper_3x3();
        assert_eq!(a.rstart(), &[0, 1, 2, 3]);
        assert_eq!(a.col(), &[0, 2, 2]);
        assert_eq!(a.nonzero(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn empty_and_zero_dropping() {
        let a = CsrMatrix::from_triplets(2, Vec::<Triplet>::new()).unwrap();
        assert_eq!(a.rstart(), &[0, 0, 0]);
        assert!(a.col().is_empty() && a.nonzero().is_empty());

        let b = CsrMatrix::from_triplets(2, [(0, 1, 0.5), (0, 0, 0.0)]).unwrap();
        assert_eq!(b.rstart(), &[0, 1, 1]);
        assert_eq!(b.col(), &[1]);
        assert_eq!(b.nonzero(), &[0.5]);
    }

    #[test]
    fn unsorted_input_is_sorted_per_row() {
        let a = CsrMatrix::from_triplets(3, [(1, 2, 4.0), (0, 2, 1.0), (1, 0, 3.0), (0, 1, 2.0)])
            .unwrap();
        assert_eq!(a.rstart(), &[0, 2, 4, 4]);
        assert_eq!(a.col(), &[1, 2, 0, 2]);
        assert_eq!(a.nonzero(), &[2.0, 1.0, 3.0, 4.0]);
    }

    #[test]
    fn assembly_errors() {
        assert_eq!(
            CsrMatrix::from_triplets(2, [(0, 1, 1.0), (0, 1, 2.0)]),
            Err(SparseError::DuplicateEntry { row: 0, col: 1 })
        );
        assert_eq!(
            CsrMatrix::from_triplets(2, [(2, 0, 1.0)]),
            Err(SparseError::IndexOutOfRange { row: 2, col: 0, n: 2 })
        );
    }

    #[test]
    fn matvec_examples() {
        assert_eq!(paper_3x3().matvec(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0, 2.0, 3.0]);

        let x = [0.3, -2.0, 7.5, 1e-3];
        assert_eq!(CsrMatrix::identity(4).matvec(&x).unwrap(), x.to_vec());

        let a = CsrMatrix::from_triplets(2, [(0, 1, 0.5), (1, 0, 0.4)]).unwrap();
        assert_eq!(a.matvec(&[0.625, 0.25]).unwrap(), vec![0.125, 0.25]);

        assert_eq!(
            a.matvec(&[1.0]),
            Err(SparseError::DimensionMismatch { expected: 2, found: 1 })
        );
    }

    #[test]
    fn diagonal_examples() {
        assert_eq!(paper_3x3().diagonal(), vec![1.0, 0.0, 3.0]);
        assert_eq!(CsrMatrix::identity(4).diagonal(), vec![1.0; 4]);
        assert_eq!(CsrMatrix::zeros(2).diagonal(), vec![0.0, 0.0]);
    }

    #[test]
    fn density_examples() {
        let d = density_of(667, 1333).unwrap();
        assert!((d - 0.002996).abs() < 1e-6);
        assert_eq!(format!("{d:.3}"), "0.003");
        assert_eq!(CsrMatrix::identity(10).density().unwrap(), 0.1);
        let d = density_of(92, 211).unwrap();
        assert!((d - 0.02493).abs() < 1e-5);
        assert_eq!(format!("{d:.3}"), "0.025");
        assert_eq!(density_of(0, 0), Err(SparseError::ZeroDimension));
    }

    #[test]
    fn identity_minus_examples() {
        let a = CsrMatrix::from_triplets(2, [(0, 1, 0.5), (1, 0, 0.4)]).unwrap();
        let m = a.identity_minus();
        assert_eq!(m.to_dense(), vec![vec![1.0, -0.5], vec![-0.4, 1.0]]);
        assert_eq!(CsrMatrix::zeros(3).identity_minus(), CsrMatrix::identity(3));
        assert_eq!(CsrMatrix::identity(3).identity_minus(), CsrMatrix::zeros(3));
    }

    #[test]
    fn identity_minus_keeps_column_order_around_diagonal() {
        let a = CsrMatrix::from_triplets(3, [(1, 0, 0.25), (1, 2, 0.5), (2, 2, 0.5), (0, 2, 1.0)])
            .unwrap();
        let m = a.identity_minus();
        m.check_invariants().unwrap();
        assert_eq!(
            m.to_dense(),
            vec![vec![1.0, 0.0, -1.0], vec![-0.25, 1.0, -0.5], vec![0.0, 0.0, 0.5]]
        );
    }
}
