//! Contiguous row-block execution for the parallel solvers.
//!
//! Rows `0..n` are cut into `workers` contiguous blocks. Each step hands a
//! block of an output buffer to one task; returning from a step is the
//! barrier. With the `rayon` feature the blocks run on a dedicated pool of
//! `workers` threads, otherwise they run one after the other. Either way
//! every element is computed by the same per-row code, so results do not
//! depend on the block layout.

use super::SolveError;

pub(crate) struct RowBlocks {
    block: usize,
    #[cfg(feature = "rayon")]
    pool: Option<rayon::ThreadPool>,
}

impl RowBlocks {
    pub(crate) fn new(n: usize, workers: usize) -> Result<Self, SolveError> {
        let workers = workers.max(1);
        let block = n.div_ceil(workers).max(1);
        #[cfg(feature = "rayon")]
        {
            let pool = if workers > 1 {
                Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(workers)
                        .build()
                        .map_err(|e| SolveError::InvalidConfig(format!("worker pool: {e}")))?,
                )
            } else {
                None
            };
            Ok(Self { block, pool })
        }
        #[cfg(not(feature = "rayon"))]
        Ok(Self { block })
    }

    /// Runs `f` with this executor's pool installed as the current one.
    pub(crate) fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        #[cfg(feature = "rayon")]
        if let Some(pool) = &self.pool {
            return pool.install(f);
        }
        f()
    }

    #[cfg(feature = "rayon")]
    fn threaded(&self) -> bool {
        self.pool.is_some()
    }

    /// Calls `f(first_row, block)` for every block of `out`.
    pub(crate) fn for_each<F>(&self, out: &mut [f64], f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        let block = self.block;
        #[cfg(feature = "rayon")]
        if self.threaded() {
            use rayon::prelude::*;
            out.par_chunks_mut(block)
                .enumerate()
                .for_each(|(k, chunk)| f(k * block, chunk));
            return;
        }
        out.chunks_mut(block)
            .enumerate()
            .for_each(|(k, chunk)| f(k * block, chunk));
    }

    /// Like [`for_each`](Self::for_each) with a per-block flag, combined by logical AND.
    /// Every block runs even when an earlier one reports `false`.
    pub(crate) fn all<F>(&self, out: &mut [f64], f: F) -> bool
    where
        F: Fn(usize, &mut [f64]) -> bool + Sync + Send,
    {
        let block = self.block;
        #[cfg(feature = "rayon")]
        if self.threaded() {
            use rayon::prelude::*;
            return out
                .par_chunks_mut(block)
                .enumerate()
                .map(|(k, chunk)| f(k * block, chunk))
                .reduce(|| true, |a, b| a && b);
        }
        out.chunks_mut(block)
            .enumerate()
            .map(|(k, chunk)| f(k * block, chunk))
            // no short-circuit: every block must be written
            .fold(true, |a, b| a && b)
    }

    /// Two-buffer variant of [`all`](Self::all); both buffers are split identically.
    pub(crate) fn all2<F>(&self, a: &mut [f64], b: &mut [f64], f: F) -> bool
    where
        F: Fn(usize, &mut [f64], &mut [f64]) -> bool + Sync + Send,
    {
        debug_assert_eq!(a.len(), b.len());
        let block = self.block;
        #[cfg(feature = "rayon")]
        if self.threaded() {
            use rayon::prelude::*;
            return a
                .par_chunks_mut(block)
                .zip(b.par_chunks_mut(block))
                .enumerate()
                .map(|(k, (ca, cb))| f(k * block, ca, cb))
                .reduce(|| true, |x, y| x && y);
        }
        a.chunks_mut(block)
            .zip(b.chunks_mut(block))
            .enumerate()
            .map(|(k, (ca, cb))| f(k * block, ca, cb))
            // no short-circuit: every block must be written
            .fold(true, |x, y| x && y)
    }

    /// Dot product as per-block partial sums added in block order.
    ///
    /// Deterministic for a fixed worker count but not bitwise equal to the
    /// sequential ascending-index sum.
    pub(crate) fn blocked_dot(&self, x: &[f64], y: &[f64]) -> f64 {
        let block = self.block;
        #[cfg(feature = "rayon")]
        if self.threaded() {
            use rayon::prelude::*;
            let partial: Vec<f64> = x
                .par_chunks(block)
                .zip(y.par_chunks(block))
                .map(|(a, b)| super::dot(a, b))
                .collect();
            return partial.iter().sum();
        }
        x.chunks(block)
            .zip(y.chunks(block))
            .map(|(a, b)| super::dot(a, b))
            .collect::<Vec<_>>()
            .iter()
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_cover_every_row_once() {
        for workers in [1, 2, 3, 4, 8, 16] {
            for n in [0, 1, 5, 16, 17] {
                let rb = RowBlocks::new(n, workers).unwrap();
                let mut out = vec![0.0; n];
                rb.install(|| {
                    rb.for_each(&mut out, |first, chunk| {
                        for (k, v) in chunk.iter_mut().enumerate() {
                            *v += (first + k) as f64 + 1.0;
                        }
                    })
                });
                let expect: Vec<f64> = (1..=n).map(|i| i as f64).collect();
                assert_eq!(out, expect, "n={n} workers={workers}");
            }
        }
    }

    #[test]
    fn all_runs_every_block() {
        let rb = RowBlocks::new(10, 4).unwrap();
        let mut out = vec![0.0; 10];
        let ok = rb.install(|| {
            rb.all(&mut out, |first, chunk| {
                chunk.iter_mut().for_each(|v| *v = 1.0);
                first != 0
            })
        });
        assert!(!ok);
        assert!(out.iter().all(|&v| v == 1.0));
    }
}
