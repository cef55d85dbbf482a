//! Test-only oracles, independent of the library's solvers and graph code.
#![allow(dead_code)]

use markov_reach::{CsrMatrix, GoalSet, MarkovChain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap())
            .unwrap();
        m.swap(k, p);
        assert!(m[k][k] != 0.0, "singular system");
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for j in k..=n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = m[i][n];
        for j in i + 1..n {
            s -= m[i][j] * x[j];
        }
        x[i] = s / m[i][i];
    }
    x
}

/// Triple-loop dense product.
pub fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| {
            let mut acc = 0.0;
            for j in 0..x.len() {
                if row[j] != 0.0 {
                    acc += row[j] * x[j];
                }
            }
            acc
        })
        .collect()
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Boolean reflexive-transitive closure by Floyd–Warshall.
pub fn closure(adj: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    let mut r = adj.to_vec();
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

/// Expected `(S=1, S=0)` from path closures. Goal states are made absorbing
/// first, since reaching a goal ends the run.
pub fn closure_partition(chain: &MarkovChain, goals: &GoalSet) -> (Vec<usize>, Vec<usize>) {
    let n = chain.n();
    let dense = chain.transitions().to_dense();
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|s| (0..n).map(|t| !goals.contains(s) && dense[s][t] > 0.0).collect())
        .collect();
    let reach = closure(&adj);
    let zero: Vec<usize> = (0..n).filter(|&s| !goals.iter().any(|g| reach[s][g])).collect();
    let one: Vec<usize> = (0..n).filter(|&s| !zero.iter().any(|&z| reach[s][z])).collect();
    (one, zero)
}

/// Exact reachability probabilities: goals fixed at 1, states that cannot
/// reach a goal fixed at 0, and one dense equation
/// `x_s = Σ_t P(s,t)·x_t` for every other state.
pub fn dense_reachability(chain: &MarkovChain, goals: &GoalSet) -> Vec<f64> {
    let n = chain.n();
    let (_, zero) = closure_partition(chain, goals);
    let unknown: Vec<usize> = (0..n).filter(|&s| !goals.contains(s) && !zero.contains(&s)).collect();
    let p = chain.transitions().to_dense();
    let a: Vec<Vec<f64>> = unknown
        .iter()
        .map(|&s| unknown.iter().map(|&t| if s == t { 1.0 - p[s][t] } else { -p[s][t] }).collect())
        .collect();
    let b: Vec<f64> = unknown.iter().map(|&s| goals.iter().map(|g| p[s][g]).sum()).collect();
    let xu = if unknown.is_empty() { Vec::new() } else { dense_solve(&a, &b) };
    let mut x = vec![0.0; n];
    for g in goals.iter() {
        x[g] = 1.0;
    }
    for (k, &s) in unknown.iter().enumerate() {
        x[s] = xu[k];
    }
    x
}

/// Random valid chain: each state gets 1..=max_out distinct successors with
/// random positive weights normalised to sum to 1. A few states are made
/// absorbing so that goals and sinks both occur.
pub fn random_chain(n: usize, max_out: usize, seed: u64) -> MarkovChain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for s in 0..n {
        if rng.gen_bool(0.15) {
            entries.push((s, s, 1.0));
            continue;
        }
        let k = rng.gen_range(1..=max_out.min(n));
        let succ = rand::seq::index::sample(&mut rng, n, k).into_vec();
        let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        for (t, wt) in succ.into_iter().zip(w) {
            entries.push((s, t, wt / total));
        }
    }
    let initial = rng.gen_range(0..n);
    MarkovChain::from_transitions(n, initial, entries).expect("normalised rows are stochastic")
}

pub fn random_goals(n: usize, k: usize, seed: u64) -> GoalSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let k = k.clamp(1, n);
    GoalSet::new(n, rand::seq::index::sample(&mut rng, n, k).into_vec()).unwrap()
}

pub fn dense_of(m: &CsrMatrix) -> Vec<Vec<f64>> {
    m.to_dense()
}
