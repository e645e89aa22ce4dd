//! Essential-path dimension tables.
//!
//! The table is produced by the Chebyshev-style recursion
//! `E(n+1) = E(n) * adjacency - E(n-1)` in exact integers. An independent
//! oracle recomputes small tables from first principles on the
//! Temperley–Lieb path space: it builds the Jones projections from
//! Perron–Frobenius weights and counts the dimension of the joint kernel
//! block by block, never touching the recursion.

use crate::diagram::{perron_data, DynkinGraph};
use crate::linalg::IntMat;
use thiserror::Error;

/// The matrices E(0) .. E(h-2); entry `E(n)[x][y]` is the number of
/// essential (Jones–Wenzl reduced) paths of length n from x to y.
#[derive(Debug, Clone)]
pub struct EssPathTable {
    pub matrices: Vec<IntMat>,
}

impl EssPathTable {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EssPathError {
    #[error("path length {n} too large for the brute-force oracle (max {max})")]
    LengthTooLarge { n: usize, max: usize },
}

/// Maximum length accepted by [`esspath_oracle`]; the path space grows
/// exponentially beyond this.
pub const ORACLE_MAX_LENGTH: usize = 8;

/// Full dimension table for lengths 0 ..= h-2.
pub fn esspath_table(g: &DynkinGraph) -> EssPathTable {
    let mut matrices = vec![IntMat::identity(g.len())];
    if g.coxeter >= 3 {
        matrices.push(g.adjacency.clone());
    }
    while matrices.len() < g.coxeter - 1 {
        let next = chebyshev_next(&matrices, &g.adjacency);
        matrices.push(next);
    }
    for (n, m) in matrices.iter().enumerate() {
        assert!(
            m.is_symmetric() && m.is_nonnegative(),
            "length-{n} matrix invalid"
        );
        for x in 0..g.len() {
            for y in 0..g.len() {
                if m[(x, y)] != 0 {
                    assert_eq!(
                        g.pair_parity(x, y) as usize,
                        n % 2,
                        "parity violation at length {n}"
                    );
                }
            }
        }
    }
    EssPathTable { matrices }
}

/// The term following the given table prefix: `last * adjacency - previous`.
/// With only E(0) present this is the adjacency matrix itself.
pub fn chebyshev_next(matrices: &[IntMat], adjacency: &IntMat) -> IntMat {
    match matrices {
        [] => panic!("need at least E(0)"),
        [_] => adjacency.clone(),
        [.., prev, last] => last.mul(adjacency).sub(prev),
    }
}

/// Recompute `E(n)` without the recursion, as the per-block rank deficiency of
/// the span of the Jones projections e_1 .. e_{n-1} on length-n paths.
pub fn esspath_oracle(g: &DynkinGraph, n: usize) -> Result<IntMat, EssPathError> {
    if n > ORACLE_MAX_LENGTH {
        return Err(EssPathError::LengthTooLarge {
            n,
            max: ORACLE_MAX_LENGTH,
        });
    }
    let paths = enumerate_paths(g, n);
    let projections = jones_projections(g, &paths);
    let nv = g.len();
    let mut out = IntMat::zero(nv);
    for s in 0..nv {
        for t in 0..nv {
            let block: Vec<usize> = (0..paths.len())
                .filter(|&i| paths[i][0] == s && paths[i][n] == t)
                .collect();
            if block.is_empty() {
                continue;
            }
            if projections.is_empty() {
                out[(s, t)] = block.len() as i64;
                continue;
            }
            // Columns of every e_k restricted to the block, side by side; the
            // essential dimension is the block size minus the rank of their
            // joint column span.
            let mut cols: Vec<Vec<f64>> = Vec::new();
            for e in &projections {
                for &j in &block {
                    cols.push(block.iter().map(|&i| e[i][j]).collect());
                }
            }
            out[(s, t)] = block.len() as i64 - float_rank(&mut cols) as i64;
        }
    }
    Ok(out)
}

fn enumerate_paths(g: &DynkinGraph, n: usize) -> Vec<Vec<usize>> {
    let mut paths = Vec::new();
    let mut current = Vec::with_capacity(n + 1);
    fn rec(g: &DynkinGraph, n: usize, current: &mut Vec<usize>, paths: &mut Vec<Vec<usize>>) {
        if current.len() == n + 1 {
            paths.push(current.clone());
            return;
        }
        let last = *current.last().unwrap();
        for v in 0..g.len() {
            if g.adjacency[(last, v)] == 1 {
                current.push(v);
                rec(g, n, current, paths);
                current.pop();
            }
        }
    }
    for s in 0..g.len() {
        current.push(s);
        rec(g, n, &mut current, &mut paths);
        current.pop();
    }
    paths
}

/// Jones projections e_1 .. e_{n-1} on the space of length-n paths, in the
/// spectral-weight form: a path with a backtrack `p[k-1] -> p[k] -> p[k-1]`
/// maps to the weighted sum over all backtracks through neighbors u, with
/// coefficient sqrt(mu(p[k]) mu(u)) / (beta mu(p[k-1])).
fn jones_projections(g: &DynkinGraph, paths: &[Vec<usize>]) -> Vec<Vec<Vec<f64>>> {
    let n = match paths.first() {
        Some(p) => p.len() - 1,
        None => return Vec::new(),
    };
    let pf = perron_data(g);
    let index: std::collections::HashMap<&[usize], usize> = paths
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_slice(), i))
        .collect();
    let mut out = Vec::new();
    for k in 1..n {
        let mut e = vec![vec![0.0; paths.len()]; paths.len()];
        for (i, p) in paths.iter().enumerate() {
            if p[k - 1] != p[k + 1] {
                continue;
            }
            for u in 0..g.len() {
                if g.adjacency[(p[k - 1], u)] == 1 {
                    let mut q = p.clone();
                    q[k] = u;
                    let row = index[q.as_slice()];
                    e[row][i] = (pf.mu[p[k]] * pf.mu[u]).sqrt() / (pf.beta * pf.mu[p[k - 1]]);
                }
            }
        }
        out.push(e);
    }
    out
}

/// Rank of a set of float columns by modified Gram–Schmidt with
/// reorthogonalization; residual columns below the 1e-7 cutoff are dependent.
fn float_rank(cols: &mut [Vec<f64>]) -> usize {
    const CUTOFF: f64 = 1e-7;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for col in cols.iter_mut() {
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = col.iter().zip(b).map(|(a, c)| a * c).sum();
                for (a, c) in col.iter_mut().zip(b) {
                    *a -= dot * c;
                }
            }
        }
        let norm: f64 = col.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > CUTOFF {
            for a in col.iter_mut() {
                *a /= norm;
            }
            basis.push(col.clone());
        }
    }
    basis.len()
}
