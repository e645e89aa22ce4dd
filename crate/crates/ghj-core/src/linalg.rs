//! Small dense matrices: exact integer arithmetic plus the few floating-point
//! and rational routines the rest of the crate needs.

// Elimination kernels index several aligned structures from pivot offsets;
// plain index loops read better than iterator chains here.
#![allow(clippy::needless_range_loop)]

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

pub type Rat = Ratio<i128>;

/// Square integer matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntMat {
    pub n: usize,
    data: Vec<i64>,
}

impl IntMat {
    pub fn zero(n: usize) -> Self {
        IntMat {
            n,
            data: vec![0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n));
        IntMat {
            n,
            data: rows.concat(),
        }
    }

    /// Permutation matrix sending basis vector i to basis vector perm[i].
    pub fn permutation(perm: &[usize]) -> Self {
        let mut m = Self::zero(perm.len());
        for (i, &j) in perm.iter().enumerate() {
            m[(i, j)] = 1;
        }
        m
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = IntMat::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.n, other.n);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        IntMat { n: self.n, data }
    }

    pub fn transpose(&self) -> IntMat {
        let n = self.n;
        let mut out = IntMat::zero(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0)
    }

    pub fn commutes_with(&self, other: &IntMat) -> bool {
        self.mul(other) == other.mul(self)
    }

    pub fn trace(&self) -> i64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }
}

impl std::ops::Index<(usize, usize)> for IntMat {
    type Output = i64;
    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.data[i * self.n + j]
    }
}

impl std::fmt::Debug for IntMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.n {
            writeln!(f, "{:?}", self.row(i))?;
        }
        Ok(())
    }
}

/// Solve the dense float system `a · x = b` by Gaussian elimination with
/// partial pivoting. Panics on a numerically singular system; callers only
/// pass well-conditioned Perron-Frobenius systems.
pub fn solve_f64(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        assert!(a[piv][col].abs() > 1e-12, "singular system");
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

/// Exact least-structure solve: given column vectors `basis` (each length m)
/// and a target of length m, return the unique rational coefficient vector if
/// the basis is linearly independent and the target lies in its span.
///
/// Returns `Err(Dependent)` if the basis is dependent, `Err(Unsolvable)` if
/// the target escapes the span.
pub fn solve_exact(basis: &[Vec<i64>], target: &[i64]) -> Result<Vec<Rat>, SolveError> {
    let k = basis.len();
    let m = target.len();
    assert!(basis.iter().all(|b| b.len() == m));
    // Augmented row-reduction over the rationals on the m x (k+1) system.
    let mut rows: Vec<Vec<Rat>> = (0..m)
        .map(|r| {
            let mut row: Vec<Rat> = basis
                .iter()
                .map(|b| Rat::from_integer(b[r] as i128))
                .collect();
            row.push(Rat::from_integer(target[r] as i128));
            row
        })
        .collect();
    let mut pivot_rows = Vec::new();
    let mut r0 = 0;
    for col in 0..k {
        let Some(piv) = (r0..m).find(|&r| !rows[r][col].is_zero()) else {
            return Err(SolveError::Dependent);
        };
        rows.swap(r0, piv);
        let inv = rows[r0][col].recip();
        for c in col..=k {
            let v = rows[r0][c] * inv;
            rows[r0][c] = v;
        }
        for r in 0..m {
            if r != r0 && !rows[r][col].is_zero() {
                let f = rows[r][col];
                for c in col..=k {
                    let v = rows[r][c] - f * rows[r0][c];
                    rows[r][c] = v;
                }
            }
        }
        pivot_rows.push(r0);
        r0 += 1;
    }
    for r in r0..m {
        if !rows[r][k].is_zero() {
            return Err(SolveError::Unsolvable);
        }
    }
    Ok((0..k).map(|i| rows[pivot_rows[i]][k]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveError {
    Dependent,
    Unsolvable,
}

/// Reusable exact solver for repeated right-hand sides against one fixed
/// independent basis of integer vectors: picks a set of pivot coordinates
/// once, inverts the square subsystem over the rationals, and solves each
/// target by a single matrix-vector product. Callers must verify the full
/// (non-pivot) coordinates of a proposed solution themselves.
pub struct ExactSolver {
    pivot_rows: Vec<usize>,
    inv: Vec<Vec<Rat>>,
}

impl ExactSolver {
    pub fn new(basis: &[Vec<i64>]) -> Result<Self, SolveError> {
        let k = basis.len();
        let m = basis.first().map(|b| b.len()).unwrap_or(0);
        assert!(basis.iter().all(|b| b.len() == m));
        // Row-reduce coordinate slices to find k independent rows.
        let mut reduced: Vec<(usize, Vec<Rat>)> = Vec::new(); // (lead col, row)
        let mut pivot_rows = Vec::new();
        for r in 0..m {
            if pivot_rows.len() == k {
                break;
            }
            let mut row: Vec<Rat> = basis
                .iter()
                .map(|b| Rat::from_integer(b[r] as i128))
                .collect();
            for (lead, base) in &reduced {
                if !row[*lead].is_zero() {
                    let f = row[*lead];
                    for (a, b) in row.iter_mut().zip(base) {
                        let v = *a - f * *b;
                        *a = v;
                    }
                }
            }
            if let Some(lead) = (0..k).find(|&c| !row[c].is_zero()) {
                let inv = row[lead].recip();
                for a in row.iter_mut() {
                    let v = *a * inv;
                    *a = v;
                }
                reduced.push((lead, row));
                pivot_rows.push(r);
            }
        }
        if pivot_rows.len() < k {
            return Err(SolveError::Dependent);
        }
        // Invert the k x k submatrix S[t][j] = basis[j][pivot_rows[t]].
        let mut aug: Vec<Vec<Rat>> = (0..k)
            .map(|t| {
                let mut row: Vec<Rat> = (0..k)
                    .map(|j| Rat::from_integer(basis[j][pivot_rows[t]] as i128))
                    .collect();
                row.extend((0..k).map(|j| Rat::from_integer(i128::from(j == t))));
                row
            })
            .collect();
        for col in 0..k {
            let piv = (col..k)
                .find(|&r| !aug[r][col].is_zero())
                .expect("invertible by pivot choice");
            aug.swap(col, piv);
            let inv = aug[col][col].recip();
            for c in 0..2 * k {
                let v = aug[col][c] * inv;
                aug[col][c] = v;
            }
            for r in 0..k {
                if r != col && !aug[r][col].is_zero() {
                    let f = aug[r][col];
                    for c in 0..2 * k {
                        let v = aug[r][c] - f * aug[col][c];
                        aug[r][c] = v;
                    }
                }
            }
        }
        // inv[j][t]: coefficient j from pivot-coordinate t of the target.
        let inv = (0..k)
            .map(|j| (0..k).map(|t| aug[j][k + t]).collect())
            .collect();
        Ok(ExactSolver { pivot_rows, inv })
    }

    /// Coefficients solving `sum_j c_j basis_j = target` on the pivot
    /// coordinates. Exact on the whole space only if the target lies in the
    /// basis span; verify elsewhere.
    pub fn solve(&self, target: &[i64]) -> Vec<Rat> {
        self.inv
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.pivot_rows)
                    .map(|(c, &r)| *c * Rat::from_integer(target[r] as i128))
                    .sum()
            })
            .collect()
    }
}

/// Rank of a set of integer vectors over the rationals.
pub fn rank_exact(vectors: &[Vec<i64>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = vectors[0].len();
    let mut rows: Vec<Vec<Rat>> = vectors
        .iter()
        .map(|v| v.iter().map(|&x| Rat::from_integer(x as i128)).collect())
        .collect();
    let mut rank = 0;
    for col in 0..m {
        let Some(piv) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = rows[rank][col].recip();
        for c in col..m {
            let v = rows[rank][c] * inv;
            rows[rank][c] = v;
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let f = rows[r][col];
                for c in col..m {
                    let v = rows[r][c] - f * rows[rank][c];
                    rows[r][c] = v;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Round a rational vector to integers, or report which entry fails.
pub fn to_integers(coeffs: &[Rat]) -> Option<Vec<i64>> {
    coeffs
        .iter()
        .map(|c| {
            if c.denom().is_one() {
                i64::try_from(*c.numer()).ok()
            } else {
                None
            }
        })
        .collect()
}
