//! ADE Dynkin diagrams with their standard vertex labeling, bipartition, and
//! Perron–Frobenius spectral data.

use crate::linalg::{solve_f64, IntMat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest accepted rank; keeps accidental `A100000` requests from hanging.
pub const MAX_RANK: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    D,
    E,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::A => write!(f, "A"),
            Family::D => write!(f, "D"),
            Family::E => write!(f, "E"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DiagramError {
    #[error("unknown diagram family in spec {0:?} (expected A<n>, D<n>, or E<6|7|8>)")]
    UnknownFamily(String),
    #[error("rank {rank} out of range for family {family} (A needs rank >= 1, D rank >= 4, E rank in 6..=8, all at most {MAX_RANK})")]
    RankOutOfRange { family: Family, rank: usize },
}

/// A simply-laced Dynkin diagram of type A, D, or E.
///
/// Vertex labels follow the usual conventions: `A_m` is the chain
/// `a0 - a1 - ... - a(m-1)`; `D_r` is the chain `d0 - ... - d(r-3)` with two
/// tail vertices `d(r-2)` and `d(r-2)'` attached to `d(r-3)`; `E6`/`E7`/`E8`
/// have their pendant vertex and short arm attached at the triple point
/// (`e2`/`e3`/`e4` respectively). Vertex order in all matrices is label order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynkinGraph {
    pub family: Family,
    pub rank: usize,
    pub labels: Vec<String>,
    pub adjacency: IntMat,
    /// Proper 2-coloring; `bipartition[0] == 0`.
    pub bipartition: Vec<u8>,
    /// Coxeter number: h(A_n) = n+1, h(D_n) = 2n-2, h(E6/E7/E8) = 12/18/30.
    pub coxeter: usize,
}

impl DynkinGraph {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Spec string, e.g. "D6".
    pub fn name(&self) -> String {
        format!("{}{}", self.family, self.rank)
    }

    pub fn vertex_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// The label-0 end vertex (depth-0 base point of GHJ constructions).
    pub fn distinguished(&self) -> &str {
        &self.labels[0]
    }

    /// 0 when x and y are in the same bipartition class, 1 otherwise.
    pub fn pair_parity(&self, x: usize, y: usize) -> u8 {
        (self.bipartition[x] + self.bipartition[y]) % 2
    }
}

/// Perron–Frobenius data of a diagram: top eigenvalue and eigenvector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PFData {
    /// 2 cos(pi / h).
    pub beta: f64,
    /// Eigenvector of the adjacency matrix for beta, normalized mu[0] = 1.
    pub mu: Vec<f64>,
    /// Sum of squared weights.
    pub total_mass: f64,
}

/// Build a diagram from a spec string like "A11", "d6", or "E8".
pub fn build_diagram(spec: &str) -> Result<DynkinGraph, DiagramError> {
    let spec = spec.trim();
    let mut chars = spec.chars();
    let family = match chars.next().map(|c| c.to_ascii_uppercase()) {
        Some('A') => Family::A,
        Some('D') => Family::D,
        Some('E') => Family::E,
        _ => return Err(DiagramError::UnknownFamily(spec.to_string())),
    };
    let rank: usize = chars
        .as_str()
        .parse()
        .map_err(|_| DiagramError::UnknownFamily(spec.to_string()))?;
    let range_err = || DiagramError::RankOutOfRange { family, rank };
    if rank > MAX_RANK {
        return Err(range_err());
    }
    let (labels, edges, h): (Vec<String>, Vec<(usize, usize)>, usize) = match family {
        Family::A => {
            if rank < 1 {
                return Err(range_err());
            }
            let labels = (0..rank).map(|i| format!("a{i}")).collect();
            let edges = (0..rank.saturating_sub(1)).map(|i| (i, i + 1)).collect();
            (labels, edges, rank + 1)
        }
        Family::D => {
            if rank < 4 {
                return Err(range_err());
            }
            let mut labels: Vec<String> = (0..rank - 1).map(|i| format!("d{i}")).collect();
            labels.push(format!("d{}'", rank - 2));
            let mut edges: Vec<(usize, usize)> = (0..rank - 2).map(|i| (i, i + 1)).collect();
            edges.push((rank - 3, rank - 1));
            (labels, edges, 2 * rank - 2)
        }
        Family::E => {
            let labels: Vec<String> = (0..rank).map(|i| format!("e{i}")).collect();
            let edges = match rank {
                6 => vec![(0, 1), (1, 2), (2, 3), (2, 5), (5, 4)],
                7 => vec![(0, 1), (1, 2), (2, 3), (3, 4), (3, 6), (6, 5)],
                8 => vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (4, 7), (7, 6)],
                _ => return Err(range_err()),
            };
            let h = match rank {
                6 => 12,
                7 => 18,
                _ => 30,
            };
            (labels, edges, h)
        }
    };
    let n = labels.len();
    let mut adjacency = IntMat::zero(n);
    for &(a, b) in &edges {
        adjacency[(a, b)] = 1;
        adjacency[(b, a)] = 1;
    }
    // Bipartition by BFS from vertex 0; the diagrams are trees, so this is a
    // proper 2-coloring and also certifies connectedness.
    let mut bipartition = vec![u8::MAX; n];
    bipartition[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut visited = 1;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if adjacency[(u, v)] == 1 && bipartition[v] == u8::MAX {
                bipartition[v] = 1 - bipartition[u];
                visited += 1;
                queue.push_back(v);
            }
        }
    }
    assert_eq!(visited, n, "diagram must be connected");
    Ok(DynkinGraph {
        family,
        rank,
        labels,
        adjacency,
        bipartition,
        coxeter: h,
    })
}

/// Perron–Frobenius eigenvalue and eigenvector of a diagram.
///
/// beta = 2 cos(pi/h) is known in closed form; mu is recovered by solving the
/// eigenvector equation with mu[0] pinned to 1 (the linear system obtained by
/// dropping the redundant first equation is well conditioned at these sizes).
pub fn perron_data(g: &DynkinGraph) -> PFData {
    let n = g.len();
    let beta = 2.0 * (std::f64::consts::PI / g.coxeter as f64).cos();
    let mu = if n == 1 {
        vec![1.0]
    } else {
        // (A - beta I) mu = 0 with mu[0] = 1: unknowns mu[1..], equations from
        // rows 1.. (row 0 is implied by the rest for an eigenvector).
        let a: Vec<Vec<f64>> = (1..n)
            .map(|r| {
                (1..n)
                    .map(|c| g.adjacency[(r, c)] as f64 - if r == c { beta } else { 0.0 })
                    .collect()
            })
            .collect();
        let b: Vec<f64> = (1..n).map(|r| -(g.adjacency[(r, 0)] as f64)).collect();
        let mut mu = vec![1.0];
        mu.extend(solve_f64(a, b));
        mu
    };
    let total_mass = mu.iter().map(|m| m * m).sum();
    PFData {
        beta,
        mu,
        total_mass,
    }
}

/// The Coxeter number of the diagram.
pub fn coxeter_number(g: &DynkinGraph) -> usize {
    g.coxeter
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degrees(g: &DynkinGraph) -> Vec<i64> {
        (0..g.len())
            .map(|i| g.adjacency.row(i).iter().sum())
            .collect()
    }

    #[test]
    fn a4_is_a_chain() {
        let g = build_diagram("A4").unwrap();
        assert_eq!(g.labels, vec!["a0", "a1", "a2", "a3"]);
        assert_eq!(degrees(&g), vec![1, 2, 2, 1]);
        assert_eq!(g.coxeter, 5);
    }

    #[test]
    fn e6_triple_point_at_e2() {
        let g = build_diagram("E6").unwrap();
        assert_eq!(degrees(&g), vec![1, 2, 3, 1, 1, 2]);
        assert_eq!(g.coxeter, 12);
    }

    #[test]
    fn d6_fork() {
        let g = build_diagram("D6").unwrap();
        assert_eq!(g.labels, vec!["d0", "d1", "d2", "d3", "d4", "d4'"]);
        assert_eq!(degrees(&g), vec![1, 2, 2, 3, 1, 1]);
        assert_eq!(g.coxeter, 10);
        assert_eq!(g.bipartition[4], g.bipartition[5]);
    }

    #[test]
    fn coxeter_table() {
        for (spec, h) in [
            ("A1", 2),
            ("A11", 12),
            ("D4", 6),
            ("D5", 8),
            ("E7", 18),
            ("E8", 30),
        ] {
            assert_eq!(coxeter_number(&build_diagram(spec).unwrap()), h, "{spec}");
        }
    }

    #[test]
    fn spec_errors() {
        assert!(matches!(
            build_diagram("X9"),
            Err(DiagramError::UnknownFamily(_))
        ));
        assert!(matches!(
            build_diagram("Aq"),
            Err(DiagramError::UnknownFamily(_))
        ));
        assert!(matches!(
            build_diagram("A0"),
            Err(DiagramError::RankOutOfRange { .. })
        ));
        assert!(matches!(
            build_diagram("D3"),
            Err(DiagramError::RankOutOfRange { .. })
        ));
        assert!(matches!(
            build_diagram("E9"),
            Err(DiagramError::RankOutOfRange { .. })
        ));
        assert!(build_diagram(" e6 ").is_ok());
    }

    #[test]
    fn perron_eigen_equation() {
        for spec in ["A1", "A3", "A11", "D4", "D7", "E6", "E7", "E8"] {
            let g = build_diagram(spec).unwrap();
            let pf = perron_data(&g);
            assert!(
                (pf.beta - 2.0 * (std::f64::consts::PI / g.coxeter as f64).cos()).abs() < 1e-12
            );
            for x in 0..g.len() {
                let s: f64 = (0..g.len())
                    .map(|y| g.adjacency[(x, y)] as f64 * pf.mu[y])
                    .sum();
                assert!((s - pf.beta * pf.mu[x]).abs() < 1e-9, "{spec} row {x}");
                assert!(
                    pf.mu[x] >= 1.0 - 1e-12,
                    "{spec}: end vertex should be minimal"
                );
            }
        }
    }

    #[test]
    fn beta_values() {
        let a3 = perron_data(&build_diagram("A3").unwrap());
        assert!((a3.beta - 2f64.sqrt()).abs() < 1e-12);
        let e6 = perron_data(&build_diagram("E6").unwrap());
        assert!((e6.beta - 1.9318516525781366).abs() < 1e-12);
        let a11 = perron_data(&build_diagram("A11").unwrap());
        assert!((a11.total_mass - (48.0 + 24.0 * 3f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn mass_relation_between_a_and_d() {
        // For even Coxeter number h = 2r-2: total mass of A_{h-1} is twice
        // that of D_r.
        for r in 5..=12 {
            let d = perron_data(&build_diagram(&format!("D{r}")).unwrap());
            let a = perron_data(&build_diagram(&format!("A{}", 2 * r - 3)).unwrap());
            assert!((a.total_mass - 2.0 * d.total_mass).abs() < 1e-9 * a.total_mass);
        }
    }
}
