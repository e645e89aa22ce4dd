//! Sector bookkeeping for the four connection systems (A-A, A-K, K-A, K-K):
//! fusion rings, module decompositions, and principal graphs.

use crate::diagram::DynkinGraph;
use crate::esspath::esspath_table;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SectorKind {
    AA,
    AK,
    KA,
    KK,
}

/// A basis sector in one of the four systems: an A-vertex label like "[3]"
/// for A-A, a K-vertex label for A-K/K-A, or an irreducible id for K-K.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorLabel {
    pub kind: SectorKind,
    pub payload: String,
}

/// A multiplicity-weighted sum of sectors of a single kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub terms: Vec<(SectorLabel, i64)>,
}

impl Decomposition {
    pub fn multiplicity_of(&self, payload: &str) -> i64 {
        self.terms
            .iter()
            .find(|(l, _)| l.payload == payload)
            .map(|&(_, m)| m)
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SectorError {
    #[error("unknown vertex {vertex:?} on diagram {diagram}")]
    UnknownVertex { diagram: String, vertex: String },
    #[error("sector length {n} out of range on diagram {diagram} (max {max})")]
    LengthOutOfRange {
        diagram: String,
        n: usize,
        max: usize,
    },
}

/// A based ring with nonnegative-integer structure constants: ordered basis,
/// identity, conjugation involution, tensor `n[i][j][k]`, quantum dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionRing {
    pub labels: Vec<String>,
    pub id: usize,
    pub conj: Vec<usize>,
    /// Flat tensor, entry (i, j, k) at index (i * size + j) * size + k.
    pub n: Vec<i64>,
    pub qdims: Vec<f64>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RingError {
    #[error("negative structure constant at ({i},{j},{k})")]
    NegativeConstant { i: usize, j: usize, k: usize },
    #[error("identity axiom fails at ({i},{j})")]
    IdentityAxiom { i: usize, j: usize },
    #[error("conjugation is not an involution at {i}")]
    ConjugationInvolution { i: usize },
    #[error("conjugate pairing fails at ({i},{j})")]
    ConjugatePairing { i: usize, j: usize },
    #[error("associativity fails at ({i},{j},{k})")]
    Associativity { i: usize, j: usize, k: usize },
    #[error("quantum dimensions not multiplicative at ({i},{j}): {lhs} vs {rhs}")]
    QdimMultiplicativity {
        i: usize,
        j: usize,
        lhs: f64,
        rhs: f64,
    },
}

impl FusionRing {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn n_at(&self, i: usize, j: usize, k: usize) -> i64 {
        self.n[(i * self.size() + j) * self.size() + k]
    }

    /// The coefficient vector of the product of basis elements i and j.
    #[inline]
    pub fn product(&self, i: usize, j: usize) -> &[i64] {
        let s = self.size();
        &self.n[(i * s + j) * s..(i * s + j + 1) * s]
    }

    /// Check all based-ring axioms: nonnegativity, two-sided identity,
    /// conjugation involution and pairing, associativity, and multiplicativity
    /// of quantum dimensions (tolerance 1e-9 relative to the magnitude).
    pub fn validate(&self) -> Result<(), RingError> {
        let s = self.size();
        for i in 0..s {
            for j in 0..s {
                for k in 0..s {
                    if self.n_at(i, j, k) < 0 {
                        return Err(RingError::NegativeConstant { i, j, k });
                    }
                }
            }
        }
        for i in 0..s {
            for j in 0..s {
                let left_ok = (0..s).all(|k| self.n_at(self.id, j, k) == i64::from(j == k));
                let right_ok = (0..s).all(|k| self.n_at(i, self.id, k) == i64::from(i == k));
                if !left_ok || !right_ok {
                    return Err(RingError::IdentityAxiom { i, j });
                }
            }
        }
        for i in 0..s {
            if self.conj[self.conj[i]] != i {
                return Err(RingError::ConjugationInvolution { i });
            }
        }
        for i in 0..s {
            for j in 0..s {
                if self.n_at(i, j, self.id) != i64::from(j == self.conj[i]) {
                    return Err(RingError::ConjugatePairing { i, j });
                }
            }
        }
        for i in 0..s {
            for j in 0..s {
                for k in 0..s {
                    for l in 0..s {
                        let lhs: i64 = (0..s)
                            .map(|m| self.n_at(i, j, m) * self.n_at(m, k, l))
                            .sum();
                        let rhs: i64 = (0..s)
                            .map(|m| self.n_at(j, k, m) * self.n_at(i, m, l))
                            .sum();
                        if lhs != rhs {
                            return Err(RingError::Associativity { i, j, k });
                        }
                    }
                }
            }
        }
        for i in 0..s {
            for j in 0..s {
                let lhs = self.qdims[i] * self.qdims[j];
                let rhs: f64 = (0..s)
                    .map(|k| self.n_at(i, j, k) as f64 * self.qdims[k])
                    .sum();
                if (lhs - rhs).abs() > 1e-9 * lhs.abs().max(1.0) {
                    return Err(RingError::QdimMultiplicativity { i, j, lhs, rhs });
                }
            }
        }
        Ok(())
    }

    /// Commutativity check with the first failing pair as witness.
    pub fn commutativity(&self) -> (bool, Option<(usize, usize)>) {
        let s = self.size();
        for i in 0..s {
            for j in 0..i {
                if self.product(i, j) != self.product(j, i) {
                    return (false, Some((i, j)));
                }
            }
        }
        (true, None)
    }

    /// Based subring on the fusion closure of `seed` (basis indices).
    /// Returns the subring and the closed index set (sorted).
    pub fn subring(&self, seed: &[usize]) -> (FusionRing, Vec<usize>) {
        let s = self.size();
        let mut keep: std::collections::BTreeSet<usize> = seed.iter().copied().collect();
        keep.insert(self.id);
        loop {
            let snapshot: Vec<usize> = keep.iter().copied().collect();
            let before = keep.len();
            for &i in &snapshot {
                keep.insert(self.conj[i]);
                for &j in &snapshot {
                    for k in 0..s {
                        if self.n_at(i, j, k) != 0 {
                            keep.insert(k);
                        }
                    }
                }
            }
            if keep.len() == before {
                break;
            }
        }
        let keep: Vec<usize> = keep.into_iter().collect();
        let pos: std::collections::HashMap<usize, usize> =
            keep.iter().enumerate().map(|(t, &k)| (k, t)).collect();
        let m = keep.len();
        let mut n = vec![0i64; m * m * m];
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                for k in 0..s {
                    let c = self.n_at(i, j, k);
                    if c != 0 {
                        n[(a * m + b) * m + pos[&k]] = c;
                    }
                }
            }
        }
        let ring = FusionRing {
            labels: keep.iter().map(|&i| self.labels[i].clone()).collect(),
            id: pos[&self.id],
            conj: keep.iter().map(|&i| pos[&self.conj[i]]).collect(),
            n,
            qdims: keep.iter().map(|&i| self.qdims[i]).collect(),
        };
        (ring, keep)
    }
}

/// The fusion ring of A-A sectors on A_l: structure constants are essential
/// path dimensions, `[n] . [k] = sum_m E(n)[k][m] [m]`; every element is
/// self-conjugate and the ring is commutative.
pub fn aa_fusion_ring(l: usize) -> FusionRing {
    assert!(l >= 1, "A-side rank must be positive");
    let g = crate::diagram::build_diagram(&format!("A{l}")).expect("valid A diagram");
    let t = esspath_table(&g);
    let mut n = vec![0i64; l * l * l];
    for a in 0..l {
        for k in 0..l {
            for m in 0..l {
                n[(a * l + k) * l + m] = t.matrices[a][(k, m)];
            }
        }
    }
    FusionRing {
        labels: (0..l).map(|i| format!("[{i}]")).collect(),
        id: 0,
        conj: (0..l).collect(),
        n,
        qdims: chain_qdims(l + 1),
    }
}

/// Quantum dimensions u_0 .. u_{h-2} of the A-chain with Coxeter number h.
pub fn chain_qdims(h: usize) -> Vec<f64> {
    let s0 = (std::f64::consts::PI / h as f64).sin();
    (0..h - 1)
        .map(|m| ((m as f64 + 1.0) * std::f64::consts::PI / h as f64).sin() / s0)
        .collect()
}

/// Product of the A-A sector [n] with the A-K sector at x, over A-K sectors:
/// the K-vertex y appears with multiplicity `E(n)[x][y]`.
pub fn aa_times_ak(g: &DynkinGraph, n: usize, x: &str) -> Result<Decomposition, SectorError> {
    let xi = vertex(g, x)?;
    let t = esspath_table(&g_check_len(g, n)?);
    let terms = (0..g.len())
        .filter(|&y| t.matrices[n][(xi, y)] != 0)
        .map(|y| {
            (
                SectorLabel {
                    kind: SectorKind::AK,
                    payload: g.labels[y].clone(),
                },
                t.matrices[n][(xi, y)],
            )
        })
        .collect();
    Ok(Decomposition { terms })
}

/// Product of the A-K sector at y with the K-A sector at x, over A-A sectors:
/// the A-vertex [n] appears with multiplicity `E(n)[x][y]`. Contains [0]
/// exactly when x = y (irreducibility witness).
pub fn ak_times_ka(g: &DynkinGraph, y: &str, x: &str) -> Result<Decomposition, SectorError> {
    let yi = vertex(g, y)?;
    let xi = vertex(g, x)?;
    let t = esspath_table(g);
    let terms = (0..t.len())
        .filter(|&n| t.matrices[n][(xi, yi)] != 0)
        .map(|n| {
            (
                SectorLabel {
                    kind: SectorKind::AA,
                    payload: format!("[{n}]"),
                },
                t.matrices[n][(xi, yi)],
            )
        })
        .collect();
    Ok(Decomposition { terms })
}

fn vertex(g: &DynkinGraph, label: &str) -> Result<usize, SectorError> {
    g.vertex_index(label)
        .ok_or_else(|| SectorError::UnknownVertex {
            diagram: g.name(),
            vertex: label.to_string(),
        })
}

fn g_check_len(g: &DynkinGraph, n: usize) -> Result<DynkinGraph, SectorError> {
    if n > g.coxeter - 2 {
        return Err(SectorError::LengthOutOfRange {
            diagram: g.name(),
            n,
            max: g.coxeter - 2,
        });
    }
    Ok(g.clone())
}

/// A depth-layered bipartite multigraph with a distinguished depth-0 vertex.
/// Even vertices sit at even depths, odd vertices at odd depths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrincipalGraphData {
    /// (label, depth), sorted by depth then label.
    pub evens: Vec<(String, usize)>,
    pub odds: Vec<(String, usize)>,
    /// (even label, odd label, multiplicity), in even-then-odd order.
    pub edges: Vec<(String, String, i64)>,
    pub distinguished: String,
    /// Labels that carried edges but fell outside the distinguished component.
    pub diagnostics: Vec<String>,
}

impl PrincipalGraphData {
    pub fn even_count(&self) -> usize {
        self.evens.len()
    }

    pub fn odd_count(&self) -> usize {
        self.odds.len()
    }

    pub fn depth_of(&self, label: &str) -> Option<usize> {
        self.evens
            .iter()
            .chain(self.odds.iter())
            .find(|(l, _)| l == label)
            .map(|&(_, d)| d)
    }
}

/// The principal graph of GHJ(K, x): vertical edges between even A-A sectors
/// [n] and K-vertices y with multiplicity `E(n)[x][y]`, restricted to the
/// connected component of [0].
pub fn principal_graph(g: &DynkinGraph, x: &str) -> Result<PrincipalGraphData, SectorError> {
    let xi = vertex(g, x)?;
    let t = esspath_table(g);
    let even_lengths: Vec<usize> = (0..t.len()).step_by(2).collect();
    let enames: Vec<String> = even_lengths.iter().map(|n| format!("[{n}]")).collect();
    let onames: Vec<String> = g.labels.clone();
    let adj: Vec<Vec<i64>> = even_lengths
        .iter()
        .map(|&n| (0..g.len()).map(|y| t.matrices[n][(xi, y)]).collect())
        .collect();
    Ok(prune_bipartite(&enames, &onames, &adj, "[0]"))
}

/// Connected component of `start` in a bipartite multigraph given as an
/// evens-by-odds multiplicity matrix, with BFS depths from `start`.
pub(crate) fn prune_bipartite(
    enames: &[String],
    onames: &[String],
    adj: &[Vec<i64>],
    start: &str,
) -> PrincipalGraphData {
    use std::collections::{HashMap, VecDeque};
    let eindex: HashMap<&str, usize> = enames
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let oindex: HashMap<&str, usize> = onames
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut depth: HashMap<String, usize> = HashMap::new();
    depth.insert(start.to_string(), 0);
    let mut queue = VecDeque::from([start.to_string()]);
    while let Some(v) = queue.pop_front() {
        let d = depth[&v];
        if let Some(&i) = eindex.get(v.as_str()) {
            for (j, &m) in adj[i].iter().enumerate() {
                if m != 0 && !depth.contains_key(&onames[j]) {
                    depth.insert(onames[j].clone(), d + 1);
                    queue.push_back(onames[j].clone());
                }
            }
        } else {
            let j = oindex[v.as_str()];
            for (i, row) in adj.iter().enumerate() {
                if row[j] != 0 && !depth.contains_key(&enames[i]) {
                    depth.insert(enames[i].clone(), d + 1);
                    queue.push_back(enames[i].clone());
                }
            }
        }
    }
    let mut evens: Vec<(String, usize)> = enames
        .iter()
        .filter_map(|n| depth.get(n).map(|&d| (n.clone(), d)))
        .collect();
    evens.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
    let mut odds: Vec<(String, usize)> = onames
        .iter()
        .filter_map(|n| depth.get(n).map(|&d| (n.clone(), d)))
        .collect();
    odds.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
    let mut edges = Vec::new();
    for (en, _) in &evens {
        let i = eindex[en.as_str()];
        for (j, &m) in adj[i].iter().enumerate() {
            if m != 0 && depth.contains_key(&onames[j]) {
                edges.push((en.clone(), onames[j].clone(), m));
            }
        }
    }
    let mut diagnostics = Vec::new();
    for (i, n) in enames.iter().enumerate() {
        if !depth.contains_key(n) && adj[i].iter().any(|&m| m != 0) {
            diagnostics.push(n.clone());
        }
    }
    for (j, n) in onames.iter().enumerate() {
        if !depth.contains_key(n) && adj.iter().any(|row| row[j] != 0) {
            diagnostics.push(n.clone());
        }
    }
    PrincipalGraphData {
        evens,
        odds,
        edges,
        distinguished: start.to_string(),
        diagnostics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::build_diagram;

    #[test]
    fn aa_ring_axioms_and_commutativity() {
        for l in 1..=11 {
            let r = aa_fusion_ring(l);
            r.validate().unwrap_or_else(|e| panic!("A{l}: {e}"));
            assert!(r.commutativity().0, "A{l}");
        }
    }

    #[test]
    fn aa_ring_generators() {
        let r = aa_fusion_ring(11);
        // [1].[1] = [0] + [2]
        let mut want = vec![0i64; 11];
        want[0] = 1;
        want[2] = 1;
        assert_eq!(r.product(1, 1), want.as_slice());
        // A4: [3].[3] = [0]
        let r4 = aa_fusion_ring(4);
        assert_eq!(r4.product(3, 3), &[1, 0, 0, 0]);
    }

    #[test]
    fn aa_times_ak_examples() {
        let e6 = build_diagram("E6").unwrap();
        let d = aa_times_ak(&e6, 2, "e0").unwrap();
        assert_eq!(d.terms.len(), 1);
        assert_eq!(d.multiplicity_of("e2"), 1);
        let d4 = aa_times_ak(&e6, 4, "e0").unwrap();
        assert_eq!(d4.multiplicity_of("e2"), 1);
        assert_eq!(d4.multiplicity_of("e4"), 1);
        let d0 = aa_times_ak(&e6, 0, "e3").unwrap();
        assert_eq!(d0.terms.len(), 1);
        assert_eq!(d0.multiplicity_of("e3"), 1);
    }

    #[test]
    fn ak_times_ka_examples() {
        let e6 = build_diagram("E6").unwrap();
        let d = ak_times_ka(&e6, "e1", "e0").unwrap();
        let labels: Vec<&str> = d.terms.iter().map(|(l, _)| l.payload.as_str()).collect();
        assert_eq!(labels, vec!["[1]", "[5]", "[7]"]);
        let a4 = build_diagram("A4").unwrap();
        let dd = ak_times_ka(&a4, "a0", "a0").unwrap();
        assert_eq!(dd.terms.len(), 1);
        assert_eq!(dd.multiplicity_of("[0]"), 1);
    }

    #[test]
    fn frobenius_reciprocity_small_sweep() {
        for spec in ["A5", "D4", "D5", "E6"] {
            let g = build_diagram(spec).unwrap();
            let t = esspath_table(&g);
            for n in 0..t.len() {
                for x in &g.labels {
                    let fwd = aa_times_ak(&g, n, x).unwrap();
                    for y in &g.labels {
                        let bwd = ak_times_ka(&g, y, x).unwrap();
                        assert_eq!(
                            fwd.multiplicity_of(y),
                            bwd.multiplicity_of(&format!("[{n}]")),
                            "{spec} n={n} x={x} y={y}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn principal_graph_d5_is_the_index_two_chain() {
        let g = build_diagram("D5").unwrap();
        let p = principal_graph(&g, "d0").unwrap();
        assert_eq!(p.even_count(), 2);
        assert_eq!(p.odd_count(), 1);
        let evens: Vec<&str> = p.evens.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(evens, vec!["[0]", "[6]"]);
        assert_eq!(p.odds[0].0, "d0");
        assert_eq!(p.edges.len(), 2);
    }

    #[test]
    fn principal_graph_e6() {
        let g = build_diagram("E6").unwrap();
        let p = principal_graph(&g, "e0").unwrap();
        // Vertices come out in breadth-first layer order, so the even sector
        // [6] (which bounces straight back to e0) precedes [2].
        let mut evens: Vec<&str> = p.evens.iter().map(|(l, _)| l.as_str()).collect();
        evens.sort_unstable();
        assert_eq!(evens, vec!["[0]", "[10]", "[2]", "[4]", "[6]", "[8]"]);
        let mut odds: Vec<&str> = p.odds.iter().map(|(l, _)| l.as_str()).collect();
        odds.sort_unstable();
        assert_eq!(odds, vec!["e0", "e2", "e4"]);
        assert!(p.diagnostics.is_empty());
        assert_eq!(p.depth_of("[0]"), Some(0));
        assert_eq!(p.depth_of("e0"), Some(1));
        assert_eq!(p.depth_of("[6]"), Some(2));
        for list in [&p.evens, &p.odds] {
            assert!(list.windows(2).all(|w| w[0].1 <= w[1].1), "layered order");
        }
    }

    #[test]
    fn unknown_vertex_is_an_error() {
        let g = build_diagram("E6").unwrap();
        assert!(matches!(
            principal_graph(&g, "e9"),
            Err(SectorError::UnknownVertex { .. })
        ));
    }

    #[test]
    fn subring_closure() {
        let r = aa_fusion_ring(5);
        let (sub, keep) = r.subring(&[4]);
        assert_eq!(keep, vec![0, 4]);
        sub.validate().unwrap();
        let (all, keep2) = r.subring(&[1]);
        assert_eq!(keep2, vec![0, 1, 2, 3, 4]);
        assert_eq!(all.size(), 5);
    }
}
