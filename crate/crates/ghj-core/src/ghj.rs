//! Subfactor invariants of a marked ADE diagram: the index, the principal and
//! dual principal graphs, the even-part fusion rings on both sides, witnesses
//! for intermediate inclusions, and isomorphism tests used to compare the two
//! sides.
//!
//! Throughout, `g` is the diagram, `sys` is its decomposed connection system
//! (see [`crate::zsystem`]), `zring` is the fusion ring of that system, and
//! `x` is the marked vertex.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{perron_data, DynkinGraph, Family};
use crate::sectors::{
    aa_fusion_ring, chain_qdims, principal_graph, prune_bipartite, FusionRing, PrincipalGraphData,
    SectorError,
};
use crate::zsystem::{ConnectionSystem, ZsystemError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GhjError {
    #[error(transparent)]
    Sector(#[from] SectorError),
    #[error(transparent)]
    Zsystem(#[from] ZsystemError),
    /// The fusion closure of a vertex set left the part of the ring it was
    /// required to stay in (even chain sectors, or even system elements).
    #[error("fusion closure escapes the designated even part: {detail}")]
    ClosureEscapesBasis { detail: String },
    /// The requested comparison is only defined for some diagram families.
    #[error("comparison unavailable for {diagram}: {detail}")]
    PremiseUnavailable { diagram: String, detail: String },
}

fn vertex(g: &DynkinGraph, label: &str) -> Result<usize, GhjError> {
    g.vertex_index(label).ok_or_else(|| {
        GhjError::Sector(SectorError::UnknownVertex {
            diagram: g.name(),
            vertex: label.to_string(),
        })
    })
}

/// The index of the subfactor attached to (`g`, `x`): the mass of the chain
/// with the same Coxeter number, divided by the mass of `g`, times the squared
/// Perron weight of the marked vertex.
pub fn ghj_index(g: &DynkinGraph, x: &str) -> Result<f64, GhjError> {
    let xi = vertex(g, x)?;
    let pf = perron_data(g);
    let chain_mass: f64 = chain_qdims(g.coxeter).iter().map(|u| u * u).sum();
    Ok(chain_mass / pf.total_mass * pf.mu[xi] * pf.mu[xi])
}

/// The dual principal graph at `x`: even vertices are the parity-0 system
/// elements, odd vertices are the diagram vertices, and `w` is joined to `y`
/// with the multiplicity of `y` in `w` acting on the sector at `x` (row `x`
/// of the element's matrix). The part not connected to the identity element
/// is pruned and reported in the diagnostics.
pub fn dual_principal_graph(
    g: &DynkinGraph,
    sys: &ConnectionSystem,
    x: &str,
) -> Result<PrincipalGraphData, GhjError> {
    let xi = vertex(g, x)?;
    let evens: Vec<usize> = (0..sys.irreducibles.len())
        .filter(|&i| sys.irreducibles[i].parity == 0)
        .collect();
    let enames: Vec<String> = evens.iter().map(|i| format!("w{i}")).collect();
    let adj: Vec<Vec<i64>> = evens
        .iter()
        .map(|&w| {
            (0..g.len())
                .map(|y| sys.irreducibles[w].matrix[(xi, y)])
                .collect()
        })
        .collect();
    Ok(prune_bipartite(
        &enames,
        &g.labels,
        &adj,
        &format!("w{}", sys.id),
    ))
}

/// A system element exhibiting an intermediate inclusion at `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermediateWitness {
    /// The marked vertex the witness was found for.
    pub base: String,
    /// Label of the witnessing system element.
    pub witness: String,
    pub witness_qdim: f64,
}

/// Search for a non-trivial system element that maps the distinguished vertex
/// exactly onto `x`: quantum dimension above 1, and row 0 of its matrix equal
/// to the indicator of `x`. Such an element factors the inclusion at `x`
/// through the inclusion at the distinguished vertex.
pub fn intermediate_decomposition(
    g: &DynkinGraph,
    sys: &ConnectionSystem,
    x: &str,
) -> Result<Option<IntermediateWitness>, GhjError> {
    let xi = vertex(g, x)?;
    for (i, e) in sys.irreducibles.iter().enumerate() {
        if e.qdim <= 1.0 + 1e-9 {
            continue;
        }
        let row = e.matrix.row(0);
        if row[xi] == 1 && row.iter().sum::<i64>() == 1 {
            return Ok(Some(IntermediateWitness {
                base: x.to_string(),
                witness: format!("w{i}"),
                witness_qdim: e.qdim,
            }));
        }
    }
    Ok(None)
}

/// Even-part fusion rings on the two sides of the subfactor at `x`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvenRings {
    /// Ring of even chain sectors appearing in the principal graph.
    pub nn: FusionRing,
    /// Ring of even system elements appearing in the dual principal graph.
    pub mm: FusionRing,
}

fn chain_even_seed(p: &PrincipalGraphData) -> Vec<usize> {
    p.evens
        .iter()
        .map(|(l, _)| {
            l.trim_start_matches('[')
                .trim_end_matches(']')
                .parse::<usize>()
                .expect("chain sector labels have the form [n]")
        })
        .collect()
}

fn system_even_seed(d: &PrincipalGraphData) -> Vec<usize> {
    d.evens
        .iter()
        .map(|(l, _)| {
            l.trim_start_matches('w')
                .parse::<usize>()
                .expect("system element labels have the form w<i>")
        })
        .collect()
}

fn nn_ring(g: &DynkinGraph, seed: &[usize]) -> Result<FusionRing, GhjError> {
    let aa = aa_fusion_ring(g.coxeter - 1);
    let (ring, kept) = aa.subring(seed);
    let mut want: Vec<usize> = seed.to_vec();
    want.sort_unstable();
    want.dedup();
    if kept != want {
        return Err(GhjError::ClosureEscapesBasis {
            detail: format!(
                "chain sectors {kept:?} closed beyond the principal even part {want:?} of {}",
                g.name()
            ),
        });
    }
    Ok(ring)
}

fn mm_ring(
    sys: &ConnectionSystem,
    zring: &FusionRing,
    seed: &[usize],
) -> Result<FusionRing, GhjError> {
    let (ring, kept) = zring.subring(seed);
    if let Some(&bad) = kept.iter().find(|&&k| sys.irreducibles[k].parity != 0) {
        return Err(GhjError::ClosureEscapesBasis {
            detail: format!(
                "closure of the dual even part of {} reached the odd element w{bad}",
                sys.diagram
            ),
        });
    }
    Ok(ring)
}

/// The even-part fusion rings at `x`: `nn` is the subring of the chain ring
/// generated by the principal graph's even vertices (which must already be
/// fusion-closed), `mm` is the subring of `zring` generated by the dual
/// graph's even vertices (whose closure must stay of even parity).
pub fn even_fusion_rings(
    g: &DynkinGraph,
    sys: &ConnectionSystem,
    zring: &FusionRing,
    x: &str,
) -> Result<EvenRings, GhjError> {
    let principal = principal_graph(g, x)?;
    let dual = dual_principal_graph(g, sys, x)?;
    Ok(EvenRings {
        nn: nn_ring(g, &chain_even_seed(&principal))?,
        mm: mm_ring(sys, zring, &system_even_seed(&dual))?,
    })
}

fn edge_matrix(p: &PrincipalGraphData) -> (Vec<Vec<i64>>, Vec<usize>, Vec<usize>) {
    let epos: HashMap<&str, usize> = p
        .evens
        .iter()
        .enumerate()
        .map(|(i, (l, _))| (l.as_str(), i))
        .collect();
    let opos: HashMap<&str, usize> = p
        .odds
        .iter()
        .enumerate()
        .map(|(j, (l, _))| (l.as_str(), j))
        .collect();
    let mut m = vec![vec![0i64; p.odds.len()]; p.evens.len()];
    for (a, b, c) in &p.edges {
        m[epos[a.as_str()]][opos[b.as_str()]] = *c;
    }
    let ed = p.evens.iter().map(|&(_, d)| d).collect();
    let od = p.odds.iter().map(|&(_, d)| d).collect();
    (m, ed, od)
}

fn columns_match(m1: &[Vec<i64>], m2: &[Vec<i64>], assign: &[usize]) -> bool {
    let no = m1.first().map_or(0, Vec::len);
    let mut c1: Vec<Vec<i64>> = (0..no)
        .map(|c| m1.iter().map(|row| row[c]).collect())
        .collect();
    let mut c2: Vec<Vec<i64>> = (0..no)
        .map(|c| assign.iter().map(|&i| m2[i][c]).collect())
        .collect();
    c1.sort_unstable();
    c2.sort_unstable();
    c1 == c2
}

fn extend_graph_map(
    pos: usize,
    order: &[usize],
    cands: &[Vec<usize>],
    m1: &[Vec<i64>],
    m2: &[Vec<i64>],
    assign: &mut [usize],
    used: &mut [bool],
) -> bool {
    if pos == order.len() {
        return columns_match(m1, m2, assign);
    }
    let i = order[pos];
    for &j in &cands[i] {
        if used[j] {
            continue;
        }
        assign[i] = j;
        used[j] = true;
        if extend_graph_map(pos + 1, order, cands, m1, m2, assign, used) {
            return true;
        }
        used[j] = false;
    }
    false
}

/// Bipartite graph isomorphism that respects depths: even vertices may only
/// map to even vertices of the same depth and edge-multiplicity profile, and
/// a candidate even assignment is accepted when the odd columns match as
/// multisets. Labels and distinguished vertices play no role beyond fixing
/// the depth grading.
pub fn graphs_isomorphic(a: &PrincipalGraphData, b: &PrincipalGraphData) -> bool {
    if a.even_count() != b.even_count() || a.odd_count() != b.odd_count() {
        return false;
    }
    let (m1, ed1, mut od1) = edge_matrix(a);
    let (m2, ed2, mut od2) = edge_matrix(b);
    od1.sort_unstable();
    od2.sort_unstable();
    if od1 != od2 {
        return false;
    }
    let ne = m1.len();
    let row_key = |m: &[Vec<i64>], i: usize| {
        let mut r = m[i].clone();
        r.sort_unstable();
        r
    };
    let cands: Vec<Vec<usize>> = (0..ne)
        .map(|i| {
            (0..ne)
                .filter(|&j| ed1[i] == ed2[j] && row_key(&m1, i) == row_key(&m2, j))
                .collect()
        })
        .collect();
    if cands.iter().any(Vec::is_empty) {
        return false;
    }
    let mut order: Vec<usize> = (0..ne).collect();
    order.sort_by_key(|&i| cands[i].len());
    let mut assign = vec![usize::MAX; ne];
    let mut used = vec![false; ne];
    extend_graph_map(0, &order, &cands, &m1, &m2, &mut assign, &mut used)
}

fn full_ring_match(r1: &FusionRing, r2: &FusionRing, f: &[usize]) -> bool {
    let n = r1.size();
    for a in 0..n {
        for b in 0..n {
            for k in 0..n {
                if r2.n_at(f[a], f[b], f[k]) != r1.n_at(a, b, k) {
                    return false;
                }
            }
        }
    }
    true
}

fn partial_ring_match(upto: usize, f: &[Option<usize>], r1: &FusionRing, r2: &FusionRing) -> bool {
    for a in 0..=upto {
        let fa = f[a].expect("assigned prefix");
        for b in 0..=upto {
            let fb = f[b].expect("assigned prefix");
            for (k, fk) in f.iter().enumerate() {
                if let Some(fk) = *fk {
                    if r2.n_at(fa, fb, fk) != r1.n_at(a, b, k) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

fn extend_ring_map(
    i: usize,
    cands: &[Vec<usize>],
    r1: &FusionRing,
    r2: &FusionRing,
    f: &mut [Option<usize>],
    used: &mut [bool],
) -> bool {
    let n = r1.size();
    if i == n {
        let complete: Vec<usize> = f.iter().map(|x| x.expect("complete map")).collect();
        return full_ring_match(r1, r2, &complete);
    }
    for &j in &cands[i] {
        if used[j] {
            continue;
        }
        let ci = r1.conj[i];
        let cj = r2.conj[j];
        if (ci == i) != (cj == j) {
            continue;
        }
        if let Some(fci) = f[ci] {
            if fci != cj {
                continue;
            }
        }
        f[i] = Some(j);
        used[j] = true;
        if partial_ring_match(i, f, r1, r2) && extend_ring_map(i + 1, cands, r1, r2, f, used) {
            return true;
        }
        f[i] = None;
        used[j] = false;
    }
    false
}

/// Based-ring isomorphism: a bijection of bases matching quantum dimensions
/// (within 1e-6), identities, conjugations, and every structure constant.
pub fn rings_isomorphic(r1: &FusionRing, r2: &FusionRing) -> bool {
    let n = r1.size();
    if n != r2.size() {
        return false;
    }
    let mut q1 = r1.qdims.clone();
    let mut q2 = r2.qdims.clone();
    q1.sort_by(f64::total_cmp);
    q2.sort_by(f64::total_cmp);
    if q1.iter().zip(&q2).any(|(a, b)| (a - b).abs() > 1e-6) {
        return false;
    }
    let cands: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    (r1.qdims[i] - r2.qdims[j]).abs() < 1e-6 && (i == r1.id) == (j == r2.id)
                })
                .collect()
        })
        .collect();
    if cands.iter().any(Vec::is_empty) {
        return false;
    }
    let mut f: Vec<Option<usize>> = vec![None; n];
    let mut used = vec![false; n];
    extend_ring_map(0, &cands, r1, r2, &mut f, &mut used)
}

/// Everything the engine knows about the subfactor at (`g`, `x`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GHJReport {
    pub diagram: String,
    pub vertex: String,
    pub index: f64,
    pub principal: PrincipalGraphData,
    pub dual: PrincipalGraphData,
    pub graphs_isomorphic: bool,
    pub rings_isomorphic: bool,
    pub nn: FusionRing,
    pub mm: FusionRing,
    pub nn_commutative: bool,
    pub mm_commutative: bool,
    pub intermediate: Option<IntermediateWitness>,
}

/// Assemble the full report at `x`: index, both graphs, both even-part rings
/// with commutativity, graph- and ring-level comparisons, and the
/// intermediate-inclusion witness if one exists.
pub fn ghj_report(
    g: &DynkinGraph,
    sys: &ConnectionSystem,
    zring: &FusionRing,
    x: &str,
) -> Result<GHJReport, GhjError> {
    let principal = principal_graph(g, x)?;
    let dual = dual_principal_graph(g, sys, x)?;
    let nn = nn_ring(g, &chain_even_seed(&principal))?;
    let mm = mm_ring(sys, zring, &system_even_seed(&dual))?;
    let graphs_iso = graphs_isomorphic(&principal, &dual);
    let rings_iso = rings_isomorphic(&nn, &mm);
    let nn_commutative = nn.commutativity().0;
    let mm_commutative = mm.commutativity().0;
    let intermediate = intermediate_decomposition(g, sys, x)?;
    Ok(GHJReport {
        diagram: g.name(),
        vertex: x.to_string(),
        index: ghj_index(g, x)?,
        principal,
        dual,
        graphs_isomorphic: graphs_iso,
        rings_isomorphic: rings_iso,
        nn,
        mm,
        nn_commutative,
        mm_commutative,
        intermediate,
    })
}

/// Evidence that the even parts on the two sides are genuinely different:
/// the chain-side ring, the system-side ring, their commutativity, and
/// whether they are isomorphic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubequivalenceReport {
    pub diagram: String,
    /// Vertices whose even parts were aggregated (a single vertex except on
    /// the smallest even D diagram, where all three extremal legs are used).
    pub marked_vertices: Vec<String>,
    pub nn: FusionRing,
    pub mm: FusionRing,
    pub nn_commutative: bool,
    pub mm_commutative: bool,
    /// Whether `nn` is isomorphic to the even part of the chain ring.
    pub nn_matches_chain_even_part: bool,
    pub rings_isomorphic: bool,
}

/// Compare the chain-side and system-side even parts for the diagrams where
/// they differ: even D diagrams, E6, and E8. On other diagrams the two sides
/// agree and the comparison carries no information, so it is refused.
pub fn subequivalence_report(
    g: &DynkinGraph,
    sys: &ConnectionSystem,
    zring: &FusionRing,
) -> Result<SubequivalenceReport, GhjError> {
    let eligible = match (g.family, g.rank) {
        (Family::D, r) => r % 2 == 0,
        (Family::E, 6) | (Family::E, 8) => true,
        _ => false,
    };
    if !eligible {
        return Err(GhjError::PremiseUnavailable {
            diagram: g.name(),
            detail: "the even parts differ only on even D diagrams, E6, and E8".to_string(),
        });
    }
    let marked_vertices: Vec<String> = if g.family == Family::D && g.rank == 4 {
        vec!["d0".to_string(), "d2".to_string(), "d2'".to_string()]
    } else if g.family == Family::D {
        vec!["d1".to_string()]
    } else {
        vec!["e0".to_string()]
    };
    let mut nn_seed = Vec::new();
    let mut mm_seed = Vec::new();
    for x in &marked_vertices {
        nn_seed.extend(chain_even_seed(&principal_graph(g, x)?));
        mm_seed.extend(system_even_seed(&dual_principal_graph(g, sys, x)?));
    }
    let nn = nn_ring(g, &nn_seed)?;
    let mm = mm_ring(sys, zring, &mm_seed)?;
    let l = g.coxeter - 1;
    let chain_even: Vec<usize> = (0..l).step_by(2).collect();
    let (aeven, _) = aa_fusion_ring(l).subring(&chain_even);
    Ok(SubequivalenceReport {
        diagram: g.name(),
        marked_vertices,
        nn_commutative: nn.commutativity().0,
        mm_commutative: mm.commutativity().0,
        nn_matches_chain_even_part: rings_isomorphic(&nn, &aeven),
        rings_isomorphic: rings_isomorphic(&nn, &mm),
        nn,
        mm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::build_diagram;
    use crate::zsystem::{decompose_zsystem, zfusion_table};

    fn setup(spec: &str) -> (DynkinGraph, ConnectionSystem, FusionRing) {
        let g = build_diagram(spec).unwrap();
        let sys = decompose_zsystem(&g).unwrap();
        let ring = zfusion_table(&sys).unwrap();
        (g, sys, ring)
    }

    /// (spec, x, pg evens, pg odds, dpg evens, dpg odds, graphs iso, rings
    /// iso, nn comm, mm comm, index, pg dropped, dpg dropped)
    type Case = (
        &'static str,
        &'static str,
        usize,
        usize,
        usize,
        usize,
        bool,
        bool,
        bool,
        bool,
        f64,
        usize,
        usize,
    );

    fn check_cases(cases: &[Case]) {
        for &(spec, x, pe, po, de, dodd, gi, ri, nc, mc, index, pdrop, ddrop) in cases {
            let (g, sys, ring) = setup(spec);
            let r = ghj_report(&g, &sys, &ring, x).unwrap();
            assert_eq!(r.principal.even_count(), pe, "{spec}:{x} principal evens");
            assert_eq!(r.principal.odd_count(), po, "{spec}:{x} principal odds");
            assert_eq!(r.dual.even_count(), de, "{spec}:{x} dual evens");
            assert_eq!(r.dual.odd_count(), dodd, "{spec}:{x} dual odds");
            assert_eq!(r.graphs_isomorphic, gi, "{spec}:{x} graph comparison");
            assert_eq!(r.rings_isomorphic, ri, "{spec}:{x} ring comparison");
            assert_eq!(r.nn_commutative, nc, "{spec}:{x} nn commutativity");
            assert_eq!(r.mm_commutative, mc, "{spec}:{x} mm commutativity");
            assert!(
                (r.index - index).abs() < 1e-6,
                "{spec}:{x} index {}",
                r.index
            );
            assert_eq!(r.principal.diagnostics.len(), pdrop, "{spec}:{x} pg pruned");
            assert_eq!(r.dual.diagnostics.len(), ddrop, "{spec}:{x} dpg pruned");
            assert_eq!(r.nn.size(), pe, "{spec}:{x} nn basis");
            assert_eq!(r.mm.size(), de, "{spec}:{x} mm basis");
            r.nn.validate().unwrap();
            r.mm.validate().unwrap();
        }
    }

    #[test]
    fn reports_on_even_d_diagrams() {
        check_cases(&[
            (
                "D6", "d1", 5, 2, 8, 2, false, false, true, false, 7.236068, 0, 0,
            ),
            (
                "D8", "d1", 7, 3, 10, 3, false, false, true, false, 7.603875, 0, 0,
            ),
            (
                "D10", "d1", 9, 4, 12, 4, false, false, true, false, 7.758770, 0, 0,
            ),
            (
                "D12", "d1", 11, 5, 14, 5, false, false, true, false, 7.837972, 0, 0,
            ),
        ]);
    }

    #[test]
    fn reports_on_exceptional_diagrams() {
        check_cases(&[
            (
                "E6", "e0", 6, 3, 6, 3, true, false, true, true, 4.732051, 0, 0,
            ),
            (
                "E7", "e0", 9, 4, 9, 4, false, false, true, true, 7.758770, 0, 0,
            ),
            (
                "E8", "e0", 15, 4, 16, 4, false, false, true, true, 19.479363, 0, 0,
            ),
        ]);
    }

    #[test]
    fn reports_on_self_dual_diagrams() {
        check_cases(&[
            (
                "D5", "d1", 4, 3, 4, 3, true, true, true, true, 6.828427, 0, 0,
            ),
            (
                "D7", "d1", 6, 4, 6, 4, true, true, true, true, 7.464102, 0, 0,
            ),
            ("A11", "a0", 1, 1, 1, 1, true, true, true, true, 1.0, 10, 10),
            (
                "A4", "a1", 2, 2, 2, 2, true, true, true, true, 2.618034, 0, 0,
            ),
        ]);
    }

    #[test]
    fn exceptional_indices_match_closed_forms() {
        let e6 = build_diagram("E6").unwrap();
        assert!((ghj_index(&e6, "e0").unwrap() - (3.0 + 3f64.sqrt())).abs() < 1e-9);
        let e7 = build_diagram("E7").unwrap();
        assert!((ghj_index(&e7, "e0").unwrap() - 7.758770483).abs() < 1e-8);
        let e8 = build_diagram("E8").unwrap();
        assert!((ghj_index(&e8, "e0").unwrap() - 19.479362636).abs() < 1e-8);
    }

    #[test]
    fn end_vertex_indices_match_closed_forms() {
        for r in 4..=13 {
            let g = build_diagram(&format!("D{r}")).unwrap();
            assert!((ghj_index(&g, "d0").unwrap() - 2.0).abs() < 1e-9, "D{r}");
        }
        for n in 2..=12 {
            let g = build_diagram(&format!("A{n}")).unwrap();
            let want = 4.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos().powi(2);
            assert!((ghj_index(&g, "a1").unwrap() - want).abs() < 1e-9, "A{n}");
        }
    }

    #[test]
    fn intermediate_witness_sets_match_catalogue() {
        let expect: &[(&str, &[&str])] = &[
            ("D5", &["d1", "d2"]),
            ("D7", &["d1", "d2", "d3", "d4"]),
            ("D9", &["d1", "d2", "d3", "d4", "d5", "d6"]),
            ("D11", &["d1", "d2", "d3", "d4", "d5", "d6", "d7", "d8"]),
            ("D6", &["d1", "d2", "d3", "d4", "d4'"]),
            ("D8", &["d1", "d2", "d3", "d4", "d5", "d6", "d6'"]),
            (
                "D10",
                &["d1", "d2", "d3", "d4", "d5", "d6", "d7", "d8", "d8'"],
            ),
            (
                "D12",
                &[
                    "d1", "d2", "d3", "d4", "d5", "d6", "d7", "d8", "d9", "d10", "d10'",
                ],
            ),
            ("E6", &["e1", "e2", "e3", "e5"]),
            ("E7", &["e1", "e2", "e3", "e6"]),
            ("E8", &["e1", "e2", "e3", "e4", "e5", "e6", "e7"]),
        ];
        for &(spec, bases) in expect {
            let g = build_diagram(spec).unwrap();
            let sys = decompose_zsystem(&g).unwrap();
            let mut found = Vec::new();
            for x in &g.labels {
                if let Some(w) = intermediate_decomposition(&g, &sys, x).unwrap() {
                    assert_eq!(w.base, *x);
                    assert!(w.witness_qdim > 1.0 + 1e-9);
                    found.push(x.clone());
                }
            }
            let mut want: Vec<String> = bases.iter().map(|s| s.to_string()).collect();
            found.sort();
            want.sort();
            assert_eq!(found, want, "{spec} intermediate vertices");
        }
    }

    #[test]
    fn subequivalence_catalogue() {
        // (spec, nn size, mm size, nn comm, mm comm, nn is chain-even part)
        let cases = [
            ("D6", 5, 8, true, false, true),
            ("D8", 7, 10, true, false, true),
            ("E6", 6, 6, true, true, true),
            ("E8", 15, 16, true, true, true),
        ];
        for (spec, nns, mms, nc, mc, aeven) in cases {
            let (g, sys, ring) = setup(spec);
            let r = subequivalence_report(&g, &sys, &ring).unwrap();
            assert_eq!(r.nn.size(), nns, "{spec} nn size");
            assert_eq!(r.mm.size(), mms, "{spec} mm size");
            assert_eq!(r.nn_commutative, nc, "{spec} nn commutativity");
            assert_eq!(r.mm_commutative, mc, "{spec} mm commutativity");
            assert_eq!(
                r.nn_matches_chain_even_part, aeven,
                "{spec} chain even part"
            );
            assert!(!r.rings_isomorphic, "{spec} sides must differ");
        }
    }

    #[test]
    fn subequivalence_aggregates_the_three_legs_of_smallest_even_d() {
        let (g, sys, ring) = setup("D4");
        let r = subequivalence_report(&g, &sys, &ring).unwrap();
        assert_eq!(r.marked_vertices, vec!["d0", "d2", "d2'"]);
        assert_eq!(r.nn.size(), 2);
        assert!(r.nn_commutative);
        assert!(!r.nn_matches_chain_even_part);
        assert_eq!(r.mm.size(), 6);
        assert!(!r.mm_commutative);
        assert!(!r.rings_isomorphic);
    }

    #[test]
    fn subequivalence_is_refused_off_catalogue() {
        for spec in ["A5", "D5", "E7"] {
            let (g, sys, ring) = setup(spec);
            assert!(matches!(
                subequivalence_report(&g, &sys, &ring),
                Err(GhjError::PremiseUnavailable { .. })
            ));
        }
    }

    #[test]
    fn chain_pipeline_ring_matches_direct_chain_ring() {
        for m in 1..=6 {
            let (_, _, ring) = setup(&format!("A{m}"));
            assert!(rings_isomorphic(&ring, &aa_fusion_ring(m)), "A{m}");
        }
    }

    fn group_ring(mult: [[usize; 4]; 4]) -> FusionRing {
        let mut n = vec![0i64; 64];
        let mut conj = vec![0usize; 4];
        for i in 0..4 {
            for j in 0..4 {
                n[(i * 4 + j) * 4 + mult[i][j]] = 1;
                if mult[i][j] == 0 {
                    conj[i] = j;
                }
            }
        }
        FusionRing {
            labels: (0..4).map(|i| format!("g{i}")).collect(),
            id: 0,
            conj,
            n,
            qdims: vec![1.0; 4],
        }
    }

    #[test]
    fn ring_isomorphism_is_label_blind_but_structure_aware() {
        let a = aa_fusion_ring(4);
        let mut b = a.clone();
        b.labels = vec!["p".into(), "q".into(), "r".into(), "s".into()];
        assert!(rings_isomorphic(&a, &b));

        // The two groups of order four share every quantum dimension, so only
        // the structure constants can tell them apart.
        let cyclic = group_ring([[0, 1, 2, 3], [1, 2, 3, 0], [2, 3, 0, 1], [3, 0, 1, 2]]);
        let klein = group_ring([[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]]);
        cyclic.validate().unwrap();
        klein.validate().unwrap();

        // Permuting the cyclic basis breaks the identity assignment (basis
        // element 1 becomes the involution), so the search has to find the
        // permutation itself.
        let sigma = [0usize, 2, 1, 3];
        let mut table = [[0usize; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                table[i][j] = sigma[(sigma[i] + sigma[j]) % 4];
            }
        }
        assert!(rings_isomorphic(&cyclic, &group_ring(table)));
        assert!(!rings_isomorphic(&cyclic, &klein));
    }

    #[test]
    fn unknown_vertex_is_reported() {
        let (g, sys, ring) = setup("A3");
        assert!(matches!(
            ghj_report(&g, &sys, &ring, "a9"),
            Err(GhjError::Sector(SectorError::UnknownVertex { .. }))
        ));
    }
}
