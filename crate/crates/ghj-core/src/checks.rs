//! Release-gate verification suite.
//!
//! Eleven independent checks covering the whole pipeline: path-counting
//! oracle equivalence, recursion termination, closed-form indices, graph
//! vertex counts, graph-versus-ring comparisons, commutativity of the even
//! parts, tail-flip coset structure, a characteristic fusion pattern,
//! ring axioms, chain self-consistency, and the intermediate-inclusion map.
//! Each check recomputes everything it needs through the public API and
//! reports one [`CheckOutcome`].

use std::collections::HashMap;

use serde::Serialize;

use crate::diagram::{build_diagram, DynkinGraph, Family};
use crate::esspath::{chebyshev_next, esspath_oracle, esspath_table};
use crate::ghj::{ghj_index, ghj_report, intermediate_decomposition, subequivalence_report};
use crate::linalg::IntMat;
use crate::sectors::{aa_fusion_ring, aa_times_ak, ak_times_ka, FusionRing};
use crate::zsystem::{decompose_zsystem, zfusion_table, ConnectionSystem};

/// Result of one verification check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    /// Stable kebab-case identifier.
    pub id: &'static str,
    /// One-line human description of what was verified.
    pub label: &'static str,
    pub passed: bool,
    /// Witnesses and counts on success, the first failure otherwise.
    pub detail: String,
}

/// Diagrams exercised by the system-level checks.
const CHAINS: [&str; 11] = [
    "A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10", "A11",
];
const BRANCHED: [&str; 9] = ["D4", "D5", "D6", "D7", "D8", "D9", "D10", "D11", "D12"];
const EXCEPTIONAL: [&str; 3] = ["E6", "E7", "E8"];

type Entry = (DynkinGraph, ConnectionSystem, FusionRing);

#[derive(Default)]
struct Cache {
    systems: HashMap<String, Entry>,
}

impl Cache {
    fn system(&mut self, spec: &str) -> Result<Entry, String> {
        if !self.systems.contains_key(spec) {
            let g = build_diagram(spec).map_err(|e| e.to_string())?;
            let sys = decompose_zsystem(&g).map_err(|e| format!("{spec}: {e}"))?;
            let ring = zfusion_table(&sys).map_err(|e| format!("{spec}: {e}"))?;
            self.systems.insert(spec.to_string(), (g, sys, ring));
        }
        Ok(self.systems[spec].clone())
    }
}

type Check = fn(&mut Cache) -> Result<String, String>;

fn suite_checks() -> [(&'static str, &'static str, Check); 11] {
    [
        (
            "oracle-equivalence",
            "recursion table matches the path-space oracle on all small diagrams",
            check_oracle_equivalence,
        ),
        (
            "vanishing-nonnegativity",
            "dimension matrices stay nonnegative and vanish one step past the table",
            check_vanishing_nonnegativity,
        ),
        (
            "index-closed-forms",
            "indices match their closed forms",
            check_index_closed_forms,
        ),
        (
            "even-vertex-counts",
            "principal/dual even-vertex counts on branched and exceptional diagrams",
            check_even_vertex_counts,
        ),
        (
            "e6-graph-ring-split",
            "E6 graphs are isomorphic while the even-part rings are not",
            check_e6_graph_ring_split,
        ),
        (
            "even-part-commutativity",
            "commutativity of the even part across the catalogue, with witnesses",
            check_even_part_commutativity,
        ),
        (
            "tail-flip-cosets",
            "even D systems contain the tail flip and split into two equal cosets",
            check_tail_flip_cosets,
        ),
        (
            "e7-fusion-pattern",
            "the E7 system has a product with multiplicity pattern 1,2,3",
            check_e7_fusion_pattern,
        ),
        (
            "ring-axioms",
            "every produced fusion ring satisfies the based-ring axioms",
            check_ring_axioms,
        ),
        (
            "pipeline-consistency",
            "chain systems reproduce the chain ring; sector tables satisfy reciprocity",
            check_pipeline_consistency,
        ),
        (
            "intermediate-map",
            "intermediate-inclusion witnesses exist exactly where expected",
            check_intermediate_map,
        ),
    ]
}

/// Run the full verification suite, in order, and return one outcome per
/// check. Failures never panic; they are reported in the outcome.
pub fn run_suite() -> Vec<CheckOutcome> {
    let mut cache = Cache::default();
    suite_checks()
        .into_iter()
        .map(|(id, label, f)| match f(&mut cache) {
            Ok(detail) => CheckOutcome {
                id,
                label,
                passed: true,
                detail,
            },
            Err(detail) => CheckOutcome {
                id,
                label,
                passed: false,
                detail,
            },
        })
        .collect()
}

fn small_catalogue() -> Vec<String> {
    let mut specs: Vec<String> = (1..=8).map(|m| format!("A{m}")).collect();
    specs.extend((4..=8).map(|r| format!("D{r}")));
    specs.extend(EXCEPTIONAL.iter().map(|s| s.to_string()));
    specs
}

fn check_oracle_equivalence(_: &mut Cache) -> Result<String, String> {
    let mut compared = 0usize;
    for spec in small_catalogue() {
        let g = build_diagram(&spec).map_err(|e| e.to_string())?;
        let table = esspath_table(&g);
        for n in 0..=6usize {
            let oracle = esspath_oracle(&g, n).map_err(|e| format!("{spec} n={n}: {e}"))?;
            if n < table.len() {
                if table.matrices[n] != oracle {
                    return Err(format!("{spec}: table and oracle disagree at length {n}"));
                }
            } else if !oracle.is_zero() {
                return Err(format!(
                    "{spec}: oracle nonzero at length {n} past the table"
                ));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} (diagram, length) pairs agree exactly"))
}

fn check_vanishing_nonnegativity(_: &mut Cache) -> Result<String, String> {
    let mut specs: Vec<String> = (1..=29).map(|m| format!("A{m}")).collect();
    specs.extend((4..=16).map(|r| format!("D{r}")));
    specs.extend(EXCEPTIONAL.iter().map(|s| s.to_string()));
    for spec in &specs {
        let g = build_diagram(spec).map_err(|e| e.to_string())?;
        let table = esspath_table(&g);
        for (n, m) in table.matrices.iter().enumerate() {
            if !m.is_nonnegative() {
                return Err(format!("{spec}: negative entry in dimension matrix {n}"));
            }
        }
        let beyond = chebyshev_next(&table.matrices, &g.adjacency);
        if !beyond.is_zero() {
            return Err(format!(
                "{spec}: dimension matrix {} is not zero",
                table.len()
            ));
        }
    }
    Ok(format!("{} diagrams terminate nonnegatively", specs.len()))
}

fn check_index_closed_forms(_: &mut Cache) -> Result<String, String> {
    let near = |spec: &str, x: &str, want: f64, tol: f64| -> Result<(), String> {
        let g = build_diagram(spec).map_err(|e| e.to_string())?;
        let got = ghj_index(&g, x).map_err(|e| e.to_string())?;
        if (got - want).abs() > tol {
            return Err(format!(
                "{spec}:{x} index {got} differs from {want} beyond {tol}"
            ));
        }
        Ok(())
    };
    near("E6", "e0", 3.0 + 3f64.sqrt(), 1e-9)?;
    near("E7", "e0", 7.759, 5e-3)?;
    near("E8", "e0", 19.48, 5e-2)?;
    for r in 4..=13 {
        near(&format!("D{r}"), "d0", 2.0, 1e-9)?;
    }
    for n in 2..=12u32 {
        let want = 4.0 * (std::f64::consts::PI / f64::from(n + 1)).cos().powi(2);
        near(&format!("A{n}"), "a1", want, 1e-9)?;
    }
    Ok("E6/E7/E8 at e0, D4..D13 at d0, A2..A12 at a1".to_string())
}

fn check_even_vertex_counts(cache: &mut Cache) -> Result<String, String> {
    let cases = [
        ("D6", "d1", 5, 8),
        ("D8", "d1", 7, 10),
        ("D10", "d1", 9, 12),
        ("D12", "d1", 11, 14),
        ("E7", "e0", 9, 9),
        ("E8", "e0", 15, 16),
    ];
    for (spec, x, pe, de) in cases {
        let (g, sys, ring) = cache.system(spec)?;
        let r = ghj_report(&g, &sys, &ring, x).map_err(|e| e.to_string())?;
        if r.principal.even_count() != pe || r.dual.even_count() != de {
            return Err(format!(
                "{spec}:{x} even counts {}/{} differ from {pe}/{de}",
                r.principal.even_count(),
                r.dual.even_count()
            ));
        }
    }
    Ok("six count pairs match".to_string())
}

fn check_e6_graph_ring_split(cache: &mut Cache) -> Result<String, String> {
    let (g, sys, ring) = cache.system("E6")?;
    let r = ghj_report(&g, &sys, &ring, "e0").map_err(|e| e.to_string())?;
    if !r.graphs_isomorphic {
        return Err("E6 principal and dual graphs should be isomorphic".to_string());
    }
    if r.rings_isomorphic {
        return Err("E6 even-part rings should not be isomorphic".to_string());
    }
    Ok("graphs isomorphic, rings distinguished".to_string())
}

fn even_subring(sys: &ConnectionSystem, ring: &FusionRing) -> FusionRing {
    let evens: Vec<usize> = (0..sys.irreducibles.len())
        .filter(|&i| sys.irreducibles[i].parity == 0)
        .collect();
    ring.subring(&evens).0
}

fn check_even_part_commutativity(cache: &mut Cache) -> Result<String, String> {
    let mut commutative: Vec<String> = CHAINS.iter().map(|s| s.to_string()).collect();
    commutative.extend(["D5", "D7", "D9", "D11"].map(String::from));
    commutative.extend(EXCEPTIONAL.map(String::from));
    for spec in &commutative {
        let (_, sys, ring) = cache.system(spec)?;
        let even = even_subring(&sys, &ring);
        if let (false, Some((i, j))) = even.commutativity() {
            return Err(format!(
                "{spec}: even part fails to commute at {} and {}",
                even.labels[i], even.labels[j]
            ));
        }
    }
    let mut witness = String::new();
    for spec in ["D4", "D6", "D8", "D10", "D12"] {
        let (_, sys, ring) = cache.system(spec)?;
        let even = even_subring(&sys, &ring);
        match even.commutativity() {
            (true, _) => return Err(format!("{spec}: even part unexpectedly commutes")),
            (false, Some((i, j))) => {
                witness = format!("e.g. {spec}: {} and {}", even.labels[i], even.labels[j]);
            }
            (false, None) => unreachable!("noncommutative verdict carries a witness"),
        }
    }
    Ok(format!("18 commutative, 5 noncommutative; {witness}"))
}

fn check_tail_flip_cosets(cache: &mut Cache) -> Result<String, String> {
    for spec in ["D4", "D6", "D8", "D10", "D12"] {
        let (g, sys, ring) = cache.system(spec)?;
        let eps = sys
            .epsilon
            .ok_or_else(|| format!("{spec}: tail flip not found"))?;
        let mut perm: Vec<usize> = (0..g.len()).collect();
        perm.swap(g.len() - 2, g.len() - 1);
        if sys.irreducibles[eps].matrix != IntMat::permutation(&perm) {
            return Err(format!("{spec}: element {eps} is not the tail flip"));
        }
        let prod = ring.product(eps, eps);
        if prod[sys.id] != 1 || prod.iter().sum::<i64>() != 1 {
            return Err(format!("{spec}: tail flip does not square to the identity"));
        }
        let nw = sys.irreducibles.len();
        let coset: Vec<Vec<usize>> = [Some(0u8), Some(1u8)]
            .iter()
            .map(|grade| {
                (0..nw)
                    .filter(|&i| sys.irreducibles[i].grade == *grade)
                    .collect()
            })
            .collect();
        if coset[0].len() != coset[1].len() || coset[0].len() + coset[1].len() != nw {
            return Err(format!("{spec}: cosets do not split the basis evenly"));
        }
        let mut image: Vec<usize> = Vec::new();
        for &w in &coset[0] {
            let row = ring.product(eps, w);
            let hits: Vec<usize> = (0..nw).filter(|&k| row[k] != 0).collect();
            if hits.len() != 1 || row[hits[0]] != 1 {
                return Err(format!("{spec}: tail flip action is not a permutation"));
            }
            image.push(hits[0]);
        }
        image.sort_unstable();
        if image != coset[1] {
            return Err(format!("{spec}: tail flip does not exchange the cosets"));
        }
    }
    Ok("D4..D12: tail flip squares to id and swaps two equal cosets".to_string())
}

fn check_e7_fusion_pattern(cache: &mut Cache) -> Result<String, String> {
    let (_, sys, ring) = cache.system("E7")?;
    let nw = ring.size();
    let mut found = 0usize;
    let mut sample = String::new();
    for i in 0..nw {
        for j in 0..nw {
            if i == j || i == sys.id || j == sys.id {
                continue;
            }
            let prod = ring.product(i, j);
            let mut mults: Vec<i64> = prod.iter().copied().filter(|&c| c != 0).collect();
            mults.sort_unstable();
            if mults == [1, 2, 3] {
                found += 1;
                if sample.is_empty() {
                    let terms: Vec<String> = (0..nw)
                        .filter(|&k| prod[k] != 0)
                        .map(|k| format!("{} {}", prod[k], ring.labels[k]))
                        .collect();
                    sample = format!(
                        "{} . {} = {}",
                        ring.labels[i],
                        ring.labels[j],
                        terms.join(" + ")
                    );
                }
            }
        }
    }
    if found == 0 {
        return Err("no product with multiplicity pattern 1,2,3 in the E7 system".to_string());
    }
    Ok(format!("{found} products; {sample}"))
}

fn check_ring_axioms(cache: &mut Cache) -> Result<String, String> {
    let mut validated = 0usize;
    let mut check = |name: String, ring: &FusionRing| -> Result<(), String> {
        ring.validate().map_err(|e| format!("{name}: {e}"))?;
        validated += 1;
        Ok(())
    };
    for spec in CHAINS.iter().chain(&BRANCHED).chain(&EXCEPTIONAL) {
        let (g, sys, ring) = cache.system(spec)?;
        check(format!("{spec} system ring"), &ring)?;
        check(format!("{spec} even part"), &even_subring(&sys, &ring))?;
        if matches!(g.family, Family::E) || g.family == Family::D && g.rank % 2 == 0 {
            let sub = subequivalence_report(&g, &sys, &ring);
            if let Ok(sub) = sub {
                check(format!("{spec} chain-side even ring"), &sub.nn)?;
                check(format!("{spec} system-side even ring"), &sub.mm)?;
            }
        }
    }
    for m in 1..=11 {
        check(format!("chain ring A{m}"), &aa_fusion_ring(m))?;
    }
    let (g, sys, ring) = cache.system("E6")?;
    let report = ghj_report(&g, &sys, &ring, "e0").map_err(|e| e.to_string())?;
    check("E6 principal even ring".to_string(), &report.nn)?;
    check("E6 dual even ring".to_string(), &report.mm)?;
    Ok(format!("{validated} rings satisfy all axioms"))
}

fn check_pipeline_consistency(cache: &mut Cache) -> Result<String, String> {
    for m in 1..=11usize {
        let spec = format!("A{m}");
        let (_, _, ring) = cache.system(&spec)?;
        if !crate::ghj::rings_isomorphic(&ring, &aa_fusion_ring(m)) {
            return Err(format!("{spec}: system ring differs from the chain ring"));
        }
    }
    let mut pairs = 0usize;
    for spec in small_catalogue() {
        let g = build_diagram(&spec).map_err(|e| e.to_string())?;
        for n in 0..g.coxeter - 1 {
            for x in &g.labels {
                let forward = aa_times_ak(&g, n, x).map_err(|e| e.to_string())?;
                for y in &g.labels {
                    let back = ak_times_ka(&g, y, x).map_err(|e| e.to_string())?;
                    let lhs = forward.multiplicity_of(y);
                    let rhs = back.multiplicity_of(&format!("[{n}]"));
                    if lhs != rhs {
                        return Err(format!(
                            "{spec}: sector tables disagree at [{n}], {x}, {y} ({lhs} vs {rhs})"
                        ));
                    }
                    let mirrored = aa_times_ak(&g, n, y).map_err(|e| e.to_string())?;
                    if mirrored.multiplicity_of(x) != lhs {
                        return Err(format!(
                            "{spec}: sector table not symmetric at [{n}], {x}, {y}"
                        ));
                    }
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!(
        "11 chain systems reproduced; {pairs} reciprocity identities hold"
    ))
}

fn check_intermediate_map(cache: &mut Cache) -> Result<String, String> {
    let mut total = 0usize;
    let mut specs: Vec<String> = (5..=12).map(|r| format!("D{r}")).collect();
    specs.extend(EXCEPTIONAL.iter().map(|s| s.to_string()));
    for spec in &specs {
        let (g, sys, _) = cache.system(spec)?;
        let expect: Vec<String> = match (g.family, g.rank) {
            (Family::D, r) if r % 2 == 1 => (1..=r - 3).map(|k| format!("d{k}")).collect(),
            (Family::D, _) => g.labels[1..].to_vec(),
            (Family::E, 6) => ["e1", "e2", "e3", "e5"].map(String::from).to_vec(),
            (Family::E, 7) => ["e1", "e2", "e3", "e6"].map(String::from).to_vec(),
            (Family::E, _) => g.labels[1..].to_vec(),
            _ => unreachable!("catalogue contains only D and E diagrams"),
        };
        let mut found = Vec::new();
        for x in &g.labels {
            if intermediate_decomposition(&g, &sys, x)
                .map_err(|e| e.to_string())?
                .is_some()
            {
                found.push(x.clone());
            }
        }
        let mut want = expect.clone();
        found.sort();
        want.sort();
        if found != want {
            return Err(format!("{spec}: witnesses at {found:?}, expected {want:?}"));
        }
        total += found.len();
    }
    Ok(format!(
        "{total} witnesses across {} diagrams, none elsewhere",
        specs.len()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    // The suite itself is exercised end-to-end by the acceptance test; here
    // we only pin the id list and run the two cheap table-level checks.
    #[test]
    fn suite_has_eleven_stable_ids() {
        let ids = [
            "oracle-equivalence",
            "vanishing-nonnegativity",
            "index-closed-forms",
            "even-vertex-counts",
            "e6-graph-ring-split",
            "even-part-commutativity",
            "tail-flip-cosets",
            "e7-fusion-pattern",
            "ring-axioms",
            "pipeline-consistency",
            "intermediate-map",
        ];
        let table = suite_checks();
        assert_eq!(table.len(), ids.len());
        for ((id, label, _), want) in table.iter().zip(ids) {
            assert_eq!(*id, want);
            assert!(!label.is_empty());
        }
    }

    #[test]
    fn table_level_checks_pass() {
        let mut cache = Cache::default();
        assert!(check_vanishing_nonnegativity(&mut cache).is_ok());
        assert!(check_index_closed_forms(&mut cache).is_ok());
    }
}
