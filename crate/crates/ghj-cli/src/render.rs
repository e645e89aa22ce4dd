//! Deterministic text, JSON, and DOT renderings. Every function here is a
//! pure formatter: identical inputs give byte-identical output.

use serde::Serialize;

use ghj_core::{
    ConnectionSystem, DynkinGraph, EssPathTable, FusionRing, GHJReport, IntMat, PrincipalGraphData,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Integer matrix as aligned text rows, zeros printed as dots.
fn matrix_lines(m: &IntMat, indent: &str) -> Vec<String> {
    let width = m
        .as_slice()
        .iter()
        .map(|&v| if v == 0 { 1 } else { v.to_string().len() })
        .max()
        .unwrap_or(1);
    (0..m.n)
        .map(|i| {
            let cells: Vec<String> = m
                .row(i)
                .iter()
                .map(|&v| {
                    let s = if v == 0 {
                        ".".to_string()
                    } else {
                        v.to_string()
                    };
                    format!("{s:>width$}")
                })
                .collect();
            format!("{indent}{}", cells.join(" "))
        })
        .collect()
}

pub fn esspath_text(g: &DynkinGraph, table: &EssPathTable) -> String {
    let mut out = format!(
        "essential-path dimensions on {} ({} matrices, vertices {})\n",
        g.name(),
        table.len(),
        g.labels.join(" ")
    );
    for (n, m) in table.matrices.iter().enumerate() {
        out.push_str(&format!("E({n})\n"));
        for line in matrix_lines(m, "  ") {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

#[derive(Serialize)]
struct TableJson<'a> {
    diagram: &'a str,
    n: usize,
    rows: Vec<&'a [i64]>,
}

#[derive(Serialize)]
struct EsspathJson<'a> {
    #[serde(rename = "schemaVersion")]
    schema_version: u32,
    diagram: &'a str,
    vertices: &'a [String],
    tables: Vec<TableJson<'a>>,
}

pub fn esspath_json(g: &DynkinGraph, table: &EssPathTable) -> String {
    let name = g.name();
    let doc = EsspathJson {
        schema_version: SCHEMA_VERSION,
        diagram: &name,
        vertices: &g.labels,
        tables: table
            .matrices
            .iter()
            .enumerate()
            .map(|(n, m)| TableJson {
                diagram: &name,
                n,
                rows: (0..m.n).map(|i| m.row(i)).collect(),
            })
            .collect(),
    };
    to_pretty(&doc)
}

#[derive(Serialize)]
struct GraphJson<'a> {
    #[serde(rename = "schemaVersion")]
    schema_version: u32,
    diagram: &'a str,
    vertex: &'a str,
    dual: bool,
    graph: &'a PrincipalGraphData,
}

pub fn graph_json(diagram: &str, vertex: &str, dual: bool, p: &PrincipalGraphData) -> String {
    to_pretty(&GraphJson {
        schema_version: SCHEMA_VERSION,
        diagram,
        vertex,
        dual,
        graph: p,
    })
}

/// DOT multigraph: even vertices are boxes, odd vertices ellipses, the
/// distinguished vertex is double-bordered, and an edge of multiplicity m
/// appears as m parallel edge lines.
pub fn graph_dot(diagram: &str, vertex: &str, dual: bool, p: &PrincipalGraphData) -> String {
    let kind = if dual { "dual principal" } else { "principal" };
    let mut out = format!("graph \"{diagram} {kind} at {vertex}\" {{\n");
    for (label, depth) in &p.evens {
        let extra = if *label == p.distinguished {
            ", peripheries=2"
        } else {
            ""
        };
        out.push_str(&format!(
            "  \"{label}\" [shape=box, label=\"{label}\\nd{depth}\"{extra}];\n"
        ));
    }
    for (label, depth) in &p.odds {
        out.push_str(&format!(
            "  \"{label}\" [shape=ellipse, label=\"{label}\\nd{depth}\"];\n"
        ));
    }
    for (a, b, mult) in &p.edges {
        for _ in 0..*mult {
            out.push_str(&format!("  \"{a}\" -- \"{b}\";\n"));
        }
    }
    out.push_str("}\n");
    out
}

pub fn zsystem_text(sys: &ConnectionSystem) -> String {
    let nw = sys.irreducibles.len();
    let evens = sys.irreducibles.iter().filter(|e| e.parity == 0).count();
    let mut out = format!(
        "connection system on {}: {nw} irreducibles ({evens} even / {} odd), identity w{}",
        sys.diagram,
        nw - evens,
        sys.id
    );
    if let Some(eps) = sys.epsilon {
        out.push_str(&format!(", tail flip w{eps}"));
    }
    out.push('\n');
    for (i, e) in sys.irreducibles.iter().enumerate() {
        out.push_str(&format!(
            "w{i}: qdim {:.9}, parity {}, conjugate w{}",
            e.qdim, e.parity, e.conjugate
        ));
        if let Some(grade) = e.grade {
            out.push_str(&format!(", coset {grade}"));
        }
        out.push('\n');
        for line in matrix_lines(&e.matrix, "    ") {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

/// One product per line in product form: multiplicities become exponents,
/// so `1*w1 + 2*w5 + 3*w8` renders as `w1 w5^2 w8^3`.
pub fn fusion_text(ring: &FusionRing) -> String {
    let s = ring.size();
    let (commutative, _) = ring.commutativity();
    let verdict = if commutative {
        "commutative"
    } else {
        "noncommutative"
    };
    let mut out = format!("fusion table over {s} elements ({verdict})\n");
    for i in 0..s {
        for j in 0..s {
            let terms: Vec<String> = (0..s)
                .filter(|&k| ring.n_at(i, j, k) != 0)
                .map(|k| match ring.n_at(i, j, k) {
                    1 => ring.labels[k].clone(),
                    m => format!("{}^{m}", ring.labels[k]),
                })
                .collect();
            out.push_str(&format!(
                "{} . {} = {}\n",
                ring.labels[i],
                ring.labels[j],
                terms.join(" ")
            ));
        }
    }
    out
}

/// Boxed plain-text summary of a report.
pub fn report_text(r: &GHJReport) -> String {
    let ring_line = |ring: &FusionRing, comm: bool| {
        format!(
            "{}, {} elements",
            if comm {
                "commutative"
            } else {
                "noncommutative"
            },
            ring.size()
        )
    };
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    let mut rows: Vec<(String, String)> = vec![
        ("index".into(), format!("{:.9}", r.index)),
        (
            "principal graph".into(),
            format!(
                "{} even, {} odd",
                r.principal.even_count(),
                r.principal.odd_count()
            ),
        ),
        (
            "dual principal graph".into(),
            format!("{} even, {} odd", r.dual.even_count(), r.dual.odd_count()),
        ),
        (
            "graphs isomorphic".into(),
            yes_no(r.graphs_isomorphic).into(),
        ),
        (
            "even-part rings isomorphic".into(),
            yes_no(r.rings_isomorphic).into(),
        ),
        (
            "chain-side even part".into(),
            ring_line(&r.nn, r.nn_commutative),
        ),
        (
            "system-side even part".into(),
            ring_line(&r.mm, r.mm_commutative),
        ),
        (
            "intermediate inclusion".into(),
            match &r.intermediate {
                Some(w) => format!("via {} (qdim {:.6})", w.witness, w.witness_qdim),
                None => "none".into(),
            },
        ),
    ];
    if !r.principal.diagnostics.is_empty() {
        rows.push((
            "pruned (principal)".into(),
            r.principal.diagnostics.join(" "),
        ));
    }
    if !r.dual.diagnostics.is_empty() {
        rows.push(("pruned (dual)".into(), r.dual.diagnostics.join(" ")));
    }
    let title = format!("GHJ subfactor: {} at {}", r.diagram, r.vertex);
    let key_width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let body: Vec<String> = rows
        .iter()
        .map(|(k, v)| format!("{k:<key_width$}  {v}"))
        .collect();
    let width = body
        .iter()
        .map(String::len)
        .chain([title.len()])
        .max()
        .unwrap_or(0);
    let bar = format!("+{}+", "-".repeat(width + 2));
    let mut out = format!("{bar}\n| {title:<width$} |\n{bar}\n");
    for line in &body {
        out.push_str(&format!("| {line:<width$} |\n"));
    }
    out.push_str(&bar);
    out.push('\n');
    out
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable document");
    text.push('\n');
    text
}
