//! Exact combinatorics of Goodman–de la Harpe–Jones (GHJ) subfactors on ADE
//! Dynkin diagrams.
//!
//! Given an ADE diagram `K` and a marked vertex `x`, this crate computes:
//!
//! * essential-path dimension tables (Chebyshev recursion on the adjacency
//!   matrix, with an independent Temperley–Lieb path-space oracle),
//! * the system of irreducible K-K connections `n(w)` obtained by
//!   nonnegative-integer Gram factorization, together with its fusion ring,
//! * principal and dual principal graphs of the GHJ subfactor at `x`,
//! * the subfactor index, even-part fusion rings, intermediate-subfactor
//!   witnesses, and ring-level subequivalence reports.
//!
//! Everything combinatorial is exact integer arithmetic; Perron–Frobenius
//! data is floating point with tight tolerances (all downstream multiplicities
//! are integers, so floats never feed back into exact results).

pub mod checks;
pub mod diagram;
pub mod esspath;
pub mod ghj;
pub mod linalg;
pub mod sectors;
pub mod zsystem;

pub use diagram::{
    build_diagram, coxeter_number, perron_data, DiagramError, DynkinGraph, Family, PFData,
};
pub use esspath::{esspath_oracle, esspath_table, EssPathError, EssPathTable};
pub use ghj::{
    dual_principal_graph, even_fusion_rings, ghj_index, ghj_report, graphs_isomorphic,
    intermediate_decomposition, rings_isomorphic, subequivalence_report, EvenRings, GHJReport,
    GhjError, IntermediateWitness, SubequivalenceReport,
};
pub use linalg::IntMat;
pub use sectors::{
    aa_fusion_ring, aa_times_ak, ak_times_ka, principal_graph, Decomposition, FusionRing,
    PrincipalGraphData, RingError, SectorError, SectorKind, SectorLabel,
};
pub use zsystem::{
    decompose_zsystem, decompose_zsystem_with, is_commutative, product_gram, zfusion_table,
    CommutativityVerdict, ConnectionSystem, DecomposeOptions, Irreducible, ProductGram,
    ZsystemError,
};
