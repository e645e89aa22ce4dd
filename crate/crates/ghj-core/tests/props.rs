//! Randomized properties of the exact-arithmetic kernel and the
//! essential-path tables.

use ghj_core::build_diagram;
use ghj_core::esspath::{chebyshev_next, esspath_oracle, esspath_table};
use ghj_core::linalg::{rank_exact, solve_exact, ExactSolver, IntMat, Rat, SolveError};
use proptest::prelude::*;

const SPECS: [&str; 16] = [
    "A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "D4", "D5", "D6", "D7", "D8", "E6", "E7", "E8",
];

fn square_matrix(n: usize) -> impl Strategy<Value = IntMat> {
    prop::collection::vec(prop::collection::vec(-4i64..=4, n), n)
        .prop_map(|rows| IntMat::from_rows(&rows))
}

fn matrix_triple() -> impl Strategy<Value = (IntMat, IntMat, IntMat)> {
    (1usize..=5).prop_flat_map(|n| (square_matrix(n), square_matrix(n), square_matrix(n)))
}

/// A basis-and-target instance: k vectors of length m plus planted integer
/// coefficients and an unrelated free target vector.
fn solve_instance() -> impl Strategy<Value = (Vec<Vec<i64>>, Vec<i64>, Vec<i64>)> {
    (1usize..=4)
        .prop_flat_map(|k| (Just(k), k..=6usize))
        .prop_flat_map(|(k, m)| {
            (
                prop::collection::vec(prop::collection::vec(-3i64..=3, m), k),
                prop::collection::vec(-3i64..=3, k),
                prop::collection::vec(-3i64..=3, m),
            )
        })
}

fn combine(basis: &[Vec<i64>], coeffs: &[i64]) -> Vec<i64> {
    let m = basis[0].len();
    (0..m)
        .map(|r| basis.iter().zip(coeffs).map(|(b, &c)| c * b[r]).sum())
        .collect()
}

proptest! {
    #[test]
    fn transpose_reverses_products((a, b, _) in matrix_triple()) {
        prop_assert_eq!(a.mul(&b).transpose(), b.transpose().mul(&a.transpose()));
    }

    #[test]
    fn multiplication_distributes_over_subtraction((a, b, c) in matrix_triple()) {
        prop_assert_eq!(a.mul(&b.sub(&c)), a.mul(&b).sub(&a.mul(&c)));
    }

    #[test]
    fn solve_exact_recovers_planted_coefficients((basis, coeffs, _) in solve_instance()) {
        let target = combine(&basis, &coeffs);
        if rank_exact(&basis) == basis.len() {
            let got = solve_exact(&basis, &target);
            prop_assert!(got.is_ok());
            let want: Vec<Rat> = coeffs.iter().map(|&c| Rat::from_integer(c as i128)).collect();
            prop_assert_eq!(got.unwrap(), want);
        } else {
            prop_assert_eq!(solve_exact(&basis, &target), Err(SolveError::Dependent));
        }
    }

    #[test]
    fn solve_exact_classifies_free_targets((basis, _, target) in solve_instance()) {
        let k = basis.len();
        let r = rank_exact(&basis);
        match solve_exact(&basis, &target) {
            Err(SolveError::Dependent) => prop_assert!(r < k),
            Err(SolveError::Unsolvable) => {
                prop_assert_eq!(r, k);
                let mut aug = basis.clone();
                aug.push(target.clone());
                prop_assert_eq!(rank_exact(&aug), k + 1);
            }
            Ok(coeffs) => {
                prop_assert_eq!(r, k);
                for row in 0..target.len() {
                    let lhs: Rat = basis
                        .iter()
                        .zip(&coeffs)
                        .map(|(b, c)| *c * Rat::from_integer(b[row] as i128))
                        .sum();
                    prop_assert_eq!(lhs, Rat::from_integer(target[row] as i128));
                }
            }
        }
    }

    #[test]
    fn reusable_solver_agrees_with_one_shot((basis, coeffs, _) in solve_instance()) {
        prop_assume!(rank_exact(&basis) == basis.len());
        let target = combine(&basis, &coeffs);
        let one_shot = solve_exact(&basis, &target).unwrap();
        let solver = ExactSolver::new(&basis).unwrap();
        prop_assert_eq!(solver.solve(&target), one_shot);
    }

    #[test]
    fn rank_ignores_duplicates_and_order((basis, _, _) in solve_instance(), dup in 0usize..4, swap in 0usize..4) {
        let r = rank_exact(&basis);
        prop_assert!(r <= basis.len().min(basis[0].len()));

        let mut with_dup = basis.clone();
        with_dup.push(basis[dup % basis.len()].clone());
        prop_assert_eq!(rank_exact(&with_dup), r);

        let mut reordered = basis.clone();
        let j = swap % basis.len();
        reordered.swap(0, j);
        prop_assert_eq!(rank_exact(&reordered), r);
    }

    #[test]
    fn essential_path_tables_end_at_zero(idx in 0usize..SPECS.len()) {
        let g = build_diagram(SPECS[idx]).unwrap();
        let table = esspath_table(&g);
        prop_assert_eq!(table.len(), g.coxeter - 1);
        prop_assert_eq!(&table.matrices[0], &IntMat::identity(g.len()));
        if table.len() > 1 {
            prop_assert_eq!(&table.matrices[1], &g.adjacency);
        }
        // One step past the table the recursion vanishes identically.
        prop_assert!(chebyshev_next(&table.matrices, &g.adjacency).is_zero());
    }

    #[test]
    fn recursion_matches_path_space_oracle(idx in 0usize..SPECS.len(), n in 0usize..=4) {
        let g = build_diagram(SPECS[idx]).unwrap();
        let table = esspath_table(&g);
        prop_assume!(n < table.len());
        let oracle = esspath_oracle(&g, n).unwrap();
        prop_assert_eq!(&table.matrices[n], &oracle);
    }
}

#[test]
fn permutation_matrices_compose_contravariantly() {
    // permutation(p) has its row-i one in column p[i], so left-multiplication
    // composes in reverse: P(p) P(q) = P(q ∘ p).
    let p = [2usize, 0, 3, 1];
    let q = [1usize, 3, 0, 2];
    let composed: Vec<usize> = p.iter().map(|&i| q[i]).collect();
    assert_eq!(
        IntMat::permutation(&p).mul(&IntMat::permutation(&q)),
        IntMat::permutation(&composed)
    );
}
