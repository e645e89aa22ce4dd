//! End-to-end release gate: runs the full verification suite and requires
//! every check to pass. Run with `--nocapture` to see one line per check.

use ghj_core::checks::run_suite;

#[test]
fn all_release_checks_pass() {
    let outcomes = run_suite();
    let mut failed = 0;
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<24}  {}", o.id, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    assert_eq!(
        failed,
        0,
        "{failed} of {} release checks failed",
        outcomes.len()
    );
}
