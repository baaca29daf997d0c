//! Finite-difference agreement of every reverse pass, plus a sanity check
//! that the comparison actually notices a wrong gradient.

use scope_core::gradcheck::{run_gradcheck, CheckRow, TOLERANCE};

fn show(rows: &[CheckRow]) {
    for r in rows {
        println!(
            "{:<20} {:>10.3e} checked={} skipped={}",
            r.component, r.max_rel_err, r.checked, r.skipped
        );
    }
}

#[test]
fn all_components_agree_with_central_differences() {
    let rows = run_gradcheck(11, 1.0);
    show(&rows);
    assert!(rows.len() >= 6);
    for r in &rows {
        assert!(
            r.passed(),
            "{} failed: {:.3e} (tol {TOLERANCE:e})",
            r.component,
            r.max_rel_err
        );
    }
}

#[test]
fn scaled_gradients_are_detected() {
    let rows = run_gradcheck(11, 1.01);
    assert!(rows.iter().all(|r| !r.passed()));
}
