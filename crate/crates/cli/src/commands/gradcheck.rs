use std::fmt::Write as _;

use scope_core::gradcheck::{run_gradcheck, CheckRow, STEP, TOLERANCE};

/// `scale` ≠ 1 deliberately corrupts every analytic gradient; it exists so
/// tests can confirm the check fails when it should.
pub fn gradcheck(seed: u64, scale: f64) -> Vec<CheckRow> {
    run_gradcheck(seed, scale)
}

pub fn format_report(rows: &[CheckRow]) -> String {
    let mut s = format!(
        "component,max_rel_err,checked,skipped,status  (step {STEP:e}, tolerance {TOLERANCE:e})\n"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:.3e},{},{},{}",
            r.component,
            r.max_rel_err,
            r.checked,
            r.skipped,
            if r.passed() { "ok" } else { "FAIL" }
        );
    }
    s
}
