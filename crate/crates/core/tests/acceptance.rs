use std::io::Write;

use feyncat::sweep::{run_item, SweepConfig, ITEMS};

#[test]
fn acceptance() {
    let cfg = SweepConfig::default();
    let mut failed = Vec::new();
    std::io::stdout().write_all(b"\n").unwrap();
    for id in 1..=ITEMS.len() {
        let r = run_item(id, &cfg);
        // Written to the handle directly so the lines survive output capture.
        let line = format!(
            "[{}] {:>2} {:<28} checked {:>8} violations {:>4} time {:>7.2}s / {:>4.0}s {}",
            if r.passed() { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.checked,
            r.violations,
            r.seconds,
            r.limit_seconds,
            r.notes.join("; ")
        );
        std::io::stdout().write_all(format!("{line}\n").as_bytes()).unwrap();
        if !r.passed() {
            failed.push(r.name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
