//! One test per acceptance criterion. Each prints a single PASS/FAIL line
//! per prime (run with `--nocapture` to see notes).

use std::io::Write;
use std::time::Duration;

use coclass_frame::suites::{self, CriterionResult, Faults};

const SEED: u64 = 20_240_601;

fn report(results: &[CriterionResult], limit: Duration) {
    let mut err = std::io::stderr().lock();
    let total: f64 = results.iter().map(|r| r.seconds).sum();
    for r in results {
        let _ = writeln!(err, "{}", r.line());
        for f in &r.failures {
            let _ = writeln!(err, "    failure: {f}");
        }
        for n in &r.notes {
            let _ = writeln!(err, "    note: {n}");
        }
    }
    for r in results {
        assert!(r.passed, "criterion {} failed: {:?}", r.id, r.failures);
    }
    assert!(total <= limit.as_secs_f64(), "took {total:.1}s, target {limit:?}");
}

fn both<F: Fn(u64) -> coclass_frame::Result<CriterionResult>>(f: F) -> Vec<CriterionResult> {
    [5, 7].into_iter().map(|p| f(p).expect("suite ran")).collect()
}

#[test]
fn criterion_01_theta_images() {
    report(&both(|p| suites::theta_images(p, &Faults::none())), Duration::from_secs(60));
}

#[test]
fn criterion_02_gamma_images() {
    report(&both(|p| suites::gamma_images(p, SEED, 200)), Duration::from_secs(60));
}

#[test]
fn criterion_03_span_consistency() {
    report(&both(|p| suites::span_consistency(p, SEED, 200)), Duration::from_secs(60));
}

#[test]
fn criterion_04_jacobi_exponent_bounds() {
    report(&both(suites::lambda_bounds), Duration::from_secs(120));
}

#[test]
fn criterion_05_class_bounds() {
    report(&both(suites::class_bounds), Duration::from_secs(300));
}

#[test]
fn criterion_06_lazard_correspondence() {
    report(&both(|p| suites::lazard_suite(p, SEED, 10_000, &Faults::none())), Duration::from_secs(180));
}

#[test]
fn criterion_06_bch_fault_is_detected() {
    let r = suites::lazard_suite(5, SEED, 2_000, &Faults { bch_term: Some(3), epsilon: None }).unwrap();
    let _ = writeln!(std::io::stderr(), "criterion  6 injected BCH fault            {}", if r.passed { "MISSED" } else { "CAUGHT" });
    assert!(!r.passed);
}

#[test]
fn criterion_07_maximal_class_groups() {
    report(&both(suites::group_construction), Duration::from_secs(120));
}

#[test]
fn criterion_08_quotient_edges() {
    report(&both(|p| suites::quotient_edges(p, SEED, 200)), Duration::from_secs(120));
}

#[test]
fn criterion_09_isomorphism_moves() {
    report(&both(|p| suites::isomorphisms(p, SEED, 150)), Duration::from_secs(120));
}

#[test]
fn criterion_10_index_shift() {
    report(&both(|p| suites::index_shift(p, SEED, 5)), Duration::from_secs(60));
}

#[test]
fn criterion_11_jacobi_ideal_scan() {
    let (r, scan) = suites::jacobi_ideal_scan(5, 12, 60).unwrap();
    report(std::slice::from_ref(&r), Duration::from_secs(600));
    // evidence only: unresolved outcomes are listed, never asserted
    let _ = writeln!(std::io::stderr(), "    scan: {} unresolved, {} shift failures", scan.unresolved.len(), scan.shift_failures.len());
}

#[test]
fn criterion_01_epsilon_fault_is_detected() {
    let r = suites::theta_images(7, &Faults { bch_term: None, epsilon: Some((3, 4, 7)) }).unwrap();
    let _ = writeln!(std::io::stderr(), "criterion  1 injected epsilon fault        {}", if r.passed { "MISSED" } else { "CAUGHT" });
    assert!(!r.passed);
}
