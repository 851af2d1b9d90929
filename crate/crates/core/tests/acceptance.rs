//! One test per acceptance criterion. Each prints a single pass/fail line
//! (visible with `--nocapture`, and always on failure). Runtime budgets are
//! asserted in release builds only; debug arithmetic runs far slower than
//! the budgets describe.

use weakrec::verify::run_criterion;

fn check(index: usize) {
    let r = run_criterion(index).expect("criterion index");
    let status = if r.passed { "pass" } else { "FAIL" };
    println!(
        "acceptance {} [{}] {}: {} ({:.2} s) — {}",
        r.index, r.group, r.name, status, r.seconds, r.detail
    );
    assert!(r.passed, "criterion {}: {}", r.index, r.detail);
    if !cfg!(debug_assertions) {
        assert!(
            r.seconds <= r.budget_seconds,
            "criterion {} exceeded its {:.0} s budget: {:.2} s",
            r.index,
            r.budget_seconds,
            r.seconds
        );
    }
}

#[test]
fn criterion_1_family_linearity() {
    check(1);
}

#[test]
fn criterion_2_recursion_identities() {
    check(2);
}

#[test]
fn criterion_3_injectivity_dichotomy() {
    check(3);
}

#[test]
fn criterion_4_eigen_certificate() {
    check(4);
}

#[test]
fn criterion_5_kernel_demonstration() {
    check(5);
}

#[test]
fn criterion_6_shift_fixture() {
    check(6);
}

#[test]
fn criterion_7_monte_carlo() {
    check(7);
}

#[test]
fn criterion_8_round_trips() {
    check(8);
}
