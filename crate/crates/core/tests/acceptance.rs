//! The acceptance suite: every shipped criterion, one test per criterion,
//! each printing a single pass/fail line and asserting its verdict and its
//! pinned runtime budget. Run with `cargo test --test acceptance` (add
//! `-- --nocapture` to see the lines for passing criteria too).

use homog::verify::run_criterion;

const SEED: u64 = 7;

fn run(id: usize) {
    let result = run_criterion(id, SEED);
    println!(
        "{} - criterion {}: {} ({} ms, budget {} ms) {}",
        if result.passed { "PASS" } else { "FAIL" },
        result.id,
        result.name,
        result.millis,
        result.budget_millis,
        result.details,
    );
    assert!(result.passed, "criterion {} failed: {}", result.id, result.details);
    assert!(
        result.within_budget(),
        "criterion {} exceeded its runtime budget: {} ms > {} ms",
        result.id,
        result.millis,
        result.budget_millis
    );
}

#[test]
fn criterion_1_amalgamation_verdicts() {
    run(1);
}

#[test]
fn criterion_2_limit_integrity() {
    run(2);
}

#[test]
fn criterion_3_extension_axioms() {
    run(3);
}

#[test]
fn criterion_4_disjoint_copies() {
    run(4);
}

#[test]
fn criterion_5_order_conjugates() {
    run(5);
}

#[test]
fn criterion_6_dense_local_order() {
    run(6);
}

#[test]
fn criterion_7_catalog_evidence() {
    run(7);
}

#[test]
fn criterion_8_betweenness_invariance() {
    run(8);
}

#[test]
fn criterion_9_chain_condition() {
    run(9);
}
