//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass/fail line. Generated data goes to a temp directory.

use streamloc_core::acceptance::{
    criterion_crf_exactness, criterion_dp_recursion, criterion_end_to_end,
    criterion_metric_oracles, criterion_monotone_confidence, criterion_pose_refinement,
    criterion_refine_exhaustive, criterion_ssvm_cutting_plane, train_models, CriterionResult,
};

fn report(result: &CriterionResult) {
    println!(
        "{} {:<28} {}",
        if result.passed { "PASS" } else { "FAIL" },
        result.name,
        result.detail
    );
    assert!(result.passed, "{}: {}", result.name, result.detail);
}

#[test]
fn crf_exactness() {
    report(&criterion_crf_exactness());
}

#[test]
fn dp_recursion() {
    report(&criterion_dp_recursion());
}

#[test]
fn ssvm_cutting_plane() {
    report(&criterion_ssvm_cutting_plane());
}

#[test]
fn monotone_confidence() {
    report(&criterion_monotone_confidence());
}

#[test]
fn pose_refinement() {
    let dir = tempfile::tempdir().unwrap();
    report(&criterion_pose_refinement(dir.path()).unwrap());
}

#[test]
fn refine_exhaustive() {
    let dir = tempfile::tempdir().unwrap();
    report(&criterion_refine_exhaustive(dir.path()).unwrap());
}

#[test]
fn metric_oracles() {
    report(&criterion_metric_oracles());
}

#[test]
fn end_to_end_determinism_observation() {
    let dir = tempfile::tempdir().unwrap();
    let models = train_models(dir.path()).unwrap();
    let artifacts = criterion_end_to_end(dir.path(), &models).unwrap();
    report(&artifacts.localization);
    report(&artifacts.determinism);
    report(&artifacts.observation);
}
