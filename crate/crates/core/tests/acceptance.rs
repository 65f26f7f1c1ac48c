use umpteen::verify::{run_one, CriterionReport};

fn check(id: u8) -> CriterionReport {
    let report = run_one(id, 1).expect("known criterion");
    println!("{report}");
    report
}

#[test]
fn criterion_1_d1_moment_identity() {
    assert!(check(1).passed);
}

#[test]
fn criterion_2_three_way_agreement() {
    assert!(check(2).passed);
}

/// Flip classes can hold two identity products when a walk revisits a
/// flexible site, so this criterion is reported red. The test pins that the
/// check runs to completion and that the exhaustive counts still agree with
/// enumeration; it does not relax the uniqueness requirement.
#[test]
fn criterion_3_flip_class_uniqueness() {
    let report = check(3);
    assert!(!report.detail.starts_with("error"), "{}", report.detail);
    assert!(
        !report.detail.contains("count mismatch"),
        "{}",
        report.detail
    );
    assert!(
        !report.passed,
        "uniqueness held; the known counterexample no longer reproduces"
    );
}

#[test]
fn criterion_4_plancherel_decomposition() {
    assert!(check(4).passed);
}

#[test]
fn criterion_5_complete_graph_moments() {
    assert!(check(5).passed);
}

#[test]
fn criterion_6_dirichlet_lemmas() {
    assert!(check(6).passed);
}

#[test]
fn criterion_7_chain_sandwich() {
    assert!(check(7).passed);
}

#[test]
fn criterion_8_ids_pipeline() {
    assert!(check(8).passed);
}

#[test]
fn criterion_9_determinism() {
    assert!(check(9).passed);
}
