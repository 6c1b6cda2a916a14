use ham_asclt_core::analytics::{identity_suite, Criterion};

#[test]
fn every_identity_and_bound_holds() {
    let reports = identity_suite().unwrap();
    for r in &reports {
        println!("{:<60} lhs={:<24e} rhs={:<24e} rel={:.2e} pass={}", r.name, r.lhs, r.rhs, r.rel_err, r.pass);
    }
    let failures: Vec<_> = reports.iter().filter(|r| !r.pass).collect();
    for r in &failures {
        eprintln!("{} lhs={:e} rhs={:e} abs={:e} rel={:e}", r.name, r.lhs, r.rhs, r.abs_err, r.rel_err);
    }
    assert!(failures.is_empty(), "{} of {} failed", failures.len(), reports.len());
    assert!(reports
        .iter()
        .filter(|r| r.criterion == Criterion::UpperBound)
        .all(|r| r.slack.is_some_and(|s| s >= 0.0)));
    let worst_parseval = reports
        .iter()
        .filter(|r| r.name.starts_with("parseval"))
        .map(|r| r.rel_err)
        .fold(0.0, f64::max);
    assert!(worst_parseval < 1e-4);
}
