use egd_core::corpus::{all_fixtures, zeeman_fixture};
use egd_core::regression::{check_fixture, RegressionOptions};

#[test]
fn every_fixture_meets_its_signature() {
    let opts = RegressionOptions::default();
    for fx in all_fixtures() {
        let report = check_fixture(fx, &opts).unwrap();
        for c in &report.checks {
            println!("{} {:<40} {} {}", fx.label, c.name, if c.passed { "ok" } else { "FAILED" }, c.detail);
        }
        assert!(report.passed(), "{}: {:?}", fx.label, report.failures().collect::<Vec<_>>());
    }
}

#[test]
fn a_perturbed_matrix_fails_its_form_checks() {
    let mut fx = zeeman_fixture("9_1").unwrap().clone();
    fx.rows[0][1] += 1.0;
    let report = check_fixture(&fx, &RegressionOptions::default()).unwrap();
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    assert!(failed.contains(&"form Z12"), "{failed:?}");
    assert!(failed.contains(&"form Z13"), "{failed:?}");
}
