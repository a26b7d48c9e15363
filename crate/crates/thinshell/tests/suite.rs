use thinshell::harness::{run_property_suite, SuiteOptions, SELECTORS};

#[test]
fn default_suite_is_green() {
    let r = run_property_suite("all", &SuiteOptions::default()).unwrap();
    let failed: Vec<String> = r.failures().iter().map(|c| format!("{}: {} = {:e}", c.group, c.name, c.value)).collect();
    assert!(failed.is_empty(), "{failed:#?}");
    for s in SELECTORS.iter().filter(|s| **s != "inequalities") {
        assert!(!r.group(s).is_empty(), "no checks recorded for {s}");
    }
    assert!(r.reported.values().all(|v| v.is_finite()));
}

#[test]
fn poincare_ratio_at_thickest_shell() {
    let opts = SuiteOptions { eps_list: vec![0.4], ..SuiteOptions::default() };
    let r = run_property_suite("poincare", &opts).unwrap();
    assert!(r.all_passed());
    assert!(r.reported["poincare.max ratio over sweep"] <= 1.0);
}

#[test]
fn fourth_moment_is_bounded() {
    let opts = SuiteOptions { moment_p: 4.0, ..SuiteOptions::default() };
    let r = run_property_suite("moment", &opts).unwrap();
    assert!(r.all_passed(), "{}", r.table());
}
