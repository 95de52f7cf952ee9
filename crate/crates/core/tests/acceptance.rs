use poincare_core::acceptance;
use poincare_core::config::ExperimentConfig;

#[test]
fn acceptance_criteria() {
    let cfg = ExperimentConfig::default();
    let (report, timings) = acceptance::run(&cfg, &[]).expect("suite runs");
    print!("{}", report.table());
    for (id, secs) in timings {
        println!("criterion {id:>2}: {secs:.2} s");
    }
    assert_eq!(report.total, 15);
    let failed: Vec<u8> = report.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
