//! Scaled rows above n = 400. Run with `cargo test --release -- --ignored`.

use adctr::bench::{run_all, table3_problems, BenchSpec, ProblemSpec};
use adctr::driver::RunStatus;
use adctr::Strategy;

fn large_rows() -> Vec<ProblemSpec> {
    table3_problems(None).into_iter().filter(|p| p.n >= 1000).collect()
}

#[test]
#[ignore]
fn large_rows_stop_before_the_iteration_cap() {
    let spec = BenchSpec::new(large_rows(), vec![Strategy::Adm]);
    let runs = run_all(&spec).unwrap();
    let capped: Vec<String> = runs
        .iter()
        .filter(|r| r.report.status == RunStatus::MaxIter)
        .map(|r| format!("{} n={}", r.problem, r.n))
        .collect();
    assert!(capped.is_empty(), "hit max_iter: {capped:?}");
}
