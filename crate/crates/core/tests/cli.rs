use std::path::Path;
use std::process::{Command, Output};

use adctr::bench::{strip_wall_time, CSV_HEADER};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adctr-bench")).args(args).output().expect("spawn adctr-bench")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn csv_header_and_success_exit() {
    let o = bench(&["--problem", "Rosenbrock"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let row = lines.next().unwrap();
    assert!(row.starts_with("Rosenbrock,2,ADCTR,Converged,"), "{row}");
}

#[test]
fn iteration_cap_exits_one() {
    let o = bench(&["--problem", "Rosenbrock", "--max-iter", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains(",MaxIter,"), "{}", stdout(&o));
}

#[test]
fn bad_invocations_exit_two() {
    assert_eq!(bench(&["--problem", "no such problem"]).status.code(), Some(2));
    assert_eq!(bench(&["--problem", "1", "--problem", "2", "--dim", "2"]).status.code(), Some(2));
    assert_eq!(bench(&["--strategy", "newton"]).status.code(), Some(2));
    assert_eq!(bench(&["--problem", "Rosenbrock", "--tol", "-1"]).status.code(), Some(2));
}

#[test]
fn out_file_is_written_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = bench(&["--all", "--strategy", "both", "--seed", "7", "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
        std::fs::read_to_string(&path).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a.lines().count(), 33);
    assert_eq!(strip_wall_time(&a), strip_wall_time(&b));
}

#[test]
fn markdown_format() {
    let o = bench(&["--problem", "3", "--format", "markdown"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().next().unwrap().starts_with('|'));
}

#[test]
fn injected_fault_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cex.json");
    let o = bench(&[
        "oracles",
        "--inject-fault",
        "--tau-per-case",
        "50",
        "--grid-points",
        "2000",
        "--subproblems",
        "0",
        "--bfgs",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(!json["counterexamples"].as_array().unwrap().is_empty());
}

#[test]
fn clean_oracles_pass_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cex.json");
    let o = bench(&[
        "oracles",
        "--tau-per-case",
        "20",
        "--grid-points",
        "2000",
        "--subproblems",
        "20",
        "--bfgs",
        "20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!Path::new(&out).exists());
}

#[test]
fn list_and_fd_check() {
    let o = bench(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 17);
    let o = bench(&["fd-check", "--points", "2", "--max-n", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("FAIL"));
}
