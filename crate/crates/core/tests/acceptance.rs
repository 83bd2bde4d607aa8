//! Acceptance suite. Runs as a plain binary (no libtest harness) so that the
//! per-criterion PASS/FAIL lines always reach the console; exits nonzero if
//! any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use adctr::bench::{run_all, run_bench, strip_wall_time, table2_problems, BenchRun, BenchSpec, ProblemSpec};
use adctr::driver::{verify_pred_bounds, RunStatus, Strategy};
use adctr::linalg::{cholesky, dot, norm, SymMatrix};
use adctr::model_update::{damping_theta, update_hessian, update_horizon, StepRecord};
use adctr::oracles::{run_default_oracles, OracleCounts};
use adctr::problems::{fd_check, perturbed_points, TestProblem, CATALOGUE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scaled rows with their reference iteration counts.
const SPOT_ROWS: [(&str, usize, usize); 3] =
    [("Broyden Tridiagonal", 400, 55), ("Rosenbrock", 200, 61), ("Tridiagonal Exponential", 400, 6)];

struct Outcome {
    pass: bool,
    note: String,
}

fn outcome(problems: &[String], note: String) -> Outcome {
    let mut note = note;
    if !problems.is_empty() {
        note = format!("{note}; {}", problems.join("; "));
    }
    Outcome { pass: problems.is_empty(), note }
}

fn with_bounds(problems: Vec<ProblemSpec>, strategies: Vec<Strategy>) -> BenchSpec {
    let mut spec = BenchSpec::new(problems, strategies);
    spec.overrides.check_bounds = true;
    spec
}

fn table2(runs: &[BenchRun]) -> Outcome {
    let mut bad = Vec::new();
    for (entry, run) in CATALOGUE.iter().zip(runs) {
        let limit = (10 * entry.small_iters).min(5000);
        let rep = &run.report;
        if rep.status != RunStatus::Converged || rep.gnorm_final > 1e-5 || rep.iters > limit {
            bad.push(format!(
                "{} {} n={}: {:?} iters {} (limit {limit}) gnorm {:.2e}",
                entry.number, entry.name, run.n, rep.status, rep.iters, rep.gnorm_final
            ));
        }
    }
    let worst = CATALOGUE
        .iter()
        .zip(runs)
        .map(|(e, r)| r.report.iters as f64 / e.small_iters as f64)
        .fold(0.0, f64::max);
    outcome(&bad, format!("{} rows, worst iters/reference {:.2}", runs.len(), worst))
}

fn counters(runs: &[&BenchRun]) -> Outcome {
    let bad: Vec<String> = runs
        .iter()
        .filter(|r| r.report.nf != r.report.iters + 1 || r.report.ng != r.report.accepted + 1)
        .map(|r| {
            let rep = &r.report;
            format!("{} n={} {}: nf {} iters {} ng {} accepted {}", r.problem, r.n, r.strategy.label(), rep.nf, rep.iters, rep.ng, rep.accepted)
        })
        .collect();
    outcome(&bad, format!("{} runs", runs.len()))
}

fn tau_oracle() -> Outcome {
    let counts = OracleCounts { subproblems: 0, bfgs: 0, ..OracleCounts::default() };
    let summary = run_default_oracles(20240601, &counts);
    let bad: Vec<String> = summary.counterexamples.iter().take(3).map(|c| c.detail.clone()).collect();
    let total: usize = summary.checks.iter().map(|c| c.instances).sum();
    let failures: usize = summary.checks.iter().map(|c| c.failures).sum();
    let mut o = outcome(&bad, format!("{total} instances over P1/P2/P3, {} grid points each", counts.grid_points));
    o.pass = failures == 0;
    o
}

fn bounds(runs: &[&BenchRun]) -> Outcome {
    let mut bad = Vec::new();
    let mut trials = 0;
    for r in runs {
        trials += r.report.trace.len();
        let v = verify_pred_bounds(&r.report.trace, 1e-8);
        if let Some(first) = v.first() {
            bad.push(format!("{} n={} {}: {} violations, first {:?}", r.problem, r.n, r.strategy.label(), v.len(), first));
        }
    }
    outcome(&bad, format!("{} runs, {trials} trials", runs.len()))
}

fn feasibility(runs: &[&BenchRun]) -> Outcome {
    let mut bad = Vec::new();
    let mut trials = 0;
    for r in runs {
        for (i, t) in r.report.trace.iter().enumerate() {
            trials += 1;
            if t.step_norm > t.delta * (1.0 + 1e-12) || t.gauge < r.report.eps0 * (1.0 - 1e-12) {
                bad.push(format!(
                    "{} n={} {} trial {i}: ||s|| {:e} delta {:e} gauge {:e}",
                    r.problem,
                    r.n,
                    r.strategy.label(),
                    t.step_norm,
                    t.delta,
                    t.gauge
                ));
            }
        }
    }
    outcome(&bad, format!("{trials} trials"))
}

fn spot_rows(runs: &[BenchRun], elapsed: f64) -> Outcome {
    let mut bad = Vec::new();
    let mut notes = Vec::new();
    for ((name, n, reference), run) in SPOT_ROWS.iter().zip(runs) {
        let rep = &run.report;
        let limit = (10 * reference).min(5000);
        notes.push(format!("{name} n={n}: {} iters", rep.iters));
        if rep.status != RunStatus::Converged || rep.gnorm_final > 1e-5 || rep.iters > limit {
            bad.push(format!("{name} n={n}: {:?} iters {} (limit {limit})", rep.status, rep.iters));
        }
    }
    if elapsed > 60.0 {
        bad.push(format!("took {elapsed:.1}s"));
    }
    outcome(&bad, format!("{} in {elapsed:.1}s", notes.join(", ")))
}

fn gradients() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0;
    let mut dims: Vec<(usize, usize)> = CATALOGUE.iter().map(|e| (e.number, e.small_dim)).collect();
    for (name, n, _) in SPOT_ROWS {
        let e = CATALOGUE.iter().find(|e| e.name == name).unwrap();
        dims.push((e.number, n));
    }
    for (number, n) in dims {
        let e = &CATALOGUE[number - 1];
        let p = TestProblem::new(e.kind, n).unwrap();
        let mut points = vec![p.x0.clone()];
        points.extend(perturbed_points(&p, 10, number as u64));
        for x in &points {
            checked += 1;
            let err = fd_check(&p, x);
            if !(err <= 1e-6) {
                bad.push(format!("{} n={n}: error {err:.2e}", e.name));
            }
        }
    }
    outcome(&bad, format!("{checked} points"))
}

fn update_identities() -> Outcome {
    let mut bad = Vec::new();
    // damped branch: z^T s = 0.2 s^T B s
    let b = SymMatrix::from_lower_rows(&[vec![3.0], vec![1.0, 2.0]]).unwrap();
    let (s, y) = ([0.4, -0.7], [-0.3, 0.2]);
    let bs = b.mul_vec(&s);
    let sbs = dot(&s, &bs);
    let theta = damping_theta(sbs, dot(&y, &s));
    let z: Vec<f64> = y.iter().zip(&bs).map(|(yi, bi)| theta * yi + (1.0 - theta) * bi).collect();
    if ((dot(&z, &s) - 0.2 * sbs) / sbs).abs() > 1e-12 {
        bad.push("damped z^T s".to_string());
    }
    // quadratic objective: horizon is exactly zero
    let r = StepRecord::new(vec![-1.0, 0.5], 1.25, 0.0, vec![2.0, -1.0], vec![0.0, 0.0]);
    if update_horizon(&r).iter().any(|v| *v != 0.0) {
        bad.push("quadratic horizon".to_string());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut secant = 0;
    for _ in 0..500 {
        let n = rng.gen_range(1..=8);
        let m: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = SymMatrix::gram_plus_shift(n, n, &m, 1.0);
        let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if norm(&s) < 1e-3 {
            continue;
        }
        let Ok(out) = update_hessian(&b, &s, &y) else {
            bad.push("update refused".to_string());
            continue;
        };
        if cholesky(&out).is_err() {
            bad.push("update not positive definite".to_string());
        }
        if dot(&y, &s) >= 0.2 * b.quad_form(&s) {
            secant += 1;
            let res: Vec<f64> = out.mul_vec(&s).iter().zip(&y).map(|(a, b)| a - b).collect();
            if norm(&res) > 1e-10 * norm(&y).max(1e-300) {
                bad.push("secant B+ s = y".to_string());
            }
        }
    }
    outcome(&bad, format!("500 random updates, {secant} undamped"))
}

fn determinism() -> Outcome {
    let mut problems: Vec<ProblemSpec> = table2_problems();
    problems.push(ProblemSpec::new("Broyden Tridiagonal", 40));
    let mut spec = BenchSpec::new(problems, vec![Strategy::Adm, Strategy::Dctr]);
    spec.seed = 99;
    let first = run_bench(&spec).unwrap().text;
    let second = run_bench(&spec).unwrap().text;
    let same = strip_wall_time(&first) == strip_wall_time(&second);
    let bad = if same { vec![] } else { vec!["reports differ".to_string()] };
    outcome(&bad, format!("{} rows compared", first.lines().count() - 1))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let adm = run_all(&with_bounds(table2_problems(), vec![Strategy::Adm])).expect("table 2 runs");
    let dctr = run_all(&with_bounds(table2_problems(), vec![Strategy::Dctr])).expect("table 2 runs");
    let spot_start = Instant::now();
    let spot_specs: Vec<ProblemSpec> = SPOT_ROWS.iter().map(|(name, n, _)| ProblemSpec::new(*name, *n)).collect();
    let spot = run_all(&with_bounds(spot_specs, vec![Strategy::Adm])).expect("spot runs");
    let spot_time = spot_start.elapsed().as_secs_f64();

    let every: Vec<&BenchRun> = adm.iter().chain(&dctr).chain(&spot).collect();
    let adm_runs: Vec<&BenchRun> = adm.iter().chain(&spot).collect();

    let results = [
        ("1 convergence on the small set", table2(&adm)),
        ("2 counter arithmetic", counters(&every)),
        ("3 tau-stage grid oracle", tau_oracle()),
        ("4 predicted-reduction bounds", bounds(&adm_runs)),
        ("5 step feasibility", feasibility(&every)),
        ("6 scaled spot rows", spot_rows(&spot, spot_time)),
        ("7 gradient consistency", gradients()),
        ("8 update identities", update_identities()),
        ("9 determinism", determinism()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {name:<34} {tag}  {}", o.note);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed in {:.1}s", results.len() - failed, started.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
