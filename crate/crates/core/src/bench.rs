//! Benchmark harness behind the `adctr-bench` binary.
//!
//! A [`BenchSpec`] lists `(problem, n)` pairs and strategies; every pair is
//! solved once per strategy (in parallel) and the rows come back in spec
//! order. CSV is the canonical report; markdown renders the same rows.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{minimize, verify_pred_bounds, RunReport, RunStatus, SolverConfig, Strategy};
use crate::error::{Error, Result};
use crate::problems::{get_problem, CATALOGUE};

pub const CSV_HEADER: &str = "problem,n,strategy,status,iters,nf,ng,f_final,gnorm_final,wall_time_s";

/// Relative slack handed to [`verify_pred_bounds`].
pub const BOUND_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub n: usize,
}

impl ProblemSpec {
    pub fn new(name: impl Into<String>, n: usize) -> Self {
        Self { name: name.into(), n }
    }
}

/// Settings that replace the defaults in [`SolverConfig`] when present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigOverrides {
    pub max_iter: Option<usize>,
    pub grad_tol: Option<f64>,
    pub delta0: Option<f64>,
    pub check_bounds: bool,
    pub scale_initial_hessian: bool,
}

impl ConfigOverrides {
    pub fn apply(&self, strategy: Strategy) -> SolverConfig {
        let mut cfg = SolverConfig { strategy, check_bounds: self.check_bounds, ..SolverConfig::default() };
        cfg.scale_initial_hessian = self.scale_initial_hessian;
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.grad_tol {
            cfg.grad_tol = v;
        }
        if let Some(v) = self.delta0 {
            cfg.delta0 = v;
            cfg.delta_max = cfg.delta_max.max(v);
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub problems: Vec<ProblemSpec>,
    pub strategies: Vec<Strategy>,
    pub overrides: ConfigOverrides,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    /// Kept with the report for reproducibility. The runs themselves use no
    /// randomness.
    pub seed: u64,
}

impl BenchSpec {
    pub fn new(problems: Vec<ProblemSpec>, strategies: Vec<Strategy>) -> Self {
        Self {
            problems,
            strategies,
            overrides: ConfigOverrides::default(),
            format: OutputFormat::Csv,
            out: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.problems.is_empty() {
            return Err(Error::InvalidInput("no problems selected".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidInput("no strategies selected".into()));
        }
        for strategy in &self.strategies {
            self.overrides.apply(*strategy).validate()?;
        }
        for p in &self.problems {
            get_problem(&p.name, p.n)?;
        }
        Ok(())
    }
}

/// The small-dimension set, one row per catalogue entry.
pub fn table2_problems() -> Vec<ProblemSpec> {
    CATALOGUE.iter().map(|e| ProblemSpec::new(e.name, e.small_dim)).collect()
}

/// The scaled set; `max_n` drops the larger dimensions.
pub fn table3_problems(max_n: Option<usize>) -> Vec<ProblemSpec> {
    CATALOGUE
        .iter()
        .flat_map(|e| e.scaled_dims.iter().map(move |&n| ProblemSpec::new(e.name, n)))
        .filter(|p| max_n.map_or(true, |m| p.n <= m))
        .collect()
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub problem: String,
    pub n: usize,
    pub strategy: Strategy,
    pub report: RunReport,
    /// Bound violations, counted only when bound checking is on.
    pub violations: usize,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub runs: Vec<BenchRun>,
    pub text: String,
    /// 0 when every run converged (and no bound failed), 1 otherwise.
    pub exit_code: i32,
}

/// Run every `(problem, strategy)` pair. Order follows the spec.
pub fn run_all(spec: &BenchSpec) -> Result<Vec<BenchRun>> {
    spec.validate()?;
    let jobs: Vec<(&ProblemSpec, Strategy)> =
        spec.problems.iter().flat_map(|p| spec.strategies.iter().map(move |s| (p, *s))).collect();
    jobs.par_iter()
        .map(|(p, strategy)| {
            let problem = get_problem(&p.name, p.n)?;
            let cfg = spec.overrides.apply(*strategy);
            let report = minimize(|x| problem.value(x), |x| problem.gradient(x), &problem.x0, &cfg)?;
            let violations = if cfg.check_bounds { verify_pred_bounds(&report.trace, BOUND_SLACK).len() } else { 0 };
            Ok(BenchRun { problem: problem.name.to_string(), n: p.n, strategy: *strategy, report, violations })
        })
        .collect()
}

/// Run the spec, render it and write it to `spec.out` if set.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchOutcome> {
    let runs = run_all(spec)?;
    let text = match spec.format {
        OutputFormat::Csv => render_csv(&runs),
        OutputFormat::Markdown => render_markdown(&runs),
    };
    if let Some(path) = &spec.out {
        std::fs::write(path, &text).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
    }
    let ok = runs.iter().all(|r| r.report.status == RunStatus::Converged && r.violations == 0);
    Ok(BenchOutcome { runs, text, exit_code: if ok { 0 } else { 1 } })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(runs: &[BenchRun]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in runs {
        let rep = &r.report;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.6e},{:.6e},{:.3}",
            csv_field(&r.problem),
            r.n,
            r.strategy.label(),
            rep.status.label(),
            rep.iters,
            rep.nf,
            rep.ng,
            rep.f_final,
            rep.gnorm_final,
            rep.wall_time
        )
        .unwrap();
    }
    out
}

/// Same rows as [`render_csv`]; failed runs get a `*` after the iteration
/// count.
pub fn render_markdown(runs: &[BenchRun]) -> String {
    let mut out = String::from("| problem | n | strategy | status | Iter | nf/ng | f_k | ‖g‖ | CPU (s) |\n");
    out.push_str("|---|---:|---|---|---:|---:|---:|---:|---:|\n");
    for r in runs {
        let rep = &r.report;
        let star = if rep.status == RunStatus::Converged { "" } else { "*" };
        writeln!(
            out,
            "| {} | {} | {} | {} | {}{} | {}/{} | {:.4e} | {:.4e} | {:.3} |",
            r.problem,
            r.n,
            r.strategy.label(),
            rep.status.label(),
            rep.iters,
            star,
            rep.nf,
            rep.ng,
            rep.f_final,
            rep.gnorm_final,
            rep.wall_time
        )
        .unwrap();
    }
    out
}

/// Drop the wall-time column so two reports can be compared byte for byte.
pub fn strip_wall_time(report: &str) -> String {
    let strip = |line: &str| -> String {
        if line.starts_with('|') {
            let body = line.trim_end().trim_end_matches('|');
            body.rsplit_once('|').map_or(line.to_string(), |(head, _)| format!("{head}|"))
        } else {
            line.rsplit_once(',').map_or(line, |(head, _)| head).to_string()
        }
    };
    report.lines().map(strip).collect::<Vec<_>>().join("\n")
}
