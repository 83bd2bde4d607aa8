//! Randomized oracle suite for the subproblem solvers and model updates.
//!
//! Every check compares a solver against something computed independently:
//! a dense grid over the feasible set for the first stage, the structural
//! constraints for whole steps, the predicted-reduction lower bounds and a
//! Cholesky attempt on updated BFGS matrices. Failing instances are kept as
//! [`Counterexample`]s that serialize to JSON for replay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::{
    solve_conic_adm_with, solve_conic_dogleg, solve_tau_stage, ConicSubproblem, TauCase, TauHit, TauResult,
};
use crate::driver::{pred_lower_bounds, BoundData, TrialRecord, DEFAULT_ADM_SWEEPS, NORM_ESTIMATE_ITERS};
use crate::error::Result;
use crate::linalg::{cholesky, dot, norm, SymMatrix};
use crate::model_update::update_hessian;

/// Gauge threshold used for the random instances.
pub const ORACLE_EPS0: f64 = 1e-5;

pub type TauSolver = fn(&ConicSubproblem) -> Result<TauResult>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCounts {
    /// Random first-stage instances per case P1, P2, P3.
    pub tau_per_case: usize,
    /// Grid points on the feasible set for each first-stage instance.
    pub grid_points: usize,
    /// Random full subproblems for the feasibility and bound checks.
    pub subproblems: usize,
    /// Random BFGS updates.
    pub bfgs: usize,
}

impl Default for OracleCounts {
    fn default() -> Self {
        Self { tau_per_case: 500, grid_points: 100_000, subproblems: 500, bfgs: 500 }
    }
}

impl OracleCounts {
    pub fn zero() -> Self {
        Self { tau_per_case: 0, grid_points: 0, subproblems: 0, bfgs: 0 }
    }
}

/// Replayable description of a failing instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub oracle: String,
    pub seed: u64,
    pub a: Vec<f64>,
    pub g: Vec<f64>,
    /// Row-major `B`.
    pub b: Vec<f64>,
    pub delta: f64,
    pub eps0: f64,
    pub detail: String,
}

impl Counterexample {
    fn new(oracle: &str, seed: u64, p: &ConicSubproblem, detail: String) -> Self {
        Self {
            oracle: oracle.to_string(),
            seed,
            a: p.a.clone(),
            g: p.g.clone(),
            b: p.b.as_row_major().to_vec(),
            delta: p.delta,
            eps0: p.eps0,
            detail,
        }
    }

    /// Rebuild the subproblem the counterexample was found on.
    pub fn subproblem(&self) -> Result<ConicSubproblem> {
        let n = self.a.len();
        let mut b = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                b.set(i, j, self.b[i * n + j]);
            }
        }
        ConicSubproblem::new(self.a.clone(), self.g.clone(), b, self.delta, self.eps0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub checks: Vec<OracleCheck>,
    pub counterexamples: Vec<Counterexample>,
}

impl OracleSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures == 0)
    }

    fn record(&mut self, name: &str, instances: usize, found: Vec<Counterexample>) {
        self.checks.push(OracleCheck { name: name.to_string(), instances, failures: found.len() });
        self.counterexamples.extend(found);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

fn instance_seed(seed: u64, tag: u64, index: usize) -> u64 {
    seed ^ (tag << 56) ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Random `n in 2..=8`, `B = M^T M + I` with `M` uniform in `[-1, 1]`, and
/// `a`, `g` uniform in `[-1, 1]`. The radius puts the instance in `case`.
pub fn random_subproblem(rng: &mut ChaCha8Rng, case: TauCase) -> ConicSubproblem {
    let n = rng.gen_range(2..=8);
    let m: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = SymMatrix::gram_plus_shift(n, n, &m, 1.0);
    let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // keep away from the measure-zero degenerate draws
    if norm(&a) < 1e-3 {
        a[0] = 1.0;
    }
    if norm(&g) < 1e-3 {
        g[0] = 1.0;
    }
    let an = norm(&a);
    let eps0 = ORACLE_EPS0;
    let delta = match case {
        TauCase::P1 => rng.gen_range(0.05..1.0) * (1.0 - eps0) / an,
        TauCase::P2 => (1.0 + rng.gen_range(-0.9..0.9) * eps0) / an,
        TauCase::P3 => (1.0 + eps0) * (1.0 + rng.gen_range(0.01..3.0)) / an,
    };
    ConicSubproblem::new(a, g, b, delta, eps0).expect("valid random instance")
}

/// Smallest value of the first-stage objective over `points + 1` equally
/// spaced points on each piece of the feasible set (endpoints included).
pub fn tau_grid_min(p: &ConicSubproblem, points: usize) -> f64 {
    let aa = dot(&p.a, &p.a);
    let ag = dot(&p.a, &p.g);
    let aba = p.b.quad_form(&p.a);
    let td = p.delta / aa.sqrt();
    let lower_end = (1.0 - p.eps0) / aa;
    let upper_start = (1.0 + p.eps0) / aa;
    let mut pieces = vec![(-td, td.min(lower_end))];
    if upper_start <= td {
        pieces.push((upper_start, td));
    }
    let eval = |t: f64| {
        let den = 1.0 - t * aa;
        t * ag / den + t * t * aba / (2.0 * den * den)
    };
    let points = points.max(1);
    let mut best = f64::INFINITY;
    for (lo, hi) in pieces {
        for k in 0..=points {
            best = best.min(eval(lo + (hi - lo) * k as f64 / points as f64));
        }
    }
    best
}

fn tau_oracle(seed: u64, counts: &OracleCounts, tau_solver: TauSolver) -> Vec<(TauCase, Vec<Counterexample>)> {
    [TauCase::P1, TauCase::P2, TauCase::P3]
        .into_iter()
        .enumerate()
        .map(|(tag, case)| {
            let found: Vec<Counterexample> = (0..counts.tau_per_case)
                .into_par_iter()
                .filter_map(|i| {
                    let s = instance_seed(seed, tag as u64 + 1, i);
                    let p = random_subproblem(&mut ChaCha8Rng::seed_from_u64(s), case);
                    let name = format!("tau-grid-{case:?}");
                    let res = match tau_solver(&p) {
                        Ok(r) => r,
                        Err(e) => return Some(Counterexample::new(&name, s, &p, format!("solver error: {e}"))),
                    };
                    let grid = tau_grid_min(&p, counts.grid_points);
                    let feasible = feasible_tau(&p, res.tau);
                    let tol = 1e-8 * (1.0 + grid.abs());
                    if res.rho <= grid + tol && feasible && res.case == case {
                        None
                    } else {
                        let detail = format!(
                            "tau {} ({:?}, {:?}) rho {} grid min {} feasible {}",
                            res.tau, res.case, res.hit, res.rho, grid, feasible
                        );
                        Some(Counterexample::new(&name, s, &p, detail))
                    }
                })
                .collect();
            (case, found)
        })
        .collect()
}

fn feasible_tau(p: &ConicSubproblem, tau: f64) -> bool {
    let aa = dot(&p.a, &p.a);
    let td = p.delta / aa.sqrt();
    let slack = 1e-12 * (1.0 + td);
    tau.abs() <= td + slack && (1.0 - tau * aa).abs() >= p.eps0 * (1.0 - 1e-12)
}

fn step_checks(p: &ConicSubproblem, s: &[f64], pred: f64) -> Option<String> {
    let sn = norm(s);
    let gauge = (1.0 - dot(&p.a, s)).abs();
    if !(sn <= p.delta * (1.0 + 1e-12)) {
        return Some(format!("||s|| {sn} exceeds delta {}", p.delta));
    }
    if !(gauge >= p.eps0 * (1.0 - 1e-12)) {
        return Some(format!("gauge {gauge} below eps0 {}", p.eps0));
    }
    if !(pred > 0.0) {
        return Some(format!("non-positive pred {pred}"));
    }
    None
}

fn random_case(rng: &mut ChaCha8Rng) -> TauCase {
    [TauCase::P1, TauCase::P2, TauCase::P3][rng.gen_range(0..3)]
}

struct SubproblemFindings {
    feasibility: Vec<Counterexample>,
    bounds: Vec<Counterexample>,
    monotone: Vec<Counterexample>,
}

fn subproblem_oracles(seed: u64, counts: &OracleCounts, tau_solver: TauSolver) -> SubproblemFindings {
    let per_instance: Vec<[Option<Counterexample>; 3]> = (0..counts.subproblems)
        .into_par_iter()
        .map(|i| {
            let s = instance_seed(seed, 10, i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let case = random_case(&mut rng);
            let p = random_subproblem(&mut rng, case);
            let mut out: [Option<Counterexample>; 3] = [None, None, None];

            let single = solve_conic_adm_with(&p, tau_solver, 1);
            let multi = solve_conic_adm_with(&p, tau_solver, DEFAULT_ADM_SWEEPS);
            let dctr = solve_conic_dogleg(&p);
            let mut feas = Vec::new();
            for (label, res) in [("adm", &single), ("adm-sweeps", &multi), ("dctr", &dctr)] {
                match res {
                    Ok(r) => {
                        if let Some(msg) = step_checks(&p, &r.s, r.pred) {
                            feas.push(format!("{label}: {msg}"));
                        }
                    }
                    Err(e) => feas.push(format!("{label}: error {e}")),
                }
            }
            if !feas.is_empty() {
                out[0] = Some(Counterexample::new("feasibility", s, &p, feas.join("; ")));
            }

            for res in [&single, &multi].into_iter().flatten() {
                let record = TrialRecord {
                    outer: 0,
                    delta: p.delta,
                    step_norm: norm(&res.s),
                    gauge: p.gauge(&res.s),
                    pred: res.pred,
                    ared: 0.0,
                    ratio: 0.0,
                    accepted: false,
                    kind: res.kind,
                    hit: res.tau.map(|t| t.hit),
                    bounds: Some(BoundData {
                        g_norm: norm(&p.g),
                        a_norm: norm(&res.effective_a),
                        b_norm: p.b.spectral_norm_upper_bound(NORM_ESTIMATE_ITERS),
                        cos_ag: res.tau.map_or(0.0, |t| t.quantities.cos_ag),
                        eps0: p.eps0,
                    }),
                };
                for (kind, bound) in pred_lower_bounds(&record) {
                    if res.pred < bound * (1.0 - 1e-8) && out[1].is_none() {
                        let detail = format!("{kind:?} bound {bound} > pred {}", res.pred);
                        out[1] = Some(Counterexample::new("pred-bounds", s, &p, detail));
                    }
                }
            }

            if let (Ok(one), Ok(many)) = (&single, &multi) {
                if many.pred < one.pred * (1.0 - 1e-12) {
                    let detail = format!("pred {} after sweeps < {} after one pass", many.pred, one.pred);
                    out[2] = Some(Counterexample::new("sweep-monotone", s, &p, detail));
                }
            }
            out
        })
        .collect();
    let mut f = SubproblemFindings { feasibility: Vec::new(), bounds: Vec::new(), monotone: Vec::new() };
    for [a, b, c] in per_instance {
        f.feasibility.extend(a);
        f.bounds.extend(b);
        f.monotone.extend(c);
    }
    f
}

fn bfgs_oracle(seed: u64, counts: &OracleCounts) -> Vec<Counterexample> {
    (0..counts.bfgs)
        .into_par_iter()
        .filter_map(|i| {
            let s_ = instance_seed(seed, 20, i);
            let mut rng = ChaCha8Rng::seed_from_u64(s_);
            let p = random_subproblem(&mut rng, TauCase::P1);
            let n = p.dim();
            let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if norm(&s) < 1e-3 {
                return None;
            }
            match update_hessian(&p.b, &s, &y) {
                Ok(b) if cholesky(&b).is_ok() => None,
                outcome => {
                    let detail = format!("s {s:?} y {y:?}: {:?}", outcome.map(|_| "factorization failed"));
                    Some(Counterexample::new("bfgs-pd", s_, &p, detail))
                }
            }
        })
        .collect()
}

/// Run every oracle. `tau_solver` is the first stage under test; pass
/// [`solve_tau_stage`] for the real one.
pub fn run_oracles(seed: u64, counts: &OracleCounts, tau_solver: TauSolver) -> OracleSummary {
    let mut summary = OracleSummary::default();
    for (case, found) in tau_oracle(seed, counts, tau_solver) {
        summary.record(&format!("tau-grid-{case:?}"), counts.tau_per_case, found);
    }
    let sub = subproblem_oracles(seed, counts, tau_solver);
    summary.record("feasibility", counts.subproblems, sub.feasibility);
    summary.record("pred-bounds", counts.subproblems, sub.bounds);
    summary.record("sweep-monotone", counts.subproblems, sub.monotone);
    summary.record("bfgs-pd", counts.bfgs, bfgs_oracle(seed, counts));
    summary
}

pub fn run_default_oracles(seed: u64, counts: &OracleCounts) -> OracleSummary {
    run_oracles(seed, counts, solve_tau_stage)
}

/// Deliberately broken first stage for mutation testing: wherever the real
/// solver picks the interior stationary point it returns `-tau_delta`.
pub fn flipped_tau_stage(p: &ConicSubproblem) -> Result<TauResult> {
    let mut r = solve_tau_stage(p)?;
    if r.hit == TauHit::TauCP {
        r.tau = -r.quantities.tau_delta;
        r.hit = TauHit::MinusTauDelta;
        r.rho = crate::conic::rho(p, r.tau)?;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> OracleCounts {
        OracleCounts { tau_per_case: 40, grid_points: 2000, subproblems: 40, bfgs: 40 }
    }

    #[test]
    fn random_instances_land_in_their_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in [TauCase::P1, TauCase::P2, TauCase::P3] {
            for _ in 0..50 {
                let p = random_subproblem(&mut rng, case);
                assert_eq!(solve_tau_stage(&p).unwrap().case, case);
            }
        }
    }

    #[test]
    fn zero_counts_pass() {
        let s = run_default_oracles(1, &OracleCounts::zero());
        assert!(s.passed());
        assert!(s.counterexamples.is_empty());
    }

    #[test]
    fn small_run_passes() {
        let s = run_default_oracles(3, &small());
        assert!(s.passed(), "{}", s.to_json());
    }

    #[test]
    fn flipped_stage_is_caught() {
        let s = run_oracles(3, &small(), flipped_tau_stage);
        assert!(!s.passed());
        let ce = &s.counterexamples[0];
        let json = serde_json::to_string(ce).unwrap();
        let back: Counterexample = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, ce);
        let p = back.subproblem().unwrap();
        assert_eq!(p.b.as_row_major(), ce.b.as_slice());
    }

    #[test]
    fn same_seed_same_summary() {
        let a = run_default_oracles(11, &small());
        let b = run_default_oracles(11, &small());
        assert_eq!(a, b);
    }
}
