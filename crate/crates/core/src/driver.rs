//! Outer trust-region loop for the conic model.
//!
//! Each trial solves the conic subproblem at the current point, compares the
//! actual reduction `f(x) - f(x + s)` with the model's predicted reduction and
//! either rejects the step (halving the radius and re-solving at the same
//! point) or accepts it, possibly doubling the radius, and then refreshes the
//! horizon vector and the damped BFGS matrix.
//!
//! Counters follow the benchmark tables: `iters` counts trial steps, the
//! objective is evaluated once at `x0` and once per trial (`nf = iters + 1`)
//! and the gradient once at `x0` and once per accepted point
//! (`ng = accepted + 1`).

use std::time::Instant;

use log::{debug, trace};
use serde::{Deserialize, Serialize};

use crate::conic::{solve_conic_adm_sweeps, solve_conic_dogleg, ConicSubproblem, StepKind, TauHit};
use crate::error::{Error, Result};
use crate::linalg::{add, all_finite, dot, norm, SymMatrix};
use crate::model_update::{update_hessian, update_horizon, StepRecord};

/// Relative tightening of the gauge threshold handed to the subproblem, so
/// that gauge-active steps keep `|1 - a^T s| >= eps0` after roundoff.
pub const GAUGE_MARGIN: f64 = 1e-6;
/// Cap on alternating-direction passes per subproblem; passes stop earlier
/// once the model stops improving.
pub const DEFAULT_ADM_SWEEPS: usize = 1000;
/// Power-iteration steps used to estimate `||B||_2` for the bound checks.
pub const NORM_ESTIMATE_ITERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Alternating-direction subproblem solve (ADCTR).
    Adm,
    /// Conic dogleg subproblem solve (DCTR).
    Dctr,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Adm => "ADCTR",
            Strategy::Dctr => "DCTR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop once `||g|| <= grad_tol`.
    pub grad_tol: f64,
    /// Gauge threshold `eps0` in `|1 - a^T s| >= eps0`.
    pub eps0: f64,
    /// Acceptance threshold on the reduction ratio.
    pub eta1: f64,
    /// Expansion threshold on the reduction ratio.
    pub eta2: f64,
    /// Shrink factor.
    pub delta1: f64,
    /// Expansion factor.
    pub delta2: f64,
    pub delta0: f64,
    pub delta_max: f64,
    pub delta_min: f64,
    pub max_iter: usize,
    /// Consecutive rejections at one point before giving up.
    pub max_rejections: usize,
    /// Consecutive failed subproblem solves before giving up.
    pub max_subproblem_failures: usize,
    /// Record the data needed by [`verify_pred_bounds`].
    pub check_bounds: bool,
    pub strategy: Strategy,
    /// Passes of the alternating-direction solve per subproblem.
    pub adm_sweeps: usize,
    /// Replace `B = I` by `(y^T y / y^T s) I` just before the first BFGS
    /// update. Off by default. Helps when the true curvature is far from 1
    /// in directions the updates never touch (tiled starting points).
    pub scale_initial_hessian: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-5,
            eps0: 1e-5,
            eta1: 0.01,
            eta2: 0.75,
            delta1: 0.5,
            delta2: 2.0,
            delta0: 1.0,
            delta_max: 10.0,
            delta_min: 1e-30,
            max_iter: 5000,
            max_rejections: 60,
            max_subproblem_failures: 5,
            check_bounds: false,
            strategy: Strategy::Adm,
            adm_sweeps: DEFAULT_ADM_SWEEPS,
            scale_initial_hessian: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if !(self.eps0 > 0.0 && self.eps0 < 1.0) {
            return bad("eps0 must lie in (0, 1)");
        }
        if !(0.0 < self.eta1 && self.eta1 < self.eta2 && self.eta2 < 1.0) {
            return bad("need 0 < eta1 < eta2 < 1");
        }
        if !(0.0 < self.delta1 && self.delta1 < 1.0 && 1.0 < self.delta2) {
            return bad("need 0 < delta1 < 1 < delta2");
        }
        if !(0.0 < self.delta0 && self.delta0 <= self.delta_max && self.delta_max.is_finite()) {
            return bad("need 0 < delta0 <= delta_max < inf");
        }
        if !(self.delta_min > 0.0) {
            return bad("delta_min must be positive");
        }
        if self.adm_sweeps == 0 {
            return bad("adm_sweeps must be positive");
        }
        if self.max_rejections == 0 || self.max_subproblem_failures == 0 {
            return bad("rejection and failure limits must be positive");
        }
        Ok(())
    }

    /// Gauge threshold actually passed to the subproblem solver.
    pub fn subproblem_eps0(&self) -> f64 {
        (self.eps0 * (1.0 + GAUGE_MARGIN)).min(0.5 * (1.0 + self.eps0))
    }
}

/// Current iterate together with the conic model built around it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicState {
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
    pub a: Vec<f64>,
    pub b: SymMatrix,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Converged,
    MaxIter,
    Stalled,
    SubproblemFailure,
}

impl RunStatus {
    pub fn label(self) -> &'static str {
        match self {
            RunStatus::Converged => "Converged",
            RunStatus::MaxIter => "MaxIter",
            RunStatus::Stalled => "Stalled",
            RunStatus::SubproblemFailure => "SubproblemFailure",
        }
    }
}

/// Quantities entering the predicted-reduction lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundData {
    pub g_norm: f64,
    pub a_norm: f64,
    pub b_norm: f64,
    pub cos_ag: f64,
    pub eps0: f64,
}

/// One trial step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Outer iteration (accepted-point index) at which the trial ran.
    pub outer: usize,
    pub delta: f64,
    pub step_norm: f64,
    /// `|1 - a^T s|` with the horizon the model used.
    pub gauge: f64,
    pub pred: f64,
    pub ared: f64,
    pub ratio: f64,
    pub accepted: bool,
    pub kind: StepKind,
    pub hit: Option<TauHit>,
    pub bounds: Option<BoundData>,
}

/// A subproblem solve that produced no usable step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemFailureRecord {
    pub outer: usize,
    pub delta: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: RunStatus,
    pub iters: usize,
    pub nf: usize,
    pub ng: usize,
    pub accepted: usize,
    pub f_final: f64,
    pub gnorm_final: f64,
    pub x_final: Vec<f64>,
    pub trace: Vec<TrialRecord>,
    pub failures: Vec<SubproblemFailureRecord>,
    /// Gauge threshold the feasibility checks are measured against.
    pub eps0: f64,
    pub wall_time: f64,
}

/// Minimizes `objective` from `x0`.
///
/// Returns an error only for invalid configuration or a non-finite start;
/// every other outcome is reported through [`RunReport::status`].
pub fn minimize<F, G>(objective: F, gradient: G, x0: &[f64], cfg: &SolverConfig) -> Result<RunReport>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    cfg.validate()?;
    let n = x0.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty starting point".into()));
    }
    if !all_finite(x0) {
        return Err(Error::NonFiniteStart);
    }
    let started = Instant::now();

    let f0 = objective(x0);
    let g0 = gradient(x0);
    if g0.len() != n {
        return Err(Error::InvalidInput(format!("gradient has length {} for n = {n}", g0.len())));
    }
    if !f0.is_finite() || !all_finite(&g0) {
        return Err(Error::NonFiniteStart);
    }
    let mut state = ConicState {
        x: x0.to_vec(),
        f: f0,
        g: g0,
        a: vec![0.0; n],
        b: SymMatrix::identity(n),
        delta: cfg.delta0,
    };
    let (mut nf, mut ng) = (1usize, 1usize);
    let mut iters = 0usize;
    let mut accepted = 0usize;
    let mut rejections = 0usize;
    let mut failures_in_row = 0usize;
    let mut trace = Vec::new();
    let mut failures = Vec::new();
    let sub_eps0 = cfg.subproblem_eps0();

    let status = loop {
        let gnorm = norm(&state.g);
        if gnorm <= cfg.grad_tol {
            break RunStatus::Converged;
        }
        if iters >= cfg.max_iter {
            break RunStatus::MaxIter;
        }
        if state.delta < cfg.delta_min || rejections >= cfg.max_rejections {
            break RunStatus::Stalled;
        }
        if failures_in_row >= cfg.max_subproblem_failures {
            break RunStatus::SubproblemFailure;
        }

        let problem = ConicSubproblem {
            a: state.a.clone(),
            g: state.g.clone(),
            b: state.b.clone(),
            delta: state.delta,
            eps0: sub_eps0,
        };
        let solved = match cfg.strategy {
            Strategy::Adm => solve_conic_adm_sweeps(&problem, cfg.adm_sweeps),
            Strategy::Dctr => solve_conic_dogleg(&problem),
        };
        let step = match solved {
            Ok(step) if step.pred > 0.0 && all_finite(&step.s) => step,
            outcome => {
                let reason = match outcome {
                    Err(e) => e.to_string(),
                    Ok(step) => format!("predicted reduction {:e}", step.pred),
                };
                debug!("subproblem failed at outer {accepted} with delta {:e}: {reason}", state.delta);
                failures.push(SubproblemFailureRecord { outer: accepted, delta: state.delta, reason });
                failures_in_row += 1;
                state.delta *= cfg.delta1;
                continue;
            }
        };
        failures_in_row = 0;
        iters += 1;

        let x_trial = add(&state.x, &step.s);
        let f_trial = objective(&x_trial);
        nf += 1;
        let ared = state.f - f_trial;
        let ratio = if f_trial.is_finite() { ared / step.pred } else { f64::NEG_INFINITY };
        let step_norm = norm(&step.s);
        let bounds = cfg.check_bounds.then(|| BoundData {
            g_norm: gnorm,
            a_norm: norm(&step.effective_a),
            b_norm: state.b.spectral_norm_upper_bound(NORM_ESTIMATE_ITERS),
            cos_ag: step.tau.map_or(0.0, |t| t.quantities.cos_ag),
            eps0: sub_eps0,
        });
        let mut record = TrialRecord {
            outer: accepted,
            delta: state.delta,
            step_norm,
            gauge: (1.0 - dot(&step.effective_a, &step.s)).abs(),
            pred: step.pred,
            ared,
            ratio,
            accepted: false,
            kind: step.kind,
            hit: step.tau.map(|t| t.hit),
            bounds,
        };
        trace!("trial {iters}: delta {:e} pred {:e} ared {:e} r {:e}", state.delta, step.pred, ared, ratio);

        if !(ratio > cfg.eta1) {
            trace.push(record);
            rejections += 1;
            state.delta *= cfg.delta1;
            continue;
        }

        let g_trial = gradient(&x_trial);
        ng += 1;
        if g_trial.len() != n || !all_finite(&g_trial) {
            // treat as a rejection; the gradient evaluation still counts
            trace.push(record);
            rejections += 1;
            state.delta *= cfg.delta1;
            continue;
        }
        record.accepted = true;
        trace.push(record);
        accepted += 1;
        rejections = 0;

        let on_boundary = step_norm >= state.delta * (1.0 - crate::dogleg::BOUNDARY_RTOL);
        if ratio >= cfg.eta2 && on_boundary {
            state.delta = (cfg.delta2 * state.delta).min(cfg.delta_max);
        }

        let record = StepRecord::new(step.s, state.f, f_trial, state.g.clone(), g_trial.clone());
        state.a = update_horizon(&record);
        if cfg.scale_initial_hessian && accepted == 1 {
            let ys = dot(&record.y, &record.s);
            if ys > 0.0 {
                state.b = SymMatrix::scaled_identity(n, dot(&record.y, &record.y) / ys);
            }
        }
        if let Ok(b) = update_hessian(&state.b, &record.s, &record.y) {
            state.b = b;
        }
        state.x = x_trial;
        state.f = f_trial;
        state.g = g_trial;
    };

    Ok(RunReport {
        status,
        iters,
        nf,
        ng,
        accepted,
        f_final: state.f,
        gnorm_final: norm(&state.g),
        x_final: state.x,
        trace,
        failures,
        eps0: cfg.eps0,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Which lower bound a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    /// `pred >= 0.5 ||g|| min{delta, ||g|| / ||B||}` for quadratic dogleg steps.
    Cauchy,
    /// `pred >= 0.5 c1 delta ||g||` for first-stage boundary steps.
    Boundary,
    /// `pred >= 0.5 c4 ||g|| min{delta, 1/||a||, ||g||/||B||}`.
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub trial: usize,
    pub kind: BoundKind,
    pub pred: f64,
    pub bound: f64,
}

/// Constant `c1 = cos_ag / max{2 + eps0, 1 + delta ||a||}`.
///
/// For `delta ||a|| < 1 + eps0` this is `cos_ag / (2 + eps0)`. Beyond that,
/// a step `-tau_delta a` is divided by `1 + delta ||a||` in the model and the
/// plain constant no longer bounds it; see `boundary_bound_needs_radius_factor`.
pub fn boundary_constant(cos_ag: f64, eps0: f64, delta_a_norm: f64) -> f64 {
    cos_ag / (2.0 + eps0).max(1.0 + delta_a_norm)
}

/// Constant `c4 = min{c1, cos_ag^2, cos_ag (1 - eps0) / eps0}`.
pub fn general_constant(cos_ag: f64, eps0: f64) -> f64 {
    (cos_ag / (2.0 + eps0))
        .min(cos_ag * cos_ag)
        .min(cos_ag * (1.0 - eps0) / eps0)
}

/// Lower bounds that apply to one trial, as `(kind, bound)` pairs.
pub fn pred_lower_bounds(record: &TrialRecord) -> Vec<(BoundKind, f64)> {
    let Some(d) = record.bounds else { return Vec::new() };
    let b_norm = d.b_norm * (1.0 + 1e-6);
    let g_over_b = d.g_norm / b_norm;
    match record.kind {
        StepKind::Dctr => Vec::new(),
        StepKind::QuadDogleg => vec![(BoundKind::Cauchy, 0.5 * d.g_norm * record.delta.min(g_over_b))],
        StepKind::Adm => {
            let mut out = Vec::with_capacity(2);
            if record.hit.is_some_and(TauHit::is_boundary) {
                let c1 = boundary_constant(d.cos_ag, d.eps0, record.delta * d.a_norm);
                out.push((BoundKind::Boundary, 0.5 * c1 * record.delta * d.g_norm));
            }
            let c4 = general_constant(d.cos_ag, d.eps0);
            let radius = record.delta.min(1.0 / d.a_norm).min(g_over_b);
            out.push((BoundKind::General, 0.5 * c4 * d.g_norm * radius));
            out
        }
    }
}

/// Every trial whose predicted reduction falls below an applicable lower
/// bound by more than the factor `1 - slack`. Trials recorded without bound
/// data and conic-dogleg trials are skipped.
pub fn verify_pred_bounds(trace: &[TrialRecord], slack: f64) -> Vec<BoundViolation> {
    let mut out = Vec::new();
    for (i, record) in trace.iter().enumerate() {
        for (kind, bound) in pred_lower_bounds(record) {
            if record.pred < bound * (1.0 - slack) {
                out.push(BoundViolation { trial: i, kind, pred: record.pred, bound });
            }
        }
    }
    out
}
