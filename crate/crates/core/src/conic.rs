//! Conic trust-region subproblem
//!
//! ```text
//!   min  phi(s) = g^T s / (1 - a^T s) + s^T B s / (2 (1 - a^T s)^2)
//!   s.t. ||s|| <= delta,  |1 - a^T s| >= eps0
//! ```
//!
//! The alternating-direction solver splits `s = tau * a + y` with `a^T y = 0`.
//! The first stage minimizes the one-dimensional restriction
//! `rho(tau) = phi(tau * a)` in closed form over the feasible set
//!
//! ```text
//!   Omega = { |tau| <= tau_delta } ∩ { tau <= tau_d  or  tau >= tau_u }
//! ```
//!
//! by a case analysis on `1 - delta * ||a||` (cases P1, P2, P3) and on the sign
//! of `a_tau = a^T B a - ||a||^2 a^T g`. Unless the first stage lands on the
//! trust-region boundary, the second stage restricts the model to the null
//! space of `a`, where it is an ordinary quadratic, and takes a dogleg step
//! there. Because the second stage keeps `a^T s = tau * ||a||^2`, the gauge
//! constraint is inherited from the first stage.
//!
//! [`solve_conic_dogleg`] is the plain conic dogleg used as a comparator.

use serde::{Deserialize, Serialize};

use crate::dogleg::{solve_dogleg, solve_dogleg_scaled, DoglegBranch, QuadSubproblem, BOUNDARY_RTOL};
use crate::error::{Error, Result};
use crate::linalg::{axpy, cholesky, dot, norm, nullspace_of, scaled, solve_spd, NullSpaceBasis, SpdFactor, SymMatrix};

/// `a^T g` is treated as zero below this multiple of `||a|| ||g||`.
pub const ORTHOGONALITY_RTOL: f64 = 1e-14;
/// The second stage is skipped when the reduced radius falls below this.
pub const MIN_REDUCED_RADIUS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSubproblem {
    pub a: Vec<f64>,
    pub g: Vec<f64>,
    pub b: SymMatrix,
    pub delta: f64,
    pub eps0: f64,
}

impl ConicSubproblem {
    pub fn new(a: Vec<f64>, g: Vec<f64>, b: SymMatrix, delta: f64, eps0: f64) -> Result<Self> {
        let p = Self { a, g, b, delta, eps0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.b.dim();
        if self.a.len() != n || self.g.len() != n {
            return Err(Error::InvalidInput(format!(
                "a, g have lengths {}, {} but B is {n}x{n}",
                self.a.len(),
                self.g.len()
            )));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidInput(format!("trust radius must be positive, got {}", self.delta)));
        }
        if !(self.eps0 > 0.0 && self.eps0 < 1.0) {
            return Err(Error::InvalidInput(format!("eps0 must lie in (0, 1), got {}", self.eps0)));
        }
        let gn = norm(&self.g);
        if !(gn > 0.0) || !gn.is_finite() {
            return Err(Error::InvalidInput("gradient must be nonzero and finite".into()));
        }
        if !self.a.iter().all(|v| v.is_finite()) || !self.b.is_finite() {
            return Err(Error::InvalidInput("a or B has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    /// Conic model value `phi(s)` (the model minus `f`).
    pub fn phi(&self, s: &[f64]) -> f64 {
        let denom = 1.0 - dot(&self.a, s);
        dot(&self.g, s) / denom + 0.5 * self.b.quad_form(s) / (denom * denom)
    }

    /// Predicted reduction `-phi(s)`.
    pub fn pred(&self, s: &[f64]) -> f64 {
        -self.phi(s)
    }

    /// `|1 - a^T s|`
    pub fn gauge(&self, s: &[f64]) -> f64 {
        (1.0 - dot(&self.a, s)).abs()
    }

    fn is_quadratic(&self) -> bool {
        let an = norm(&self.a);
        an == 0.0 || dot(&self.a, &self.g).abs() <= ORTHOGONALITY_RTOL * an * norm(&self.g)
    }
}

/// Which of the three first-stage problems the radius selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TauCase {
    /// `1 - delta ||a|| >= eps0`: `Omega = [-tau_delta, tau_delta]`.
    P1,
    /// `|1 - delta ||a||| < eps0`: `Omega = [-tau_delta, tau_d]`.
    P2,
    /// `1 - delta ||a|| <= -eps0`: `Omega = [-tau_delta, tau_d] ∪ [tau_u, tau_delta]`.
    P3,
}

/// Which candidate the first stage selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TauHit {
    Zero,
    PlusTauDelta,
    MinusTauDelta,
    TauD,
    TauU,
    TauCP,
}

impl TauHit {
    pub fn is_boundary(self) -> bool {
        matches!(self, TauHit::PlusTauDelta | TauHit::MinusTauDelta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauQuantities {
    pub a_norm: f64,
    pub a_dot_g: f64,
    pub a_b_a: f64,
    pub tau_delta: f64,
    pub tau_d: f64,
    pub tau_m: f64,
    pub tau_u: f64,
    pub a_tau: f64,
    pub tau_cp: Option<f64>,
    /// `|a^T g| / (||a|| ||g||)`
    pub cos_ag: f64,
}

impl TauQuantities {
    pub fn case(&self, delta: f64, eps0: f64) -> TauCase {
        let c = 1.0 - delta * self.a_norm;
        if c >= eps0 {
            TauCase::P1
        } else if c.abs() < eps0 {
            TauCase::P2
        } else {
            TauCase::P3
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauResult {
    pub tau: f64,
    pub case: TauCase,
    pub hit: TauHit,
    pub rho: f64,
    pub quantities: TauQuantities,
}

pub fn tau_quantities(p: &ConicSubproblem) -> Result<TauQuantities> {
    let aa = dot(&p.a, &p.a);
    if aa == 0.0 {
        return Err(Error::ZeroHorizon);
    }
    let a_norm = aa.sqrt();
    let a_dot_g = dot(&p.a, &p.g);
    let a_b_a = p.b.quad_form(&p.a);
    let a_tau = a_b_a - aa * a_dot_g;
    let tau_cp = if a_tau != 0.0 { Some(-a_dot_g / a_tau) } else { None };
    let cos_ag = (a_dot_g.abs() / (a_norm * norm(&p.g))).min(1.0);
    Ok(TauQuantities {
        a_norm,
        a_dot_g,
        a_b_a,
        tau_delta: p.delta / a_norm,
        tau_d: (1.0 - p.eps0) / aa,
        tau_m: 1.0 / aa,
        tau_u: (1.0 + p.eps0) / aa,
        a_tau,
        tau_cp,
        cos_ag,
    })
}

/// `rho(tau) = tau a^T g / (1 - tau ||a||^2) + tau^2 a^T B a / (2 (1 - tau ||a||^2)^2)`
pub fn rho(p: &ConicSubproblem, tau: f64) -> Result<f64> {
    let aa = dot(&p.a, &p.a);
    let denom = 1.0 - tau * aa;
    if denom.abs() <= 1e-300 {
        return Err(Error::PoleAtTauM);
    }
    Ok(rho_from(tau, dot(&p.a, &p.g), p.b.quad_form(&p.a), denom))
}

fn rho_from(tau: f64, a_dot_g: f64, a_b_a: f64, denom: f64) -> f64 {
    tau * a_dot_g / denom + tau * tau * a_b_a / (2.0 * denom * denom)
}

fn rho_q(q: &TauQuantities, tau: f64) -> f64 {
    let aa = q.a_norm * q.a_norm;
    rho_from(tau, q.a_dot_g, q.a_b_a, 1.0 - tau * aa)
}

/// Closed-form first stage.
///
/// When `a^T g` is (numerically) zero the minimizer is `tau = 0`; the
/// alternating-direction driver never calls this in that situation but the
/// answer is still well defined.
pub fn solve_tau_stage(p: &ConicSubproblem) -> Result<TauResult> {
    let q = tau_quantities(p)?;
    let case = q.case(p.delta, p.eps0);
    let (tau, hit) = if q.a_dot_g.abs() <= ORTHOGONALITY_RTOL * q.a_norm * norm(&p.g) {
        (0.0, TauHit::Zero)
    } else {
        select_tau(&q, case)
    };
    Ok(TauResult { tau, case, hit, rho: rho_q(&q, tau), quantities: q })
}

fn select_tau(q: &TauQuantities, case: TauCase) -> (f64, TauHit) {
    let minus = (-q.tau_delta, TauHit::MinusTauDelta);
    let plus = (q.tau_delta, TauHit::PlusTauDelta);
    let upper_interior = match case {
        TauCase::P1 => plus,
        TauCase::P2 | TauCase::P3 => (q.tau_d, TauHit::TauD),
    };
    // a_tau > 0 branches shared by all three cases
    let positive_curvature = |tau_cp: f64| {
        if q.a_dot_g > 0.0 {
            // max{-tau_delta, tau_cp}, ties to -tau_delta
            if tau_cp > -q.tau_delta {
                (tau_cp, TauHit::TauCP)
            } else {
                minus
            }
        } else if tau_cp < upper_interior.0 {
            // min{tau_cp, upper}, ties to the bound
            (tau_cp, TauHit::TauCP)
        } else {
            upper_interior
        }
    };
    match (case, q.tau_cp) {
        (_, Some(tau_cp)) if q.a_tau > 0.0 => positive_curvature(tau_cp),
        (TauCase::P1 | TauCase::P2, _) => minus,
        (TauCase::P3, None) => minus,
        (TauCase::P3, Some(tau_cp)) => {
            // a_tau < 0: the stationary point lies beyond the pole
            if tau_cp <= q.tau_u {
                (q.tau_u, TauHit::TauU)
            } else if tau_cp < q.tau_delta {
                (tau_cp, TauHit::TauCP)
            } else if rho_q(q, q.tau_delta) < rho_q(q, -q.tau_delta) {
                plus
            } else {
                minus
            }
        }
    }
}

/// Restricts the model to `s = tau * a + Q u` and returns the quadratic in `u`.
pub fn reduce(p: &ConicSubproblem, tau: f64, basis: &NullSpaceBasis) -> Result<QuadSubproblem> {
    let aa = dot(&p.a, &p.a);
    let reach = tau.abs() * aa.sqrt();
    if !(reach < p.delta) {
        return Err(Error::InvalidInput(format!(
            "first-stage step of length {reach} leaves no room inside radius {}",
            p.delta
        )));
    }
    let denom = 1.0 - tau * aa;
    let qtg = basis.apply_qt(&p.g)?;
    let qtba = basis.apply_qt(&p.b.mul_vec(&p.a))?;
    let mut g_red = scaled(1.0 / denom, &qtg);
    axpy(tau / (denom * denom), &qtba, &mut g_red);
    let mut b_red = basis.project_matrix(&p.b)?;
    b_red.scale(1.0 / (denom * denom));
    cholesky(&b_red)?;
    let delta_red = (p.delta * p.delta - tau * tau * aa).max(0.0).sqrt();
    Ok(QuadSubproblem { g: g_red, b: b_red, delta: delta_red })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    /// Alternating-direction step (first stage, possibly followed by a
    /// null-space dogleg).
    Adm,
    /// Conic dogleg comparator.
    Dctr,
    /// Quadratic dogleg taken because the conic term vanished.
    QuadDogleg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub s: Vec<f64>,
    pub pred: f64,
    pub on_boundary: bool,
    pub kind: StepKind,
    pub tau: Option<TauResult>,
    /// Horizon vector the model actually used (zero after quadratic fallback).
    pub effective_a: Vec<f64>,
    pub stage_two: Option<DoglegBranch>,
}

fn quadratic_fallback(p: &ConicSubproblem) -> Result<SubproblemResult> {
    let quad = QuadSubproblem { g: p.g.clone(), b: p.b.clone(), delta: p.delta };
    let step = solve_dogleg(&quad)?;
    Ok(SubproblemResult {
        s: step.s,
        pred: step.pred,
        on_boundary: step.on_boundary,
        kind: StepKind::QuadDogleg,
        tau: None,
        effective_a: vec![0.0; p.dim()],
        stage_two: Some(step.branch),
    })
}

/// Two-stage alternating-direction solve (one pass through both stages).
pub fn solve_conic_adm(p: &ConicSubproblem) -> Result<SubproblemResult> {
    solve_conic_adm_with(p, solve_tau_stage, 1)
}

/// Alternating-direction solve with up to `sweeps` passes. Passes after the
/// first re-minimize over `tau` with the null-space component held fixed,
/// then redo the null-space dogleg at the new `tau`; a pass is kept only if
/// it lowers the model, so `pred` never decreases with more sweeps.
pub fn solve_conic_adm_sweeps(p: &ConicSubproblem, sweeps: usize) -> Result<SubproblemResult> {
    solve_conic_adm_with(p, solve_tau_stage, sweeps)
}

/// Same as [`solve_conic_adm_sweeps`] with a substitutable first stage (used
/// by the oracle harness for mutation testing).
pub fn solve_conic_adm_with(
    p: &ConicSubproblem,
    tau_stage: fn(&ConicSubproblem) -> Result<TauResult>,
    sweeps: usize,
) -> Result<SubproblemResult> {
    p.validate()?;
    if p.is_quadratic() {
        return quadratic_fallback(p);
    }
    let tau = tau_stage(p)?;
    let first = scaled(tau.tau, &p.a);
    let finish = |s: Vec<f64>, stage_two| {
        let on_boundary = norm(&s) >= p.delta * (1.0 - BOUNDARY_RTOL);
        SubproblemResult {
            pred: p.pred(&s),
            s,
            on_boundary,
            kind: StepKind::Adm,
            tau: Some(tau),
            effective_a: p.a.clone(),
            stage_two,
        }
    };
    if tau.hit.is_boundary() || p.dim() == 1 {
        return Ok(finish(first, None));
    }
    let family = ReducedFamily::new(p)?;
    let Some((y, branch)) = family.stage_two(p, tau.tau)? else {
        return Ok(finish(first, None));
    };
    let mut best_tau = tau.tau;
    let mut best_y = y;
    let mut best_branch = branch;
    let mut best_phi = p.phi(&compose(&p.a, best_tau, &best_y));
    for _ in 1..sweeps {
        let Some(t) = tau_given_y(p, &best_y) else { break };
        let mut cand_phi = p.phi(&compose(&p.a, t, &best_y));
        let mut cand_y = best_y.clone();
        let mut cand_branch = best_branch;
        if let Some((y, branch)) = family.stage_two(p, t)? {
            let phi = p.phi(&compose(&p.a, t, &y));
            if phi < cand_phi {
                cand_phi = phi;
                cand_y = y;
                cand_branch = branch;
            }
        }
        let gain = best_phi - cand_phi;
        if !(gain > 0.0) {
            break;
        }
        best_tau = t;
        best_y = cand_y;
        best_branch = cand_branch;
        best_phi = cand_phi;
        if gain <= SWEEP_RTOL * best_phi.abs() {
            break;
        }
    }
    Ok(finish(compose_within(p, best_tau, &best_y), Some(best_branch)))
}

/// Sweeps stop once a pass improves the model by less than this fraction.
pub const SWEEP_RTOL: f64 = 1e-10;

/// `tau a + y`, pulled radially onto the ball when roundoff in the null-space
/// map leaves a sliver of `y` along `a` and pushes the norm past `delta`.
/// The pull-back is skipped if it would cross into the gauge band.
fn compose_within(p: &ConicSubproblem, tau: f64, y: &[f64]) -> Vec<f64> {
    let s = compose(&p.a, tau, y);
    let sn = norm(&s);
    if sn <= p.delta {
        return s;
    }
    let pulled = scaled(p.delta / sn, &s);
    if p.gauge(&pulled) >= p.eps0 {
        pulled
    } else {
        s
    }
}

fn compose(a: &[f64], tau: f64, y: &[f64]) -> Vec<f64> {
    let mut s = scaled(tau, a);
    axpy(1.0, y, &mut s);
    s
}

/// The reduced problems at every `tau` share `Q^T B Q`, `Q^T g` and
/// `Q^T B a`; only scalar factors depend on `tau`.
struct ReducedFamily {
    basis: NullSpaceBasis,
    m: SymMatrix,
    factor: SpdFactor,
    qtg: Vec<f64>,
    qtba: Vec<f64>,
    alpha: f64,
}

impl ReducedFamily {
    fn new(p: &ConicSubproblem) -> Result<Self> {
        let basis = nullspace_of(&p.a)?;
        let m = basis.project_matrix(&p.b)?;
        let factor = cholesky(&m)?;
        let qtg = basis.apply_qt(&p.g)?;
        let qtba = basis.apply_qt(&p.b.mul_vec(&p.a))?;
        Ok(Self { basis, m, factor, qtg, qtba, alpha: dot(&p.a, &p.a) })
    }

    /// Dogleg in the null space of `a` at fixed `tau`, mapped back to `R^n`;
    /// `None` when the reduced problem is empty.
    fn stage_two(&self, p: &ConicSubproblem, tau: f64) -> Result<Option<(Vec<f64>, DoglegBranch)>> {
        let room = p.delta * p.delta - tau * tau * self.alpha;
        if !(room > 0.0) {
            return Ok(None);
        }
        let delta_red = room.sqrt();
        let denom = 1.0 - tau * self.alpha;
        let mut g_red = scaled(1.0 / denom, &self.qtg);
        axpy(tau / (denom * denom), &self.qtba, &mut g_red);
        if delta_red <= MIN_REDUCED_RADIUS || norm(&g_red) == 0.0 {
            return Ok(None);
        }
        let kappa = 1.0 / (denom * denom);
        let step = solve_dogleg_scaled(&g_red, &self.m, &self.factor, kappa, delta_red)?;
        Ok(Some((self.basis.apply_q(&step.s)?, step.branch)))
    }
}

/// Exact minimizer over `tau` of `phi(tau a + y)` for `y` orthogonal to `a`,
/// subject to both constraints.
///
/// With `w = 1 / (1 - tau ||a||^2)` the objective is the convex quadratic
/// `0.5 (y + a/|a|^2)^T B (y + a/|a|^2) w^2 + b w + c`, and the feasible set
/// maps to at most two intervals in `w`, so the minimizer is a clamped vertex.
pub fn tau_given_y(p: &ConicSubproblem, y: &[f64]) -> Option<f64> {
    let alpha = dot(&p.a, &p.a);
    if alpha == 0.0 {
        return None;
    }
    let room = p.delta * p.delta - dot(y, y);
    if room < 0.0 {
        return None;
    }
    let tau_hat = room.sqrt() / alpha.sqrt();
    let by = p.b.mul_vec(y);
    let c0 = dot(&p.g, y);
    let c1 = dot(&p.a, &p.g);
    let q0 = dot(y, &by);
    let q1 = dot(&p.a, &by);
    let q2 = p.b.quad_form(&p.a);
    let qa = 0.5 * (q0 + 2.0 * q1 / alpha + q2 / (alpha * alpha));
    let qb = c0 + (c1 - q1) / alpha - q2 / (alpha * alpha);
    if !(qa > 0.0) {
        return None;
    }
    let w_of = |tau: f64| 1.0 / (1.0 - tau * alpha);
    let value = |w: f64| (qa * w + qb) * w;
    let vertex = -qb / (2.0 * qa);
    let tau_d = (1.0 - p.eps0) / alpha;
    let tau_u = (1.0 + p.eps0) / alpha;

    let mut pieces = vec![(w_of(-tau_hat), w_of(tau_hat.min(tau_d)))];
    if tau_u <= tau_hat {
        pieces.push((w_of(tau_u), w_of(tau_hat)));
    }
    let (w, _) = pieces
        .into_iter()
        .filter(|(lo, hi)| lo <= hi)
        .map(|(lo, hi)| {
            let w = vertex.clamp(lo, hi);
            (w, value(w))
        })
        .min_by(|x, y| x.1.total_cmp(&y.1))?;
    Some((1.0 - 1.0 / w) / alpha)
}

/// Conic dogleg: the quadratic dogleg template with the conic Newton and
/// Cauchy points, followed by a radial pull-back onto the gauge constraint.
pub fn solve_conic_dogleg(p: &ConicSubproblem) -> Result<SubproblemResult> {
    p.validate()?;
    let delta = p.delta;
    let factor = cholesky(&p.b)?;
    let binv_g = solve_spd(&factor, &p.g)?;
    let gg = dot(&p.g, &p.g);
    let gbg = p.b.quad_form(&p.g);
    let a_dot_g = dot(&p.a, &p.g);

    let newton_denom = 1.0 - dot(&p.a, &binv_g);
    let newton_scale = 1.0 + dot(&binv_g, &binv_g).sqrt() * norm(&p.a);
    if newton_denom.abs() <= 1e-12 * newton_scale {
        return Err(Error::DegenerateConicStep("1 - a^T B^-1 g vanishes"));
    }
    let cauchy_denom = gbg - a_dot_g * gg;
    let cauchy_scale = gbg.abs() + (a_dot_g * gg).abs();
    if cauchy_denom.abs() <= 1e-12 * cauchy_scale {
        return Err(Error::DegenerateConicStep("g^T B g - (a^T g)(g^T g) vanishes"));
    }

    let s_newton = scaled(-1.0 / newton_denom, &binv_g);
    let s_cauchy = scaled(-gg / cauchy_denom, &p.g);
    let newton_norm = norm(&s_newton);
    let cauchy_norm = norm(&s_cauchy);

    let mut s = if newton_norm <= delta {
        s_newton
    } else if cauchy_norm >= delta {
        scaled(-delta / gg.sqrt(), &p.g)
    } else {
        let diff: Vec<f64> = s_newton.iter().zip(&s_cauchy).map(|(a, b)| a - b).collect();
        let d = dot(&diff, &diff);
        if d <= 1e-30 {
            scaled(delta / newton_norm, &s_newton)
        } else {
            let e = dot(&diff, &s_cauchy);
            let f = cauchy_norm * cauchy_norm - delta * delta;
            let disc = (e * e - d * f).max(0.0).sqrt();
            let lambda = if e >= 0.0 { -f / (e + disc) } else { (disc - e) / d };
            let mut s = s_cauchy;
            axpy(lambda, &diff, &mut s);
            s
        }
    };

    // largest sigma in (0, 1] with |1 - sigma a^T s| >= eps0
    let t = dot(&p.a, &s);
    if (1.0 - t).abs() < p.eps0 {
        let sigma = (1.0 - p.eps0) / t;
        s.iter_mut().for_each(|v| *v *= sigma);
    }

    let pred = p.pred(&s);
    if !(pred > 0.0) {
        return Err(Error::DegenerateConicStep("non-positive predicted reduction"));
    }
    let on_boundary = norm(&s) >= delta * (1.0 - BOUNDARY_RTOL);
    Ok(SubproblemResult {
        s,
        pred,
        on_boundary,
        kind: StepKind::Dctr,
        tau: None,
        effective_a: p.a.clone(),
        stage_two: None,
    })
}
