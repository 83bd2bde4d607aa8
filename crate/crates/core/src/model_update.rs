//! Between-iteration updates of the conic model: the horizon vector `a` and
//! the damped BFGS approximation `B`.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, norm, scaled, SymMatrix};

/// Upper bound enforced on `||a||` so the horizon sequence stays bounded.
pub const HORIZON_NORM_MAX: f64 = 1e3;
/// Curvature fraction below which the BFGS update is damped.
pub const DAMPING_THRESHOLD: f64 = 0.2;

/// Data of one accepted step `x_prev -> x_cur`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub s: Vec<f64>,
    pub f_prev: f64,
    pub f_cur: f64,
    pub g_prev: Vec<f64>,
    pub g_cur: Vec<f64>,
    pub y: Vec<f64>,
}

impl StepRecord {
    pub fn new(s: Vec<f64>, f_prev: f64, f_cur: f64, g_prev: Vec<f64>, g_cur: Vec<f64>) -> Self {
        let y = g_cur.iter().zip(&g_prev).map(|(c, p)| c - p).collect();
        Self { s, f_prev, f_cur, g_prev, g_cur, y }
    }

    /// `(f_cur - f_prev)^2 - (g_prev^T s)(g_cur^T s)`
    pub fn beta(&self) -> f64 {
        let df = self.f_cur - self.f_prev;
        df * df - dot(&self.g_prev, &self.s) * dot(&self.g_cur, &self.s)
    }

    /// Scalar `beta_k`; `1` on every degenerate branch.
    pub fn beta_k(&self) -> f64 {
        let beta = self.beta();
        let gs_prev = dot(&self.g_prev, &self.s);
        let guard = 1e-14 * norm(&self.g_prev) * norm(&self.s);
        if beta > 0.0 && gs_prev.abs() > guard {
            (self.f_prev - self.f_cur + beta.sqrt()) / (-gs_prev)
        } else {
            1.0
        }
    }
}

/// New horizon vector `a = (1 - beta_k) / (g_prev^T s) * g_prev`, rescaled
/// to norm [`HORIZON_NORM_MAX`] if larger.
pub fn update_horizon(r: &StepRecord) -> Vec<f64> {
    let n = r.s.len();
    let beta_k = r.beta_k();
    if beta_k == 1.0 {
        return vec![0.0; n];
    }
    let gs_prev = dot(&r.g_prev, &r.s);
    let a = scaled((1.0 - beta_k) / gs_prev, &r.g_prev);
    clamp_norm(a, HORIZON_NORM_MAX)
}

fn clamp_norm(a: Vec<f64>, max: f64) -> Vec<f64> {
    let an = norm(&a);
    if !an.is_finite() {
        return vec![0.0; a.len()];
    }
    if an > max {
        scaled(max / an, &a)
    } else {
        a
    }
}

/// Damping factor `theta` for the BFGS update.
pub fn damping_theta(sbs: f64, ys: f64) -> f64 {
    if ys >= DAMPING_THRESHOLD * sbs {
        1.0
    } else {
        (1.0 - DAMPING_THRESHOLD) * sbs / (sbs - ys)
    }
}

/// Damped BFGS update
///
/// ```text
///   B+ = B - (B s)(B s)^T / s^T B s + z z^T / z^T s,   z = theta y + (1 - theta) B s
/// ```
///
/// Returns [`Error::SkippedUpdate`] for negligible steps and
/// [`Error::UpdateNotPositiveDefinite`] if roundoff destroyed definiteness; in
/// both cases the caller keeps `B`.
pub fn update_hessian(b: &SymMatrix, s: &[f64], y: &[f64]) -> Result<SymMatrix> {
    let bs = b.mul_vec(s);
    let sbs = dot(s, &bs);
    if !(sbs > 1e-30) {
        return Err(Error::SkippedUpdate(sbs));
    }
    let ys = dot(y, s);
    let theta = damping_theta(sbs, ys);
    let z: Vec<f64> = y.iter().zip(&bs).map(|(yi, bi)| theta * yi + (1.0 - theta) * bi).collect();
    let zs = dot(&z, s);
    let mut out = b.clone();
    out.rank1_update(-1.0 / sbs, &bs);
    out.rank1_update(1.0 / zs, &z);
    if !out.is_finite() || cholesky(&out).is_err() {
        return Err(Error::UpdateNotPositiveDefinite);
    }
    Ok(out)
}
