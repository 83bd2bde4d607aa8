//! Single-dogleg approximate solver for the quadratic trust-region
//! subproblem `min g^T s + 0.5 s^T B s  s.t. ||s|| <= delta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, cholesky, dot, norm, scaled, solve_spd, sub, SpdFactor, SymMatrix};

/// Relative slack used to decide whether a step lies on the boundary.
pub const BOUNDARY_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadSubproblem {
    pub g: Vec<f64>,
    pub b: SymMatrix,
    pub delta: f64,
}

impl QuadSubproblem {
    pub fn new(g: Vec<f64>, b: SymMatrix, delta: f64) -> Result<Self> {
        let p = Self { g, b, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.g.len() != self.b.dim() {
            return Err(Error::InvalidInput(format!(
                "gradient has length {} but B is {}x{}",
                self.g.len(),
                self.b.dim(),
                self.b.dim()
            )));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidInput(format!("trust radius must be positive, got {}", self.delta)));
        }
        let gn = norm(&self.g);
        if !(gn > 0.0) || !gn.is_finite() {
            return Err(Error::InvalidInput("gradient must be nonzero and finite".into()));
        }
        if !self.b.is_finite() {
            return Err(Error::InvalidInput("B has non-finite entries".into()));
        }
        Ok(())
    }

    /// `g^T s + 0.5 s^T B s`
    pub fn model(&self, s: &[f64]) -> f64 {
        dot(&self.g, s) + 0.5 * self.b.quad_form(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DoglegBranch {
    Newton,
    ScaledCauchy,
    Interpolated,
    /// Newton and Cauchy points coincide outside the ball; Newton step scaled
    /// back to the boundary.
    ClippedNewton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoglegStep {
    pub s: Vec<f64>,
    pub pred: f64,
    pub on_boundary: bool,
    pub branch: DoglegBranch,
}

pub fn solve_dogleg(p: &QuadSubproblem) -> Result<DoglegStep> {
    p.validate()?;
    let factor = cholesky(&p.b)?;
    solve_dogleg_scaled(&p.g, &p.b, &factor, 1.0, p.delta)
}

/// Dogleg step for the model `g^T s + 0.5 kappa s^T M s` given a Cholesky
/// factor of `M`, so a family of models differing only in `kappa > 0` shares
/// one factorization.
pub fn solve_dogleg_scaled(g: &[f64], m: &SymMatrix, factor: &SpdFactor, kappa: f64, delta: f64) -> Result<DoglegStep> {
    let model = |s: &[f64]| dot(g, s) + 0.5 * kappa * m.quad_form(s);
    let finish = |s: Vec<f64>, branch| {
        let pred = -model(&s);
        let on_boundary = norm(&s) >= delta * (1.0 - BOUNDARY_RTOL);
        DoglegStep { s, pred, on_boundary, branch }
    };

    let mut s_newton = solve_spd(factor, g)?;
    s_newton.iter_mut().for_each(|v| *v = -*v / kappa);
    let newton_norm = norm(&s_newton);
    if newton_norm <= delta {
        return Ok(finish(s_newton, DoglegBranch::Newton));
    }

    let gg = dot(g, g);
    let gbg = kappa * m.quad_form(g);
    let s_cauchy = scaled(-gg / gbg, g);
    let cauchy_norm = norm(&s_cauchy);
    if cauchy_norm >= delta {
        let s = scaled(-delta / gg.sqrt(), g);
        return Ok(finish(s, DoglegBranch::ScaledCauchy));
    }

    let diff = sub(&s_newton, &s_cauchy);
    let d = dot(&diff, &diff);
    if d <= 1e-30 {
        let s = scaled(delta / newton_norm, &s_newton);
        return Ok(finish(s, DoglegBranch::ClippedNewton));
    }
    let e = dot(&diff, &s_cauchy);
    let f = cauchy_norm * cauchy_norm - delta * delta;
    // f < 0 here, so the discriminant is positive up to roundoff
    let disc = (e * e - d * f).max(0.0).sqrt();
    let lambda = if e >= 0.0 { -f / (e + disc) } else { (disc - e) / d };
    let mut s = s_cauchy;
    axpy(lambda, &diff, &mut s);
    Ok(finish(s, DoglegBranch::Interpolated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spd(n: usize, m: &[f64]) -> SymMatrix {
        SymMatrix::gram_plus_shift(n, n, m, 1.0)
    }

    #[test]
    fn identity_hessian_takes_newton() {
        let p = QuadSubproblem::new(vec![0.3, -0.4], SymMatrix::identity(2), 1.0).unwrap();
        let step = solve_dogleg(&p).unwrap();
        assert_eq!(step.branch, DoglegBranch::Newton);
        assert!((step.s[0] + 0.3).abs() < 1e-15 && (step.s[1] - 0.4).abs() < 1e-15);
        assert!((step.pred - 0.125).abs() < 1e-15);
    }

    #[test]
    fn steepest_descent_boundary() {
        let p = QuadSubproblem::new(vec![1.0, 0.0], SymMatrix::identity(2), 0.5).unwrap();
        let step = solve_dogleg(&p).unwrap();
        assert_eq!(step.branch, DoglegBranch::ScaledCauchy);
        assert_eq!(step.s, vec![-0.5, 0.0]);
        assert!(step.on_boundary);
    }

    #[test]
    fn interpolated_branch_hits_boundary() {
        // B = diag(1, 100), g = (1, 1): Cauchy point inside, Newton outside
        let b = SymMatrix::from_diagonal(&[1.0, 100.0]);
        let g = vec![1.0, 1.0];
        let gg = 2.0;
        let gbg = 101.0;
        let cauchy_norm = gg / gbg * 2f64.sqrt();
        let newton_norm = (1.0f64 + 1e-4).sqrt();
        let delta = 0.5 * (cauchy_norm + newton_norm);
        let p = QuadSubproblem::new(g, b, delta).unwrap();
        let step = solve_dogleg(&p).unwrap();
        assert_eq!(step.branch, DoglegBranch::Interpolated);
        assert!((norm(&step.s) - delta).abs() < 1e-10 * delta);
        let sc = scaled(-gg / gbg, &p.g);
        assert!(p.model(&step.s) <= p.model(&sc));
    }

    #[test]
    fn rejects_indefinite_hessian() {
        let b = SymMatrix::from_lower_rows(&[vec![1.0], vec![2.0, 1.0]]).unwrap();
        let p = QuadSubproblem::new(vec![1.0, 0.0], b, 1.0).unwrap();
        assert!(matches!(solve_dogleg(&p), Err(Error::Linalg(_))));
    }

    #[test]
    fn rejects_zero_gradient_and_radius() {
        assert!(QuadSubproblem::new(vec![0.0, 0.0], SymMatrix::identity(2), 1.0).is_err());
        assert!(QuadSubproblem::new(vec![1.0, 0.0], SymMatrix::identity(2), 0.0).is_err());
        assert!(QuadSubproblem::new(vec![1.0], SymMatrix::identity(2), 1.0).is_err());
    }

    /// Grid search for the dogleg path root: independent of the closed form.
    fn bisect_boundary(sc: &[f64], sn: &[f64], delta: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let pt: Vec<f64> = sc.iter().zip(sn).map(|(c, n)| c + mid * (n - c)).collect();
            if norm(&pt) < delta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn cauchy_decrease_and_ball(
            n in 2usize..=10,
            seed in proptest::collection::vec(-1.0f64..1.0, 10 * 10 + 10),
            delta_scale in 0.01f64..3.0,
        ) {
            let m = &seed[..n * n];
            let g: Vec<f64> = seed[100..100 + n].to_vec();
            prop_assume!(norm(&g) > 1e-3);
            let b = spd(n, m);
            let p = QuadSubproblem::new(g.clone(), b.clone(), delta_scale).unwrap();
            let step = solve_dogleg(&p).unwrap();
            let gn = norm(&g);
            let bnorm = b.spectral_norm_upper_bound(50);
            let bound = 0.5 * gn * p.delta.min(gn / bnorm);
            prop_assert!(step.pred >= bound * (1.0 - 1e-12), "pred {} < bound {}", step.pred, bound);
            prop_assert!(norm(&step.s) <= p.delta * (1.0 + 1e-12));
            prop_assert!(step.pred > 0.0);
            prop_assert_eq!(step.on_boundary, norm(&step.s) >= p.delta * (1.0 - 1e-10));

            let gbg = b.quad_form(&g);
            let sc_full = scaled(-(gn * gn) / gbg, &g);
            let sc = if norm(&sc_full) >= p.delta { scaled(-p.delta / gn, &g) } else { sc_full.clone() };
            prop_assert!(p.model(&step.s) <= p.model(&sc) + 1e-12 * (1.0 + p.model(&sc).abs()));

            match step.branch {
                DoglegBranch::Newton => {
                    let r: Vec<f64> = b.mul_vec(&step.s).iter().zip(&g).map(|(x, y)| x + y).collect();
                    prop_assert!(norm(&r) <= 1e-8 * gn);
                }
                DoglegBranch::Interpolated => {
                    let f = cholesky(&b).unwrap();
                    let sn: Vec<f64> = solve_spd(&f, &g).unwrap().iter().map(|v| -v).collect();
                    let lam = bisect_boundary(&sc_full, &sn, p.delta);
                    let expect: Vec<f64> = sc_full.iter().zip(&sn).map(|(c, n)| c + lam * (n - c)).collect();
                    let err = norm(&sub(&expect, &step.s));
                    prop_assert!(err <= 1e-9 * (1.0 + p.delta), "err {}", err);
                    prop_assert!((norm(&step.s) - p.delta).abs() <= 1e-10 * p.delta);
                }
                _ => {}
            }
        }

        #[test]
        fn scaled_model_matches_explicit_matrix(
            n in 2usize..=6,
            seed in proptest::collection::vec(-1.0f64..1.0, 6 * 6 + 6),
            kappa in 0.1f64..10.0,
            delta in 0.05f64..2.0,
        ) {
            let m = spd(n, &seed[..n * n]);
            let g = seed[36..36 + n].to_vec();
            prop_assume!(norm(&g) > 1e-3);
            let mut b = m.clone();
            b.scale(kappa);
            let direct = solve_dogleg(&QuadSubproblem::new(g.clone(), b, delta).unwrap()).unwrap();
            let f = cholesky(&m).unwrap();
            let shared = solve_dogleg_scaled(&g, &m, &f, kappa, delta).unwrap();
            prop_assert_eq!(direct.branch, shared.branch);
            prop_assert!(norm(&sub(&direct.s, &shared.s)) <= 1e-10 * (1.0 + norm(&direct.s)));
        }
    }
}
