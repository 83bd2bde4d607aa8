//! Unconstrained minimization with a conic-model trust-region method.
//!
//! The local model at `x` is
//!
//! ```text
//!   m(s) = f + g^T s / (1 - a^T s) + s^T B s / (2 (1 - a^T s)^2)
//! ```
//!
//! with a horizon vector `a` and a positive definite `B`. The subproblem is
//! solved either by the alternating-direction method ([`Strategy::Adm`]) or by
//! a conic dogleg ([`Strategy::Dctr`]).
//!
//! ```
//! use adctr::{minimize, SolverConfig, RunStatus};
//!
//! let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
//! let g = |x: &[f64]| vec![2.0 * (x[0] - 1.0), 20.0 * (x[1] + 2.0)];
//! let report = minimize(f, g, &[0.0, 0.0], &SolverConfig::default()).unwrap();
//! assert_eq!(report.status, RunStatus::Converged);
//! ```

pub mod bench;
pub mod conic;
pub mod dogleg;
pub mod driver;
pub mod error;
pub mod linalg;
pub mod model_update;
pub mod oracles;
pub mod problems;

pub use conic::{solve_conic_adm, solve_conic_dogleg, ConicSubproblem, StepKind, SubproblemResult, TauCase, TauHit};
pub use dogleg::{solve_dogleg, DoglegBranch, DoglegStep, QuadSubproblem};
pub use driver::{minimize, verify_pred_bounds, RunReport, RunStatus, SolverConfig, Strategy};
pub use error::{Error, Result};
pub use linalg::{cholesky, nullspace_of, solve_spd, NullSpaceBasis, SpdFactor, SymMatrix};
pub use problems::{fd_check, get_problem, TestProblem};
