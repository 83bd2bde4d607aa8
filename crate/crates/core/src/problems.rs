//! Test problem catalogue.
//!
//! Sixteen numbered entries; entries 8 and 16 share one definition (the
//! trigonometric function). Residual-based problems use `f = sum r_i^2`.
//! Boundary values `x_0`, `x_{n+1}` are zero unless stated otherwise and
//! `h = 1 / (n + 1)`.
//!
//! | No. | Name | Definition | `x0` |
//! |---|---|---|---|
//! | 1 | Cube | `(x_1 - 1)^2 + sum_{i>=2} 100 (x_i - x_{i-1}^3)^2` | `(-1.2, 1, ...)` |
//! | 2 | Penalty-I | `1e-5 sum (x_i - 1)^2 + (sum x_i^2 - 1/4)^2` | `x_i = i` |
//! | 3 | Beale | per pair `sum_{k=1..3} (c_k - x_1 (1 - x_2^k))^2`, `c = (1.5, 2.25, 2.625)` | `1` |
//! | 4 | Conic | `0.5 (w - e)^T A (w - e)`, `w = x / (1 - c^T x)`, `c = e / (2n)`, `A = tridiag(-1, 4, -1)` | `x_i = i / n` |
//! | 5 | Extended Powell | per block `(x_1 + 10 x_2)^2 + 5 (x_3 - x_4)^2 + (x_2 - 2 x_3)^4 + 10 (x_1 - x_4)^4` | `(3, -1, 0, 1, ...)` |
//! | 6 | Variably Dimensioned | `r_i = x_i - 1`, `r_{n+1} = sum i (x_i - 1)`, `r_{n+2} = r_{n+1}^2` | `x_i = 1 - i / n` |
//! | 7 | Rosenbrock | per pair `100 (x_2 - x_1^2)^2 + (1 - x_1)^2` | `(-1.2, 1, ...)` |
//! | 8, 16 | Extended Trigonometric | `r_i = n - sum_j cos x_j + i (1 - cos x_i) - sin x_i` | `1 / n` |
//! | 9 | Tridiagonal Exponential | `r_i = x_i - exp(cos(h (x_{i-1} + x_i + x_{i+1})))` | `1.5` |
//! | 10 | Brent | `r_i = 3 x_i (x_{i+1} - 2 x_i + x_{i-1}) + (x_{i+1} - x_{i-1})^2 / 4`, `x_{n+1} = 20` | `10` |
//! | 11 | Troesch | `r_i = 2 x_i + 10 h^2 sinh(10 x_i) - x_{i-1} - x_{i+1}`, `x_{n+1} = 1` | `0` |
//! | 12 | Cragg and Levy | per block `(e^{x_1} - x_2)^4 + 100 (x_2 - x_3)^6 + tan^4(x_3 - x_4) + x_1^8 + (x_4 - 1)^2` | `(1, 2, 2, 2, ...)` |
//! | 13 | Broyden Tridiagonal | `r_i = (3 - 2 x_i) x_i - x_{i-1} - 2 x_{i+1} + 1` | `-1` |
//! | 14 | Brown | `sum_{i<n} (x_i^2)^{x_{i+1}^2 + 1} + (x_{i+1}^2)^{x_i^2 + 1}` | `(-1, 1, -1, ...)` |
//! | 15 | Discrete Boundary Value | `r_i = 2 x_i - x_{i-1} - x_{i+1} + h^2 (x_i + t_i + 1)^3 / 2`, `t_i = i h` | `t_i (t_i - 1)` |

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemKind {
    Cube,
    PenaltyI,
    Beale,
    Conic,
    ExtendedPowell,
    VariablyDimensioned,
    Rosenbrock,
    Trigonometric,
    TridiagonalExponential,
    Brent,
    Troesch,
    CraggLevy,
    BroydenTridiagonal,
    Brown,
    DiscreteBoundaryValue,
}

/// One numbered catalogue entry with its reference dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogueEntry {
    pub number: usize,
    pub name: &'static str,
    pub kind: ProblemKind,
    /// Dimension used for the small benchmark set.
    pub small_dim: usize,
    /// Reference iteration count for the small set.
    pub small_iters: usize,
    /// Dimensions used for the scaled benchmark set.
    pub scaled_dims: &'static [usize],
}

pub const CATALOGUE: [CatalogueEntry; 16] = [
    entry(1, "Cube", ProblemKind::Cube, 2, 52, &[20, 200, 1000]),
    entry(2, "Penalty-I", ProblemKind::PenaltyI, 2, 10, &[200, 500, 1000]),
    entry(3, "Beale", ProblemKind::Beale, 2, 18, &[2, 20, 200, 2000]),
    entry(4, "Conic", ProblemKind::Conic, 2, 16, &[20, 200, 2000]),
    entry(5, "Extended Powell", ProblemKind::ExtendedPowell, 4, 41, &[40, 1000, 2000]),
    entry(6, "Variably Dimensioned", ProblemKind::VariablyDimensioned, 4, 32, &[40, 400]),
    entry(7, "Rosenbrock", ProblemKind::Rosenbrock, 2, 50, &[20, 200, 2000]),
    entry(8, "Extended Trigonometric", ProblemKind::Trigonometric, 4, 47, &[4, 40]),
    entry(9, "Tridiagonal Exponential", ProblemKind::TridiagonalExponential, 4, 7, &[40, 400, 4000]),
    entry(10, "Brent", ProblemKind::Brent, 4, 81, &[4, 40]),
    entry(11, "Troesch", ProblemKind::Troesch, 4, 59, &[4, 40, 500]),
    entry(12, "Cragg and Levy", ProblemKind::CraggLevy, 4, 48, &[4, 40, 400]),
    entry(13, "Broyden Tridiagonal", ProblemKind::BroydenTridiagonal, 4, 35, &[4, 40, 400, 1000]),
    entry(14, "Brown", ProblemKind::Brown, 2, 91, &[2, 20, 200]),
    entry(15, "Discrete Boundary Value", ProblemKind::DiscreteBoundaryValue, 4, 23, &[4, 400, 1000, 4000]),
    entry(16, "Extended Trigonometric", ProblemKind::Trigonometric, 4, 14, &[4, 40, 400]),
];

const fn entry(
    number: usize,
    name: &'static str,
    kind: ProblemKind,
    small_dim: usize,
    small_iters: usize,
    scaled_dims: &'static [usize],
) -> CatalogueEntry {
    CatalogueEntry { number, name, kind, small_dim, small_iters, scaled_dims }
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Cube => "Cube",
            ProblemKind::PenaltyI => "Penalty-I",
            ProblemKind::Beale => "Beale",
            ProblemKind::Conic => "Conic",
            ProblemKind::ExtendedPowell => "Extended Powell",
            ProblemKind::VariablyDimensioned => "Variably Dimensioned",
            ProblemKind::Rosenbrock => "Rosenbrock",
            ProblemKind::Trigonometric => "Extended Trigonometric",
            ProblemKind::TridiagonalExponential => "Tridiagonal Exponential",
            ProblemKind::Brent => "Brent",
            ProblemKind::Troesch => "Troesch",
            ProblemKind::CraggLevy => "Cragg and Levy",
            ProblemKind::BroydenTridiagonal => "Broyden Tridiagonal",
            ProblemKind::Brown => "Brown",
            ProblemKind::DiscreteBoundaryValue => "Discrete Boundary Value",
        }
    }

    pub fn all() -> [ProblemKind; 15] {
        use ProblemKind::*;
        [
            Cube,
            PenaltyI,
            Beale,
            Conic,
            ExtendedPowell,
            VariablyDimensioned,
            Rosenbrock,
            Trigonometric,
            TridiagonalExponential,
            Brent,
            Troesch,
            CraggLevy,
            BroydenTridiagonal,
            Brown,
            DiscreteBoundaryValue,
        ]
    }

    fn check_dim(self, n: usize) -> std::result::Result<(), &'static str> {
        let (ok, reason) = match self {
            ProblemKind::Beale | ProblemKind::Rosenbrock => (n >= 2 && n % 2 == 0, "n must be even"),
            ProblemKind::ExtendedPowell | ProblemKind::CraggLevy => {
                (n >= 4 && n % 4 == 0, "n must be a positive multiple of 4")
            }
            ProblemKind::Cube | ProblemKind::Brown => (n >= 2, "n must be at least 2"),
            _ => (n >= 1, "n must be positive"),
        };
        if ok {
            Ok(())
        } else {
            Err(reason)
        }
    }

    fn start(self, n: usize) -> Vec<f64> {
        let nf = n as f64;
        let h = 1.0 / (nf + 1.0);
        (0..n)
            .map(|i| {
                let k = (i + 1) as f64;
                match self {
                    ProblemKind::Cube | ProblemKind::Rosenbrock => {
                        if i % 2 == 0 {
                            -1.2
                        } else {
                            1.0
                        }
                    }
                    ProblemKind::PenaltyI => k,
                    ProblemKind::Beale => 1.0,
                    ProblemKind::Conic => k / nf,
                    ProblemKind::ExtendedPowell => [3.0, -1.0, 0.0, 1.0][i % 4],
                    ProblemKind::VariablyDimensioned => 1.0 - k / nf,
                    ProblemKind::Trigonometric => 1.0 / nf,
                    ProblemKind::TridiagonalExponential => 1.5,
                    ProblemKind::Brent => 10.0,
                    ProblemKind::Troesch => 0.0,
                    ProblemKind::CraggLevy => [1.0, 2.0, 2.0, 2.0][i % 4],
                    ProblemKind::BroydenTridiagonal => -1.0,
                    ProblemKind::Brown => {
                        if i % 2 == 0 {
                            -1.0
                        } else {
                            1.0
                        }
                    }
                    ProblemKind::DiscreteBoundaryValue => {
                        let t = k * h;
                        t * (t - 1.0)
                    }
                }
            })
            .collect()
    }

    fn optimum(self) -> Option<f64> {
        match self {
            ProblemKind::PenaltyI | ProblemKind::Trigonometric | ProblemKind::Brent => None,
            _ => Some(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestProblem {
    pub kind: ProblemKind,
    pub name: &'static str,
    pub n: usize,
    pub x0: Vec<f64>,
    /// Known optimal value, when there is one.
    pub f_opt: Option<f64>,
}

fn normalize(name: &str) -> String {
    name.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect()
}

/// Looks a problem up by catalogue number or by name; matching ignores case,
/// spaces and punctuation, and a few short aliases are accepted.
pub fn lookup_kind(name: &str) -> Option<ProblemKind> {
    let key = normalize(name);
    if let Ok(num) = key.parse::<usize>() {
        return CATALOGUE.iter().find(|e| e.number == num).map(|e| e.kind);
    }
    let alias = match key.as_str() {
        "penalty1" | "penalty" => Some(ProblemKind::PenaltyI),
        "powell" => Some(ProblemKind::ExtendedPowell),
        "extendedrosenbrock" => Some(ProblemKind::Rosenbrock),
        "trigonometric" => Some(ProblemKind::Trigonometric),
        "extendedbeale" => Some(ProblemKind::Beale),
        "extendedcube" => Some(ProblemKind::Cube),
        "cragglevy" => Some(ProblemKind::CraggLevy),
        "broydentridiag" => Some(ProblemKind::BroydenTridiagonal),
        "brownbadlyscaled" => Some(ProblemKind::Brown),
        _ => None,
    };
    alias.or_else(|| ProblemKind::all().into_iter().find(|k| normalize(k.name()) == key))
}

/// Catalogue row for a name or number. A name shared by two rows resolves to
/// the first one.
pub fn lookup_entry(name: &str) -> Option<&'static CatalogueEntry> {
    if let Ok(num) = normalize(name).parse::<usize>() {
        return CATALOGUE.iter().find(|e| e.number == num);
    }
    let kind = lookup_kind(name)?;
    CATALOGUE.iter().find(|e| e.kind == kind)
}

pub fn get_problem(name: &str, n: usize) -> Result<TestProblem> {
    let kind = lookup_kind(name).ok_or_else(|| Error::UnknownProblem(name.to_string()))?;
    TestProblem::new(kind, n)
}

impl TestProblem {
    pub fn new(kind: ProblemKind, n: usize) -> Result<Self> {
        kind.check_dim(n).map_err(|reason| Error::BadDimension { name: kind.name().to_string(), n, reason })?;
        Ok(Self { kind, name: kind.name(), n, x0: kind.start(n), f_opt: kind.optimum() })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n, "point has wrong dimension");
        match self.kind {
            ProblemKind::Cube => cube(x, None),
            ProblemKind::PenaltyI => penalty_i(x, None),
            ProblemKind::Beale => beale(x, None),
            ProblemKind::Conic => conic(x, None),
            ProblemKind::ExtendedPowell => powell(x, None),
            ProblemKind::Rosenbrock => rosenbrock(x, None),
            ProblemKind::CraggLevy => cragg_levy(x, None),
            ProblemKind::Brown => brown(x, None),
            ProblemKind::VariablyDimensioned => variably_dimensioned(x, None),
            ProblemKind::Trigonometric => trigonometric(x, None),
            _ => banded_least_squares(self.kind, x, None),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "point has wrong dimension");
        let mut g = vec![0.0; self.n];
        let out = Some(g.as_mut_slice());
        match self.kind {
            ProblemKind::Cube => cube(x, out),
            ProblemKind::PenaltyI => penalty_i(x, out),
            ProblemKind::Beale => beale(x, out),
            ProblemKind::Conic => conic(x, out),
            ProblemKind::ExtendedPowell => powell(x, out),
            ProblemKind::Rosenbrock => rosenbrock(x, out),
            ProblemKind::CraggLevy => cragg_levy(x, out),
            ProblemKind::Brown => brown(x, out),
            ProblemKind::VariablyDimensioned => variably_dimensioned(x, out),
            ProblemKind::Trigonometric => trigonometric(x, out),
            _ => banded_least_squares(self.kind, x, out),
        };
        g
    }
}

// Each evaluator returns f and, when `grad` is given, overwrites it with the
// gradient.

fn cube(x: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let mut f = (x[0] - 1.0).powi(2);
    for i in 1..x.len() {
        f += 100.0 * (x[i] - x[i - 1].powi(3)).powi(2);
    }
    if let Some(g) = grad {
        g.fill(0.0);
        g[0] = 2.0 * (x[0] - 1.0);
        for i in 1..x.len() {
            let r = x[i] - x[i - 1].powi(3);
            g[i] += 200.0 * r;
            g[i - 1] -= 600.0 * r * x[i - 1] * x[i - 1];
        }
    }
    f
}

const PENALTY_ALPHA: f64 = 1e-5;

fn penalty_i(x: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let ss: f64 = x.iter().map(|v| v * v).sum();
    let t = ss - 0.25;
    let f = PENALTY_ALPHA * x.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>() + t * t;
    if let Some(g) = grad {
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi = 2.0 * PENALTY_ALPHA * (xi - 1.0) + 4.0 * t * xi;
        }
    }
    f
}

fn beale(x: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
    const C: [f64; 3] = [1.5, 2.25, 2.625];
    let mut f = 0.0;
    for j in (0..x.len()).step_by(2) {
        let (u, v) = (x[j], x[j + 1]);
        let (mut gu, mut gv) = (0.0, 0.0);
        let mut vk = 1.0;
        for (k, c) in C.iter().enumerate() {
            let dvk = (k + 1) as f64 * vk; // d(v^{k+1})/dv
            vk *= v;
            let r = c - u * (1.0 - vk);
            f += r * r;
            gu += -2.0 * r * (1.0 - vk);
            gv += 2.0 * r * u * dvk;
        }
        if let Some(g) = grad.as_deref_mut() {
            g[j] = gu;
            g[j + 1] = gv;
        }
    }
    f
}

/// Off-diagonal of the conic problem's tridiagonal matrix.
const CONIC_OFF: f64 = -1.0;
const CONIC_DIAG: f64 = 4.0;

fn conic(x: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let n = x.len();
    let c = 1.0 / (2.0 * n as f64);
    let d = 1.0 - c * x.iter().sum::<f64>();
    let r: Vec<f64> = x.iter().map(|v| v / d - 1.0).collect();
    let ar: Vec<f64> = (0..n)
        .map(|i| {
            let mut v = CONIC_DIAG * r[i];
            if i > 0 {
                v += CONIC_OFF * r[i - 1];
            }
            if i + 1 < n {
                v += CONIC_OFF * r[i + 1];
            }
            v
        })
        .collect();
    let rar: f64 = r.iter().zip(&ar).map(|(a, b)| a * b).sum();
    if let Some(g) = grad {
        let xar: f64 = x.iter().zip(&ar).map(|(a, b)| a * b).sum();
        let tail = c * xar / (d * d);
        for (gi, ari) in g.iter_mut().zip(&ar) {
            *gi = ari / d + tail;
        }
    }
    0.5 * rar
}

fn powell(x: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
    let mut f = 0.0;
    for j in (0..x.len()).step_by(4) {
        let (a, b, c, d) = (x[j], x[j + 1], x[j + 2], x[j + 3]);
        let t1 = a + 10.0 * b;
        let t2 = c - d;
        let t3 = b - 2.0 * c;
        let t4 = a - d;
        f += t1 * t1 + 5.0 * t2 * t2 + t3.powi(4) + 10.0 * t4.powi(4);
        if let Some(g) = grad.as_deref_mut() {
            g[j] = 2.0 * t1 + 40.0 * t4.powi(3);
            g[j + 1] = 20.0 * t1 + 4.0 * t3.powi(3);
            g[j + 2] = 10.0 * t2 - 8.0 * t3.powi(3);
            g[j + 3] = -10.0 * t2 - 40.0 * t4.powi(3);
        }
    }
    f
}

fn rosenbrock(x: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
    let mut f = 0.0;
    for j in (0..x.len()).step_by(2) {
        let (u, v) = (x[j], x[j + 1]);
        let r = v - u * u;
        f += 100.0 * r * r + (1.0 - u).powi(2);
        if let Some(g) = grad.as_deref_mut() {
            g[j] = -400.0 * u * r - 2.0 * (1.0 - u);
            g[j + 1] = 200.0 * r;
        }
    }
    f
}

fn cragg_levy(x: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
    let mut f = 0.0;
    for j in (0..x.len()).step_by(4) {
        let (a, b, c, d) = (x[j], x[j + 1], x[j + 2], x[j + 3]);
        let ea = a.exp();
        let t1 = ea - b;
        let t2 = b - c;
        let tn = (c - d).tan();
        let sec2 = 1.0 + tn * tn;
        f += t1.powi(4) + 100.0 * t2.powi(6) + tn.powi(4) + a.powi(8) + (d - 1.0).powi(2);
        if let Some(g) = grad.as_deref_mut() {
            g[j] = 4.0 * t1.powi(3) * ea + 8.0 * a.powi(7);
            g[j + 1] = -4.0 * t1.powi(3) + 600.0 * t2.powi(5);
            g[j + 2] = -600.0 * t2.powi(5) + 4.0 * tn.powi(3) * sec2;
            g[j + 3] = -4.0 * tn.powi(3) * sec2 + 2.0 * (d - 1.0);
        }
    }
    f
}

/// `(p^2)^(q^2 + 1)` and its partial derivatives in `p` and `q`.
fn brown_term(p: &[f64; 2]) -> (f64, f64, f64) {
    let (p, q) = (p[0], p[1]);
    let p2 = p * p;
    let e = q * q + 1.0;
    let v = p2.powf(e);
    let dp = e * p2.powf(q * q) * 2.0 * p;
    // v ln(p^2) -> 0 as p -> 0
    let dq = if p2 == 0.0 { 0.0 } else { v * p2.ln() * 2.0 * q };
    (v, dp, dq)
}

fn brown(x: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    let mut f = 0.0;
    for i in 0..x.len() - 1 {
        let (u, v) = (x[i], x[i + 1]);
        let (t1, d1u, d1v) = brown_term(&[u, v]);
        let (t2, d2v, d2u) = brown_term(&[v, u]);
        f += t1 + t2;
        if let Some(g) = grad.as_deref_mut() {
            g[i] += d1u + d2u;
            g[i + 1] += d1v + d2v;
        }
    }
    f
}

fn variably_dimensioned(x: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let s: f64 = x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * (v - 1.0)).sum();
    let f = x.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>() + s * s + s.powi(4);
    if let Some(g) = grad {
        let w = 2.0 * s + 4.0 * s.powi(3);
        for (i, (gi, xi)) in g.iter_mut().zip(x).enumerate() {
            *gi = 2.0 * (xi - 1.0) + w * (i + 1) as f64;
        }
    }
    f
}

fn trigonometric(x: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let n = x.len() as f64;
    let csum: f64 = x.iter().map(|v| v.cos()).sum();
    let r: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| n - csum + (i + 1) as f64 * (1.0 - v.cos()) - v.sin())
        .collect();
    if let Some(g) = grad {
        let rsum: f64 = r.iter().sum();
        for (i, gi) in g.iter_mut().enumerate() {
            let (s, c) = x[i].sin_cos();
            // dr_k/dx_i = sin x_i for k != i, plus (i+1) sin x_i - cos x_i for k = i
            *gi = 2.0 * (rsum * s + r[i] * ((i + 1) as f64 * s - c));
        }
    }
    r.iter().map(|v| v * v).sum()
}

/// Residual `r_i` and its partials in `(x_{i-1}, x_i, x_{i+1})` for the
/// tridiagonal residual problems. `h = 1 / (n + 1)`.
fn banded_residual(kind: ProblemKind, i: usize, h: f64, l: f64, m: f64, r: f64) -> (f64, [f64; 3]) {
    match kind {
        ProblemKind::TridiagonalExponential => {
            let u = h * (l + m + r);
            let e = u.cos().exp();
            let d = e * u.sin() * h;
            (m - e, [d, 1.0 + d, d])
        }
        ProblemKind::Brent => {
            let lap = r - 2.0 * m + l;
            let diff = r - l;
            let v = 3.0 * m * lap + 0.25 * diff * diff;
            (v, [3.0 * m - 0.5 * diff, 3.0 * lap - 6.0 * m, 3.0 * m + 0.5 * diff])
        }
        ProblemKind::Troesch => {
            const RHO: f64 = 10.0;
            let c = RHO * h * h;
            let v = 2.0 * m + c * (RHO * m).sinh() - l - r;
            (v, [-1.0, 2.0 + c * RHO * (RHO * m).cosh(), -1.0])
        }
        ProblemKind::BroydenTridiagonal => {
            let v = (3.0 - 2.0 * m) * m - l - 2.0 * r + 1.0;
            (v, [-1.0, 3.0 - 4.0 * m, -2.0])
        }
        ProblemKind::DiscreteBoundaryValue => {
            let t = (i + 1) as f64 * h;
            let w = m + t + 1.0;
            let v = 2.0 * m - l - r + 0.5 * h * h * w.powi(3);
            (v, [-1.0, 2.0 + 1.5 * h * h * w * w, -1.0])
        }
        _ => unreachable!("not a banded residual problem"),
    }
}

fn right_boundary(kind: ProblemKind) -> f64 {
    match kind {
        ProblemKind::Brent => 20.0,
        ProblemKind::Troesch => 1.0,
        _ => 0.0,
    }
}

fn banded_least_squares(kind: ProblemKind, x: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
    let n = x.len();
    let h = 1.0 / (n as f64 + 1.0);
    let rb = right_boundary(kind);
    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    let mut f = 0.0;
    for i in 0..n {
        let l = if i > 0 { x[i - 1] } else { 0.0 };
        let r = if i + 1 < n { x[i + 1] } else { rb };
        let (v, d) = banded_residual(kind, i, h, l, x[i], r);
        f += v * v;
        if let Some(g) = grad.as_deref_mut() {
            if i > 0 {
                g[i - 1] += 2.0 * v * d[0];
            }
            g[i] += 2.0 * v * d[1];
            if i + 1 < n {
                g[i + 1] += 2.0 * v * d[2];
            }
        }
    }
    f
}

/// Largest central-difference discrepancy
/// `max_i |g_i - fd_i| / max(1, ||g||_inf)` with step
/// `h_i = eps^{1/3} (1 + |x_i|)`.
pub fn fd_check(p: &TestProblem, x: &[f64]) -> f64 {
    let g = p.gradient(x);
    let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let cbrt_eps = f64::EPSILON.cbrt();
    let mut xp = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let h = cbrt_eps * (1.0 + x[i].abs());
        xp[i] = x[i] + h;
        let fp = p.value(&xp);
        xp[i] = x[i] - h;
        let fm = p.value(&xp);
        xp[i] = x[i];
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((g[i] - fd).abs() / scale);
    }
    worst
}

/// `count` points `x0_i + U(-0.1, 0.1) (1 + |x0_i|)` from a seeded stream.
pub fn perturbed_points(p: &TestProblem, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| p.x0.iter().map(|v| v + rng.gen_range(-0.1..0.1) * (1.0 + v.abs())).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_minimizer() {
        let p = get_problem("Rosenbrock", 2).unwrap();
        assert_eq!(p.value(&[1.0, 1.0]), 0.0);
        assert_eq!(p.gradient(&[1.0, 1.0]), vec![0.0, 0.0]);
        assert_eq!(p.x0, vec![-1.2, 1.0]);
    }

    #[test]
    fn beale_minimizer() {
        let p = get_problem("beale", 2).unwrap();
        assert_eq!(p.value(&[3.0, 0.5]), 0.0);
    }

    #[test]
    fn known_minimizers() {
        let cases: [(&str, usize, Vec<f64>); 6] = [
            ("Cube", 3, vec![1.0; 3]),
            ("Extended Powell", 8, vec![0.0; 8]),
            ("Variably Dimensioned", 5, vec![1.0; 5]),
            ("Cragg and Levy", 4, vec![0.0, 1.0, 1.0, 1.0]),
            ("Conic", 6, vec![2.0 / 3.0; 6]),
            ("Brown", 4, vec![0.0; 4]),
        ];
        for (name, n, x) in cases {
            let p = get_problem(name, n).unwrap();
            assert!(p.value(&x).abs() < 1e-28, "{name}: {}", p.value(&x));
            assert!(p.gradient(&x).iter().all(|g| g.abs() < 1e-12), "{name}");
        }
    }

    #[test]
    fn dimension_checks() {
        assert!(matches!(get_problem("Extended Powell", 6), Err(Error::BadDimension { n: 6, .. })));
        assert!(matches!(get_problem("Rosenbrock", 3), Err(Error::BadDimension { .. })));
        assert!(matches!(get_problem("Cube", 1), Err(Error::BadDimension { .. })));
        assert!(matches!(get_problem("Himmelblau", 2), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn name_matching() {
        assert_eq!(lookup_kind("extended  POWELL"), Some(ProblemKind::ExtendedPowell));
        assert_eq!(lookup_kind("penalty-i"), Some(ProblemKind::PenaltyI));
        assert_eq!(lookup_kind("16"), Some(ProblemKind::Trigonometric));
        assert_eq!(lookup_kind("8"), Some(ProblemKind::Trigonometric));
        assert_eq!(lookup_kind("17"), None);
        for e in CATALOGUE {
            assert_eq!(lookup_kind(e.name), Some(e.kind));
        }
    }

    #[test]
    fn catalogue_dimensions_are_admissible() {
        for e in CATALOGUE {
            assert!(TestProblem::new(e.kind, e.small_dim).is_ok());
            for &n in e.scaled_dims {
                assert!(TestProblem::new(e.kind, n).is_ok(), "{} n={n}", e.name);
            }
        }
    }

    #[test]
    fn stationary_point_has_small_fd_error() {
        let p = get_problem("Rosenbrock", 2).unwrap();
        assert!(fd_check(&p, &[1.0, 1.0]) <= 1e-6);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for kind in ProblemKind::all() {
            for n in [4, 8] {
                let p = TestProblem::new(kind, n).unwrap();
                assert!(fd_check(&p, &p.x0) <= 1e-6, "{:?} n={n}: {}", kind, fd_check(&p, &p.x0));
                for x in perturbed_points(&p, 3, 7) {
                    assert!(fd_check(&p, &x) <= 1e-6, "{:?} n={n}", kind);
                }
            }
        }
    }
}
