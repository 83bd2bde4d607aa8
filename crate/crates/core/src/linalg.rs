//! Dense vector and symmetric-matrix kernels.
//!
//! Vectors are plain `[f64]` slices / `Vec<f64>`. [`SymMatrix`] keeps a full
//! row-major buffer but every constructor and mutator writes both triangles,
//! so symmetry is exact by construction. The null-space operator of a vector
//! `a` is represented by a single Householder reflector and never formed as
//! an `n x (n-1)` matrix.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("null space of a vector in R^1 is trivial")]
    Dimension1,
    #[error("empty dimension")]
    Empty,
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    // scaled to avoid overflow for entries near 1e154
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let ss: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * ss.sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, alpha: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = alpha;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    /// Builds a matrix from row slices. The lower triangle (`j <= i`) is
    /// authoritative; the upper triangle of the input is ignored.
    pub fn from_lower_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if n == 0 {
            return Err(LinalgError::Empty);
        }
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() < i + 1 {
                return Err(LinalgError::DimensionMismatch { expected: i + 1, got: row.len() });
            }
            for j in 0..=i {
                m.set(i, j, row[j]);
            }
        }
        Ok(m)
    }

    /// Builds from a full row-major buffer, reading only the lower triangle.
    pub fn from_row_major_lower(n: usize, buf: &[f64]) -> Result<Self, LinalgError> {
        if buf.len() != n * n {
            return Err(LinalgError::DimensionMismatch { expected: n * n, got: buf.len() });
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, buf[i * n + j]);
            }
        }
        Ok(m)
    }

    /// `M^T M + shift * I` for a row-major `k x n` matrix `M`.
    pub fn gram_plus_shift(k: usize, n: usize, mrows: &[f64], shift: f64) -> Self {
        let mut out = Self::scaled_identity(n, shift);
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..k).map(|r| mrows[r * n + i] * mrows[r * n + j]).sum();
                let v = out.get(i, j) + s;
                out.set(i, j, v);
            }
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// `x^T M x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// `M += alpha * u u^T`
    pub fn rank1_update(&mut self, alpha: f64, u: &[f64]) {
        let n = self.n;
        for i in 0..n {
            let ai = alpha * u[i];
            let row = &mut self.data[i * n..(i + 1) * n];
            for (rj, uj) in row.iter_mut().zip(u) {
                *rj += ai * uj;
            }
        }
    }

    /// `M -= u w^T + w u^T`
    pub fn sym_rank2_sub(&mut self, u: &[f64], w: &[f64]) {
        let n = self.n;
        for i in 0..n {
            let (ui, wi) = (u[i], w[i]);
            let row = &mut self.data[i * n..(i + 1) * n];
            for j in 0..n {
                row[j] -= ui * w[j] + wi * u[j];
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    /// Trailing `(n-1) x (n-1)` block (drops row and column 0).
    pub fn trailing_block(&self) -> SymMatrix {
        let n = self.n;
        let m = n - 1;
        let mut out = SymMatrix::zeros(m);
        for i in 0..m {
            out.data[i * m..(i + 1) * m].copy_from_slice(&self.data[(i + 1) * n + 1..(i + 2) * n]);
        }
        out
    }

    /// Largest eigenvalue magnitude estimated with `iters` power-iteration
    /// steps, never below the largest diagonal magnitude.
    ///
    /// The start vector has irrational-looking entries so that it is not
    /// orthogonal to the dominant eigenvector of structured matrices (a
    /// constant vector is orthogonal to `(1, -1)`, for one).
    pub fn spectral_norm_estimate(&self, iters: usize) -> f64 {
        let n = self.n;
        let diag_max = (0..n).map(|i| self.get(i, i).abs()).fold(0.0, f64::max);
        let golden = 0.5 * (5f64.sqrt() - 1.0);
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i + 1) as f64 * golden).fract()).collect();
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let mut lambda = 0.0;
        for _ in 0..iters {
            let y = self.mul_vec(&x);
            let ny = norm(&y);
            if ny == 0.0 {
                break;
            }
            lambda = ny;
            x = scaled(1.0 / ny, &y);
        }
        // Rayleigh quotient is at least as accurate as the last norm ratio
        let rq = self.quad_form(&x).abs();
        lambda.max(rq).max(diag_max)
    }

    /// Upper bound on `||B||_2`: the power-iteration estimate is raised until
    /// both `U I - B` and `U I + B` admit a Cholesky factorization, and
    /// never exceeds the max-row-sum norm.
    pub fn spectral_norm_upper_bound(&self, iters: usize) -> f64 {
        let n = self.n;
        let inf_norm = (0..n).map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let est = self.spectral_norm_estimate(iters);
        let mut bump = 1e-9;
        let mut u = est * (1.0 + bump);
        while u < inf_norm {
            let shifted = |sign: f64| {
                let mut m = self.clone();
                m.data.iter_mut().for_each(|v| *v *= sign);
                for i in 0..n {
                    m.data[i * n + i] += u;
                }
                cholesky(&m).is_ok()
            };
            if shifted(-1.0) && shifted(1.0) {
                return u;
            }
            bump *= 4.0;
            u = (est * (1.0 + bump)).min(inf_norm);
        }
        inf_norm
    }
}

/// Lower-triangular Cholesky factor `L` with `B = L L^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactor {
    n: usize,
    l: Vec<f64>,
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn l(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        solve_spd(self, b)
    }
}

pub fn cholesky(b: &SymMatrix) -> Result<SpdFactor, LinalgError> {
    let n = b.dim();
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = b.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { row: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = b.get(i, j);
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            s -= dot(ri, rj);
            l[i * n + j] = s / ljj;
        }
    }
    Ok(SpdFactor { n, l })
}

pub fn solve_spd(f: &SpdFactor, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = f.n;
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, got: b.len() });
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let s = dot(&f.l[i * n..i * n + i], &y[..i]);
        y[i] = (y[i] - s) / f.l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= f.l[k * n + i] * y[k];
        }
        y[i] = s / f.l[i * n + i];
    }
    Ok(y)
}

/// Orthonormal basis of `{y : a^T y = 0}`, stored as one Householder
/// reflector `H = I - 2 v v^T / v^T v` with `H a = sign * ||a|| * e_1`.
/// Columns `2..n` of `H` are the basis `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSpaceBasis {
    v: Vec<f64>,
    vtv: f64,
    sign: f64,
    anorm: f64,
}

pub fn nullspace_of(a: &[f64]) -> Result<NullSpaceBasis, LinalgError> {
    let n = a.len();
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    let anorm = norm(a);
    if anorm == 0.0 {
        return Err(LinalgError::ZeroVector);
    }
    if n == 1 {
        return Err(LinalgError::Dimension1);
    }
    let sign = if a[0] > 0.0 { -1.0 } else if a[0] < 0.0 { 1.0 } else { -1.0 };
    let mut v = a.to_vec();
    v[0] -= sign * anorm;
    let vtv = dot(&v, &v);
    Ok(NullSpaceBasis { v, vtv, sign, anorm })
}

impl NullSpaceBasis {
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn householder_vector(&self) -> &[f64] {
        &self.v
    }

    fn reflect(&self, x: &mut [f64]) {
        let c = 2.0 * dot(&self.v, x) / self.vtv;
        axpy(-c, &self.v, x);
    }

    /// `y = Q u`, with `u` of length `n-1`.
    pub fn apply_q(&self, u: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.dim();
        if u.len() + 1 != n {
            return Err(LinalgError::DimensionMismatch { expected: n - 1, got: u.len() });
        }
        let mut x = Vec::with_capacity(n);
        x.push(0.0);
        x.extend_from_slice(u);
        self.reflect(&mut x);
        Ok(x)
    }

    /// `u = Q^T v`, with `v` of length `n`.
    pub fn apply_qt(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.dim();
        if v.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: v.len() });
        }
        let mut x = v.to_vec();
        self.reflect(&mut x);
        x.remove(0);
        Ok(x)
    }

    /// `Q^T B Q` formed in `O(n^2)` as the trailing block of `H B H`.
    pub fn project_matrix(&self, b: &SymMatrix) -> Result<SymMatrix, LinalgError> {
        let n = self.dim();
        if b.dim() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: b.dim() });
        }
        let beta = 2.0 / self.vtv;
        let p = scaled(beta, &b.mul_vec(&self.v));
        let k = 0.5 * beta * dot(&self.v, &p);
        let mut w = p;
        axpy(-k, &self.v, &mut w);
        let mut hbh = b.clone();
        hbh.sym_rank2_sub(&self.v, &w);
        Ok(hbh.trailing_block())
    }

    /// The image `H a = sign * ||a|| * e_1` coefficient.
    pub fn image_coefficient(&self) -> f64 {
        self.sign * self.anorm
    }
}
