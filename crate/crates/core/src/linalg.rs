//! Dense row-major matrices, vector kernels, and spectral quantities.
//!
//! Singular values come from a one-sided (Hestenes) Jacobi sweep over the
//! columns of `A` (or of `Aᵀ` when `A` is wide). The same decomposition backs
//! the Moore–Penrose pseudoinverse, which the solver uses only as an
//! independent reference point for stopping and verification.

use crate::error::{Error, Result};

/// Relative singular-value cutoff used to decide numerical rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Relative residual below which a system is reported as consistent.
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-8;

const JACOBI_MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Builds a matrix from row-major storage, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(m * n);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(m, n, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), out_row);
                }
            }
        }
        Ok(out)
    }

    /// Copies `A[rows, cols]` into a new matrix. Indices are 0-based.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            let r = self.row(i);
            data.extend(cols.iter().map(|&j| r[j]));
        }
        DenseMatrix {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }

    /// Entry-wise difference `self - other`.
    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += a * x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Euclidean distance between two vectors of equal length.
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn frobenius_norm_sq(m: &DenseMatrix) -> f64 {
    m.data.iter().map(|v| v * v).sum()
}

/// Largest squared singular value. The zero matrix maps to 0.
pub fn spectral_norm_sq(m: &DenseMatrix) -> f64 {
    if m.is_zero() {
        return 0.0;
    }
    let s = svd(m).sigma[0];
    s * s
}

pub fn matvec(a: &DenseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != a.cols {
        return Err(Error::DimensionMismatch(format!(
            "matvec: {}x{} matrix with vector of length {}",
            a.rows,
            a.cols,
            x.len()
        )));
    }
    Ok((0..a.rows).map(|i| dot(a.row(i), x)).collect())
}

pub fn matvec_transpose(a: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "matvec_transpose: {}x{} matrix with vector of length {}",
            a.rows,
            a.cols,
            y.len()
        )));
    }
    let mut out = vec![0.0; a.cols];
    for (i, &yi) in y.iter().enumerate() {
        if yi != 0.0 {
            axpy(yi, a.row(i), &mut out);
        }
    }
    Ok(out)
}

/// Thin singular value decomposition `A = U diag(sigma) Vᵀ` with
/// `k = min(m, n)` terms, singular values in non-increasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    /// Number of singular values strictly above `rank_tol * sigma_1`.
    pub fn rank(&self, rank_tol: f64) -> usize {
        let cutoff = self.sigma.first().copied().unwrap_or(0.0) * rank_tol;
        self.sigma.iter().take_while(|&&s| s > cutoff && s > 0.0).count()
    }
}

pub fn svd(a: &DenseMatrix) -> Svd {
    let (m, n) = a.shape();
    if m >= n {
        let cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
        let (u, sigma, v) = one_sided_jacobi(cols, m);
        Svd { u, sigma, v }
    } else {
        // Aᵀ = U' S V'ᵀ  =>  A = V' S U'ᵀ
        let cols: Vec<Vec<f64>> = (0..m).map(|i| a.row(i).to_vec()).collect();
        let (u_t, sigma, v_t) = one_sided_jacobi(cols, n);
        Svd {
            u: v_t,
            sigma,
            v: u_t,
        }
    }
}

/// Orthogonalizes the given columns (each of length `len`) by plane rotations.
/// Returns `(U, sigma, V)` with `U` of size `len x k` and `V` of size `k x k`.
fn one_sided_jacobi(mut cols: Vec<Vec<f64>>, len: usize) -> (DenseMatrix, Vec<f64>, DenseMatrix) {
    let k = cols.len();
    let mut v: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (len.max(1) as f64).sqrt();
    let mut norms: Vec<f64> = vec![0.0; k];

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        for (nrm, c) in norms.iter_mut().zip(&cols) {
            *nrm = dot(c, c);
        }
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                norms[p] = alpha - t * gamma;
                norms[q] = beta + t * gamma;
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = cols.iter().enumerate().map(|(j, c)| (norm2(c), j)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut u = DenseMatrix::zeros(len, k);
    let mut vm = DenseMatrix::zeros(k, k);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &(s, src)) in order.iter().enumerate() {
        sigma.push(s);
        if s > 0.0 {
            for i in 0..len {
                u.set(i, dst, cols[src][i] / s);
            }
        }
        for i in 0..k {
            vm.set(i, dst, v[src][i]);
        }
    }
    (u, sigma, vm)
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let a = *xi;
        let b = *yi;
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInfo {
    pub sigma_max: f64,
    pub sigma_min_pos: f64,
    pub rank: usize,
    pub frob_sq: f64,
    pub cond: f64,
    /// The retained nonzero singular values, largest first.
    pub singular_values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl SpectralInfo {
    pub fn full_column_rank(&self) -> bool {
        self.rank == self.cols
    }
}

pub fn spectral_info(a: &DenseMatrix, rank_tol: f64) -> Result<SpectralInfo> {
    if rank_tol <= 0.0 {
        return Err(Error::InvalidArgument("rank_tol must be positive".into()));
    }
    if a.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let dec = svd(a);
    let rank = dec.rank(rank_tol);
    let singular_values = dec.sigma[..rank].to_vec();
    let sigma_max = singular_values[0];
    let sigma_min_pos = singular_values[rank - 1];
    Ok(SpectralInfo {
        sigma_max,
        sigma_min_pos,
        rank,
        frob_sq: frobenius_norm_sq(a),
        cond: sigma_max / sigma_min_pos,
        singular_values,
        rows: a.rows(),
        cols: a.cols(),
    })
}

/// `A† = V_r diag(1/sigma) U_rᵀ` over the numerically nonzero singular values.
pub fn pseudoinverse(a: &DenseMatrix, rank_tol: f64) -> DenseMatrix {
    let (m, n) = a.shape();
    let mut out = DenseMatrix::zeros(n, m);
    if a.is_zero() {
        return out;
    }
    let dec = svd(a);
    let r = dec.rank(rank_tol);
    for l in 0..r {
        let inv = 1.0 / dec.sigma[l];
        for i in 0..n {
            let vil = dec.v.get(i, l) * inv;
            if vil == 0.0 {
                continue;
            }
            let row = &mut out.data[i * m..(i + 1) * m];
            for (j, o) in row.iter_mut().enumerate() {
                *o += vil * dec.u.get(j, l);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct OracleTolerances {
    pub rank_tol: f64,
    pub consistency_tol: f64,
}

impl Default for OracleTolerances {
    fn default() -> Self {
        OracleTolerances {
            rank_tol: DEFAULT_RANK_TOL,
            consistency_tol: DEFAULT_CONSISTENCY_TOL,
        }
    }
}

/// Reference solution obtained from a truncated SVD.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// `A†b`, the minimum-norm least-squares solution.
    pub x_pinv: Vec<f64>,
    /// Orthogonal projection of `x0` onto the solution set: `(I - A†A)x0 + A†b`.
    pub x0_star: Vec<f64>,
    pub consistent: bool,
    pub rank: usize,
}

pub fn pinv_solve(
    a: &DenseMatrix,
    b: &[f64],
    x0: &[f64],
    tol: OracleTolerances,
) -> Result<OracleSolution> {
    let (m, n) = a.shape();
    if b.len() != m || x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "pinv_solve: A is {m}x{n}, b has {}, x0 has {}",
            b.len(),
            x0.len()
        )));
    }
    if a.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let dec = svd(a);
    let r = dec.rank(tol.rank_tol);

    let mut x_pinv = vec![0.0; n];
    let mut x0_star = x0.to_vec();
    for l in 0..r {
        let ub: f64 = (0..m).map(|i| dec.u.get(i, l) * b[i]).sum();
        let vx0: f64 = (0..n).map(|i| dec.v.get(i, l) * x0[i]).sum();
        let coef = ub / dec.sigma[l];
        for i in 0..n {
            let vil = dec.v.get(i, l);
            x_pinv[i] += coef * vil;
            x0_star[i] -= vx0 * vil;
        }
    }
    for (s, p) in x0_star.iter_mut().zip(&x_pinv) {
        *s += p;
    }

    let ax = matvec(a, &x_pinv)?;
    let res = dist2(&ax, b);
    let consistent = res <= tol.consistency_tol * norm2(b).max(1.0);
    Ok(OracleSolution {
        x_pinv,
        x0_star,
        consistent,
        rank: r,
    })
}
