//! Synthetic consistent systems.
//!
//! * Type I: `A = U D Vᵀ` with `U`, `V` orthonormalized Gaussian matrices and
//!   `D` diagonal with entries uniform on `(1, κ)`, so rank is `r` and the
//!   condition number is at most `κ`.
//! * Type II: `A` with i.i.d. standard normal entries.
//!
//! In both cases `b = A x_true` with `x_true` standard normal. All draws come
//! from the problem stream of [`crate::rng`] in this order: U, V, D, (or A),
//! then `x_true`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, matvec, norm2, DenseMatrix};
use crate::rng::problem_rng;
use crate::solver::LinearSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ProblemKind {
    Type1 { m: usize, n: usize, r: usize, kappa: f64 },
    Type2 { m: usize, n: usize },
}

impl ProblemKind {
    pub fn dims(&self) -> (usize, usize) {
        match *self {
            ProblemKind::Type1 { m, n, .. } | ProblemKind::Type2 { m, n } => (m, n),
        }
    }

    pub fn generate(&self, seed: u64) -> Result<GeneratedProblem> {
        match *self {
            ProblemKind::Type1 { m, n, r, kappa } => gen_type1(m, n, r, kappa, seed),
            ProblemKind::Type2 { m, n } => gen_type2(m, n, seed),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ProblemKind::Type1 { m, n, r, kappa } => format!("type1-{m}x{n}-r{r}-k{kappa}"),
            ProblemKind::Type2 { m, n } => format!("type2-{m}x{n}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedProblem {
    pub system: LinearSystem,
    pub x_true: Vec<f64>,
    pub kind: ProblemKind,
    pub seed: u64,
}

/// The factors of a Type I matrix.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    /// `m x r`, orthonormal columns
    pub u: DenseMatrix,
    /// diagonal of `D`, unsorted
    pub d: Vec<f64>,
    /// `n x r`, orthonormal columns
    pub v: DenseMatrix,
}

impl LowRankFactors {
    pub fn product(&self) -> DenseMatrix {
        let (m, r) = self.u.shape();
        let mut ud = self.u.clone();
        for i in 0..m {
            for l in 0..r {
                ud.set(i, l, self.u.get(i, l) * self.d[l]);
            }
        }
        ud.matmul(&self.v.transpose()).expect("conforming factors")
    }
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::from_row_major(rows, cols, data).expect("finite normals")
}

/// Modified Gram–Schmidt with one reorthogonalization pass, applied to the
/// columns of `a`.
pub fn orthonormalize_columns(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, k) = a.shape();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut v = a.column(j);
        let original = norm2(&v);
        for _pass in 0..2 {
            for qk in &q {
                let proj = dot(qk, &v);
                for (vi, qi) in v.iter_mut().zip(qk) {
                    *vi -= proj * qi;
                }
            }
        }
        let nv = norm2(&v);
        if nv <= 1e-12 * original.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidArgument(format!("column {j} is linearly dependent")));
        }
        v.iter_mut().for_each(|x| *x /= nv);
        q.push(v);
    }
    let mut out = DenseMatrix::zeros(m, k);
    for (j, col) in q.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            out.set(i, j, v);
        }
    }
    Ok(out)
}

pub fn type1_factors<R: Rng + ?Sized>(m: usize, n: usize, r: usize, kappa: f64, rng: &mut R) -> Result<LowRankFactors> {
    if r == 0 || r > m.min(n) {
        return Err(Error::InvalidArgument(format!("rank {r} must lie in 1..={}", m.min(n))));
    }
    if kappa.is_nan() || kappa <= 1.0 || kappa.is_infinite() {
        return Err(Error::InvalidArgument(format!("kappa must exceed 1, got {kappa}")));
    }
    let u = orthonormalize_columns(&gaussian_matrix(m, r, rng))?;
    let v = orthonormalize_columns(&gaussian_matrix(n, r, rng))?;
    let d = (0..r).map(|_| 1.0 + (kappa - 1.0) * rng.random::<f64>()).collect();
    Ok(LowRankFactors { u, d, v })
}

fn consistent_problem<R: Rng + ?Sized>(a: DenseMatrix, rng: &mut R, kind: ProblemKind, seed: u64) -> Result<GeneratedProblem> {
    let x_true: Vec<f64> = (0..a.cols()).map(|_| rng.sample(StandardNormal)).collect();
    let b = matvec(&a, &x_true)?;
    Ok(GeneratedProblem {
        system: LinearSystem::new(a, b)?,
        x_true,
        kind,
        seed,
    })
}

pub fn gen_type1(m: usize, n: usize, r: usize, kappa: f64, seed: u64) -> Result<GeneratedProblem> {
    let mut rng = problem_rng(seed);
    let a = type1_factors(m, n, r, kappa, &mut rng)?.product();
    consistent_problem(a, &mut rng, ProblemKind::Type1 { m, n, r, kappa }, seed)
}

pub fn gen_type2(m: usize, n: usize, seed: u64) -> Result<GeneratedProblem> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("dimensions must be positive".into()));
    }
    let mut rng = problem_rng(seed);
    let a = gaussian_matrix(m, n, &mut rng);
    consistent_problem(a, &mut rng, ProblemKind::Type2 { m, n }, seed)
}

/// `b = A x` for a standard normal `x` drawn from `seed`, for matrices that
/// come from files.
pub fn consistent_rhs(a: &DenseMatrix, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = problem_rng(seed);
    let x: Vec<f64> = (0..a.cols()).map(|_| rng.sample(StandardNormal)).collect();
    let b = matvec(a, &x)?;
    Ok((b, x))
}

pub fn normal_samples(count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let mut rng = problem_rng(seed);
    Ok((0..count).map(|_| rng.sample(StandardNormal)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_norm_sq, spectral_info, svd, DEFAULT_RANK_TOL};

    fn gram_defect(q: &DenseMatrix) -> f64 {
        let g = q.transpose().matmul(q).unwrap();
        frobenius_norm_sq(&g.sub(&DenseMatrix::identity(q.cols())).unwrap()).sqrt()
    }

    #[test]
    fn type1_factors_are_orthonormal_and_match_singular_values() {
        let mut rng = problem_rng(17);
        let f = type1_factors(30, 20, 12, 5.0, &mut rng).unwrap();
        assert!(gram_defect(&f.u) <= 1e-10);
        assert!(gram_defect(&f.v) <= 1e-10);
        assert!(f.d.iter().all(|&d| d > 1.0 && d < 5.0 || d == 1.0));
        let mut d = f.d.clone();
        d.sort_by(|a, b| b.total_cmp(a));
        let sv = svd(&f.product()).sigma;
        for (l, want) in d.iter().enumerate() {
            assert!((sv[l] - want).abs() <= 1e-8, "{l}: {} vs {want}", sv[l]);
        }
        assert!(sv[12..].iter().all(|&s| s <= 1e-8));
    }

    #[test]
    fn type1_full_column_rank_and_condition() {
        let p = gen_type1(20, 10, 10, 2.0, 3).unwrap();
        let info = spectral_info(&p.system.a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(info.rank, 10);
        assert!(info.cond <= 2.0);
        let resid = matvec(&p.system.a, &p.x_true).unwrap();
        assert_eq!(resid, p.system.b);
    }

    #[test]
    fn type1_rejects_bad_rank() {
        assert!(gen_type1(5, 4, 5, 2.0, 0).is_err());
        assert!(gen_type1(5, 4, 0, 2.0, 0).is_err());
        assert!(gen_type1(5, 4, 2, 1.0, 0).is_err());
    }

    #[test]
    fn type2_is_deterministic() {
        let a = gen_type2(12, 7, 99).unwrap();
        let b = gen_type2(12, 7, 99).unwrap();
        assert_eq!(a.system.a, b.system.a);
        assert_eq!(a.x_true, b.x_true);
        let c = gen_type2(12, 7, 100).unwrap();
        assert_ne!(a.system.a, c.system.a);
    }

    #[test]
    fn scalar_type2_system() {
        let p = gen_type2(1, 1, 4).unwrap();
        let a = p.system.a.get(0, 0);
        // one Landweber step with α = 1 on a 1x1 system lands on b/a
        let x1 = 0.0 - 1.0 * a * (a * 0.0 - p.system.b[0]) / (a * a);
        assert!((x1 - p.x_true[0]).abs() <= 1e-12 * (1.0 + p.x_true[0].abs()));
    }

    #[test]
    fn normal_samples_statistics() {
        let xs = normal_samples(1_000_000, 2024).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 0.004, "mean {mean}");
        assert!((0.99..=1.01).contains(&var), "var {var}");
        assert_eq!(normal_samples(10, 5).unwrap(), normal_samples(10, 5).unwrap());
        assert!(normal_samples(0, 5).is_err());
    }
}
