//! Reference implementations used by the integration and acceptance tests.
//! Everything here is written with plain loops so it does not share code
//! paths with the library kernels it checks.
#![allow(dead_code)]

use dsbgs::linalg::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    DenseMatrix::from_row_major(rows, cols, gaussian_vec(rows * cols, rng)).unwrap()
}

/// Product of two Gaussian factors, rank `rank` with probability one.
pub fn low_rank<R: Rng>(rows: usize, cols: usize, rank: usize, rng: &mut R) -> DenseMatrix {
    let l = gaussian(rows, rank, rng);
    let r = gaussian(rank, cols, rng);
    naive_matmul(&l, &r)
}

pub fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (m, k) = a.shape();
    let n = b.cols();
    assert_eq!(k, b.rows());
    let mut out = DenseMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let mut s = 0.0;
            for l in 0..k {
                s += a.get(i, l) * b.get(l, j);
            }
            out.set(i, j, s);
        }
    }
    out
}

pub fn naive_transpose(a: &DenseMatrix) -> DenseMatrix {
    let mut t = DenseMatrix::zeros(a.cols(), a.rows());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            t.set(j, i, a.get(i, j));
        }
    }
    t
}

/// `Ax - b`
pub fn residual(a: &DenseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    (0..a.rows())
        .map(|i| {
            let mut s = 0.0;
            for j in 0..a.cols() {
                s += a.get(i, j) * x[j];
            }
            s - b[i]
        })
        .collect()
}

/// `Aᵀy`
pub fn at_times(a: &DenseMatrix, y: &[f64]) -> Vec<f64> {
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a.get(i, j) * y[i]).sum())
        .collect()
}

pub fn frob_sq(a: &DenseMatrix) -> f64 {
    a.as_slice().iter().map(|v| v * v).sum()
}

pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Gram matrix `AᵀA`.
fn gram(a: &DenseMatrix) -> Vec<Vec<f64>> {
    let n = a.cols();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..a.rows() {
        for p in 0..n {
            for q in 0..n {
                g[p][q] += a.get(i, p) * a.get(i, q);
            }
        }
    }
    g
}

/// Dominant eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration with a Rayleigh-quotient estimate.
fn power_iteration(g: &[Vec<f64>]) -> f64 {
    let n = g.len();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..20_000 {
        let w: Vec<f64> = g.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        let nw = norm_sq(&w).sqrt();
        if nw == 0.0 {
            return 0.0;
        }
        let next = w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / norm_sq(&v);
        v = w.into_iter().map(|x| x / nw).collect();
        if (next - lambda).abs() <= 1e-15 * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// ‖A‖₂² via power iteration on AᵀA.
pub fn spectral_sq(a: &DenseMatrix) -> f64 {
    power_iteration(&gram(a))
}

/// Smallest eigenvalue of AᵀA, from power iteration on `cI - AᵀA`.
pub fn min_gram_eigenvalue(a: &DenseMatrix) -> f64 {
    let mut g = gram(a);
    let top = power_iteration(&g);
    let shift = 1.01 * top;
    for (p, row) in g.iter_mut().enumerate() {
        for (q, v) in row.iter_mut().enumerate() {
            *v = if p == q { shift - *v } else { -*v };
        }
    }
    shift - power_iteration(&g)
}

/// β by brute force over the blocks of the given index sets.
pub fn beta(a: &DenseMatrix, rows: &[Vec<usize>], cols: &[Vec<usize>]) -> f64 {
    let mut best: f64 = 0.0;
    for r in rows {
        for c in cols {
            let blk = a.submatrix(r, c);
            let f = frob_sq(&blk);
            if f > 0.0 {
                best = best.max(spectral_sq(&blk) / f);
            }
        }
    }
    best
}

/// Inverse-CDF draw over nonnegative weights, consuming one uniform.
pub fn draw<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let mut cum = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cum.push(acc);
    }
    let target = rng.random::<f64>() * acc;
    cum.iter()
        .position(|&c| c > target)
        .unwrap_or_else(|| weights.iter().rposition(|&w| w > 0.0).unwrap())
}

/// One randomized Kaczmarz step on row `i`.
pub fn rk_step(a: &DenseMatrix, b: &[f64], x: &mut [f64], alpha: f64, i: usize) {
    let row = a.row(i);
    let r: f64 = row.iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() - b[i];
    let nrm: f64 = row.iter().map(|v| v * v).sum();
    for (xj, aij) in x.iter_mut().zip(row) {
        *xj -= alpha * aij * r / nrm;
    }
}

/// One randomized Gauss-Seidel (coordinate descent) step on column `j`.
pub fn rgs_step(a: &DenseMatrix, b: &[f64], x: &mut [f64], alpha: f64, j: usize) {
    let r = residual(a, x, b);
    let col: Vec<f64> = (0..a.rows()).map(|i| a.get(i, j)).collect();
    let g: f64 = col.iter().zip(&r).map(|(p, q)| p * q).sum();
    x[j] -= alpha * g / norm_sq(&col);
}

/// One doubly stochastic Gauss-Seidel step on entry `(i, j)`.
pub fn dsgs_step(a: &DenseMatrix, b: &[f64], x: &mut [f64], alpha: f64, i: usize, j: usize) {
    let aij = a.get(i, j);
    let r: f64 = a.row(i).iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() - b[i];
    x[j] -= alpha * aij * r / (aij * aij);
}

/// One full gradient (Landweber) step.
pub fn landweber_step(a: &DenseMatrix, b: &[f64], x: &mut [f64], alpha: f64) {
    let g = at_times(a, &residual(a, x, b));
    let f = frob_sq(a);
    for (xj, gj) in x.iter_mut().zip(&g) {
        *xj -= alpha * gj / f;
    }
}
