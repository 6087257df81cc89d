//! Row/column block partitions, the Frobenius-weighted block distribution,
//! and the partition constants β and ρ.
//!
//! All indices are 0-based internally; the CLI and file formats are the only
//! places where 1-based numbering appears.

use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm_sq, spectral_norm_sq, DenseMatrix};

/// Contiguous blocks of `block_size` indices over `0..dim`, the last one ragged.
pub fn uniform_partition(dim: usize, block_size: usize) -> Result<Vec<Vec<usize>>> {
    if block_size == 0 || block_size > dim {
        return Err(Error::InvalidPartition(format!(
            "block size {block_size} must lie in 1..={dim}"
        )));
    }
    Ok((0..dim)
        .step_by(block_size)
        .map(|start| (start..(start + block_size).min(dim)).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    row_blocks: Vec<Vec<usize>>,
    col_blocks: Vec<Vec<usize>>,
    m: usize,
    n: usize,
}

impl BlockPartition {
    /// Accepts arbitrary partitions of `0..m` and `0..n`. Blocks must be
    /// nonempty, strictly increasing, disjoint and covering.
    pub fn new(
        row_blocks: Vec<Vec<usize>>,
        col_blocks: Vec<Vec<usize>>,
        m: usize,
        n: usize,
    ) -> Result<Self> {
        check_cover(&row_blocks, m, "row")?;
        check_cover(&col_blocks, n, "column")?;
        Ok(BlockPartition {
            row_blocks,
            col_blocks,
            m,
            n,
        })
    }

    /// Row blocks of size `ell` and column blocks of size `tau`.
    pub fn uniform(m: usize, n: usize, ell: usize, tau: usize) -> Result<Self> {
        Self::new(uniform_partition(m, ell)?, uniform_partition(n, tau)?, m, n)
    }

    pub fn num_row_blocks(&self) -> usize {
        self.row_blocks.len()
    }

    pub fn num_col_blocks(&self) -> usize {
        self.col_blocks.len()
    }

    pub fn row_block(&self, i: usize) -> &[usize] {
        &self.row_blocks[i]
    }

    pub fn col_block(&self, j: usize) -> &[usize] {
        &self.col_blocks[j]
    }

    pub fn row_blocks(&self) -> &[Vec<usize>] {
        &self.row_blocks
    }

    pub fn col_blocks(&self) -> &[Vec<usize>] {
        &self.col_blocks
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    fn conforms(&self, a: &DenseMatrix) -> Result<()> {
        if a.shape() != (self.m, self.n) {
            return Err(Error::DimensionMismatch(format!(
                "partition is for {}x{}, matrix is {}x{}",
                self.m,
                self.n,
                a.rows(),
                a.cols()
            )));
        }
        Ok(())
    }
}

fn check_cover(blocks: &[Vec<usize>], dim: usize, what: &str) -> Result<()> {
    let mut seen = vec![false; dim];
    for (b, block) in blocks.iter().enumerate() {
        if block.is_empty() {
            return Err(Error::InvalidPartition(format!("{what} block {b} is empty")));
        }
        if block.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPartition(format!(
                "{what} block {b} is not strictly increasing"
            )));
        }
        for &idx in block {
            if idx >= dim {
                return Err(Error::InvalidPartition(format!(
                    "{what} index {idx} out of range 0..{dim}"
                )));
            }
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::InvalidPartition(format!(
                    "{what} index {idx} appears in more than one block"
                )));
            }
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidPartition(format!(
            "{what} index {missing} is not covered"
        )));
    }
    Ok(())
}

/// Block (I, J) is drawn with probability ‖A_{I,J}‖_F² / ‖A‖_F².
///
/// Sampling is inverse-CDF by binary search over the cumulative table, so a
/// block with zero weight can never be returned.
#[derive(Debug, Clone)]
pub struct BlockDistribution {
    s: usize,
    t: usize,
    frob_table: Vec<f64>,
    total: f64,
    cumulative: Vec<f64>,
}

impl BlockDistribution {
    pub fn build(a: &DenseMatrix, part: &BlockPartition) -> Result<Self> {
        part.conforms(a)?;
        let s = part.num_row_blocks();
        let t = part.num_col_blocks();
        let mut frob_table = vec![0.0; s * t];
        // one pass over A, accumulating each entry into its block
        let mut col_owner = vec![0usize; part.n];
        for (j, block) in part.col_blocks.iter().enumerate() {
            for &c in block {
                col_owner[c] = j;
            }
        }
        for (i, block) in part.row_blocks.iter().enumerate() {
            let cells = &mut frob_table[i * t..(i + 1) * t];
            for &r in block {
                for (c, v) in a.row(r).iter().enumerate() {
                    cells[col_owner[c]] += v * v;
                }
            }
        }
        let mut cumulative = Vec::with_capacity(s * t);
        let mut acc = 0.0;
        for &w in &frob_table {
            acc += w;
            cumulative.push(acc);
        }
        let total: f64 = frob_table.iter().sum();
        if total == 0.0 {
            return Err(Error::DegenerateDistribution);
        }
        Ok(BlockDistribution {
            s,
            t,
            frob_table,
            total,
            cumulative,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.s, self.t)
    }

    /// ‖A_{I_i,J_j}‖_F²
    #[inline]
    pub fn block_frob_sq(&self, i: usize, j: usize) -> f64 {
        self.frob_table[i * self.t + j]
    }

    /// ‖A‖_F²
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn probability(&self, i: usize, j: usize) -> f64 {
        self.block_frob_sq(i, j) / self.total
    }

    pub fn frob_table(&self) -> &[f64] {
        &self.frob_table
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Blocks with positive weight, row-major.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.s * self.t)
            .filter(|&k| self.frob_table[k] > 0.0)
            .map(|k| (k / self.t, k % self.t))
    }

    /// Maps a uniform draw `u` in `[0, 1)` to a block.
    pub fn block_for(&self, u: f64) -> (usize, usize) {
        let last = *self.cumulative.last().expect("non-empty table");
        let target = u * last;
        let mut k = self.cumulative.partition_point(|&c| c <= target);
        if k >= self.cumulative.len() {
            // u*last rounded up to last: take the final block with positive weight
            k = self
                .frob_table
                .iter()
                .rposition(|&w| w > 0.0)
                .expect("total > 0");
        }
        (k / self.t, k % self.t)
    }
}

impl Distribution<(usize, usize)> for BlockDistribution {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        self.block_for(rng.random::<f64>())
    }
}

pub fn sample_block<R: Rng + ?Sized>(dist: &BlockDistribution, rng: &mut R) -> (usize, usize) {
    dist.sample(rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionConstants {
    /// max over nonzero blocks of ‖A_{I,J}‖₂² / ‖A_{I,J}‖_F²
    pub beta: f64,
    /// max over column blocks of σ₁²(A_{:,J_j})
    pub rho: f64,
    pub col_block_spectral_sq: Vec<f64>,
}

pub fn compute_constants(a: &DenseMatrix, part: &BlockPartition) -> Result<PartitionConstants> {
    part.conforms(a)?;
    if a.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let mut beta: f64 = 0.0;
    for rows in &part.row_blocks {
        for cols in &part.col_blocks {
            let block = a.submatrix(rows, cols);
            let frob = frobenius_norm_sq(&block);
            if frob == 0.0 {
                continue;
            }
            beta = beta.max(spectral_norm_sq(&block) / frob);
        }
    }
    let all_rows: Vec<usize> = (0..part.m).collect();
    let col_block_spectral_sq: Vec<f64> = part
        .col_blocks
        .iter()
        .map(|cols| spectral_norm_sq(&a.submatrix(&all_rows, cols)))
        .collect();
    let rho = col_block_spectral_sq.iter().copied().fold(0.0, f64::max);
    Ok(PartitionConstants {
        beta: beta.min(1.0),
        rho,
        col_block_spectral_sq,
    })
}
