//! Closed-form contraction factors and admissible step-size intervals.
//!
//! Notation: `F = ‖A‖_F²`, `σ₁` the largest and `σ_r` the smallest nonzero
//! singular value, `t` the number of column blocks, `β` and `ρ` the
//! partition constants.
//!
//! | rate | value | needs |
//! |------|-------|-------|
//! | mean iterate | `max_i |1 - α σ_i²/F|` | `0 < α < 2F/σ₁²` |
//! | error, full column rank | `1 - (2α - tβα²) σ_n²/F` | rank = n, `α < 2/(tβ)` |
//! | error, one column block | `1 - (2α - βα²) σ_r²/F` | t = 1, `α < 2/β` |
//! | residual, single columns | `1 + βα² - 2α σ_r²/F` | t = n, `α < 2σ_r²/(βF)` |
//! | residual, column blocks | `1 - (2α σ_r² - tρβα²)/F` | t < n, `α < 2σ_r²/(tρβ)` |
//!
//! Every rate is computed even when its hypotheses fail; the flags on
//! [`Rate`] say whether the guarantee applies.

use std::fmt;

use crate::linalg::SpectralInfo;
use crate::partition::PartitionConstants;

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", fmt_num(self.lo), fmt_num(self.hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub value: f64,
    /// Rank / block-structure hypotheses hold.
    pub structural: bool,
    /// α lies inside the rate's admissible interval.
    pub alpha_admissible: bool,
}

impl Rate {
    pub fn hypotheses_hold(&self) -> bool {
        self.structural && self.alpha_admissible
    }

    /// `value^k`, the bound multiplier after `k` steps.
    pub fn after(&self, k: usize) -> f64 {
        self.value.powi(k as i32)
    }
}

pub fn expected_norm_rate(info: &SpectralInfo, alpha: f64) -> f64 {
    info.singular_values
        .iter()
        .map(|s| (1.0 - alpha * s * s / info.frob_sq).abs())
        .fold(0.0, f64::max)
}

pub fn expected_interval(info: &SpectralInfo) -> Interval {
    Interval::open(0.0, 2.0 * info.frob_sq / (info.sigma_max * info.sigma_max))
}

pub fn error_interval(t: usize, beta: f64) -> Interval {
    Interval::open(0.0, 2.0 / (t as f64 * beta))
}

pub fn residual_interval_single_cols(info: &SpectralInfo, beta: f64) -> Interval {
    let sr2 = info.sigma_min_pos * info.sigma_min_pos;
    Interval::open(0.0, 2.0 * sr2 / (beta * info.frob_sq))
}

pub fn residual_interval_col_blocks(info: &SpectralInfo, t: usize, beta: f64, rho: f64) -> Interval {
    let sr2 = info.sigma_min_pos * info.sigma_min_pos;
    Interval::open(0.0, 2.0 * sr2 / (t as f64 * rho * beta))
}

/// Mean-square error contraction for full-column-rank consistent systems.
pub fn error_decay_rate(info: &SpectralInfo, alpha: f64, t: usize, beta: f64) -> Rate {
    let sn2 = info.sigma_min_pos * info.sigma_min_pos;
    Rate {
        value: 1.0 - (2.0 * alpha - t as f64 * beta * alpha * alpha) * sn2 / info.frob_sq,
        structural: info.full_column_rank(),
        alpha_admissible: error_interval(t, beta).contains(alpha),
    }
}

/// Mean-square distance to x⁰_⋆ with a single column block, any rank.
pub fn error_decay_rate_one_col_block(info: &SpectralInfo, alpha: f64, t: usize, beta: f64) -> Rate {
    let sr2 = info.sigma_min_pos * info.sigma_min_pos;
    Rate {
        value: 1.0 - (2.0 * alpha - beta * alpha * alpha) * sr2 / info.frob_sq,
        structural: t == 1,
        alpha_admissible: error_interval(1, beta).contains(alpha),
    }
}

/// Mean-square residual contraction when every column block is one column.
pub fn residual_rate_single_cols(info: &SpectralInfo, alpha: f64, t: usize, beta: f64) -> Rate {
    let sr2 = info.sigma_min_pos * info.sigma_min_pos;
    Rate {
        value: 1.0 + beta * alpha * alpha - 2.0 * alpha * sr2 / info.frob_sq,
        structural: t == info.cols,
        alpha_admissible: residual_interval_single_cols(info, beta).contains(alpha),
    }
}

/// Mean-square residual contraction for wider column blocks.
pub fn residual_rate_col_blocks(info: &SpectralInfo, alpha: f64, t: usize, beta: f64, rho: f64) -> Rate {
    let sr2 = info.sigma_min_pos * info.sigma_min_pos;
    Rate {
        value: 1.0 - (2.0 * alpha * sr2 - t as f64 * rho * beta * alpha * alpha) / info.frob_sq,
        structural: t < info.cols,
        alpha_admissible: residual_interval_col_blocks(info, t, beta, rho).contains(alpha),
    }
}

/// Residual rate for whichever branch `t` selects.
pub fn residual_decay_rate(info: &SpectralInfo, alpha: f64, t: usize, beta: f64, rho: f64) -> Rate {
    if t == info.cols {
        residual_rate_single_cols(info, alpha, t, beta)
    } else {
        residual_rate_col_blocks(info, alpha, t, beta, rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleIntervals {
    pub expected: Interval,
    pub error: Interval,
    pub residual_single_cols: Interval,
    pub residual_col_blocks: Interval,
}

pub fn admissible_intervals(info: &SpectralInfo, t: usize, beta: f64, rho: f64) -> AdmissibleIntervals {
    AdmissibleIntervals {
        expected: expected_interval(info),
        error: error_interval(t, beta),
        residual_single_cols: residual_interval_single_cols(info, beta),
        residual_col_blocks: residual_interval_col_blocks(info, t, beta, rho),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryReport {
    pub alpha: f64,
    pub s: usize,
    pub t: usize,
    pub sigma_max: f64,
    pub sigma_min_pos: f64,
    pub rank: usize,
    pub rows: usize,
    pub cols: usize,
    pub frob_sq: f64,
    pub beta: f64,
    pub rho: f64,
    pub expected_iterate_rate: Rate,
    pub error_rate: Rate,
    pub error_rate_one_col_block: Rate,
    pub residual_rate_single_cols: Rate,
    pub residual_rate_col_blocks: Rate,
    pub intervals: AdmissibleIntervals,
}

impl TheoryReport {
    pub fn new(info: &SpectralInfo, consts: &PartitionConstants, s: usize, t: usize, alpha: f64) -> Self {
        let intervals = admissible_intervals(info, t, consts.beta, consts.rho);
        TheoryReport {
            alpha,
            s,
            t,
            sigma_max: info.sigma_max,
            sigma_min_pos: info.sigma_min_pos,
            rank: info.rank,
            rows: info.rows,
            cols: info.cols,
            frob_sq: info.frob_sq,
            beta: consts.beta,
            rho: consts.rho,
            expected_iterate_rate: Rate {
                value: expected_norm_rate(info, alpha),
                structural: true,
                alpha_admissible: intervals.expected.contains(alpha),
            },
            error_rate: error_decay_rate(info, alpha, t, consts.beta),
            error_rate_one_col_block: error_decay_rate_one_col_block(info, alpha, t, consts.beta),
            residual_rate_single_cols: residual_rate_single_cols(info, alpha, t, consts.beta),
            residual_rate_col_blocks: residual_rate_col_blocks(info, alpha, t, consts.beta, consts.rho),
            intervals,
        }
    }

    /// Human-readable warnings about α and the hypotheses.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.intervals.error.contains(self.alpha) {
            out.push(format!(
                "alpha = {} exceeds the sufficient bound 2/(t*beta) = {} for the mean-square error guarantee",
                fmt_num(self.alpha),
                fmt_num(self.intervals.error.hi)
            ));
        }
        if !self.intervals.expected.contains(self.alpha) {
            out.push(format!(
                "alpha = {} is outside {} where the mean iterate contracts",
                fmt_num(self.alpha),
                self.intervals.expected
            ));
        }
        if self.rank < self.cols {
            out.push(format!(
                "matrix is rank deficient (rank {} < n = {}): full-column-rank error bound does not apply",
                self.rank, self.cols
            ));
        }
        out
    }
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 || (1e-3..1e6).contains(&v.abs()) {
        format!("{:.6}", v)
    } else {
        format!("{:.6e}", v)
    }
}

fn rate_line(f: &mut fmt::Formatter<'_>, name: &str, rate: &Rate, interval: &Interval) -> fmt::Result {
    let status = match (rate.structural, rate.alpha_admissible) {
        (true, true) => "holds",
        (false, _) => "n/a (structure)",
        (true, false) => "alpha outside interval",
    };
    writeln!(f, "  {name:<34} {:>14}  interval {interval:<32} {status}", fmt_num(rate.value))
}

impl fmt::Display for TheoryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "matrix          {} x {}, rank {}", self.rows, self.cols, self.rank)?;
        writeln!(f, "sigma_1         {}", fmt_num(self.sigma_max))?;
        writeln!(f, "sigma_r         {}", fmt_num(self.sigma_min_pos))?;
        writeln!(f, "cond            {}", fmt_num(self.sigma_max / self.sigma_min_pos))?;
        writeln!(f, "||A||_F^2       {}", fmt_num(self.frob_sq))?;
        writeln!(f, "blocks (s, t)   ({}, {})", self.s, self.t)?;
        writeln!(f, "beta            {}", fmt_num(self.beta))?;
        writeln!(f, "rho             {}", fmt_num(self.rho))?;
        writeln!(f, "alpha           {}", fmt_num(self.alpha))?;
        writeln!(f, "rates:")?;
        rate_line(f, "mean iterate", &self.expected_iterate_rate, &self.intervals.expected)?;
        rate_line(f, "error (full column rank)", &self.error_rate, &self.intervals.error)?;
        rate_line(
            f,
            "error (one column block)",
            &self.error_rate_one_col_block,
            &error_interval(1, self.beta),
        )?;
        rate_line(
            f,
            "residual (t = n)",
            &self.residual_rate_single_cols,
            &self.intervals.residual_single_cols,
        )?;
        rate_line(
            f,
            "residual (t < n)",
            &self.residual_rate_col_blocks,
            &self.intervals.residual_col_blocks,
        )?;
        for w in self.warnings() {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}
