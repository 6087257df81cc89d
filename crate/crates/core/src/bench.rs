//! Multi-trial experiment harness.
//!
//! Trial `k` uses seed `base_seed + k`. Synthetic problems are redrawn from
//! that seed every trial; a Matrix Market problem keeps its matrix and
//! right-hand side fixed and only the sampler seed changes. Every method in a
//! trial starts from `x⁰ = 0` and stops once ‖x^k − A†b‖₂ ≤ `stop_tol`. The
//! first method is the speed-up baseline.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_matrix_market, read_vector_mm, ResultRecord};
use crate::linalg::{pinv_solve, spectral_info, OracleSolution, DEFAULT_RANK_TOL};
use crate::partition::{compute_constants, BlockPartition};
use crate::probgen::{consistent_rhs, ProblemKind};
use crate::solver::{preset, solve, LinearSystem, Preset, ResidualMode, SolveTrace, SolverConfig, StopRule};
use crate::theory::TheoryReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ProblemSpec {
    Type1 {
        m: usize,
        n: usize,
        r: usize,
        kappa: f64,
    },
    Type2 {
        m: usize,
        n: usize,
    },
    Mtx {
        path: PathBuf,
        /// Right-hand side file; when absent `b = A x` with a normal `x`.
        #[serde(default)]
        rhs: Option<PathBuf>,
    },
}

impl ProblemSpec {
    fn synthetic(&self) -> Option<ProblemKind> {
        match *self {
            ProblemSpec::Type1 { m, n, r, kappa } => Some(ProblemKind::Type1 { m, n, r, kappa }),
            ProblemSpec::Type2 { m, n } => Some(ProblemKind::Type2 { m, n }),
            ProblemSpec::Mtx { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ProblemSpec::Mtx { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            other => other.synthetic().expect("synthetic").label(),
        }
    }

    /// Builds the system for one trial. Matrix Market problems ignore `seed`.
    pub fn load(&self, seed: u64) -> Result<LinearSystem> {
        match self {
            ProblemSpec::Mtx { path, rhs } => {
                let a = read_matrix_market(path)?;
                let b = match rhs {
                    Some(rhs) => read_vector_mm(rhs)?,
                    None => consistent_rhs(&a, seed)?.0,
                };
                LinearSystem::new(a, b)
            }
            other => Ok(other.synthetic().expect("synthetic").generate(seed)?.system),
        }
    }
}

/// One method to compare. `ell`/`tau` of `None` mean a single block spanning
/// all rows/columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub label: String,
    pub alpha: f64,
    #[serde(default)]
    pub ell: Option<usize>,
    #[serde(default)]
    pub tau: Option<usize>,
}

impl MethodSpec {
    pub fn dsbgs(alpha: f64, ell: Option<usize>, tau: Option<usize>) -> Self {
        let show = |v: Option<usize>, full: &str| v.map_or(full.to_string(), |x| x.to_string());
        MethodSpec {
            label: format!("DSBGS({alpha},{},{})", show(ell, "m"), show(tau, "n")),
            alpha,
            ell,
            tau,
        }
    }

    /// Randomized Kaczmarz with unit step: one row, all columns.
    pub fn rk() -> Self {
        MethodSpec {
            label: "RK".into(),
            alpha: 1.0,
            ell: Some(1),
            tau: None,
        }
    }

    pub fn from_preset(kind: Preset, alpha: f64) -> Self {
        let (ell, tau) = match kind {
            Preset::Landweber => (None, None),
            Preset::Rk => (Some(1), None),
            Preset::Rgs => (None, Some(1)),
            Preset::Dsgs => (Some(1), Some(1)),
        };
        MethodSpec {
            label: kind.name().to_uppercase(),
            alpha,
            ell,
            tau,
        }
    }

    pub fn block_sizes(&self, m: usize, n: usize) -> (usize, usize) {
        (self.ell.unwrap_or(m), self.tau.unwrap_or(n))
    }
}

fn default_trials() -> usize {
    20
}
fn default_tol() -> f64 {
    1e-5
}
fn default_max_iters() -> usize {
    2_000_000
}
fn default_parallel() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_tol")]
    pub stop_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Run trials on worker threads. CPU means are only meaningful when off.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
    /// Record error history every this many iterations (0 = none).
    #[serde(default)]
    pub history_stride: usize,
}

impl ExperimentSpec {
    pub fn new(problem: ProblemSpec, methods: Vec<MethodSpec>) -> Self {
        ExperimentSpec {
            problem,
            methods,
            trials: default_trials(),
            stop_tol: default_tol(),
            max_iters: default_max_iters(),
            base_seed: 0,
            parallel: true,
            history_stride: 0,
        }
    }

    /// Reads a TOML or JSON spec, chosen by file extension.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: ExperimentSpec = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?,
            _ => toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?,
        };
        Ok(spec)
    }

    fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods given".into()));
        }
        if self.stop_tol.is_nan() || self.stop_tol <= 0.0 {
            return Err(Error::InvalidArgument("stop tolerance must be positive".into()));
        }
        for method in &self.methods {
            let (ell, tau) = method.block_sizes(m, n);
            if ell == 0 || ell > m || tau == 0 || tau > n {
                return Err(Error::InvalidArgument(format!(
                    "{}: block sizes ({ell}, {tau}) must lie within 1..={m} and 1..={n}",
                    method.label
                )));
            }
            if method.alpha.is_nan() || method.alpha <= 0.0 {
                return Err(Error::InvalidArgument(format!("{}: alpha must be positive", method.label)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub iters: usize,
    pub seconds: f64,
    pub converged: bool,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub label: String,
    pub matrix: String,
    pub m: usize,
    pub n: usize,
    pub alpha: f64,
    pub ell: usize,
    pub tau: usize,
    /// Mean iterations over converged trials (NaN if none converged).
    pub iter_mean: f64,
    /// Mean loop seconds over converged trials.
    pub cpu_mean: f64,
    /// Baseline `cpu_mean` over this method's `cpu_mean`.
    pub speedup_vs_baseline: f64,
    pub per_trial: Vec<TrialOutcome>,
    /// `(k, mean ‖x^k − A†b‖₂)` when history was recorded; finished trials
    /// contribute their final error.
    pub mean_error_history: Vec<(usize, f64)>,
}

impl ExperimentResult {
    pub fn excluded(&self) -> usize {
        self.per_trial.iter().filter(|t| !t.converged).count()
    }

    pub fn to_record(&self) -> ResultRecord {
        ResultRecord {
            matrix: self.matrix.clone(),
            m: self.m,
            n: self.n,
            method: self.label.clone(),
            alpha: self.alpha,
            ell: self.ell,
            tau: self.tau,
            iter_mean: self.iter_mean,
            cpu_mean: self.cpu_mean,
            speedup: self.speedup_vs_baseline,
        }
    }
}

struct TrialRun {
    outcome: TrialOutcome,
    errors: Vec<(usize, f64)>,
}

fn run_trial(
    spec: &ExperimentSpec,
    fixed: Option<&(LinearSystem, OracleSolution)>,
    trial: usize,
) -> Result<Vec<TrialRun>> {
    let seed = spec.base_seed.wrapping_add(trial as u64);
    let owned;
    let (sys, oracle) = match fixed {
        Some((sys, oracle)) => (sys, oracle),
        None => {
            let sys = spec.problem.load(seed)?;
            let oracle = pinv_solve(&sys.a, &sys.b, &vec![0.0; sys.n()], Default::default())?;
            owned = (sys, oracle);
            (&owned.0, &owned.1)
        }
    };
    let (m, n) = (sys.m(), sys.n());
    spec.methods
        .iter()
        .map(|method| {
            let (ell, tau) = method.block_sizes(m, n);
            let part = BlockPartition::uniform(m, n, ell, tau)?;
            let cfg = SolverConfig {
                alpha: method.alpha,
                seed,
                max_iters: spec.max_iters,
                stop_rule: StopRule::ErrorToPinv { tol: spec.stop_tol },
                history_stride: spec.history_stride,
                x0: None,
                residual_mode: ResidualMode::Auto,
            };
            let trace: SolveTrace = solve(sys, &part, &cfg, Some(oracle))?;
            Ok(TrialRun {
                outcome: TrialOutcome {
                    iters: trace.iterations,
                    seconds: trace.wall_time,
                    converged: trace.converged,
                    diverged: trace.diverged,
                },
                errors: trace.error_history,
            })
        })
        .collect()
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

fn average_histories(histories: &[&[(usize, f64)]], stride: usize) -> Vec<(usize, f64)> {
    let last = histories.iter().filter_map(|h| h.last().map(|p| p.0)).max();
    let Some(last) = last else {
        return Vec::new();
    };
    let mut grid: Vec<usize> = (0..=last).step_by(stride.max(1)).collect();
    if grid.last() != Some(&last) {
        grid.push(last);
    }
    grid.into_iter()
        .map(|k| {
            let mean = mean_of(histories.iter().filter_map(|h| {
                let idx = h.partition_point(|p| p.0 <= k);
                (idx > 0).then(|| h[idx - 1].1)
            }));
            (k, mean)
        })
        .collect()
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentResult>> {
    let fixed = match &spec.problem {
        ProblemSpec::Mtx { .. } => {
            let sys = spec.problem.load(spec.base_seed)?;
            let oracle = pinv_solve(&sys.a, &sys.b, &vec![0.0; sys.n()], Default::default())?;
            if !oracle.consistent {
                warn!("system is inconsistent; the error stop rule measures distance to A†b");
            }
            Some((sys, oracle))
        }
        _ => None,
    };
    let (m, n) = match (&fixed, spec.problem.synthetic()) {
        (Some((sys, _)), _) => (sys.m(), sys.n()),
        (None, Some(kind)) => kind.dims(),
        (None, None) => unreachable!(),
    };
    spec.validate(m, n)?;

    let runs: Vec<Vec<TrialRun>> = if spec.parallel {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(spec, fixed.as_ref(), t))
            .collect::<Result<_>>()?
    } else {
        (0..spec.trials)
            .map(|t| run_trial(spec, fixed.as_ref(), t))
            .collect::<Result<_>>()?
    };

    let matrix = spec.problem.label();
    let mut results: Vec<ExperimentResult> = spec
        .methods
        .iter()
        .enumerate()
        .map(|(mi, method)| {
            let per_trial: Vec<TrialOutcome> = runs.iter().map(|r| r[mi].outcome).collect();
            let converged = || per_trial.iter().filter(|t| t.converged);
            let excluded = per_trial.len() - converged().count();
            if excluded > 0 {
                warn!(
                    "{}: {excluded} of {} trials did not converge and are excluded from the means",
                    method.label,
                    per_trial.len()
                );
            }
            let histories: Vec<&[(usize, f64)]> = runs.iter().map(|r| r[mi].errors.as_slice()).collect();
            let (ell, tau) = method.block_sizes(m, n);
            ExperimentResult {
                label: method.label.clone(),
                matrix: matrix.clone(),
                m,
                n,
                alpha: method.alpha,
                ell,
                tau,
                iter_mean: mean_of(converged().map(|t| t.iters as f64)),
                cpu_mean: mean_of(converged().map(|t| t.seconds)),
                speedup_vs_baseline: f64::NAN,
                mean_error_history: if spec.history_stride > 0 {
                    average_histories(&histories, spec.history_stride)
                } else {
                    Vec::new()
                },
                per_trial,
            }
        })
        .collect();
    let baseline = results[0].cpu_mean;
    for r in &mut results {
        r.speedup_vs_baseline = baseline / r.cpu_mean;
    }
    Ok(results)
}

/// Plain-text table with ITER to two decimals.
pub fn format_results(results: &[ExperimentResult], parallel: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<24} {:>7} {:>5} {:>5} {:>14} {:>12} {:>9} {:>9}",
        "method", "alpha", "ell", "tau", "ITER", "CPU (s)", "speed-up", "excluded"
    );
    for r in results {
        let _ = writeln!(
            out,
            "{:<24} {:>7} {:>5} {:>5} {:>14.2} {:>12.6} {:>9.2} {:>6}/{}",
            r.label,
            r.alpha,
            r.ell,
            r.tau,
            r.iter_mean,
            r.cpu_mean,
            r.speedup_vs_baseline,
            r.excluded(),
            r.per_trial.len()
        );
    }
    let _ = writeln!(
        out,
        "CPU and speed-up are qualitative{}.",
        if parallel { " (trials ran in parallel)" } else { "" }
    );
    out
}

/// Spectral data, partition constants, rates and intervals for one method
/// on one system.
pub fn theory_report(sys: &LinearSystem, alpha: f64, ell: usize, tau: usize) -> Result<TheoryReport> {
    let part = BlockPartition::uniform(sys.m(), sys.n(), ell, tau)?;
    let info = spectral_info(&sys.a, DEFAULT_RANK_TOL)?;
    let consts = compute_constants(&sys.a, &part)?;
    Ok(TheoryReport::new(
        &info,
        &consts,
        part.num_row_blocks(),
        part.num_col_blocks(),
        alpha,
    ))
}

/// Block sizes for a named preset on an `m x n` system.
pub fn preset_block_sizes(kind: Preset, m: usize, n: usize) -> (usize, usize) {
    let shape = preset(kind, m, n);
    (shape.ell, shape.tau)
}
