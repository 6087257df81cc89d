use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use dsbgs::bench::{format_results, run_experiment, theory_report, ExperimentSpec, MethodSpec, ProblemSpec};
use dsbgs::io::{write_history_csv, write_history_records, write_matrix_market, write_results_csv, write_vector_mm, HistoryRecord};
use dsbgs::linalg::{pinv_solve, DEFAULT_RANK_TOL};
use dsbgs::partition::{compute_constants, BlockPartition};
use dsbgs::probgen::ProblemKind;
use dsbgs::solver::{default_alpha, solve, Preset, ResidualMode, SolverConfig, StopRule};
use dsbgs::{Error, Result};

/// Doubly stochastic block Gauss-Seidel solver and benchmark harness.
#[derive(Parser)]
#[command(name = "dsbgs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem with one method and write its convergence history.
    Solve(SolveArgs),
    /// Compare methods over several trials and write a results table.
    Bench(BenchArgs),
    /// Print spectral data, partition constants, rates and step-size intervals.
    Theory(TheoryArgs),
    /// Write a synthetic problem as Matrix Market files.
    Gen(GenArgs),
}

/// Block size on the command line: a positive integer, or `m`/`n`/`full`
/// for a single block spanning the dimension.
#[derive(Clone, Copy, Debug)]
struct BlockSize(Option<usize>);

impl FromStr for BlockSize {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "m" | "n" | "full" => Ok(BlockSize(None)),
            _ => s
                .parse::<usize>()
                .map(|v| BlockSize(Some(v)))
                .map_err(|_| format!("expected a positive integer or m/n/full, got {s:?}")),
        }
    }
}

#[derive(Args, Clone)]
struct ProblemArgs {
    /// Matrix Market file with the coefficient matrix.
    #[arg(long, conflicts_with_all = ["m", "n", "rank", "kappa"])]
    matrix: Option<PathBuf>,
    /// Matrix Market right-hand side (default: b = A x with normal x).
    #[arg(long, requires = "matrix")]
    rhs: Option<PathBuf>,
    /// Rows of a synthetic matrix.
    #[arg(long)]
    m: Option<usize>,
    /// Columns of a synthetic matrix.
    #[arg(long)]
    n: Option<usize>,
    /// Rank of a Type I matrix (omit for a Gaussian Type II matrix).
    #[arg(long, requires = "kappa")]
    rank: Option<usize>,
    /// Condition-number bound of a Type I matrix.
    #[arg(long, requires = "rank")]
    kappa: Option<f64>,
}

impl ProblemArgs {
    fn spec(&self) -> Result<ProblemSpec> {
        if let Some(path) = &self.matrix {
            return Ok(ProblemSpec::Mtx {
                path: path.clone(),
                rhs: self.rhs.clone(),
            });
        }
        let (Some(m), Some(n)) = (self.m, self.n) else {
            return Err(Error::InvalidArgument("give --matrix, or --m and --n".into()));
        };
        Ok(match (self.rank, self.kappa) {
            (Some(r), Some(kappa)) => ProblemSpec::Type1 { m, n, r, kappa },
            _ => ProblemSpec::Type2 { m, n },
        })
    }
}

#[derive(Args, Clone)]
struct MethodArgs {
    /// Step size (default: 1, reduced to 1/(t*beta) if 1 is outside (0, 2/(t*beta))).
    #[arg(long)]
    alpha: Option<f64>,
    /// Rows per block (`m` for one row block).
    #[arg(long)]
    ell: Option<BlockSize>,
    /// Columns per block (`n` for one column block).
    #[arg(long)]
    tau: Option<BlockSize>,
    /// Named special case; overrides --ell/--tau.
    #[arg(long, value_parser = ["landweber", "rk", "rgs", "dsgs"])]
    preset: Option<String>,
}

impl MethodArgs {
    fn block_sizes(&self, m: usize, n: usize) -> Result<(usize, usize)> {
        if let Some(p) = &self.preset {
            let kind: Preset = p.parse()?;
            return Ok(MethodSpec::from_preset(kind, 1.0).block_sizes(m, n));
        }
        let ell = self.ell.map_or(Some(1), |b| b.0).unwrap_or(m);
        let tau = self.tau.and_then(|b| b.0).unwrap_or(n);
        Ok((ell, tau))
    }

    fn label(&self, alpha: f64, ell: usize, tau: usize, m: usize, n: usize) -> String {
        if let Some(p) = &self.preset {
            return p.to_uppercase();
        }
        let show = |v: usize, full: usize, name: &str| if v == full { name.to_string() } else { v.to_string() };
        format!("DSBGS({alpha},{},{})", show(ell, m, "m"), show(tau, n, "n"))
    }

    /// Resolves α, computing β when no step was given.
    fn alpha(&self, part: &BlockPartition, sys: &dsbgs::LinearSystem) -> Result<f64> {
        let consts = compute_constants(&sys.a, part)?;
        let t = part.num_col_blocks();
        let bound = 2.0 / (t as f64 * consts.beta);
        match self.alpha {
            Some(a) => {
                if a >= bound {
                    warn!("alpha = {a} exceeds the sufficient bound 2/(t*beta) = {bound:.6}; convergence is not guaranteed");
                }
                Ok(a)
            }
            None => Ok(default_alpha(t, consts.beta)),
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Stop when ||x^k - A^+ b||_2 <= tol.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 2_000_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    method: MethodArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Record history every this many iterations.
    #[arg(long, default_value_t = 10)]
    history_stride: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment spec (TOML, or JSON by extension). Flags override its
    /// trials/tol/max-iters/seed only when given explicitly.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    method: MethodArgs,
    /// Extra method as LABEL:ALPHA:ELL:TAU (ELL/TAU may be m/n). Repeatable.
    /// Without --config the baseline RK method is always listed first.
    #[arg(long = "method")]
    methods: Vec<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Results CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run trials sequentially (use when comparing CPU times).
    #[arg(long)]
    no_parallel: bool,
    /// Also write the mean error history of each method to
    /// <DIR>/<label>.csv, sampled every --history-stride iterations.
    #[arg(long)]
    history_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    history_stride: usize,
}

#[derive(Args)]
struct TheoryArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, requires = "kappa")]
    rank: Option<usize>,
    #[arg(long, requires = "rank")]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix: writes PREFIX.mtx, PREFIX_rhs.mtx and PREFIX_x.mtx.
    #[arg(long)]
    out: PathBuf,
}

fn parse_method(s: &str) -> Result<MethodSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return Err(Error::InvalidArgument(format!("method {s:?} is not LABEL:ALPHA:ELL:TAU")));
    }
    let alpha: f64 = parts[1]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("invalid alpha in {s:?}")))?;
    let size = |p: &str| p.parse::<BlockSize>().map(|b| b.0).map_err(Error::InvalidArgument);
    Ok(MethodSpec {
        label: parts[0].to_string(),
        alpha,
        ell: size(parts[2])?,
        tau: size(parts[3])?,
    })
}

enum Outcome {
    Done,
    NotConverged,
}

fn cmd_solve(args: SolveArgs) -> Result<Outcome> {
    let spec = args.problem.spec()?;
    let sys = spec.load(args.common.seed)?;
    let (m, n) = (sys.m(), sys.n());
    let (ell, tau) = args.method.block_sizes(m, n)?;
    let part = BlockPartition::uniform(m, n, ell, tau)?;
    let alpha = args.method.alpha(&part, &sys)?;
    let oracle = pinv_solve(&sys.a, &sys.b, &vec![0.0; n], Default::default())?;
    if !oracle.consistent {
        warn!("system is inconsistent; stopping measures distance to A^+ b");
    }
    let cfg = SolverConfig {
        alpha,
        seed: args.common.seed,
        max_iters: args.common.max_iters,
        stop_rule: StopRule::ErrorToPinv { tol: args.common.tol },
        history_stride: args.history_stride,
        x0: None,
        residual_mode: ResidualMode::Auto,
    };
    let trace = solve(&sys, &part, &cfg, Some(&oracle))?;
    println!(
        "{} on {} ({m}x{n}): {} after {} iterations, {:.6} s",
        args.method.label(alpha, ell, tau, m, n),
        spec.label(),
        if trace.converged {
            "converged"
        } else if trace.diverged {
            "diverged"
        } else {
            "not converged"
        },
        trace.iterations,
        trace.wall_time
    );
    if let Some((k, e)) = trace.error_history.last() {
        println!("final error ||x^{k} - A^+ b|| = {e:.6e}");
    }
    if let Some(out) = &args.common.out {
        write_history_csv(&trace, out)?;
        info!("history written to {}", out.display());
    }
    Ok(if trace.converged { Outcome::Done } else { Outcome::NotConverged })
}

fn cmd_bench(args: BenchArgs) -> Result<Outcome> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::from_file(path)?,
        None => {
            let problem = args.problem.spec()?;
            let mut methods = vec![MethodSpec::rk()];
            for m in &args.methods {
                methods.push(parse_method(m)?);
            }
            if args.methods.is_empty() {
                let alpha = args.method.alpha.unwrap_or(1.0);
                if let Some(p) = &args.method.preset {
                    methods.push(MethodSpec::from_preset(p.parse()?, alpha));
                } else {
                    let ell = args.method.ell.map_or(Some(1), |b| b.0);
                    let tau = args.method.tau.and_then(|b| b.0);
                    methods.push(MethodSpec::dsbgs(alpha, ell, tau));
                }
            }
            ExperimentSpec::new(problem, methods)
        }
    };
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(t) = args.tol {
        spec.stop_tol = t;
    }
    if let Some(k) = args.max_iters {
        spec.max_iters = k;
    }
    if let Some(s) = args.seed {
        spec.base_seed = s;
    }
    if args.no_parallel {
        spec.parallel = false;
    }
    if args.history_dir.is_some() {
        spec.history_stride = args.history_stride;
    }

    let results = run_experiment(&spec)?;
    println!("problem: {}", spec.problem.label());
    match spec.problem {
        ProblemSpec::Mtx { .. } => println!("matrix fixed across {} trials; sampler seed varies", spec.trials),
        _ => println!("matrix redrawn per trial (seeds {}..{})", spec.base_seed, spec.base_seed + spec.trials as u64),
    }
    print!("{}", format_results(&results, spec.parallel));

    if let Some(out) = &args.out {
        let rows: Vec<_> = results.iter().map(|r| r.to_record()).collect();
        write_results_csv(&rows, out)?;
        info!("results written to {}", out.display());
    }
    if let Some(dir) = &args.history_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        for r in &results {
            let name: String = r
                .label
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
                .collect::<String>()
                .trim_matches('_')
                .to_string();
            let records: Vec<HistoryRecord> = r
                .mean_error_history
                .iter()
                .map(|&(k, e)| HistoryRecord {
                    k,
                    error_norm: Some(e),
                    residual_norm: None,
                })
                .collect();
            write_history_records(&records, dir.join(format!("{name}.csv")))?;
        }
    }
    let all_failed = results.iter().all(|r| r.per_trial.iter().all(|t| !t.converged));
    Ok(if all_failed { Outcome::NotConverged } else { Outcome::Done })
}

fn cmd_theory(args: TheoryArgs) -> Result<Outcome> {
    let spec = args.problem.spec()?;
    let sys = spec.load(args.seed)?;
    let (m, n) = (sys.m(), sys.n());
    let (ell, tau) = args.method.block_sizes(m, n)?;
    let part = BlockPartition::uniform(m, n, ell, tau)?;
    let alpha = args.method.alpha(&part, &sys)?;
    let report = theory_report(&sys, alpha, ell, tau)?;
    println!("problem: {} (ell = {ell}, tau = {tau})", spec.label());
    print!("{report}");
    Ok(Outcome::Done)
}

fn cmd_gen(args: GenArgs) -> Result<Outcome> {
    let kind = match (args.rank, args.kappa) {
        (Some(r), Some(kappa)) => ProblemKind::Type1 {
            m: args.m,
            n: args.n,
            r,
            kappa,
        },
        _ => ProblemKind::Type2 { m: args.m, n: args.n },
    };
    let problem = kind.generate(args.seed)?;
    let prefix = args.out.to_string_lossy().into_owned();
    let with_suffix = |s: &str| PathBuf::from(format!("{prefix}{s}"));
    write_matrix_market(with_suffix(".mtx"), &problem.system.a)?;
    write_vector_mm(with_suffix("_rhs.mtx"), &problem.system.b)?;
    write_vector_mm(with_suffix("_x.mtx"), &problem.x_true)?;
    let info = dsbgs::linalg::spectral_info(&problem.system.a, DEFAULT_RANK_TOL)?;
    println!(
        "{}: rank {}, cond {:.4}, written to {prefix}.mtx, {prefix}_rhs.mtx, {prefix}_x.mtx",
        kind.label(),
        info.rank,
        info.cond
    );
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
