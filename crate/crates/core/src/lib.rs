//! Doubly stochastic block Gauss–Seidel (DSBGS) for `Ax = b`.
//!
//! Each iteration samples a row block `I` and a column block `J` with
//! probability proportional to ‖A_{I,J}‖_F² and corrects `x_J` using only the
//! submatrix `A_{I,J}`. Landweber, randomized Kaczmarz, randomized
//! Gauss–Seidel and doubly stochastic Gauss–Seidel are the partitions
//! `(s, t) = (1, 1), (m, 1), (1, n), (m, n)`.
//!
//! * [`linalg`]: dense kernels, SVD, pseudoinverse oracle
//! * [`partition`]: block partitions, sampling distribution, β and ρ
//! * [`solver`]: the iteration, presets, objective and mean-iterate recursion
//! * [`theory`]: convergence rates and admissible step sizes
//! * [`probgen`]: synthetic Type I / Type II problems
//! * [`io`]: Matrix Market and CSV
//! * [`bench`]: multi-trial experiments

pub mod bench;
pub mod error;
pub mod io;
pub mod linalg;
pub mod partition;
pub mod probgen;
pub mod rng;
pub mod solver;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, OracleSolution, SpectralInfo};
pub use partition::{BlockDistribution, BlockPartition, PartitionConstants};
pub use solver::{solve, Dsbgs, LinearSystem, Preset, SolveTrace, SolverConfig, StopRule};
pub use theory::TheoryReport;
