//! Latent-variable Gaussian graphical model selection.
//!
//! Given a sample covariance of the observed coordinates, the estimator
//! recovers the sign pattern of the sparse conditional precision matrix `S*`
//! and the rank of the low-rank latent contribution `L*`, where the observed
//! precision matrix is `S* - L*`.
//!
//! Modules, bottom up:
//! - [`linalg`]: dense symmetric matrices, Cholesky inversion, Jacobi eigensolver.
//! - [`lp`]: dense two-phase simplex used for the column programs.
//! - [`model`]: synthetic ground-truth models and Gaussian sampling.
//! - [`estimator`]: the two-stage sparse / low-rank estimator.
//! - [`harness`]: Monte Carlo replicates, sweeps, and constant calibration.

pub mod cli;
pub mod estimator;
pub mod harness;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod rng;

pub use estimator::{estimate, EstimateResult, EstimatorConfig, EstimatorError};
pub use harness::{
    calibrate_constants, check_assumptions, run_plan, run_replicate, AssumptionReport,
    Calibration, ExperimentPlan, HarnessError, TrialReport,
};
pub use linalg::{LinalgError, Matrix, SymMatrix};
pub use lp::{solve_lp, LinearProgram, LpSolution, LpStatus};
pub use model::{assemble_model, check_model, sample_covariance, LatentModel, ModelError, ModelSpec};
