//! Dense symmetric linear algebra.
//!
//! Everything here works on small row-major dense matrices (p up to a few
//! hundred). Operations are pure and deterministic; no BLAS.

mod cholesky;
mod eigen;
mod io;
mod matrix;

pub use cholesky::{cholesky, spd_inverse, Cholesky, DEFAULT_COND_LIMIT};
pub use eigen::{eig_sym, spectral_norm, EigenDecomposition, DEFAULT_EIG_TOL, MAX_SWEEPS};
pub use io::{parse_matrix, read_matrix, write_matrix, MATRIX_ASYMMETRY_TOL};
pub use matrix::{entrywise_max_norm, matrix_one_norm, Matrix, SymMatrix};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension must be positive")]
    EmptyMatrix,
    #[error("expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("condition number estimate {estimate:e} exceeds limit {limit:e}")]
    IllConditioned { estimate: f64, limit: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix text format: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LinalgError {
    fn from(e: std::io::Error) -> Self {
        LinalgError::Io(e.to_string())
    }
}
