//! Two-stage estimator for latent-variable graphical models.
//!
//! Stage one estimates the sparse conditional precision matrix: a column-wise
//! constrained l1 program (`min |beta|_1` s.t. `|Sigma_n beta - e_j|_inf <=
//! tau`), min-magnitude symmetrization, then hard thresholding at
//! `9 Mp tau`. Stage two subtracts the inverse sample covariance from the
//! thresholded sparse part (the precision is `S* - L*`, so `S* - precision`
//! is `L*`) and keeps the eigenvalues above
//! `C3 sqrt(p / n)`; the count of kept eigenvalues is the rank estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    eig_sym, entrywise_max_norm, matrix_one_norm, spd_inverse, LinalgError, Matrix, SymMatrix,
    DEFAULT_COND_LIMIT, DEFAULT_EIG_TOL,
};
use crate::lp::{solve_lp_with, LinearProgram, LpError, LpOptions, LpStatus};

/// Slack allowed on top of `tau` when checking `|Sigma_n S1 - I|_inf`.
pub const FEASIBILITY_SLACK_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid estimator config: {0}")]
    InvalidConfig(String),
    #[error("column {column}: LP reported {status:?}; adjust tau or regularize Sigma_n")]
    SolverDegenerate { column: usize, status: LpStatus },
    #[error("column {column}: {source}")]
    Lp { column: usize, source: LpError },
    #[error("n = {n} <= p = {p}: the inverse sample covariance is undefined")]
    SampleSizeTooSmall { p: usize, n: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Scale of `tau = C1 Mp sqrt(log p / n)`.
    #[serde(rename = "C1")]
    pub c1: f64,
    /// Deviation constant of the event `|Sigma* - Sigma_n|_inf <= C2 sqrt(log p / n)`.
    /// Only the harness reads it.
    #[serde(rename = "C2", default = "default_c2")]
    pub c2: f64,
    /// Scale of the eigenvalue cut `C3 sqrt(p / n)`.
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "Mp_proxy")]
    pub mp_proxy: f64,
    #[serde(default = "default_lp_tol")]
    pub lp_tol: f64,
    #[serde(default = "default_cond_limit")]
    pub cond_limit: f64,
}

fn default_c2() -> f64 {
    1.0
}

fn default_lp_tol() -> f64 {
    1e-9
}

fn default_cond_limit() -> f64 {
    DEFAULT_COND_LIMIT
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            c1: 2.0,
            c2: default_c2(),
            c3: 1.0,
            mp_proxy: 1.0,
            lp_tol: default_lp_tol(),
            cond_limit: default_cond_limit(),
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        for (name, v) in [
            ("C1", self.c1),
            ("C2", self.c2),
            ("C3", self.c3),
            ("Mp_proxy", self.mp_proxy),
            ("lp_tol", self.lp_tol),
            ("cond_limit", self.cond_limit),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(EstimatorError::InvalidConfig(format!(
                    "{name} = {v} must be finite and positive"
                )));
            }
        }
        Ok(())
    }

    pub fn sparse_threshold(&self, tau: f64) -> f64 {
        9.0 * self.mp_proxy * tau
    }

    pub fn eigen_threshold(&self, p: usize, n: usize) -> f64 {
        self.c3 * (p as f64 / n as f64).sqrt()
    }

    fn lp_options(&self) -> LpOptions {
        LpOptions {
            optimality_tol: self.lp_tol,
            ..LpOptions::default()
        }
    }
}

/// `C1 * Mp_proxy * sqrt(ln(p) / n)`.
pub fn compute_tau(p: usize, n: usize, cfg: &EstimatorConfig) -> f64 {
    tau_from_log(p as f64, n as f64, cfg)
}

fn tau_from_log(p: f64, n: f64, cfg: &EstimatorConfig) -> f64 {
    cfg.c1 * cfg.mp_proxy * (p.ln() / n).sqrt()
}

/// The LP for one column, over split variables `[beta+, beta-]`.
pub fn clime_column_program(
    sigma_n: &SymMatrix,
    col: usize,
    tau: f64,
) -> Result<LinearProgram, LpError> {
    let p = sigma_n.dim();
    let mut rows = Vec::with_capacity(4 * p);
    let mut rhs = Vec::with_capacity(4 * p);
    for i in 0..p {
        let e = if i == col { 1.0 } else { 0.0 };
        let s = sigma_n.row(i);
        let upper: Vec<f64> = s.iter().copied().chain(s.iter().map(|v| -v)).collect();
        let lower: Vec<f64> = upper.iter().map(|v| -v).collect();
        rows.push(upper);
        rhs.push(tau + e);
        rows.push(lower);
        rhs.push(tau - e);
    }
    for k in 0..2 * p {
        let mut r = vec![0.0; 2 * p];
        r[k] = -1.0;
        rows.push(r);
        rhs.push(0.0);
    }
    LinearProgram::new(vec![1.0; 2 * p], rows, rhs)
}

/// `argmin |beta|_1` subject to `|Sigma_n beta - e_col|_inf <= tau`.
pub fn clime_column(
    sigma_n: &SymMatrix,
    col: usize,
    tau: f64,
    cfg: &EstimatorConfig,
) -> Result<Vec<f64>, EstimatorError> {
    let p = sigma_n.dim();
    assert!(col < p, "column {col} out of range for p = {p}");
    let prog = clime_column_program(sigma_n, col, tau)
        .map_err(|source| EstimatorError::Lp { column: col, source })?;
    let sol = solve_lp_with(&prog, &cfg.lp_options())
        .map_err(|source| EstimatorError::Lp { column: col, source })?;
    if sol.status != LpStatus::Optimal {
        return Err(EstimatorError::SolverDegenerate {
            column: col,
            status: sol.status,
        });
    }
    Ok((0..p).map(|k| sol.x[k] - sol.x[p + k]).collect())
}

/// Column-stacked CLIME solution `S1`; columns are solved in parallel.
pub fn clime_estimate(
    sigma_n: &SymMatrix,
    tau: f64,
    cfg: &EstimatorConfig,
) -> Result<Matrix, EstimatorError> {
    let p = sigma_n.dim();
    let columns = (0..p)
        .into_par_iter()
        .map(|j| clime_column(sigma_n, j, tau, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Matrix::from_columns(&columns))
}

/// `|Sigma_n S1 - I|_inf`.
pub fn feasibility_slack(sigma_n: &SymMatrix, s1: &Matrix) -> f64 {
    sigma_n
        .matmul(s1)
        .sub(&Matrix::identity(sigma_n.dim()))
        .max_abs()
}

/// Keeps, for each pair, whichever of `S1[i][j]`, `S1[j][i]` has the smaller
/// magnitude. Equal magnitudes keep the upper-triangle entry.
pub fn symmetrize_min(s1: &Matrix) -> SymMatrix {
    assert_eq!(s1.rows(), s1.cols());
    SymMatrix::from_fn(s1.rows(), |i, j| {
        let upper = s1.get(i, j);
        let lower = s1.get(j, i);
        if upper.abs() <= lower.abs() {
            upper
        } else {
            lower
        }
    })
}

/// Zeroes entries with `|x| <= threshold`.
pub fn threshold_support(s: &SymMatrix, threshold: f64) -> SymMatrix {
    s.map(|_, _, x| if x.abs() > threshold { x } else { 0.0 })
}

/// Entrywise sign in `{-1, 0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPattern {
    dim: usize,
    signs: Vec<i8>,
}

impl SignPattern {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.signs[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<i8>> {
        self.signs.chunks(self.dim).map(<[i8]>::to_vec).collect()
    }

    /// Number of `(i, j)` positions where the patterns disagree.
    pub fn mismatches(&self, other: &SignPattern) -> usize {
        self.signs
            .iter()
            .zip(&other.signs)
            .filter(|(a, b)| a != b)
            .count()
    }
}

pub fn sign_pattern(s: &SymMatrix) -> SignPattern {
    let signs = s
        .as_slice()
        .iter()
        .map(|&x| {
            if x > 0.0 {
                1
            } else if x < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect();
    SignPattern {
        dim: s.dim(),
        signs,
    }
}

#[derive(Debug, Clone)]
pub struct SparseEstimate {
    /// Column-stacked LP solution, not necessarily symmetric.
    pub s_hat1: Matrix,
    pub s_hat: SymMatrix,
    pub s_tilde: SymMatrix,
    pub tau_n: f64,
    pub sparse_threshold: f64,
    pub feasibility_slack: f64,
}

pub fn estimate_sparse(
    sigma_n: &SymMatrix,
    n: usize,
    cfg: &EstimatorConfig,
) -> Result<SparseEstimate, EstimatorError> {
    cfg.validate()?;
    let p = sigma_n.dim();
    if p < 2 || n < 2 {
        return Err(EstimatorError::InvalidConfig(format!(
            "need p >= 2 and n >= 2, got p = {p}, n = {n}"
        )));
    }
    let tau_n = compute_tau(p, n, cfg);
    sparse_with_tau(sigma_n, tau_n, cfg)
}

/// Stage one with an explicit `tau`.
pub fn sparse_with_tau(
    sigma_n: &SymMatrix,
    tau_n: f64,
    cfg: &EstimatorConfig,
) -> Result<SparseEstimate, EstimatorError> {
    let s_hat1 = clime_estimate(sigma_n, tau_n, cfg)?;
    let slack = feasibility_slack(sigma_n, &s_hat1);
    let s_hat = symmetrize_min(&s_hat1);
    let sparse_threshold = cfg.sparse_threshold(tau_n);
    let s_tilde = threshold_support(&s_hat, sparse_threshold);
    Ok(SparseEstimate {
        s_hat1,
        s_hat,
        s_tilde,
        tau_n,
        sparse_threshold,
        feasibility_slack: slack,
    })
}

#[derive(Debug, Clone)]
pub struct LowRankEstimate {
    /// `S_tilde - Sigma_n^-1`.
    pub l_hat: SymMatrix,
    pub l_tilde: SymMatrix,
    pub rank_estimate: usize,
    pub eigen_threshold: f64,
    /// Spectrum of `L_hat`, descending.
    pub l_hat_eigenvalues: Vec<f64>,
    /// Negative eigenvalues of `L_hat` (always below the cut).
    pub discarded_negative_eigenvalues: Vec<f64>,
}

pub fn estimate_lowrank(
    sigma_n: &SymMatrix,
    s_tilde: &SymMatrix,
    n: usize,
    cfg: &EstimatorConfig,
) -> Result<LowRankEstimate, EstimatorError> {
    cfg.validate()?;
    let p = sigma_n.dim();
    if n <= p {
        return Err(EstimatorError::SampleSizeTooSmall { p, n });
    }
    let precision = spd_inverse(sigma_n, cfg.cond_limit)?;
    let l_hat = s_tilde - &precision;
    Ok(truncate_spectrum(l_hat, cfg.eigen_threshold(p, n))?)
}

/// Keeps eigenpairs with eigenvalue strictly above `threshold`.
pub fn truncate_spectrum(
    l_hat: SymMatrix,
    threshold: f64,
) -> Result<LowRankEstimate, LinalgError> {
    let eig = eig_sym(&l_hat, DEFAULT_EIG_TOL)?;
    let kept: Vec<f64> = eig
        .values
        .iter()
        .map(|&v| if v > threshold { v } else { 0.0 })
        .collect();
    let rank_estimate = kept.iter().filter(|v| **v != 0.0).count();
    let l_tilde = if rank_estimate == 0 {
        SymMatrix::zeros(l_hat.dim())
    } else {
        eig.reconstruct_with(&kept)
    };
    Ok(LowRankEstimate {
        l_tilde,
        rank_estimate,
        eigen_threshold: threshold,
        discarded_negative_eigenvalues: eig.values.iter().copied().filter(|v| *v < 0.0).collect(),
        l_hat_eigenvalues: eig.values,
        l_hat,
    })
}

/// Full pipeline output.
#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub p: usize,
    pub n: usize,
    pub sparse: SparseEstimate,
    pub lowrank: LowRankEstimate,
}

impl EstimateResult {
    pub fn s_tilde(&self) -> &SymMatrix {
        &self.sparse.s_tilde
    }

    pub fn rank_estimate(&self) -> usize {
        self.lowrank.rank_estimate
    }

    pub fn summary(&self) -> EstimateSummary {
        EstimateSummary {
            schema_version: ESTIMATE_SCHEMA_VERSION,
            p: self.p,
            n: self.n,
            tau_n: self.sparse.tau_n,
            sparse_threshold: self.sparse.sparse_threshold,
            eigen_threshold: self.lowrank.eigen_threshold,
            feasibility_slack: self.sparse.feasibility_slack,
            rank_estimate: self.lowrank.rank_estimate,
            support_size: self
                .sparse
                .s_tilde
                .as_slice()
                .iter()
                .filter(|v| **v != 0.0)
                .count(),
            l_hat_eigenvalues: self.lowrank.l_hat_eigenvalues.clone(),
            discarded_negative_eigenvalues: self.lowrank.discarded_negative_eigenvalues.clone(),
        }
    }

    /// True when the LP solution satisfies its defining constraint.
    pub fn is_feasible(&self) -> bool {
        self.sparse.feasibility_slack <= self.sparse.tau_n + FEASIBILITY_SLACK_TOL
    }
}

pub const ESTIMATE_SCHEMA_VERSION: u32 = 1;

/// JSON summary of an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub schema_version: u32,
    pub p: usize,
    pub n: usize,
    pub tau_n: f64,
    pub sparse_threshold: f64,
    pub eigen_threshold: f64,
    pub feasibility_slack: f64,
    pub rank_estimate: usize,
    /// Nonzero entries of the thresholded sparse estimate.
    pub support_size: usize,
    pub l_hat_eigenvalues: Vec<f64>,
    pub discarded_negative_eigenvalues: Vec<f64>,
}

pub fn estimate(
    sigma_n: &SymMatrix,
    n: usize,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult, EstimatorError> {
    let sparse = estimate_sparse(sigma_n, n, cfg)?;
    let lowrank = estimate_lowrank(sigma_n, &sparse.s_tilde, n, cfg)?;
    Ok(EstimateResult {
        p: sigma_n.dim(),
        n,
        sparse,
        lowrank,
    })
}

/// Data-driven stand-in for `Mp`: the l1->1 norm of a pilot estimate run
/// with `Mp_proxy = 1`.
pub fn plug_in_mp(
    sigma_n: &SymMatrix,
    n: usize,
    cfg: &EstimatorConfig,
) -> Result<f64, EstimatorError> {
    let pilot_cfg = EstimatorConfig {
        mp_proxy: 1.0,
        ..cfg.clone()
    };
    let pilot = estimate_sparse(sigma_n, n, &pilot_cfg)?;
    Ok(matrix_one_norm(&pilot.s_hat))
}

/// `|A - B|_inf` for the sup-norm error reports.
pub fn sup_error(estimate: &SymMatrix, truth: &SymMatrix) -> f64 {
    entrywise_max_norm(&(estimate - truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EstimatorConfig {
        EstimatorConfig::default()
    }

    #[test]
    fn tau_unit_case() {
        let c = EstimatorConfig {
            c1: 1.0,
            mp_proxy: 1.0,
            ..cfg()
        };
        assert!((tau_from_log(std::f64::consts::E, 1.0, &c) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tau_arithmetic() {
        let c = EstimatorConfig {
            c1: 2.0,
            mp_proxy: 1.5,
            ..cfg()
        };
        // 3 * sqrt(ln(100) / 1e4), evaluated independently
        let t = compute_tau(100, 10_000, &c);
        assert!((t - 0.064_378_980_788_680_41).abs() < 1e-15, "{t}");
        let ratio = compute_tau(100, 10_000, &c) / compute_tau(100, 20_000, &c);
        assert!((ratio - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identity_column() {
        let col = clime_column(&SymMatrix::identity(3), 0, 0.25, &cfg()).unwrap();
        assert!((col[0] - 0.75).abs() < 1e-12);
        assert_eq!(&col[1..], &[0.0, 0.0]);
    }

    #[test]
    fn large_tau_gives_zero() {
        for tau in [1.0, 1.5] {
            let col = clime_column(&SymMatrix::identity(3), 1, tau, &cfg()).unwrap();
            assert!(col.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn identity_estimate() {
        let s1 = clime_estimate(&SymMatrix::identity(4), 0.25, &cfg()).unwrap();
        let expected = SymMatrix::identity(4).scale(0.75).to_matrix();
        assert!(s1.sub(&expected).max_abs() < 1e-12);
    }

    #[test]
    fn symmetrize_examples() {
        let s1 = Matrix::from_rows(vec![vec![1.0, 5.0], vec![-2.0, 1.0]]).unwrap();
        let s = symmetrize_min(&s1);
        assert_eq!(s.row(0), &[1.0, -2.0]);
        assert_eq!(s.row(1), &[-2.0, 1.0]);

        let tie = Matrix::from_rows(vec![vec![1.0, 3.0], vec![-3.0, 1.0]]).unwrap();
        assert_eq!(symmetrize_min(&tie).get(1, 0), 3.0);

        let sym = SymMatrix::from_rows(vec![vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert_eq!(symmetrize_min(&sym.to_matrix()), sym);
    }

    #[test]
    fn threshold_examples() {
        let t = threshold_support(&SymMatrix::diag(&[1.0, 0.1]), 0.5);
        assert_eq!(t, SymMatrix::diag(&[1.0, 0.0]));
        let m = SymMatrix::from_rows(vec![vec![0.0, -0.5], vec![-0.5, 2.0]]).unwrap();
        assert_eq!(threshold_support(&m, 0.0), m);
        // strict inequality: an entry equal to the cut is removed
        assert_eq!(threshold_support(&m, 0.5).get(0, 1), 0.0);
        let once = threshold_support(&m, 0.3);
        assert_eq!(threshold_support(&once, 0.3), once);
    }

    #[test]
    fn sign_pattern_examples() {
        assert!(sign_pattern(&SymMatrix::zeros(3))
            .rows()
            .iter()
            .flatten()
            .all(|s| *s == 0));
        let m = SymMatrix::from_rows(vec![vec![2.0, -3.0], vec![-3.0, 0.0]]).unwrap();
        assert_eq!(sign_pattern(&m).rows(), vec![vec![1, -1], vec![-1, 0]]);
    }

    #[test]
    fn truncation_rule() {
        let low = truncate_spectrum(SymMatrix::diag(&[5.0, 0.1, 0.0]), 1.0).unwrap();
        assert_eq!(low.rank_estimate, 1);
        assert_eq!(low.l_tilde, SymMatrix::diag(&[5.0, 0.0, 0.0]));
        let neg = truncate_spectrum(SymMatrix::diag(&[2.0, -3.0]), 1.0).unwrap();
        assert_eq!(neg.discarded_negative_eigenvalues, vec![-3.0]);
        assert_eq!(neg.rank_estimate, 1);
    }

    #[test]
    fn refuses_n_at_most_p() {
        let s = SymMatrix::identity(5);
        assert!(matches!(
            estimate_lowrank(&s, &s, 5, &cfg()),
            Err(EstimatorError::SampleSizeTooSmall { p: 5, n: 5 })
        ));
    }

    #[test]
    fn singular_covariance_surfaces_linalg_error() {
        let s = SymMatrix::diag(&[1.0, 0.0]);
        assert!(matches!(
            estimate_lowrank(&s, &SymMatrix::zeros(2), 100, &cfg()),
            Err(EstimatorError::Linalg(LinalgError::NotPositiveDefinite { .. }))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(EstimatorConfig { c3: 0.0, ..cfg() }.validate().is_err());
        assert!(EstimatorConfig { mp_proxy: f64::INFINITY, ..cfg() }.validate().is_err());
        assert!(cfg().validate().is_ok());
    }
}
