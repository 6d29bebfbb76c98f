//! Synthetic latent-variable Gaussian models.
//!
//! A model is a sparse positive definite `S*`, an incoherent positive
//! semidefinite low-rank `L*`, and the observed covariance
//! `Sigma* = (S* - L*)^-1`. Generation is deterministic given the spec and
//! the random stream handed in.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    cholesky, eig_sym, matrix_one_norm, read_matrix, spd_inverse, write_matrix, LinalgError,
    SymMatrix, DEFAULT_COND_LIMIT, DEFAULT_EIG_TOL,
};
use crate::rng::{self, NormalSampler, StreamRng};

/// Draws allowed before giving up on the incoherence condition.
pub const MAX_INCOHERENCE_DRAWS: usize = 1000;
/// Fresh draws allowed in `assemble_model`.
pub const MAX_ASSEMBLY_ATTEMPTS: usize = 100;
/// Attempts after which `L*` starts being shrunk by 0.9 per attempt.
pub const SHRINK_AFTER: usize = 10;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("spec infeasible: {0}")]
    SpecInfeasible(String),
    #[error("incoherence bound unreachable after {draws} draws (c0 too small for p)")]
    IncoherenceUnreachable { draws: usize },
    #[error("model invariants violated: {}", .0.join("; "))]
    InvariantViolated(Vec<String>),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("model file: {0}")]
    Io(String),
}

impl From<std::io::Error> for ModelError {
    fn from(e: std::io::Error) -> Self {
        ModelError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for ModelError {
    fn from(e: serde_json::Error) -> Self {
        ModelError::Io(e.to_string())
    }
}

/// Parameters of the sparse-plus-low-rank model class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub p: usize,
    pub n: usize,
    /// Max nonzeros per row of `S*`, diagonal included.
    pub s0: usize,
    /// Rank of `L*`.
    pub r0: usize,
    /// Incoherence constant: `|u_i|_inf <= sqrt(c0 / p)`.
    pub c0: f64,
    /// Minimum nonzero magnitude of `S*`.
    pub theta: f64,
    /// Minimum nonzero eigenvalue of `L*`.
    pub sigma: f64,
    /// Budget for `||S*||_1->1` and `||L*||_1->1`.
    #[serde(rename = "Mp")]
    pub mp: f64,
    /// Spectral bound: `1/M <= eig(Sigma*) <= M`.
    #[serde(rename = "M")]
    pub m: f64,
    pub seed: u64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidSpec(msg));
        if self.p == 0 || self.n == 0 || self.s0 == 0 {
            return bad("p, n and s0 must be positive".into());
        }
        if self.r0 >= self.p {
            return bad(format!("r0 = {} must be < p = {}", self.r0, self.p));
        }
        if self.s0 > self.p {
            return bad(format!("s0 = {} must be <= p = {}", self.s0, self.p));
        }
        for (name, v) in [
            ("c0", self.c0),
            ("theta", self.theta),
            ("sigma", self.sigma),
            ("Mp", self.mp),
            ("M", self.m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} = {v} must be finite and positive"));
            }
        }
        Ok(())
    }

    /// Lower end of the diagonal offset added on top of the off-diagonal row
    /// sum. At least 1, and at least `theta` so the diagonal never falls
    /// below the minimum magnitude.
    pub fn diagonal_offset(&self) -> f64 {
        self.theta.max(1.0)
    }

    /// Largest row l1 norm the sparse generator can produce.
    pub fn worst_case_sparse_norm(&self) -> f64 {
        let off = (self.s0 - 1) as f64 * 2.0 * self.theta;
        2.0 * off + 2.0 * self.diagonal_offset()
    }
}

/// Ground truth for one synthetic data set.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    pub spec: ModelSpec,
    pub s_star: SymMatrix,
    pub l_star: SymMatrix,
    /// `(S* - L*)^-1`.
    pub sigma_star: SymMatrix,
    /// Pairs `(i, j)`, `i <= j`, with `S*[i][j] != 0`.
    pub support: Vec<(usize, usize)>,
    pub true_rank: usize,
    pub lowrank: LowRankComponent,
    /// `sigma` after any shrinking of `L*` during assembly.
    pub effective_sigma: f64,
    /// `max(lambda_max(Sigma*), 1 / lambda_min(Sigma*))`.
    pub m_effective: f64,
}

/// `L* = sum_i eigenvalues[i] * u_i u_i^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankComponent {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

impl LowRankComponent {
    pub fn to_matrix(&self, p: usize) -> SymMatrix {
        if self.eigenvalues.is_empty() {
            return SymMatrix::zeros(p);
        }
        SymMatrix::from_outer_products(p, &self.eigenvalues, &self.eigenvectors)
    }

    fn scaled(&self, factor: f64) -> LowRankComponent {
        LowRankComponent {
            eigenvalues: self.eigenvalues.iter().map(|v| v * factor).collect(),
            eigenvectors: self.eigenvectors.clone(),
        }
    }
}

/// Random sparse, strictly diagonally dominant `S*`.
///
/// Off-diagonal support is a greedy random graph with degree at most
/// `s0 - 1`; magnitudes are uniform on `[theta, 2 theta]` with random sign.
/// Each diagonal entry is the row's off-diagonal l1 norm plus a uniform draw
/// from `[a, 2a]`, `a = max(1, theta)`.
pub fn generate_sparse_component(
    spec: &ModelSpec,
    rng: &mut StreamRng,
) -> Result<SymMatrix, ModelError> {
    spec.validate()?;
    let worst = spec.worst_case_sparse_norm();
    if worst > spec.mp {
        return Err(ModelError::SpecInfeasible(format!(
            "||S*||_1->1 can reach {worst} > Mp = {}",
            spec.mp
        )));
    }
    let p = spec.p;
    let max_degree = spec.s0 - 1;
    let mut pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .collect();
    pairs.shuffle(rng);

    let mut s = SymMatrix::zeros(p);
    let mut degree = vec![0usize; p];
    if max_degree > 0 {
        for (i, j) in pairs {
            if degree[i] < max_degree && degree[j] < max_degree {
                degree[i] += 1;
                degree[j] += 1;
                let mag = rng.gen_range(spec.theta..=2.0 * spec.theta);
                let v = if rng.gen::<bool>() { mag } else { -mag };
                s.set(i, j, v);
            }
        }
    }
    let a = spec.diagonal_offset();
    for i in 0..p {
        let off: f64 = s.row(i).iter().map(|v| v.abs()).sum();
        s.set(i, i, off + rng.gen_range(a..=2.0 * a));
    }
    Ok(s)
}

/// Random incoherent low-rank component (zero when `r0 == 0`).
///
/// Columns of random signs are orthonormalized by modified Gram-Schmidt and
/// the draw is kept when every column has sup-norm at most `sqrt(c0 / p)`.
/// Eigenvalues are uniform on `[sigma, 2 sigma]`.
pub fn generate_lowrank_component(
    spec: &ModelSpec,
    rng: &mut StreamRng,
) -> Result<LowRankComponent, ModelError> {
    spec.validate()?;
    let (p, r) = (spec.p, spec.r0);
    if r == 0 {
        return Ok(LowRankComponent {
            eigenvalues: Vec::new(),
            eigenvectors: Vec::new(),
        });
    }
    let bound = (spec.c0 / p as f64).sqrt();
    for _ in 0..MAX_INCOHERENCE_DRAWS {
        // Sign draws: Gaussian columns almost never meet the bound once r0 > 1.
        let mut cols: Vec<Vec<f64>> = (0..r)
            .map(|_| {
                (0..p)
                    .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        if !modified_gram_schmidt(&mut cols) {
            continue;
        }
        let incoherent = cols
            .iter()
            .all(|u| u.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= bound);
        if incoherent {
            let eigenvalues = (0..r)
                .map(|_| rng.gen_range(spec.sigma..=2.0 * spec.sigma))
                .collect();
            return Ok(LowRankComponent {
                eigenvalues,
                eigenvectors: cols,
            });
        }
    }
    Err(ModelError::IncoherenceUnreachable {
        draws: MAX_INCOHERENCE_DRAWS,
    })
}

/// Orthonormalizes in place; false if a column collapses.
fn modified_gram_schmidt(cols: &mut [Vec<f64>]) -> bool {
    for k in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(k);
        let v = &mut rest[0];
        for u in done.iter() {
            let proj: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= proj * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= norm);
    }
    true
}

/// Assembles a model from the spec's own seed.
pub fn assemble_model(spec: &ModelSpec) -> Result<LatentModel, ModelError> {
    let mut rng = rng::stream(spec.seed, &[rng::PURPOSE_MODEL]);
    assemble_model_with(spec, &mut rng)
}

/// Draws `S*` and `L*` until every class invariant holds.
///
/// After `SHRINK_AFTER` failed draws `L*` is shrunk by a further factor 0.9
/// per attempt; the resulting minimum eigenvalue is kept in
/// `effective_sigma`.
pub fn assemble_model_with(
    spec: &ModelSpec,
    rng: &mut StreamRng,
) -> Result<LatentModel, ModelError> {
    spec.validate()?;
    let p = spec.p;
    let mut failures: BTreeMap<&'static str, usize> = BTreeMap::new();

    for attempt in 0..MAX_ASSEMBLY_ATTEMPTS {
        let s_star = generate_sparse_component(spec, rng)?;
        let shrink = 0.9f64.powi(attempt.saturating_sub(SHRINK_AFTER - 1) as i32);
        let lowrank = generate_lowrank_component(spec, rng)?.scaled(shrink);
        let l_star = lowrank.to_matrix(p);

        if matrix_one_norm(&l_star) > spec.mp {
            *failures.entry("||L*||_1->1 <= Mp").or_default() += 1;
            continue;
        }
        let precision = &s_star - &l_star;
        if cholesky(&precision).is_err() {
            *failures.entry("S* - L* positive definite").or_default() += 1;
            continue;
        }
        let sigma_star = match spd_inverse(&precision, DEFAULT_COND_LIMIT) {
            Ok(s) => s,
            Err(_) => {
                *failures.entry("S* - L* well conditioned").or_default() += 1;
                continue;
            }
        };
        let eig = eig_sym(&sigma_star, DEFAULT_EIG_TOL)?;
        let (lmax, lmin) = (eig.values[0], eig.values[p - 1]);
        let m_effective = lmax.max(1.0 / lmin);
        if m_effective > spec.m {
            *failures.entry("spectral bound M").or_default() += 1;
            continue;
        }

        let support = (0..p)
            .flat_map(|i| (i..p).map(move |j| (i, j)))
            .filter(|&(i, j)| s_star.get(i, j) != 0.0)
            .collect();
        return Ok(LatentModel {
            spec: spec.clone(),
            s_star,
            l_star,
            sigma_star,
            support,
            true_rank: spec.r0,
            effective_sigma: spec.sigma * shrink,
            lowrank,
            m_effective,
        });
    }
    let (worst, count) = failures
        .iter()
        .max_by_key(|(_, c)| **c)
        .map(|(k, c)| (*k, *c))
        .unwrap_or(("unknown", 0));
    Err(ModelError::SpecInfeasible(format!(
        "no draw satisfied all invariants in {MAX_ASSEMBLY_ATTEMPTS} attempts; \
         most frequent failure: {worst} ({count} times)"
    )))
}

/// Checks every class invariant of a model; returns the list of violations.
pub fn check_model(model: &LatentModel) -> Result<(), ModelError> {
    let spec = &model.spec;
    let p = spec.p;
    let mut v = Vec::new();
    let tol = 1e-10;

    if cholesky(&model.s_star).is_err() {
        v.push("S* is not positive definite".to_string());
    }
    for i in 0..p {
        let nnz = model.s_star.row_nnz(i);
        if nnz > spec.s0 {
            v.push(format!("row {i} of S* has {nnz} > s0 = {} nonzeros", spec.s0));
        }
    }
    let s_norm = matrix_one_norm(&model.s_star);
    if s_norm > spec.mp + tol {
        v.push(format!("||S*||_1->1 = {s_norm} > Mp = {}", spec.mp));
    }
    let min_mag = model
        .s_star
        .as_slice()
        .iter()
        .filter(|x| **x != 0.0)
        .fold(f64::INFINITY, |m, x| m.min(x.abs()));
    if min_mag < spec.theta {
        v.push(format!("min nonzero |S*_ij| = {min_mag} < theta = {}", spec.theta));
    }

    match eig_sym(&model.l_star, DEFAULT_EIG_TOL) {
        Ok(eig) => {
            let scale = eig.values.first().map_or(0.0, |x| x.abs()).max(1.0);
            let nonzero = eig.values.iter().filter(|x| **x > 1e-10 * scale).count();
            if nonzero != model.true_rank || model.true_rank != spec.r0 {
                v.push(format!("rank(L*) = {nonzero}, expected r0 = {}", spec.r0));
            }
            if eig.values.iter().any(|x| *x < -1e-10 * scale) {
                v.push("L* is not positive semidefinite".to_string());
            }
        }
        Err(e) => v.push(format!("eig(L*) failed: {e}")),
    }
    let bound = (spec.c0 / p as f64).sqrt();
    for (k, u) in model.lowrank.eigenvectors.iter().enumerate() {
        let sup = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if sup > bound + 1e-12 {
            v.push(format!("|u_{k}|_inf = {sup} > sqrt(c0/p) = {bound}"));
        }
    }
    for (k, lam) in model.lowrank.eigenvalues.iter().enumerate() {
        if *lam < model.effective_sigma * (1.0 - 1e-12) {
            v.push(format!(
                "lambda_{k}(L*) = {lam} < sigma = {}",
                model.effective_sigma
            ));
        }
    }
    let rebuilt = model.lowrank.to_matrix(p);
    if crate::linalg::entrywise_max_norm(&(&rebuilt - &model.l_star)) > 1e-12 {
        v.push("L* does not match its eigen-decomposition".to_string());
    }
    let l_norm = matrix_one_norm(&model.l_star);
    if l_norm > spec.mp + tol {
        v.push(format!("||L*||_1->1 = {l_norm} > Mp = {}", spec.mp));
    }

    match eig_sym(&model.sigma_star, DEFAULT_EIG_TOL) {
        Ok(eig) => {
            let (lmax, lmin) = (eig.values[0], eig.values[p - 1]);
            if lmax > spec.m * (1.0 + 1e-12) {
                v.push(format!("lambda_max(Sigma*) = {lmax} > M = {}", spec.m));
            }
            if lmin < (1.0 / spec.m) * (1.0 - 1e-12) {
                v.push(format!("lambda_min(Sigma*) = {lmin} < 1/M = {}", 1.0 / spec.m));
            }
        }
        Err(e) => v.push(format!("eig(Sigma*) failed: {e}")),
    }
    let product = model
        .sigma_star
        .matmul(&(&model.s_star - &model.l_star).to_matrix());
    let resid = product.sub(&crate::linalg::Matrix::identity(p)).max_abs();
    if resid > 1e-8 * model.m_effective.powi(2).max(1.0) {
        v.push(format!("Sigma* (S* - L*) differs from I by {resid:e}"));
    }

    if v.is_empty() {
        Ok(())
    } else {
        Err(ModelError::InvariantViolated(v))
    }
}

/// `(1/n) sum_k x_k x_k^T` for `n` draws `x_k ~ N(0, Sigma*)`.
pub fn sample_covariance(
    model: &LatentModel,
    n: usize,
    rng: &mut StreamRng,
) -> Result<SymMatrix, ModelError> {
    if n < 2 {
        return Err(ModelError::InvalidSpec(format!("n = {n} must be >= 2")));
    }
    let p = model.spec.p;
    let chol = cholesky(&model.sigma_star)?;
    let mut normal = NormalSampler::new();
    let mut z = vec![0.0; p];
    let mut acc = vec![0.0; p * p];
    for _ in 0..n {
        normal.fill(rng, &mut z);
        let x = chol.lower_mul(&z);
        for i in 0..p {
            let xi = x[i];
            let row = &mut acc[i * p..(i + 1) * p];
            for j in i..p {
                row[j] += xi * x[j];
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    Ok(SymMatrix::from_fn(p, |i, j| acc[i * p + j] * inv_n))
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelSidecar {
    schema_version: u32,
    spec: ModelSpec,
    support: Vec<(usize, usize)>,
    true_rank: usize,
    effective_sigma: f64,
    m_effective: f64,
    lowrank: LowRankComponent,
}

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Writes `S_star.txt`, `L_star.txt`, `Sigma_star.txt` and `model.json`.
pub fn export_model(model: &LatentModel, dir: impl AsRef<Path>) -> Result<(), ModelError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("S_star.txt"), write_matrix(&model.s_star))?;
    std::fs::write(dir.join("L_star.txt"), write_matrix(&model.l_star))?;
    std::fs::write(dir.join("Sigma_star.txt"), write_matrix(&model.sigma_star))?;
    let sidecar = ModelSidecar {
        schema_version: MODEL_SCHEMA_VERSION,
        spec: model.spec.clone(),
        support: model.support.clone(),
        true_rank: model.true_rank,
        effective_sigma: model.effective_sigma,
        m_effective: model.m_effective,
        lowrank: model.lowrank.clone(),
    };
    std::fs::write(dir.join("model.json"), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

pub fn import_model(dir: impl AsRef<Path>) -> Result<LatentModel, ModelError> {
    let dir = dir.as_ref();
    let sidecar: ModelSidecar =
        serde_json::from_str(&std::fs::read_to_string(dir.join("model.json"))?)?;
    if sidecar.schema_version != MODEL_SCHEMA_VERSION {
        return Err(ModelError::Io(format!(
            "unsupported model schema version {}",
            sidecar.schema_version
        )));
    }
    Ok(LatentModel {
        s_star: read_matrix(dir.join("S_star.txt"))?,
        l_star: read_matrix(dir.join("L_star.txt"))?,
        sigma_star: read_matrix(dir.join("Sigma_star.txt"))?,
        spec: sidecar.spec,
        support: sidecar.support,
        true_rank: sidecar.true_rank,
        lowrank: sidecar.lowrank,
        effective_sigma: sidecar.effective_sigma,
        m_effective: sidecar.m_effective,
    })
}
