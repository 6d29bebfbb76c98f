//! Monte Carlo harness: single replicates, parameter sweeps, calibration.

mod calibrate;
mod plan;

pub use calibrate::{calibrate_constants, percentile, Calibration, CALIBRATION_SCHEMA_VERSION};
pub use plan::{
    run_plan, write_outputs, CellAggregate, ErrorSummary, ExperimentPlan, OutputFormat,
    PlanOutcome, Sweep, AGGREGATE_SCHEMA_VERSION, CSV_COLUMNS,
};

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{self, compute_tau, sign_pattern, EstimateResult, EstimatorConfig};
use crate::linalg::{entrywise_max_norm, spectral_norm, SymMatrix};
use crate::model::{assemble_model_with, sample_covariance, LatentModel, ModelError, ModelSpec};
use crate::rng::{self, PURPOSE_MODEL, PURPOSE_SAMPLE};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Estimator(#[from] estimator::EstimatorError),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

/// Finite-sample versions of the conditions the consistency results assume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// `sqrt(ln p / n) < 1`, the surrogate for the rate vanishing.
    pub rate_small: bool,
    /// `|L*|_inf <= Mp tau`.
    pub lowrank_sup_small: bool,
    /// `sqrt(p / n) <= 1 / (16 sqrt(2) M^2)`.
    pub sample_size: bool,
    /// `Mp^2 s0 <= sqrt(p / ln p)`.
    pub sparsity_budget: bool,
    /// `theta > 18 Mp tau`.
    pub theta_gap: bool,
    /// `sigma > 2 C3 sqrt(p / n)`.
    pub sigma_gap: bool,
}

impl AssumptionReport {
    pub const CLAUSES: [&'static str; 6] = [
        "rate_small",
        "lowrank_sup_small",
        "sample_size",
        "sparsity_budget",
        "theta_gap",
        "sigma_gap",
    ];

    pub fn clauses(&self) -> [(&'static str, bool); 6] {
        [
            ("rate_small", self.rate_small),
            ("lowrank_sup_small", self.lowrank_sup_small),
            ("sample_size", self.sample_size),
            ("sparsity_budget", self.sparsity_budget),
            ("theta_gap", self.theta_gap),
            ("sigma_gap", self.sigma_gap),
        ]
    }

    /// Conditions under which `|S_hat - S*|_inf <= 9 Mp tau` is claimed.
    pub fn sup_bound_conditions(&self) -> bool {
        self.rate_small && self.lowrank_sup_small
    }

    /// Conditions under which `|L_hat - L*| <= C3 sqrt(p / n)` is claimed.
    pub fn spectral_bound_conditions(&self) -> bool {
        self.sup_bound_conditions() && self.sample_size && self.sparsity_budget
    }

    pub fn all(&self) -> bool {
        self.clauses().iter().all(|(_, ok)| *ok)
    }
}

/// Evaluates each clause literally at the model's `(p, n)`.
///
/// `tau` uses `cfg.mp_proxy`; class quantities (`M`, `Mp`, `s0`, `theta`)
/// come from the spec and `sigma` is the model's effective value.
pub fn check_assumptions(model: &LatentModel, cfg: &EstimatorConfig) -> AssumptionReport {
    let spec = &model.spec;
    let (p, n) = (spec.p as f64, spec.n as f64);
    let tau = compute_tau(spec.p, spec.n, cfg);
    let mp_tau = cfg.mp_proxy * tau;
    AssumptionReport {
        rate_small: (p.ln() / n).sqrt() < 1.0,
        lowrank_sup_small: entrywise_max_norm(&model.l_star) <= mp_tau,
        sample_size: (p / n).sqrt() <= 1.0 / (16.0 * 2f64.sqrt() * spec.m * spec.m),
        sparsity_budget: spec.mp * spec.mp * spec.s0 as f64 <= (p / p.ln()).sqrt(),
        theta_gap: spec.theta > 18.0 * mp_tau,
        sigma_gap: model.effective_sigma > 2.0 * cfg.eigen_threshold(spec.p, spec.n),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateOptions {
    /// Feed `Sigma*` to the estimator instead of a sample covariance.
    #[serde(default)]
    pub noiseless: bool,
    /// Use the spec's `Mp` as `Mp_proxy`.
    #[serde(default)]
    pub oracle_mp: bool,
}

/// The model and covariance input of one replicate.
#[derive(Debug, Clone)]
pub struct ReplicateData {
    pub model: LatentModel,
    pub sigma_n: SymMatrix,
}

/// Builds the model and sample covariance for `(spec.seed, replicate)`.
pub fn simulate_replicate(
    spec: &ModelSpec,
    replicate: u64,
    noiseless: bool,
) -> Result<ReplicateData, ModelError> {
    let mut model_rng = rng::stream(spec.seed, &[replicate, PURPOSE_MODEL]);
    let model = assemble_model_with(spec, &mut model_rng)?;
    let sigma_n = if noiseless {
        model.sigma_star.clone()
    } else {
        let mut sample_rng = rng::stream(spec.seed, &[replicate, PURPOSE_SAMPLE]);
        sample_covariance(&model, spec.n, &mut sample_rng)?
    };
    Ok(ReplicateData { model, sigma_n })
}

/// Outcome of one end-to-end trial. Failed trials keep their failure tag and
/// carry NaN errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub cell: usize,
    /// `(parameter, value)` pairs that define the cell.
    pub assignment: Vec<(String, f64)>,
    pub replicate: u64,
    /// `None` on success, otherwise a short failure tag.
    pub failure: Option<String>,
    pub sign_recovered: bool,
    pub rank_recovered: bool,
    pub rank_estimate: Option<usize>,
    pub true_rank: usize,
    /// `|S_hat - S*|_inf`.
    pub sup_error: f64,
    /// `|L_hat - L*|` (spectral).
    pub spectral_error: f64,
    pub feasibility_slack: f64,
    pub tau_n: f64,
    pub sparse_threshold: f64,
    pub eigen_threshold: f64,
    /// `|Sigma* - Sigma_n|_inf`.
    pub covariance_deviation: f64,
    pub event_a_held: bool,
    pub assumptions: Option<AssumptionReport>,
    pub assumptions_held: bool,
    pub wall_time: f64,
}

impl TrialReport {
    /// `|S_hat - S*|_inf <= 9 Mp tau`.
    pub fn sup_bound_holds(&self) -> bool {
        self.sup_error <= self.sparse_threshold
    }

    /// `|L_hat - L*| <= C3 sqrt(p / n)`.
    pub fn spectral_bound_holds(&self) -> bool {
        self.spectral_error <= self.eigen_threshold
    }

    /// Replicate qualifies for the conditional sup-norm check.
    pub fn sup_bound_qualifies(&self) -> bool {
        self.failure.is_none()
            && self.event_a_held
            && self.assumptions.is_some_and(|a| a.sup_bound_conditions())
    }

    pub fn spectral_bound_qualifies(&self) -> bool {
        self.failure.is_none()
            && self.event_a_held
            && self.assumptions.is_some_and(|a| a.spectral_bound_conditions())
    }
}

fn error_tag(e: &dyn std::error::Error) -> String {
    let s = e.to_string();
    let head = s.split(':').next().unwrap_or(&s);
    head.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

/// Runs the estimator on replicate `replicate` of `spec`.
pub fn run_replicate(
    spec: &ModelSpec,
    cfg: &EstimatorConfig,
    replicate: u64,
    opts: ReplicateOptions,
) -> TrialReport {
    let started = Instant::now();
    let cfg = if opts.oracle_mp {
        EstimatorConfig {
            mp_proxy: spec.mp,
            ..cfg.clone()
        }
    } else {
        cfg.clone()
    };
    let mut report = TrialReport {
        cell: 0,
        assignment: Vec::new(),
        replicate,
        failure: None,
        sign_recovered: false,
        rank_recovered: false,
        rank_estimate: None,
        true_rank: spec.r0,
        sup_error: f64::NAN,
        spectral_error: f64::NAN,
        feasibility_slack: f64::NAN,
        tau_n: compute_tau(spec.p, spec.n, &cfg),
        sparse_threshold: f64::NAN,
        eigen_threshold: cfg.eigen_threshold(spec.p, spec.n),
        covariance_deviation: f64::NAN,
        event_a_held: false,
        assumptions: None,
        assumptions_held: false,
        wall_time: 0.0,
    };
    report.sparse_threshold = cfg.sparse_threshold(report.tau_n);

    let data = match simulate_replicate(spec, replicate, opts.noiseless) {
        Ok(d) => d,
        Err(e) => {
            report.failure = Some(format!("model:{}", error_tag(&e)));
            report.wall_time = started.elapsed().as_secs_f64();
            return report;
        }
    };
    let (p, n) = (spec.p as f64, spec.n as f64);
    let assumptions = check_assumptions(&data.model, &cfg);
    report.assumptions = Some(assumptions);
    report.assumptions_held = assumptions.all();
    report.covariance_deviation = entrywise_max_norm(&(&data.model.sigma_star - &data.sigma_n));
    report.event_a_held = report.covariance_deviation <= cfg.c2 * (p.ln() / n).sqrt();

    match estimator::estimate(&data.sigma_n, spec.n, &cfg) {
        Ok(est) => fill_from_estimate(&mut report, &data.model, &est),
        Err(e) => report.failure = Some(format!("estimate:{}", error_tag(&e))),
    }
    report.wall_time = started.elapsed().as_secs_f64();
    report
}

fn fill_from_estimate(report: &mut TrialReport, model: &LatentModel, est: &EstimateResult) {
    report.feasibility_slack = est.sparse.feasibility_slack;
    report.sup_error = entrywise_max_norm(&(&est.sparse.s_hat - &model.s_star));
    report.sign_recovered = sign_pattern(&est.sparse.s_tilde) == sign_pattern(&model.s_star);
    report.rank_estimate = Some(est.lowrank.rank_estimate);
    report.rank_recovered = est.lowrank.rank_estimate == model.true_rank;
    match spectral_norm(&(&est.lowrank.l_hat - &model.l_star)) {
        Ok(v) => report.spectral_error = v,
        Err(e) => report.failure = Some(format!("spectral:{}", error_tag(&e))),
    }
}
