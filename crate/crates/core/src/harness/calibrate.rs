use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::estimator::{estimate_sparse, EstimatorConfig};
use crate::linalg::{entrywise_max_norm, spd_inverse, spectral_norm, SymMatrix};
use crate::model::{assemble_model_with, sample_covariance, ModelSpec};
use crate::rng::{self, PURPOSE_MODEL, PURPOSE_PILOT, PURPOSE_SAMPLE};

pub const CALIBRATION_SCHEMA_VERSION: u32 = 1;
pub const C2_QUANTILE: f64 = 0.95;
pub const C3_MARGIN: f64 = 1.1;
pub const MIN_PILOTS: usize = 50;

/// Nearest-rank quantile of `values` (NaNs excluded by the caller).
pub fn percentile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Calibrated constants with the pilot data behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub schema_version: u32,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    pub provenance: CalibrationProvenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProvenance {
    pub spec: ModelSpec,
    pub pilots: usize,
    pub c2_quantile: f64,
    pub c3_margin: f64,
    /// `|Sigma* - Sigma_n|_inf / sqrt(ln p / n)` per pilot.
    pub c2_ratios: Vec<f64>,
    /// `|L_hat - L*| / sqrt(p / n)` per null-model pilot.
    pub c3_ratios: Vec<f64>,
    pub note: String,
}

impl Calibration {
    /// `base` with `C1 = 2 C2`, `C2` and `C3` replaced.
    pub fn apply(&self, base: &EstimatorConfig) -> EstimatorConfig {
        EstimatorConfig {
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
            ..base.clone()
        }
    }
}

/// Pilot calibration of the deviation constant `C2` and the eigenvalue
/// constant `C3` for the model class of `spec`.
///
/// `C2` is the 95th percentile over pilots of
/// `|Sigma* - Sigma_n|_inf / sqrt(ln p / n)`, and `C1 = 2 C2`. `C3` is 1.1
/// times the largest `|L_hat - L*| / sqrt(p / n)` on the null model
/// (`r0 = 0`), where `L_hat` is built from `S_hat` restricted to the true
/// support of `S*`. Pilot streams are disjoint from replicate streams.
pub fn calibrate_constants(
    spec: &ModelSpec,
    pilots: usize,
    base: &EstimatorConfig,
) -> Result<Calibration, HarnessError> {
    if pilots < MIN_PILOTS {
        return Err(HarnessError::InvalidPlan(format!(
            "calibration needs at least {MIN_PILOTS} pilots, got {pilots}"
        )));
    }
    spec.validate()?;
    let (p, n) = (spec.p as f64, spec.n as f64);
    let log_rate = (p.ln() / n).sqrt();
    let spectral_rate = (p / n).sqrt();

    let c2_ratios = (0..pilots as u64)
        .into_par_iter()
        .map(|k| -> Result<f64, HarnessError> {
            let mut mrng = rng::stream(spec.seed, &[PURPOSE_PILOT, k, PURPOSE_MODEL]);
            let mut srng = rng::stream(spec.seed, &[PURPOSE_PILOT, k, PURPOSE_SAMPLE]);
            let model = assemble_model_with(spec, &mut mrng)?;
            let sigma_n = sample_covariance(&model, spec.n, &mut srng)?;
            Ok(entrywise_max_norm(&(&model.sigma_star - &sigma_n)) / log_rate)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let c2 = percentile(&c2_ratios, C2_QUANTILE);
    let c1 = 2.0 * c2;

    let null_spec = ModelSpec {
        r0: 0,
        ..spec.clone()
    };
    let cfg = EstimatorConfig {
        c1,
        c2,
        mp_proxy: spec.mp,
        ..base.clone()
    };
    let c3_ratios = (0..pilots as u64)
        .into_par_iter()
        .map(|k| -> Result<f64, HarnessError> {
            let tag = k + pilots as u64;
            let mut mrng = rng::stream(spec.seed, &[PURPOSE_PILOT, tag, PURPOSE_MODEL]);
            let mut srng = rng::stream(spec.seed, &[PURPOSE_PILOT, tag, PURPOSE_SAMPLE]);
            let model = assemble_model_with(&null_spec, &mut mrng)?;
            let sigma_n = sample_covariance(&model, spec.n, &mut srng)?;
            let sparse = estimate_sparse(&sigma_n, spec.n, &cfg)?;
            let oracle_tilde = SymMatrix::from_fn(spec.p, |i, j| {
                if model.s_star.get(i, j) != 0.0 {
                    sparse.s_hat.get(i, j)
                } else {
                    0.0
                }
            });
            let precision = spd_inverse(&sigma_n, cfg.cond_limit)
                .map_err(crate::estimator::EstimatorError::from)?;
            let l_hat = &oracle_tilde - &precision;
            let err = spectral_norm(&(&l_hat - &model.l_star))
                .map_err(crate::estimator::EstimatorError::from)?;
            Ok(err / spectral_rate)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let c3 = C3_MARGIN * c3_ratios.iter().copied().fold(0.0, f64::max);

    Ok(Calibration {
        schema_version: CALIBRATION_SCHEMA_VERSION,
        c1,
        c2,
        c3,
        provenance: CalibrationProvenance {
            spec: spec.clone(),
            pilots,
            c2_quantile: C2_QUANTILE,
            c3_margin: C3_MARGIN,
            c2_ratios,
            c3_ratios,
            note: "C2: quantile of sup-norm covariance deviation; C1 = 2 C2; \
                   C3: margin x max spectral error of the null model with support-oracle sparse part"
                .into(),
        },
    })
}
