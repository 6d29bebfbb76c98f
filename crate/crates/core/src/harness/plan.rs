use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{calibrate::percentile, run_replicate, HarnessError, ReplicateOptions, TrialReport};
use crate::estimator::EstimatorConfig;
use crate::model::ModelSpec;

pub const AGGREGATE_SCHEMA_VERSION: u32 = 1;

/// Column order of `trials.csv`. Parameter columns of the plan's sweeps are
/// inserted after `cell`.
pub const CSV_COLUMNS: [&str; 18] = [
    "cell",
    "replicate",
    "failure",
    "sign_recovered",
    "rank_recovered",
    "rank_estimate",
    "true_rank",
    "sup_error",
    "spectral_error",
    "feasibility_slack",
    "tau_n",
    "sparse_threshold",
    "eigen_threshold",
    "covariance_deviation",
    "event_A_held",
    "sup_bound_conditions",
    "spectral_bound_conditions",
    "assumptions_held",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub parameter: String,
    pub values: Vec<f64>,
}

/// A Monte Carlo experiment: every combination of sweep values is a cell,
/// each cell runs `replicates` trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub base_spec: ModelSpec,
    #[serde(default)]
    pub sweeps: Vec<Sweep>,
    pub replicates: usize,
    pub estimator_cfg: EstimatorConfig,
    #[serde(default = "yes")]
    pub assumption_checks: bool,
    #[serde(default)]
    pub output_path: String,
    /// Replace `Mp_proxy` by the cell's `Mp` unless `Mp_proxy` is swept.
    #[serde(default = "yes")]
    pub oracle_mp: bool,
    #[serde(default)]
    pub noiseless: bool,
}

fn yes() -> bool {
    true
}

const SPEC_PARAMS: [&str; 10] = ["p", "n", "s0", "r0", "c0", "theta", "sigma", "Mp", "M", "seed"];
const CFG_PARAMS: [&str; 6] = ["C1", "C2", "C3", "Mp_proxy", "lp_tol", "cond_limit"];

fn as_count(name: &str, v: f64) -> Result<u64, HarnessError> {
    if v >= 0.0 && v.fract() == 0.0 && v < 9_007_199_254_740_992.0 {
        Ok(v as u64)
    } else {
        Err(HarnessError::InvalidPlan(format!(
            "{name} = {v} must be a non-negative integer"
        )))
    }
}

fn apply(
    spec: &mut ModelSpec,
    cfg: &mut EstimatorConfig,
    name: &str,
    v: f64,
) -> Result<(), HarnessError> {
    match name {
        "p" => spec.p = as_count(name, v)? as usize,
        "n" => spec.n = as_count(name, v)? as usize,
        "s0" => spec.s0 = as_count(name, v)? as usize,
        "r0" => spec.r0 = as_count(name, v)? as usize,
        "seed" => spec.seed = as_count(name, v)?,
        "c0" => spec.c0 = v,
        "theta" => spec.theta = v,
        "sigma" => spec.sigma = v,
        "Mp" => spec.mp = v,
        "M" => spec.m = v,
        "C1" => cfg.c1 = v,
        "C2" => cfg.c2 = v,
        "C3" => cfg.c3 = v,
        "Mp_proxy" => cfg.mp_proxy = v,
        "lp_tol" => cfg.lp_tol = v,
        "cond_limit" => cfg.cond_limit = v,
        _ => {
            return Err(HarnessError::InvalidPlan(format!(
                "unknown parameter {name:?}; expected one of {SPEC_PARAMS:?} or {CFG_PARAMS:?}"
            )))
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Cell {
    index: usize,
    assignment: Vec<(String, f64)>,
    spec: ModelSpec,
    cfg: EstimatorConfig,
    opts: ReplicateOptions,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.replicates == 0 {
            return Err(HarnessError::InvalidPlan("replicates must be >= 1".into()));
        }
        for s in &self.sweeps {
            if !SPEC_PARAMS.contains(&s.parameter.as_str())
                && !CFG_PARAMS.contains(&s.parameter.as_str())
            {
                return Err(HarnessError::InvalidPlan(format!(
                    "unknown sweep parameter {:?}",
                    s.parameter
                )));
            }
            if s.values.is_empty() {
                return Err(HarnessError::InvalidPlan(format!(
                    "sweep over {:?} has no values",
                    s.parameter
                )));
            }
        }
        self.cells().map(|_| ())
    }

    /// Cartesian product of the sweeps, first sweep outermost.
    fn cells(&self) -> Result<Vec<Cell>, HarnessError> {
        let mut assignments: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for sweep in &self.sweeps {
            assignments = assignments
                .into_iter()
                .flat_map(|a| {
                    sweep.values.iter().map(move |v| {
                        let mut next = a.clone();
                        next.push((sweep.parameter.clone(), *v));
                        next
                    })
                })
                .collect();
        }
        let mp_swept = self.sweeps.iter().any(|s| s.parameter == "Mp_proxy");
        assignments
            .into_iter()
            .enumerate()
            .map(|(index, assignment)| {
                let mut spec = self.base_spec.clone();
                let mut cfg = self.estimator_cfg.clone();
                for (name, v) in &assignment {
                    apply(&mut spec, &mut cfg, name, *v)?;
                }
                spec.validate()?;
                cfg.validate()?;
                Ok(Cell {
                    index,
                    assignment,
                    spec,
                    cfg,
                    opts: ReplicateOptions {
                        noiseless: self.noiseless,
                        oracle_mp: self.oracle_mp && !mp_swept,
                    },
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub mean: f64,
    pub p95: f64,
    pub max: f64,
}

impl ErrorSummary {
    fn of(values: &[f64]) -> ErrorSummary {
        if values.is_empty() {
            return ErrorSummary {
                mean: f64::NAN,
                p95: f64::NAN,
                max: f64::NAN,
            };
        }
        ErrorSummary {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            p95: percentile(values, 0.95),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalCheck {
    pub qualifying: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub cell: usize,
    pub assignment: Vec<(String, f64)>,
    pub replicates: usize,
    pub failures: usize,
    pub failure_tags: BTreeMap<String, usize>,
    pub sign_recovery_rate: f64,
    pub rank_recovery_rate: f64,
    pub event_a_rate: f64,
    pub sup_error: ErrorSummary,
    pub spectral_error: ErrorSummary,
    pub feasibility_slack: ErrorSummary,
    /// Fraction of successful replicates passing each assumption clause.
    pub assumption_pass_rates: BTreeMap<String, f64>,
    /// `|S_hat - S*|_inf <= 9 Mp tau` among replicates on event A whose
    /// assumptions hold.
    pub sup_bound: ConditionalCheck,
    /// `|L_hat - L*| <= C3 sqrt(p / n)` under the same conditioning plus the
    /// sample-size and sparsity clauses.
    pub spectral_bound: ConditionalCheck,
    /// Replicates whose feasibility slack exceeded `tau + 1e-8`.
    pub infeasible_estimates: usize,
    pub mean_wall_time: f64,
}

impl CellAggregate {
    fn from_trials(cell: &Cell, trials: &[TrialReport]) -> CellAggregate {
        let ok: Vec<&TrialReport> = trials.iter().filter(|t| t.failure.is_none()).collect();
        let rate = |f: &dyn Fn(&TrialReport) -> bool| {
            if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().filter(|t| f(t)).count() as f64 / ok.len() as f64
            }
        };
        let mut failure_tags = BTreeMap::new();
        for t in trials {
            if let Some(tag) = &t.failure {
                *failure_tags.entry(tag.clone()).or_insert(0) += 1;
            }
        }
        let mut assumption_pass_rates = BTreeMap::new();
        for (k, name) in super::AssumptionReport::CLAUSES.iter().enumerate() {
            assumption_pass_rates.insert(
                name.to_string(),
                rate(&|t| t.assumptions.is_some_and(|a| a.clauses()[k].1)),
            );
        }
        let collect = |f: &dyn Fn(&TrialReport) -> f64| -> Vec<f64> {
            ok.iter().map(|t| f(t)).filter(|v| v.is_finite()).collect()
        };
        let sup_q: Vec<_> = ok.iter().filter(|t| t.sup_bound_qualifies()).collect();
        let spec_q: Vec<_> = ok.iter().filter(|t| t.spectral_bound_qualifies()).collect();
        CellAggregate {
            cell: cell.index,
            assignment: cell.assignment.clone(),
            replicates: trials.len(),
            failures: trials.len() - ok.len(),
            failure_tags,
            sign_recovery_rate: rate(&|t| t.sign_recovered),
            rank_recovery_rate: rate(&|t| t.rank_recovered),
            event_a_rate: rate(&|t| t.event_a_held),
            sup_error: ErrorSummary::of(&collect(&|t| t.sup_error)),
            spectral_error: ErrorSummary::of(&collect(&|t| t.spectral_error)),
            feasibility_slack: ErrorSummary::of(&collect(&|t| t.feasibility_slack)),
            assumption_pass_rates,
            sup_bound: ConditionalCheck {
                qualifying: sup_q.len(),
                violations: sup_q.iter().filter(|t| !t.sup_bound_holds()).count(),
            },
            spectral_bound: ConditionalCheck {
                qualifying: spec_q.len(),
                violations: spec_q.iter().filter(|t| !t.spectral_bound_holds()).count(),
            },
            infeasible_estimates: ok
                .iter()
                .filter(|t| {
                    t.feasibility_slack > t.tau_n + crate::estimator::FEASIBILITY_SLACK_TOL
                })
                .count(),
            mean_wall_time: trials.iter().map(|t| t.wall_time).sum::<f64>()
                / trials.len().max(1) as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub parameters: Vec<String>,
    pub trials: Vec<TrialReport>,
    pub cells: Vec<CellAggregate>,
}

impl PlanOutcome {
    /// Hard failures: conditional sup-norm bound violations or infeasible
    /// LP solutions. Both are deterministic consequences of the method.
    pub fn invariant_violations(&self) -> usize {
        self.cells
            .iter()
            .map(|c| c.sup_bound.violations + c.infeasible_estimates)
            .sum()
    }

    /// Trial table without the timestamp header line.
    pub fn csv_body(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<&str> = vec![CSV_COLUMNS[0]];
        header.extend(self.parameters.iter().map(String::as_str));
        header.extend(&CSV_COLUMNS[1..]);
        let _ = writeln!(out, "{}", header.join(","));
        for t in &self.trials {
            let a = t.assumptions;
            let mut row: Vec<String> = vec![t.cell.to_string()];
            row.extend(t.assignment.iter().map(|(_, v)| v.to_string()));
            row.extend([
                t.replicate.to_string(),
                t.failure.clone().unwrap_or_default(),
                t.sign_recovered.to_string(),
                t.rank_recovered.to_string(),
                t.rank_estimate.map(|r| r.to_string()).unwrap_or_default(),
                t.true_rank.to_string(),
                t.sup_error.to_string(),
                t.spectral_error.to_string(),
                t.feasibility_slack.to_string(),
                t.tau_n.to_string(),
                t.sparse_threshold.to_string(),
                t.eigen_threshold.to_string(),
                t.covariance_deviation.to_string(),
                t.event_a_held.to_string(),
                a.is_some_and(|a| a.sup_bound_conditions()).to_string(),
                a.is_some_and(|a| a.spectral_bound_conditions()).to_string(),
                t.assumptions_held.to_string(),
            ]);
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Runs every cell and replicate on a pool of `threads` workers.
///
/// Output order is `(cell, replicate)` regardless of scheduling, and each
/// replicate's randomness depends only on `(seed, replicate)`.
pub fn run_plan(plan: &ExperimentPlan, threads: usize) -> Result<PlanOutcome, HarnessError> {
    plan.validate()?;
    let cells = plan.cells()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| HarnessError::Io(e.to_string()))?;

    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..plan.replicates as u64).map(move |r| (c, r)))
        .collect();
    let mut trials: Vec<TrialReport> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| {
                let cell = &cells[c];
                let mut t = run_replicate(&cell.spec, &cell.cfg, r, cell.opts);
                t.cell = cell.index;
                t.assignment = cell.assignment.clone();
                if !plan.assumption_checks {
                    t.assumptions = None;
                    t.assumptions_held = false;
                }
                t
            })
            .collect()
    });
    trials.sort_by_key(|t| (t.cell, t.replicate));

    let aggregates = cells
        .iter()
        .map(|cell| {
            let ts: Vec<TrialReport> = trials
                .iter()
                .filter(|t| t.cell == cell.index)
                .cloned()
                .collect();
            CellAggregate::from_trials(cell, &ts)
        })
        .collect();
    Ok(PlanOutcome {
        parameters: plan.sweeps.iter().map(|s| s.parameter.clone()).collect(),
        trials,
        cells: aggregates,
    })
}

/// Writes `trials.csv` (or `trials.json`) and `cells.json` into `dir`.
pub fn write_outputs(
    outcome: &PlanOutcome,
    dir: impl AsRef<Path>,
    format: OutputFormat,
) -> Result<(), HarnessError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    match format {
        OutputFormat::Csv => {
            let stamp = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let text = format!("# lvgm trials generated_at_unix={stamp}\n{}", outcome.csv_body());
            std::fs::write(dir.join("trials.csv"), text)?;
        }
        OutputFormat::Json => {
            std::fs::write(
                dir.join("trials.json"),
                serde_json::to_string_pretty(&outcome.trials)?,
            )?;
        }
    }
    let aggregate = serde_json::json!({
        "schema_version": AGGREGATE_SCHEMA_VERSION,
        "parameters": outcome.parameters,
        "cells": outcome.cells,
    });
    std::fs::write(dir.join("cells.json"), serde_json::to_string_pretty(&aggregate)?)?;
    Ok(())
}
