//! Sweep the sample size and report recovery rates per cell.
//!
//! `cargo run --release --example monte_carlo`

use lvgm::harness::{run_plan, ExperimentPlan, Sweep};
use lvgm::{EstimatorConfig, ModelSpec};

pub fn run_example() -> Vec<f64> {
    let mut spec = ModelSpec {
        p: 15,
        n: 1000,
        s0: 2,
        r0: 0,
        c0: 6.0,
        theta: 0.5,
        sigma: 0.4,
        mp: 0.0,
        m: 100.0,
        seed: 99,
    };
    spec.mp = spec.worst_case_sparse_norm();
    let plan = ExperimentPlan {
        base_spec: spec,
        sweeps: vec![Sweep {
            parameter: "n".into(),
            values: vec![500.0, 2000.0, 8000.0],
        }],
        replicates: 10,
        estimator_cfg: EstimatorConfig {
            c1: 0.5,
            c3: 6.0,
            mp_proxy: 1.0,
            ..EstimatorConfig::default()
        },
        assumption_checks: true,
        output_path: String::new(),
        oracle_mp: false,
        noiseless: false,
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let outcome = run_plan(&plan, threads).expect("valid plan");
    for c in &outcome.cells {
        println!(
            "{:?}: sign {:.2} rank {:.2} sup error {:.4} (p95 {:.4})",
            c.assignment, c.sign_recovery_rate, c.rank_recovery_rate, c.sup_error.mean, c.sup_error.p95
        );
    }
    outcome.cells.iter().map(|c| c.sup_error.mean).collect()
}

#[allow(dead_code)]
fn main() {
    run_example();
}
