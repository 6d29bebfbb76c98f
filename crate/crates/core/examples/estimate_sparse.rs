//! Recover the sign pattern of the sparse precision component.
//!
//! `cargo run --example estimate_sparse`

use lvgm::estimator::{estimate_sparse, sign_pattern, EstimatorConfig};
use lvgm::harness::simulate_replicate;
use lvgm::ModelSpec;

pub fn run_example() -> bool {
    let mut spec = ModelSpec {
        p: 20,
        n: 5000,
        s0: 2,
        r0: 0,
        c0: 6.0,
        theta: 2.0,
        sigma: 0.5,
        mp: 0.0,
        m: 100.0,
        seed: 5000,
    };
    spec.mp = spec.worst_case_sparse_norm();
    let data = simulate_replicate(&spec, 0, false).expect("replicate");
    let cfg = EstimatorConfig {
        c1: 2.0,
        mp_proxy: 1.0,
        ..EstimatorConfig::default()
    };
    let est = estimate_sparse(&data.sigma_n, spec.n, &cfg).expect("estimator");
    let recovered = sign_pattern(&est.s_tilde) == sign_pattern(&data.model.s_star);
    println!(
        "tau_n = {:.4}, threshold = {:.4}, slack = {:.2e}, signs recovered: {recovered}",
        est.tau_n, est.sparse_threshold, est.feasibility_slack
    );
    recovered
}

#[allow(dead_code)]
fn main() {
    run_example();
}
