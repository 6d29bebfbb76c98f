//! Full two-stage estimate: sparse part, then the rank of the latent part.
//!
//! `cargo run --example recover_rank`

use lvgm::harness::simulate_replicate;
use lvgm::{estimate, EstimatorConfig, ModelSpec};

pub fn run_example() -> (usize, usize) {
    let mut spec = ModelSpec {
        p: 20,
        n: 5000,
        s0: 2,
        r0: 1,
        c0: 6.0,
        theta: 0.5,
        sigma: 0.5,
        mp: 0.0,
        m: 100.0,
        seed: 5000,
    };
    spec.mp = spec.worst_case_sparse_norm();
    let data = simulate_replicate(&spec, 0, false).expect("replicate");
    let cfg = EstimatorConfig {
        c1: 0.5,
        c3: 6.0,
        mp_proxy: 1.0,
        ..EstimatorConfig::default()
    };
    let est = estimate(&data.sigma_n, spec.n, &cfg).expect("estimator");
    println!(
        "eigen threshold {:.4}; top eigenvalues of L_hat: {:?}",
        est.lowrank.eigen_threshold,
        &est.lowrank.l_hat_eigenvalues[..3.min(est.lowrank.l_hat_eigenvalues.len())]
    );
    println!(
        "rank estimate {} (truth {})",
        est.lowrank.rank_estimate, data.model.true_rank
    );
    (est.lowrank.rank_estimate, data.model.true_rank)
}

#[allow(dead_code)]
fn main() {
    run_example();
}
