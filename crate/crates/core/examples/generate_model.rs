//! Build a sparse-plus-low-rank ground truth and draw a sample covariance.
//!
//! `cargo run --example generate_model`

use lvgm::linalg::entrywise_max_norm;
use lvgm::model::{assemble_model, check_model, sample_covariance, ModelSpec};
use lvgm::rng;

pub fn run_example() -> usize {
    let mut spec = ModelSpec {
        p: 16,
        n: 4000,
        s0: 2,
        r0: 1,
        c0: 6.0,
        theta: 0.5,
        sigma: 0.4,
        mp: 0.0,
        m: 100.0,
        seed: 2024,
    };
    spec.mp = spec.worst_case_sparse_norm();
    let model = assemble_model(&spec).expect("feasible spec");
    check_model(&model).expect("model invariants");
    println!(
        "p = {}, |support| = {}, rank(L*) = {}, eigenvalues of L*: {:?}",
        spec.p,
        model.support.len(),
        model.true_rank,
        model.lowrank.eigenvalues
    );
    let mut stream = rng::stream(spec.seed, &[rng::PURPOSE_SAMPLE]);
    let sigma_n = sample_covariance(&model, spec.n, &mut stream).expect("sampling");
    println!(
        "max |Sigma_n - Sigma*| = {:.4}",
        entrywise_max_norm(&(&sigma_n - &model.sigma_star))
    );
    model.true_rank
}

#[allow(dead_code)]
fn main() {
    run_example();
}
