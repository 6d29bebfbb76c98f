//! Calibrate C1, C2 and C3 from pilot replicates, then estimate with them.
//!
//! `cargo run --release --example calibrate`

use lvgm::harness::{run_replicate, ReplicateOptions};
use lvgm::{calibrate_constants, EstimatorConfig, ModelSpec};

pub fn run_example() -> (f64, f64, f64) {
    let mut spec = ModelSpec {
        p: 12,
        n: 2000,
        s0: 2,
        r0: 0,
        c0: 6.0,
        theta: 0.5,
        sigma: 0.4,
        mp: 0.0,
        m: 100.0,
        seed: 7,
    };
    spec.mp = spec.worst_case_sparse_norm();
    let base = EstimatorConfig::default();
    let cal = calibrate_constants(&spec, 50, &base).expect("calibration");
    println!("C1 = {:.4}, C2 = {:.4}, C3 = {:.4}", cal.c1, cal.c2, cal.c3);
    let cfg = cal.apply(&base);
    let opts = ReplicateOptions {
        noiseless: false,
        oracle_mp: true,
    };
    let trial = run_replicate(&spec, &cfg, 1000, opts);
    println!(
        "held-out replicate: rank estimate {:?}, sup error {:.4}",
        trial.rank_estimate, trial.sup_error
    );
    (cal.c1, cal.c2, cal.c3)
}

#[allow(dead_code)]
fn main() {
    run_example();
}
