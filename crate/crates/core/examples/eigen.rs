//! Jacobi eigendecomposition, spectral norm and SPD inverse.
//!
//! `cargo run --example eigen`

use lvgm::linalg::{eig_sym, spd_inverse, spectral_norm, DEFAULT_COND_LIMIT, DEFAULT_EIG_TOL};
use lvgm::SymMatrix;

pub fn run_example() -> Vec<f64> {
    let a = SymMatrix::from_rows(vec![
        vec![4.0, 1.0, 0.5],
        vec![1.0, 3.0, 0.2],
        vec![0.5, 0.2, 2.0],
    ])
    .expect("symmetric input");
    let eig = eig_sym(&a, DEFAULT_EIG_TOL).expect("eigensolver");
    println!("eigenvalues: {:?} ({} sweeps)", eig.values, eig.sweeps);
    for k in 0..3 {
        println!("  v{k} = {:?}", eig.vector(k));
    }
    println!("spectral norm: {}", spectral_norm(&a).expect("eigensolver"));
    let inv = spd_inverse(&a, DEFAULT_COND_LIMIT).expect("positive definite");
    println!("inverse diagonal: {:?}", (0..3).map(|i| inv.get(i, i)).collect::<Vec<_>>());
    eig.values
}

#[allow(dead_code)]
fn main() {
    run_example();
}
