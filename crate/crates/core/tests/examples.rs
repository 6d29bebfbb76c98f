#[path = "../examples/solve_lp.rs"]
mod solve_lp;
#[path = "../examples/eigen.rs"]
mod eigen;
#[path = "../examples/generate_model.rs"]
mod generate_model;
#[path = "../examples/estimate_sparse.rs"]
mod estimate_sparse;
#[path = "../examples/recover_rank.rs"]
mod recover_rank;
#[path = "../examples/monte_carlo.rs"]
mod monte_carlo;
#[path = "../examples/calibrate.rs"]
mod calibrate;

#[test]
fn solve_lp_example() {
    // Optimum at (3, 1).
    assert!((solve_lp::run_example() + 5.0).abs() < 1e-12);
}

#[test]
fn eigen_example() {
    let values = eigen::run_example();
    assert!((values.iter().sum::<f64>() - 9.0).abs() < 1e-10);
    assert!(values.iter().all(|v| *v > 0.0));
}

#[test]
fn generate_model_example() {
    assert_eq!(generate_model::run_example(), 1);
}

#[test]
fn estimate_sparse_example() {
    assert!(estimate_sparse::run_example());
}

#[test]
fn recover_rank_example() {
    let (est, truth) = recover_rank::run_example();
    assert_eq!(est, truth);
}

#[test]
fn monte_carlo_example() {
    let errors = monte_carlo::run_example();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn calibrate_example() {
    let (c1, c2, c3) = calibrate::run_example();
    assert_eq!(c1, 2.0 * c2);
    assert!(c3 > 0.0);
}
