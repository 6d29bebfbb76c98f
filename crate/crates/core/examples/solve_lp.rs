//! Solve a small linear program with the dense simplex.
//!
//! `cargo run --example solve_lp`

use lvgm::{solve_lp, LinearProgram, LpStatus};

pub fn run_example() -> f64 {
    // max x + 2y  s.t.  x + y <= 4,  x + 3y <= 6,  x, y >= 0
    let prog = LinearProgram::new(
        vec![-1.0, -2.0],
        vec![
            vec![1.0, 1.0],
            vec![1.0, 3.0],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
        ],
        vec![4.0, 6.0, 0.0, 0.0],
    )
    .expect("well-formed program");
    let sol = solve_lp(&prog).expect("solver error");
    assert_eq!(sol.status, LpStatus::Optimal);
    println!(
        "x = {:?}, objective = {} after {} pivots",
        sol.x, sol.objective_value, sol.iterations
    );
    sol.objective_value
}

#[allow(dead_code)]
fn main() {
    run_example();
}
