//! Dense two-phase simplex for `minimize c^T x subject to G x <= h`.
//!
//! Variables are free. Rows of the form `-x_j <= 0` are recognised during
//! presolve and turned into sign bounds, so a program written with split
//! variables (as the CLIME columns are) does not pay for them twice.
//! Bland's rule is used in both phases.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Repo-wide feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Smallest tableau entry accepted as a pivot in the ratio test.
pub const PIVOT_TOL: f64 = 1e-9;
/// Entries below this are treated as structural zeros.
pub const BREAKDOWN_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    InvalidProgram(String),
    #[error("numerical breakdown: forced pivot of magnitude {pivot:e}")]
    NumericalBreakdown { pivot: f64 },
    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    /// Row-major `m x num_vars`.
    constraint_matrix: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(
        objective: Vec<f64>,
        constraint_matrix: Vec<Vec<f64>>,
        rhs: Vec<f64>,
    ) -> Result<Self, LpError> {
        let num_vars = objective.len();
        if num_vars == 0 {
            return Err(LpError::InvalidProgram("no variables".into()));
        }
        if constraint_matrix.is_empty() {
            return Err(LpError::InvalidProgram("no constraints".into()));
        }
        if constraint_matrix.len() != rhs.len() {
            return Err(LpError::InvalidProgram(format!(
                "{} constraint rows but {} right-hand sides",
                constraint_matrix.len(),
                rhs.len()
            )));
        }
        for (i, row) in constraint_matrix.iter().enumerate() {
            if row.len() != num_vars {
                return Err(LpError::InvalidProgram(format!(
                    "row {i} has {} coefficients, expected {num_vars}",
                    row.len()
                )));
            }
        }
        let finite = objective.iter().all(|v| v.is_finite())
            && rhs.iter().all(|v| v.is_finite())
            && constraint_matrix.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(LpError::InvalidProgram("non-finite coefficient".into()));
        }
        Ok(LinearProgram {
            num_vars,
            objective,
            constraint_matrix,
            rhs,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraint_matrix(&self) -> &[Vec<f64>] {
        &self.constraint_matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn with_scaled_objective(&self, factor: f64) -> LinearProgram {
        LinearProgram {
            objective: self.objective.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }

    /// Largest `(G x - h)_i`, or 0 when every constraint holds.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraint_matrix
            .iter()
            .zip(&self.rhs)
            .map(|(row, h)| row.iter().zip(x).map(|(g, v)| g * v).sum::<f64>() - h)
            .fold(0.0, f64::max)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Empty unless `status == Optimal`.
    pub x: Vec<f64>,
    /// `+inf` when infeasible, `-inf` when unbounded.
    pub objective_value: f64,
    pub iterations: usize,
    /// Smallest phase-2 reduced cost over nonbasic columns at termination.
    pub min_reduced_cost: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    /// Reduced costs below `-optimality_tol * max|c|` are improving.
    pub optimality_tol: f64,
    pub max_iterations: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            optimality_tol: 1e-9,
            max_iterations: 200_000,
        }
    }
}

pub fn solve_lp(prog: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(prog, &LpOptions::default())
}

pub fn solve_lp_with(prog: &LinearProgram, opts: &LpOptions) -> Result<LpSolution, LpError> {
    let n = prog.num_vars;

    // Presolve: `-x_j <= 0` rows become sign bounds.
    let mut nonneg = vec![false; n];
    let mut kept_rows = Vec::with_capacity(prog.rhs.len());
    for (i, row) in prog.constraint_matrix.iter().enumerate() {
        let mut nz = row.iter().enumerate().filter(|(_, g)| **g != 0.0);
        match (nz.next(), nz.next()) {
            (Some((j, g)), None) if *g < 0.0 && prog.rhs[i] == 0.0 => nonneg[j] = true,
            _ => kept_rows.push(i),
        }
    }

    // Column layout: each free variable becomes a (pos, neg) pair.
    let mut pos_col = vec![0; n];
    let mut neg_col = vec![None; n];
    let mut n_struct = 0;
    for j in 0..n {
        pos_col[j] = n_struct;
        n_struct += 1;
        if !nonneg[j] {
            neg_col[j] = Some(n_struct);
            n_struct += 1;
        }
    }
    let mut cost = vec![0.0; n_struct];
    for j in 0..n {
        cost[pos_col[j]] = prog.objective[j];
        if let Some(k) = neg_col[j] {
            cost[k] = -prog.objective[j];
        }
    }

    let m = kept_rows.len();
    let n_art = kept_rows.iter().filter(|&&i| prog.rhs[i] < 0.0).count();
    let mut tab = Tableau::new(m, n_struct + m + n_art);
    let mut art = n_struct + m;
    for (r, &i) in kept_rows.iter().enumerate() {
        let flip = prog.rhs[i] < 0.0;
        let sgn = if flip { -1.0 } else { 1.0 };
        for (j, &g) in prog.constraint_matrix[i].iter().enumerate() {
            if g != 0.0 {
                tab.set(r, pos_col[j], sgn * g);
                if let Some(k) = neg_col[j] {
                    tab.set(r, k, -sgn * g);
                }
            }
        }
        tab.set(r, n_struct + r, sgn);
        tab.set_rhs(r, sgn * prog.rhs[i]);
        if flip {
            tab.set(r, art, 1.0);
            tab.basis[r] = art;
            art += 1;
        } else {
            tab.basis[r] = n_struct + r;
        }
    }

    let mut iterations = 0;
    let first_art = n_struct + m;

    if n_art > 0 {
        let mut phase1_cost = vec![0.0; tab.cols];
        phase1_cost[first_art..].iter_mut().for_each(|c| *c = 1.0);
        tab.load_objective(&phase1_cost);
        let outcome = tab.run(tab.cols, opts.optimality_tol, opts.max_iterations, &mut iterations)?;
        debug_assert!(outcome == Outcome::Optimal, "phase 1 is bounded below");
        let h_scale = prog.rhs.iter().fold(1.0f64, |a, h| a.max(h.abs()));
        if tab.objective_value() > FEASIBILITY_TOL * h_scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective_value: f64::INFINITY,
                iterations,
                min_reduced_cost: f64::NAN,
            });
        }
        tab.drive_out_artificials(first_art);
    }

    let mut phase2_cost = vec![0.0; tab.cols];
    phase2_cost[..n_struct].copy_from_slice(&cost);
    tab.load_objective(&phase2_cost);
    let c_scale = prog.objective.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let outcome = tab.run(
        first_art,
        opts.optimality_tol * c_scale,
        opts.max_iterations,
        &mut iterations,
    )?;
    if outcome == Outcome::Unbounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            objective_value: f64::NEG_INFINITY,
            iterations,
            min_reduced_cost: f64::NAN,
        });
    }

    let mut y = vec![0.0; tab.cols];
    for r in 0..tab.rows {
        y[tab.basis[r]] = tab.rhs(r).max(0.0);
    }
    let x: Vec<f64> = (0..n)
        .map(|j| y[pos_col[j]] - neg_col[j].map_or(0.0, |k| y[k]))
        .collect();
    let min_reduced_cost = tab.min_reduced_cost(first_art);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value: prog.evaluate(&x),
        x,
        iterations,
        min_reduced_cost,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

/// Rows `0..rows` are constraints, row `rows` holds reduced costs; the last
/// column is the right-hand side (negated objective in the cost row).
struct Tableau {
    rows: usize,
    cols: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(rows: usize, cols: usize) -> Self {
        let width = cols + 1;
        Tableau {
            rows,
            cols,
            width,
            data: vec![0.0; (rows + 1) * width],
            basis: vec![usize::MAX; rows],
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    #[inline]
    fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.width + c] = v;
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn set_rhs(&mut self, r: usize, v: f64) {
        let c = self.cols;
        self.set(r, c, v);
    }

    fn objective_value(&self) -> f64 {
        -self.rhs(self.rows)
    }

    fn load_objective(&mut self, cost: &[f64]) {
        let obj = self.rows;
        for c in 0..self.cols {
            let mut d = cost[c];
            for r in 0..self.rows {
                d -= cost[self.basis[r]] * self.at(r, c);
            }
            self.set(obj, c, d);
        }
        let z: f64 = (0..self.rows).map(|r| cost[self.basis[r]] * self.rhs(r)).sum();
        self.set_rhs(obj, -z);
    }

    fn min_reduced_cost(&self, allowed: usize) -> f64 {
        let mut is_basic = vec![false; self.cols];
        for &b in &self.basis {
            is_basic[b] = true;
        }
        (0..allowed)
            .filter(|&c| !is_basic[c])
            .map(|c| self.at(self.rows, c))
            .fold(f64::INFINITY, f64::min)
    }

    /// Simplex iterations with Bland's rule over columns `0..allowed`.
    fn run(
        &mut self,
        allowed: usize,
        tol: f64,
        max_iterations: usize,
        iterations: &mut usize,
    ) -> Result<Outcome, LpError> {
        let obj = self.rows;
        loop {
            let Some(enter) = (0..allowed).find(|&c| self.at(obj, c) < -tol) else {
                return Ok(Outcome::Optimal);
            };

            let mut leave: Option<(usize, f64)> = None;
            let mut tiny = 0.0f64;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a <= PIVOT_TOL {
                    if a > BREAKDOWN_TOL {
                        tiny = tiny.max(a);
                    }
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((best_r, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * best.abs().max(1.0);
                        if (tie && self.basis[r] < self.basis[best_r]) || (!tie && ratio < best) {
                            Some((r, ratio))
                        } else {
                            Some((best_r, best))
                        }
                    }
                };
            }
            let Some((leave_row, _)) = leave else {
                if tiny > 0.0 {
                    return Err(LpError::NumericalBreakdown { pivot: tiny });
                }
                return Ok(Outcome::Unbounded);
            };

            if *iterations >= max_iterations {
                return Err(LpError::IterationLimit(max_iterations));
            }
            *iterations += 1;
            self.pivot(leave_row, enter);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let piv = self.at(row, col);
        let start = row * w;
        for v in &mut self.data[start..start + w] {
            *v /= piv;
        }
        self.data[start + col] = 1.0;
        let pivot_row: Vec<f64> = self.data[start..start + w].to_vec();
        for r in 0..=self.rows {
            if r == row {
                continue;
            }
            let f = self.at(r, col);
            if f == 0.0 {
                continue;
            }
            let dst = &mut self.data[r * w..(r + 1) * w];
            for (d, p) in dst.iter_mut().zip(&pivot_row) {
                *d -= f * p;
            }
            dst[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// After a successful phase 1, pivots zero-level artificials out of the
    /// basis, dropping rows that turn out to be redundant.
    fn drive_out_artificials(&mut self, first_art: usize) {
        let mut r = 0;
        while r < self.rows {
            if self.basis[r] < first_art {
                r += 1;
                continue;
            }
            let best = (0..first_art)
                .map(|c| (c, self.at(r, c).abs()))
                .filter(|(_, a)| *a > PIVOT_TOL)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            match best {
                Some((c, _)) => {
                    self.pivot(r, c);
                    r += 1;
                }
                None => self.remove_row(r),
            }
        }
    }

    fn remove_row(&mut self, row: usize) {
        let w = self.width;
        self.data.drain(row * w..(row + 1) * w);
        self.basis.remove(row);
        self.rows -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: Vec<f64>, g: Vec<Vec<f64>>, h: Vec<f64>) -> LinearProgram {
        LinearProgram::new(c, g, h).unwrap()
    }

    #[test]
    fn one_variable() {
        let sol = solve_lp(&lp(vec![1.0], vec![vec![-1.0], vec![1.0]], vec![-1.0, 3.0])).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_corner() {
        let sol = solve_lp(&lp(
            vec![1.0, 1.0],
            vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![-1.0, -1.0]],
            vec![0.0, 0.0, -2.0],
        ))
        .unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        let sol = solve_lp(&lp(vec![1.0], vec![vec![1.0], vec![-1.0]], vec![1.0, -2.0])).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        assert!(sol.x.is_empty());
    }

    #[test]
    fn detects_unbounded() {
        let sol = solve_lp(&lp(vec![-1.0], vec![vec![-1.0]], vec![0.0])).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
        let sol = solve_lp(&lp(vec![1.0, 0.0], vec![vec![0.0, 1.0]], vec![1.0])).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn zero_objective_returns_feasible_point() {
        let prog = lp(vec![0.0, 0.0], vec![vec![-1.0, -1.0], vec![1.0, 1.0]], vec![-1.0, 2.0]);
        let sol = solve_lp(&prog).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(prog.max_violation(&sol.x) <= FEASIBILITY_TOL);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        // x + y = 1 written twice, minimize x.
        let prog = lp(
            vec![1.0, 0.0],
            vec![
                vec![1.0, 1.0],
                vec![-1.0, -1.0],
                vec![2.0, 2.0],
                vec![-2.0, -2.0],
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
            ],
            vec![1.0, -1.0, 2.0, -2.0, 0.0, 0.0],
        );
        let sol = solve_lp(&prog).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.objective_value.abs() < 1e-12);
        assert!((sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_malformed_programs() {
        assert!(LinearProgram::new(vec![], vec![vec![]], vec![0.0]).is_err());
        assert!(LinearProgram::new(vec![1.0], vec![], vec![]).is_err());
        assert!(LinearProgram::new(vec![1.0], vec![vec![1.0, 2.0]], vec![0.0]).is_err());
        assert!(LinearProgram::new(vec![f64::NAN], vec![vec![1.0]], vec![0.0]).is_err());
    }
}
