use super::matrix::{matrix_one_norm, SymMatrix};
use super::LinalgError;

/// Beyond this, the inverse of a sample covariance is not worth using.
pub const DEFAULT_COND_LIMIT: f64 = 1e12;

/// Lower-triangular factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

pub fn cholesky(a: &SymMatrix) -> Result<Cholesky, LinalgError> {
    let p = a.dim();
    let mut l = vec![0.0; p * p];
    for j in 0..p {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { row: j, pivot: d });
        }
        let djj = d.sqrt();
        l[j * p + j] = djj;
        for i in (j + 1)..p {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / djj;
        }
    }
    Ok(Cholesky { dim: p, lower: l })
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// `L z`, used to colour standard normal draws.
    pub fn lower_mul(&self, z: &[f64]) -> Vec<f64> {
        let p = self.dim;
        (0..p)
            .map(|i| (0..=i).map(|k| self.lower[i * p + k] * z[k]).sum())
            .collect()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let p = self.dim;
        let mut y = b.to_vec();
        for i in 0..p {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lower[i * p + k] * y[k];
            }
            y[i] = s / self.lower[i * p + i];
        }
        for i in (0..p).rev() {
            let mut s = y[i];
            for k in (i + 1)..p {
                s -= self.lower[k * p + i] * y[k];
            }
            y[i] = s / self.lower[i * p + i];
        }
        y
    }

    pub fn log_det(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.lower[i * self.dim + i].ln())
            .sum::<f64>()
            * 2.0
    }

    pub fn det(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.lower[i * self.dim + i])
            .product::<f64>()
            .powi(2)
    }
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
///
/// The condition number reported in `IllConditioned` is the exact l1
/// condition number `||A||_1 ||A^-1||_1` of the computed inverse.
pub fn spd_inverse(a: &SymMatrix, cond_limit: f64) -> Result<SymMatrix, LinalgError> {
    let p = a.dim();
    let chol = cholesky(a)?;
    let mut cols = Vec::with_capacity(p);
    let mut e = vec![0.0; p];
    for j in 0..p {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        cols.push(chol.solve(&e));
    }
    // Solve result is symmetric up to rounding; average the triangles.
    let inv = SymMatrix::from_fn(p, |i, j| {
        if i == j {
            cols[j][i]
        } else {
            0.5 * (cols[j][i] + cols[i][j])
        }
    });
    let estimate = matrix_one_norm(a) * matrix_one_norm(&inv);
    if !estimate.is_finite() || estimate > cond_limit {
        return Err(LinalgError::IllConditioned {
            estimate,
            limit: cond_limit,
        });
    }
    Ok(inv)
}
