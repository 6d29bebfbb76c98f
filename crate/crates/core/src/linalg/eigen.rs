use super::matrix::{entrywise_max_norm, Matrix, SymMatrix};
use super::LinalgError;

pub const DEFAULT_EIG_TOL: f64 = 1e-14;
pub const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, values in descending order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Matrix,
    pub sweeps: usize,
}

impl EigenDecomposition {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }

    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(&self.values)
    }

    /// `V diag(weights) V^T` for replacement eigenvalues.
    pub fn reconstruct_with(&self, weights: &[f64]) -> SymMatrix {
        let p = self.vectors.rows();
        SymMatrix::from_fn(p, |i, j| {
            let vi = self.vectors.row(i);
            let vj = self.vectors.row(j);
            weights
                .iter()
                .enumerate()
                .map(|(k, w)| w * vi[k] * vj[k])
                .sum()
        })
    }
}

/// Cyclic Jacobi eigensolver.
///
/// Sweeps over all off-diagonal pairs until every off-diagonal magnitude is
/// at most `tol * max|a_ij|`. Ties in the sorted spectrum keep the order in
/// which the diagonal ended up, which is deterministic for a given input.
pub fn eig_sym(a: &SymMatrix, tol: f64) -> Result<EigenDecomposition, LinalgError> {
    let n = a.dim();
    let mut m: Vec<f64> = a.as_slice().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = entrywise_max_norm(a);
    let cutoff = tol * scale;

    let mut sweeps = 0;
    loop {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[p * n + q].abs());
            }
        }
        if off <= cutoff {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    let nkp = c * akp - s * akq;
                    let nkq = s * akp + c * akq;
                    m[k * n + p] = nkp;
                    m[p * n + k] = nkp;
                    m[k * n + q] = nkq;
                    m[q * n + k] = nkq;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort: equal eigenvalues stay in index order.
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));

    let values = order.iter().map(|&k| m[k * n + k]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, dst, v[i * n + src]);
        }
    }
    Ok(EigenDecomposition {
        values,
        vectors,
        sweeps,
    })
}

/// Largest absolute eigenvalue.
pub fn spectral_norm(a: &SymMatrix) -> Result<f64, LinalgError> {
    let eig = eig_sym(a, DEFAULT_EIG_TOL)?;
    Ok(eig.values.iter().fold(0.0, |m, v| m.max(v.abs())))
}
