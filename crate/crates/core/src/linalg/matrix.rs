use std::fmt;
use std::ops::{Add, Sub};

use super::LinalgError;

/// Dense symmetric `p x p` matrix with finite entries.
///
/// Storage is the full row-major square; every constructor guarantees
/// `a[i][j] == a[j][i]` bit for bit.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.data[i * m.dim + i] = v;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Strict constructor: rejects any asymmetry or non-finite entry.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, LinalgError> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(LinalgError::ShapeMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data, 0.0)
    }

    /// Accepts a row-major square whose asymmetry is at most `tol`, then
    /// averages the two triangles.
    pub fn from_row_major(dim: usize, data: Vec<f64>, tol: f64) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        if data.len() != dim * dim {
            return Err(LinalgError::ShapeMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        for i in 0..dim {
            for j in 0..dim {
                if !data[i * dim + j].is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
            }
        }
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let a = data[i * dim + j];
                let b = data[j * dim + i];
                let gap = (a - b).abs();
                if gap > tol {
                    return Err(LinalgError::NotSymmetric { row: i, col: j, gap });
                }
                let v = if a == b { a } else { 0.5 * (a + b) };
                out.data[i * dim + j] = v;
                out.data[j * dim + i] = v;
            }
        }
        Ok(out)
    }

    /// `sum_k weights[k] * v_k v_k^T` over the given vectors.
    pub fn from_outer_products(dim: usize, weights: &[f64], vectors: &[Vec<f64>]) -> Self {
        Self::from_fn(dim, |i, j| {
            weights
                .iter()
                .zip(vectors)
                .map(|(w, v)| w * v[i] * v[j])
                .sum()
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, factor: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn map(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> SymMatrix {
        Self::from_fn(self.dim, |i, j| f(i, j, self.get(i, j)))
    }

    /// `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permute(&self, perm: &[usize]) -> SymMatrix {
        assert_eq!(perm.len(), self.dim);
        Self::from_fn(self.dim, |i, j| self.get(perm[i], perm[j]))
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        self.to_matrix().matmul(rhs)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Number of nonzero entries in row `i`, diagonal included.
    pub fn row_nnz(&self, i: usize) -> usize {
        self.row(i).iter().filter(|v| **v != 0.0).count()
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, rhs.dim);
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, rhs.dim);
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Max absolute entry.
pub fn entrywise_max_norm(a: &SymMatrix) -> f64 {
    a.data.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Max absolute row sum (the l1 -> l1 operator norm for symmetric input).
pub fn matrix_one_norm(a: &SymMatrix) -> f64 {
    (0..a.dim)
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// General dense row-major matrix. Used where symmetry is not guaranteed,
/// e.g. the column-stacked CLIME solution before symmetrization.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            if row.len() != c {
                return Err(LinalgError::ShapeMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    /// Square matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (i, v) in col.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(rhs.row(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_row_abs_sum(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// l1 norm of each column.
    pub fn column_abs_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).abs()).sum())
            .collect()
    }

    pub fn max_col_abs_sum(&self) -> f64 {
        self.column_abs_sums().into_iter().fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix({}x{})", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}
