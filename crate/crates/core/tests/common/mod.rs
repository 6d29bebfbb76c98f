#![allow(dead_code)]

use lvgm::linalg::SymMatrix;
use lvgm::lp::LinearProgram;
use rand::Rng;

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. `None` when the system is (numerically) singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Determinant by LU with partial pivoting.
pub fn lu_det(a: &SymMatrix) -> f64 {
    let n = a.dim();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(col, piv);
            det = -det;
        }
        det *= m[col][col];
        for r in (col + 1)..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Minimum objective over all basic feasible points of `min c x, A x <= b`.
/// Exponential; only for tiny programs whose optimum is attained at a vertex.
pub fn vertex_enumeration_min(prog: &LinearProgram) -> Option<f64> {
    vertex_enumeration_argmin(prog).map(|(v, _)| v)
}

/// Like [`vertex_enumeration_min`], also returning a minimizing vertex.
pub fn vertex_enumeration_argmin(prog: &LinearProgram) -> Option<(f64, Vec<f64>)> {
    let a = prog.constraint_matrix();
    let b = prog.rhs();
    let c = prog.objective();
    let nv = prog.num_vars();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for_each_subset(a.len(), nv, &mut |rows| {
        let sys: Vec<Vec<f64>> = rows.iter().map(|&r| a[r].clone()).collect();
        let rhs: Vec<f64> = rows.iter().map(|&r| b[r]).collect();
        if let Some(x) = gauss_solve(sys, rhs) {
            let feasible = a.iter().zip(b).all(|(row, &bi)| {
                let lhs: f64 = row.iter().zip(&x).map(|(u, v)| u * v).sum();
                lhs <= bi + 1e-9 * (1.0 + bi.abs())
            });
            if feasible {
                let obj: f64 = c.iter().zip(&x).map(|(u, v)| u * v).sum();
                if best.as_ref().map_or(true, |(v, _)| obj < *v) {
                    best = Some((obj, x));
                }
            }
        }
    });
    best
}

/// Entries uniform on `[-1, 1]`.
pub fn random_symmetric<R: Rng>(rng: &mut R, p: usize) -> SymMatrix {
    SymMatrix::from_fn(p, |_, _| rng.gen_range(-1.0..1.0))
}

/// `G G^T / p + shift I` with `G` uniform on `[-1, 1]`.
pub fn random_spd<R: Rng>(rng: &mut R, p: usize, shift: f64) -> SymMatrix {
    let g: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    SymMatrix::from_fn(p, |i, j| {
        let s: f64 = (0..p).map(|k| g[i][k] * g[j][k]).sum::<f64>() / p as f64;
        if i == j {
            s + shift
        } else {
            s
        }
    })
}

pub fn max_abs_diff(a: &SymMatrix, b: &SymMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
