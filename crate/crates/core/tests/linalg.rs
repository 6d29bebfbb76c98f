mod common;

use common::{lu_det, max_abs_diff, random_spd, random_symmetric};
use lvgm::linalg::{
    cholesky, eig_sym, entrywise_max_norm, matrix_one_norm, parse_matrix, spd_inverse,
    spectral_norm, write_matrix, Matrix, SymMatrix, DEFAULT_COND_LIMIT, DEFAULT_EIG_TOL,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn brute_one_norm(a: &SymMatrix) -> f64 {
    let mut best = 0.0f64;
    for i in 0..a.dim() {
        let mut s = 0.0;
        for j in 0..a.dim() {
            s += a.get(i, j).abs();
        }
        best = best.max(s);
    }
    best
}

#[test]
fn one_norm_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let a = random_symmetric(&mut rng, 5);
        assert_eq!(matrix_one_norm(&a), brute_one_norm(&a));
    }
}

#[test]
fn spd_inverse_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let a = random_spd(&mut rng, 6, 1.0);
        let b = spd_inverse(&a, DEFAULT_COND_LIMIT).unwrap();
        let resid = a.matmul(&b.to_matrix()).sub(&Matrix::identity(6)).max_abs();
        assert!(resid <= 1e-8, "residual {resid}");
        assert_eq!(b.get(0, 5), b.get(5, 0));
    }
}

#[test]
fn determinant_agrees_with_lu() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random_spd(&mut rng, 7, 0.5);
    let det = cholesky(&a).unwrap().det();
    let lu = lu_det(&a);
    assert!((det - lu).abs() <= 1e-12 * lu.abs());
}

#[test]
fn cholesky_factor_reproduces_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = random_spd(&mut rng, 5, 0.5);
    let c = cholesky(&a).unwrap();
    let l = SymMatrix::from_fn(5, |i, j| {
        (0..5).map(|k| c.lower(i, k) * c.lower(j, k)).sum()
    });
    assert!(max_abs_diff(&l, &a) < 1e-13);
}

#[test]
fn io_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = random_symmetric(&mut rng, 6).scale(1e-3);
    assert_eq!(parse_matrix(&write_matrix(&a)).unwrap(), a);
}

#[test]
fn spectral_norm_of_diag() {
    let a = SymMatrix::diag(&[1.0, -3.0, 2.0]);
    assert!((spectral_norm(&a).unwrap() - 3.0).abs() < 1e-14);
}

fn sym_strategy() -> impl Strategy<Value = SymMatrix> {
    (1usize..9, any::<u64>(), 0.01f64..100.0).prop_map(|(p, seed, scale)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_symmetric(&mut rng, p).scale(scale)
    })
}

proptest! {
    #[test]
    fn eigen_decomposition_invariants(a in sym_strategy()) {
        let eig = eig_sym(&a, DEFAULT_EIG_TOL).unwrap();
        let p = a.dim();
        prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        let ortho = eig.vectors.transpose().matmul(&eig.vectors).sub(&Matrix::identity(p)).max_abs();
        prop_assert!(ortho <= 1e-10);
        let recon = max_abs_diff(&eig.reconstruct(), &a);
        prop_assert!(recon <= 1e-8 * (1.0 + entrywise_max_norm(&a)));
        let trace: f64 = eig.values.iter().sum();
        let scale: f64 = eig.values.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
        prop_assert!((trace - a.trace()).abs() <= 1e-10 * scale);
    }

    #[test]
    fn eigenvalues_are_permutation_invariant(a in sym_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..a.dim()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let e1 = eig_sym(&a, DEFAULT_EIG_TOL).unwrap().values;
        let e2 = eig_sym(&a.permute(&perm), DEFAULT_EIG_TOL).unwrap().values;
        let scale = 1.0 + entrywise_max_norm(&a);
        for (x, y) in e1.iter().zip(&e2) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn spectral_norm_below_one_norm(a in sym_strategy()) {
        let s = spectral_norm(&a).unwrap();
        prop_assert!(s <= matrix_one_norm(&a) * (1.0 + 1e-12));
        prop_assert!(s >= entrywise_max_norm(&a) * (1.0 - 1e-12));
    }

    #[test]
    fn inverse_of_inverse(p in 1usize..7, seed in any::<u64>()) {
        let a = random_spd(&mut ChaCha8Rng::seed_from_u64(seed), p, 1.0);
        let back = spd_inverse(&spd_inverse(&a, DEFAULT_COND_LIMIT).unwrap(), DEFAULT_COND_LIMIT).unwrap();
        prop_assert!(max_abs_diff(&back, &a) <= 1e-10 * (1.0 + entrywise_max_norm(&a)));
    }
}
