//! Krylov SVD against the dense SVD on random matrices with a known,
//! well-separated spectrum.

use ksvd::fsvd::fsvd;
use ksvd::metrics::{max_principal_angle, orthonormality_error};
use ksvd::rsvd::orthonormal_basis;
use ksvd::{dense_svd_oracle, gaussian_matrix, BidiagConfig, DenseMatrix, Seed};
use proptest::prelude::*;

/// `U diag(sigma) V^T` with random orthonormal factors.
fn with_spectrum(m: usize, n: usize, sigma: &[f64], seed: u64) -> DenseMatrix {
    let r = sigma.len();
    let u = orthonormal_basis(&gaussian_matrix(m, r, 0.0, 1.0, Seed(seed)).unwrap());
    let v = orthonormal_basis(&gaussian_matrix(n, r, 0.0, 1.0, Seed(seed ^ 0x5eed)).unwrap());
    u.scale_columns(sigma).matmul_tr(&v).unwrap()
}

/// Distinct values in `[1, 10]`, relative gaps at least `0.5 / r`.
fn spread(r: usize, jitter: &[f64]) -> Vec<f64> {
    (0..r)
        .map(|i| 10.0 - 9.0 * (i as f64 + 0.25 * jitter[i]) / r as f64)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn krylov_svd_matches_dense(
        m in 5usize..=80,
        n in 5usize..=80,
        rank_frac in 0.1f64..=1.0,
        jitter in prop::collection::vec(0.0f64..1.0, 80),
        seed in any::<u64>(),
    ) {
        let r = ((m.min(n) as f64 * rank_frac).ceil() as usize).clamp(1, m.min(n));
        let sigma = spread(r, &jitter);
        let a = with_spectrum(m, n, &sigma, seed);
        let k = m.min(n);
        let out = fsvd(&a, k, r, &BidiagConfig::new(k).with_seed(Seed(seed))).unwrap();
        let oracle = dense_svd_oracle(&a).unwrap().truncate(r);
        prop_assert_eq!(out.svd.rank(), r);
        for i in 0..r {
            prop_assert!((out.svd.sigma[i] - oracle.sigma[i]).abs() <= 1e-10 * oracle.sigma[i]);
        }
        prop_assert!(max_principal_angle(&oracle.u, &out.svd.u).unwrap() <= 1e-6);
        prop_assert!(max_principal_angle(&oracle.v, &out.svd.v).unwrap() <= 1e-6);
        prop_assert!(orthonormality_error(&out.svd.u) <= 1e-8);
        prop_assert!(orthonormality_error(&out.svd.v) <= 1e-8);
    }
}

#[test]
fn single_vectors_match_when_separated() {
    let sigma = spread(12, &[0.5; 12]);
    let a = with_spectrum(60, 40, &sigma, 3);
    let out = fsvd(&a, 40, 12, &BidiagConfig::new(40).with_seed(Seed(3))).unwrap();
    let oracle = dense_svd_oracle(&a).unwrap().truncate(12);
    for i in 0..12 {
        let col = |m: &DenseMatrix| DenseMatrix::from_columns(m.rows(), &[m.column(i)]);
        assert!(max_principal_angle(&col(&oracle.u), &col(&out.svd.u)).unwrap() <= 1e-8);
        assert!(max_principal_angle(&col(&oracle.v), &col(&out.svd.v)).unwrap() <= 1e-8);
    }
}
