use ksvd::metrics::orthonormality_error;
use ksvd::{bidiagonalize, DenseMatrix, gaussian_matrix, low_rank_synth, BidiagConfig, Seed};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn factorization_and_orthogonality(
        m in 2usize..=120,
        n in 2usize..=120,
        k in 1usize..=60,
        low_rank in prop::option::of(1usize..=30),
        seed in any::<u64>(),
    ) {
        let a = match low_rank {
            Some(l) => low_rank_synth(m, n, l.min(m.min(n)), Seed(seed)).unwrap(),
            None => gaussian_matrix(m, n, 0.0, 1.0, Seed(seed)).unwrap(),
        };
        let k = k.min(m.min(n));
        let st = bidiagonalize(&a, &BidiagConfig::new(k).with_seed(Seed(seed))).unwrap();
        prop_assert!(st.k_prime <= k);
        prop_assert!(st.alphas.iter().all(|&x| x >= 0.0));
        prop_assert!(st.betas.iter().all(|&x| x >= 0.0));
        // Once Q spans all of R^m the trailing column is the zero vector.
        let mut q_cols = st.q_columns().to_vec();
        if st.k_prime == m {
            prop_assert!(q_cols.last().unwrap().iter().all(|&x| x == 0.0));
            q_cols.pop();
        }
        prop_assert!(orthonormality_error(&DenseMatrix::from_columns(m, &q_cols)) <= 1e-10);
        if st.k_prime > 0 {
            prop_assert!(orthonormality_error(&st.p_matrix()) <= 1e-10);
            let ap = a.matmul(&st.p_matrix()).unwrap();
            let qb = st.q_matrix().matmul(&st.bidiagonal()).unwrap();
            prop_assert!(ap.sub(&qb).unwrap().frobenius_norm() <= 1e-10 * a.frobenius_norm());
        }
    }
}
