//! Randomized SVD baseline: Gaussian sketch, optional power iterations,
//! orthonormal range basis, and a small dense SVD of the projection.

use nalgebra::linalg::QR;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsvd::PartialSvd;
use crate::linops::{dense_svd_oracle, DenseMatrix};
use crate::seed::{fill_normal, Seed, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsvdConfig {
    pub target_rank: usize,
    pub oversampling: usize,
    pub power_iters: usize,
    pub seed: Seed,
}

impl RsvdConfig {
    pub fn new(target_rank: usize) -> Self {
        RsvdConfig {
            target_rank,
            oversampling: 10,
            power_iters: 0,
            seed: Seed(0),
        }
    }

    pub fn with_oversampling(mut self, p: usize) -> Self {
        self.oversampling = p;
        self
    }

    pub fn with_power_iters(mut self, q: usize) -> Self {
        self.power_iters = q;
        self
    }

    pub fn with_seed(mut self, seed: Seed) -> Self {
        self.seed = seed;
        self
    }

    /// Sketch width `target_rank + oversampling`.
    pub fn sketch_width(&self) -> usize {
        self.target_rank + self.oversampling
    }
}

/// Orthonormal basis of the column space of `y` (Householder QR, thin Q).
pub fn orthonormal_basis(y: &DenseMatrix) -> DenseMatrix {
    let q = QR::new(y.to_nalgebra()).q();
    DenseMatrix::from_nalgebra(&q)
}

pub fn rsvd(a: &DenseMatrix, cfg: &RsvdConfig) -> Result<PartialSvd> {
    let (m, n) = a.shape();
    let l = cfg.sketch_width();
    if cfg.target_rank == 0 {
        return Err(Error::InvalidArgument("target_rank must be at least 1".into()));
    }
    if l > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "sketch width {} + {} = {l} exceeds min(m, n) = {} for a {m}x{n} matrix",
            cfg.target_rank,
            cfg.oversampling,
            m.min(n)
        )));
    }
    let q = range_basis(a, cfg)?;
    // B = Q^T A, formed as (A^T Q)^T.
    let b = a.tr_matmul(&q)?.transpose();
    let small = dense_svd_oracle(&b)?;
    let u = q.matmul(&small.u)?;
    let full = PartialSvd::new(u, small.sigma, small.v)?;
    Ok(full.truncate(cfg.target_rank))
}

/// The orthonormal `m x l` range basis `Q` used by [`rsvd`].
pub fn range_basis(a: &DenseMatrix, cfg: &RsvdConfig) -> Result<DenseMatrix> {
    let (_, n) = a.shape();
    let l = cfg.sketch_width();
    let mut data = vec![0.0; n * l];
    fill_normal(&mut cfg.seed.rng(Stream::Sketch), &mut data, 0.0, 1.0);
    let omega = DenseMatrix::new(n, l, data)?;
    let mut q = orthonormal_basis(&a.matmul(&omega)?);
    for _ in 0..cfg.power_iters {
        let z = orthonormal_basis(&a.tr_matmul(&q)?);
        q = orthonormal_basis(&a.matmul(&z)?);
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::low_rank_synth;
    use crate::metrics::orthonormality_error;

    #[test]
    fn exact_rank_case() {
        let a = DenseMatrix::diag(3, 3, &[3.0, 2.0, 1.0]);
        let out = rsvd(&a, &RsvdConfig::new(3).with_oversampling(0).with_seed(Seed(1))).unwrap();
        for (s, want) in out.sigma.iter().zip([3.0, 2.0, 1.0]) {
            assert!((s - want).abs() < 1e-10);
        }
    }

    #[test]
    fn captures_range_when_oversampled_past_rank() {
        let a = low_rank_synth(300, 250, 30, Seed(2)).unwrap();
        let cfg = RsvdConfig::new(30).with_oversampling(15).with_seed(Seed(3));
        let q = range_basis(&a, &cfg).unwrap();
        assert!(orthonormality_error(&q) <= 1e-12);
        let proj = q.matmul(&q.tr_matmul(&a).unwrap()).unwrap();
        assert!(a.sub(&proj).unwrap().frobenius_norm() <= 1e-8 * a.frobenius_norm());

        let oracle = dense_svd_oracle(&a).unwrap();
        let out = rsvd(&a, &cfg).unwrap();
        for (x, y) in out.sigma.iter().zip(&oracle.sigma) {
            assert!((x - y).abs() <= 1e-6 * y);
        }
    }

    #[test]
    fn sigma_never_exceeds_oracle() {
        let a = low_rank_synth(120, 100, 60, Seed(5)).unwrap();
        let oracle = dense_svd_oracle(&a).unwrap();
        for power in [0, 1] {
            let cfg = RsvdConfig::new(10).with_power_iters(power).with_seed(Seed(9));
            let out = rsvd(&a, &cfg).unwrap();
            assert_eq!(out.rank(), 10);
            for (x, y) in out.sigma.iter().zip(&oracle.sigma) {
                assert!(*x <= y + 1e-10);
            }
        }
    }

    #[test]
    fn power_iterations_help() {
        let a = low_rank_synth(150, 150, 80, Seed(6)).unwrap();
        let oracle = dense_svd_oracle(&a).unwrap();
        let gap = |p: usize| {
            let out = rsvd(&a, &RsvdConfig::new(10).with_power_iters(p).with_seed(Seed(1))).unwrap();
            (0..10).map(|i| oracle.sigma[i] - out.sigma[i]).sum::<f64>()
        };
        assert!(gap(2) < gap(0));
    }

    #[test]
    fn rejects_oversized_sketch() {
        let a = DenseMatrix::identity(5);
        assert!(rsvd(&a, &RsvdConfig::new(3)).is_err());
        assert!(rsvd(&a, &RsvdConfig::new(0).with_oversampling(1)).is_err());
    }
}
