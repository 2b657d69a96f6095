//! Partial SVD from the bidiagonal factor.
//!
//! Ritz values of `A^T A` on the Krylov space spanned by `P` are the
//! eigenvalues of the tridiagonal `B^T B`; lifting its eigenvectors through
//! `P` gives right singular vectors, and `u_i = A v_i / sigma_i` the left ones.

use crate::bidiag::{bidiagonalize, reorthogonalize, BidiagConfig, BidiagState};
use crate::error::{Error, Result};
use crate::linops::{DenseMatrix, LinearOperator};
use crate::metrics::orthonormality_error;
use crate::tridiag::{symtridiag_eig, SymTridiag};

/// `r` singular triplets with `sigma` in non-increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSvd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl PartialSvd {
    pub fn new(u: DenseMatrix, sigma: Vec<f64>, v: DenseMatrix) -> Result<Self> {
        if u.cols() != sigma.len() || v.cols() != sigma.len() {
            return Err(Error::shape(
                "singular triplet count",
                format!("U and V with {} columns", sigma.len()),
                format!("U with {}, V with {}", u.cols(), v.cols()),
            ));
        }
        Ok(PartialSvd { u, sigma, v })
    }

    /// Zero triplets for an `m x n` operator.
    pub fn empty(m: usize, n: usize) -> Self {
        PartialSvd {
            u: DenseMatrix::zeros(m, 0),
            sigma: Vec::new(),
            v: DenseMatrix::zeros(n, 0),
        }
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.u
            .scale_columns(&self.sigma)
            .matmul_tr(&self.v)
            .expect("factor shapes checked on construction")
    }

    /// Keeps the leading `r` triplets.
    pub fn truncate(&self, r: usize) -> PartialSvd {
        let r = r.min(self.rank());
        PartialSvd {
            u: self.u.leading_columns(r),
            sigma: self.sigma[..r].to_vec(),
            v: self.v.leading_columns(r),
        }
    }

    /// Flips each pair `(u_i, v_i)` so the largest-magnitude entry of `v_i`
    /// is positive. The first such entry wins ties.
    pub fn normalize_signs(&mut self) {
        for i in 0..self.rank() {
            let mut best = 0.0_f64;
            let mut sign = 1.0;
            for r in 0..self.v.rows() {
                let x = self.v.get(r, i);
                if x.abs() > best {
                    best = x.abs();
                    sign = x.signum();
                }
            }
            if sign < 0.0 {
                for r in 0..self.v.rows() {
                    self.v.set(r, i, -self.v.get(r, i));
                }
                for r in 0..self.u.rows() {
                    self.u.set(r, i, -self.u.get(r, i));
                }
            }
        }
    }
}

/// `B^T B` in closed tridiagonal form: `diag_i = alpha_i^2 + beta_{i+1}^2`,
/// `offdiag_i = alpha_{i+1} beta_{i+1}`.
pub fn gram_tridiag(state: &BidiagState) -> Result<SymTridiag> {
    let k = state.k_prime;
    if k == 0 {
        return Err(Error::InvalidArgument(
            "bidiagonal state is degenerate (k' = 0)".into(),
        ));
    }
    let a = &state.alphas;
    let b = &state.betas;
    let diag = (0..k).map(|i| a[i] * a[i] + b[i + 1] * b[i + 1]).collect();
    let offdiag = (0..k - 1).map(|i| a[i + 1] * b[i + 1]).collect();
    SymTridiag::new(diag, offdiag)
}

/// Largest `max |U^T U - I|` accepted without a Gram-Schmidt pass on `U`.
pub const U_ORTHO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsvdOptions {
    /// Re-orthonormalize the recovered left vectors whenever their
    /// orthonormality error exceeds [`U_ORTHO_TOL`].
    pub orthonormalize_u: bool,
    /// Triplets with `sigma_i < drop_ratio * sigma_1` are discarded.
    pub drop_ratio: f64,
}

impl Default for FsvdOptions {
    fn default() -> Self {
        FsvdOptions {
            orthonormalize_u: true,
            drop_ratio: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FsvdOutput {
    pub svd: PartialSvd,
    pub k_prime: usize,
    /// Fewer than `r` Krylov steps were available.
    pub truncated: bool,
    /// Some requested triplets had negligible `sigma` and were dropped.
    pub rank_deficient: bool,
    /// `|alpha_{k'+1} beta_{k'+1} g_i[k']|` per returned triplet: the exact
    /// arithmetic residual `||A^T A v_i - theta_i v_i||`.
    pub ritz_residuals: Vec<f64>,
    /// All Ritz values `theta` (descending), including the unreturned ones.
    pub ritz_values: Vec<f64>,
}

pub fn fsvd<A: LinearOperator + ?Sized>(
    a: &A,
    k: usize,
    r: usize,
    cfg: &BidiagConfig,
) -> Result<FsvdOutput> {
    fsvd_with(a, k, r, cfg, FsvdOptions::default())
}

pub fn fsvd_with<A: LinearOperator + ?Sized>(
    a: &A,
    k: usize,
    r: usize,
    cfg: &BidiagConfig,
    opts: FsvdOptions,
) -> Result<FsvdOutput> {
    let (m, n) = (a.nrows(), a.ncols());
    if r == 0 || r > k || k > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= r <= k <= min(m, n); got r = {r}, k = {k}, {m}x{n}"
        )));
    }
    let mut bcfg = cfg.clone();
    bcfg.k_max = k;
    let state = bidiagonalize(a, &bcfg)?;
    if state.degenerate {
        return Ok(FsvdOutput {
            svd: PartialSvd::empty(m, n),
            k_prime: 0,
            truncated: true,
            rank_deficient: true,
            ritz_residuals: Vec::new(),
            ritz_values: Vec::new(),
        });
    }
    from_state(a, &state, r, opts)
}

/// Triplet extraction from an existing bidiagonalization of `a`.
pub fn from_state<A: LinearOperator + ?Sized>(
    a: &A,
    state: &BidiagState,
    r: usize,
    opts: FsvdOptions,
) -> Result<FsvdOutput> {
    let (m, n) = (a.nrows(), a.ncols());
    let kp = state.k_prime;
    let eig = symtridiag_eig(&gram_tridiag(state)?)?;
    let sigma1 = eig.values[0].max(0.0).sqrt();

    let wanted = r.min(kp);
    let mut sigma = Vec::with_capacity(wanted);
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(wanted);
    let mut us: Vec<Vec<f64>> = Vec::with_capacity(wanted);
    let mut ritz_residuals = Vec::with_capacity(wanted);
    let coupling = state.alpha_next * state.beta_last();
    let p = state.p_columns();
    for i in 0..wanted {
        let theta = eig.values[i];
        if !(theta > 0.0) || theta.sqrt() < opts.drop_ratio * sigma1 {
            break;
        }
        let s = theta.sqrt();
        let g = &eig.vectors[i];
        let mut v = vec![0.0; n];
        for (gj, pj) in g.iter().zip(p) {
            for (vi, pji) in v.iter_mut().zip(pj) {
                *vi += gj * pji;
            }
        }
        let mut u = vec![0.0; m];
        a.apply(&v, &mut u);
        u.iter_mut().for_each(|x| *x /= s);
        ritz_residuals.push((coupling * g[kp - 1]).abs());
        sigma.push(s);
        vs.push(v);
        us.push(u);
    }
    let rank_deficient = sigma.len() < wanted;
    if opts.orthonormalize_u {
        // An unconditional pass would only add rounding to an already
        // orthonormal U.
        let u_mat = DenseMatrix::from_columns(m, &us);
        if orthonormality_error(&u_mat) > U_ORTHO_TOL {
            for i in 0..us.len() {
                let (done, rest) = us.split_at_mut(i);
                let u = &mut rest[0];
                reorthogonalize(u, done, 2);
                let nrm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nrm > 0.0 {
                    u.iter_mut().for_each(|x| *x /= nrm);
                }
            }
        }
    }
    let mut svd = PartialSvd::new(
        DenseMatrix::from_columns(m, &us),
        sigma,
        DenseMatrix::from_columns(n, &vs),
    )?;
    svd.normalize_signs();
    Ok(FsvdOutput {
        svd,
        k_prime: kp,
        truncated: kp < r,
        rank_deficient,
        ritz_residuals,
        ritz_values: eig.values,
    })
}
