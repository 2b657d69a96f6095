//! Lower Golub-Kahan bidiagonalization with full reorthogonalization.
//!
//! Starting from a random unit vector `q_1`, the coupled recurrences
//!
//! ```text
//! alpha_1 p_1         = A^T q_1
//! beta_{i+1} q_{i+1}  = A p_i       - alpha_i q_i
//! alpha_{i+1} p_{i+1} = A^T q_{i+1} - beta_{i+1} p_i
//! ```
//!
//! build orthonormal bases `Q` (m x (k'+1)) and `P` (n x k') with
//! `A P = Q B`, where `B` is lower bidiagonal with `alpha` on the diagonal and
//! `beta` below it. Each new vector is re-projected against all previous ones
//! (classical Gram-Schmidt, one or two passes).
//!
//! The iteration stops after `k_max` steps, or earlier when a new `beta` or
//! `alpha` falls below `eps`. The early stop point `k'` is a first estimate of
//! the numerical rank.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{DenseMatrix, LinearOperator};
use crate::seed::{normal_vec, Seed, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidiagConfig {
    pub k_max: usize,
    /// Breakdown tolerance on the unnormalized `beta`/`alpha`.
    pub eps: f64,
    /// Gram-Schmidt passes per new vector (1 or 2).
    pub reorth_passes: u8,
    /// Mean of the Gaussian start vector.
    pub start_mean: f64,
    pub start_std: f64,
    pub seed: Seed,
}

impl BidiagConfig {
    pub fn new(k_max: usize) -> Self {
        BidiagConfig {
            k_max,
            eps: 1e-8,
            reorth_passes: 2,
            start_mean: 2.0,
            start_std: 1.0,
            seed: Seed(0),
        }
    }

    pub fn with_seed(mut self, seed: Seed) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_reorth_passes(mut self, passes: u8) -> Self {
        self.reorth_passes = passes;
        self
    }

    /// Zero-mean start vector instead of the default `N(2, 1)`.
    pub fn with_centered_start(mut self) -> Self {
        self.start_mean = 0.0;
        self
    }

    fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be at least 1".into()));
        }
        if self.k_max > m.min(n) {
            return Err(Error::InvalidArgument(format!(
                "k_max = {} exceeds min(m, n) = {} for a {m}x{n} operator",
                self.k_max,
                m.min(n)
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidArgument(format!("eps must be > 0, got {}", self.eps)));
        }
        if !(1..=2).contains(&self.reorth_passes) {
            return Err(Error::InvalidArgument(format!(
                "reorth_passes must be 1 or 2, got {}",
                self.reorth_passes
            )));
        }
        if !(self.start_std > 0.0) {
            return Err(Error::InvalidArgument("start_std must be > 0".into()));
        }
        Ok(())
    }
}

/// Output of [`bidiagonalize`].
#[derive(Debug, Clone)]
pub struct BidiagState {
    m: usize,
    n: usize,
    /// `alpha_1 .. alpha_{k'}`.
    pub alphas: Vec<f64>,
    /// `beta_1 .. beta_{k'+1}`. `beta_1` is the norm of the raw start vector
    /// and is not part of `B`.
    pub betas: Vec<f64>,
    q: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    pub k_prime: usize,
    pub terminated_early: bool,
    /// `A^T q_1 = 0`: nothing to bidiagonalize.
    pub degenerate: bool,
    /// `alpha_{k'+1}`, the coupling to the next (unreturned) `p` vector.
    pub alpha_next: f64,
}

impl BidiagState {
    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    /// Columns `q_1 .. q_{k'+1}`.
    pub fn q_columns(&self) -> &[Vec<f64>] {
        &self.q
    }

    /// Columns `p_1 .. p_{k'}`.
    pub fn p_columns(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn q_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_columns(self.m, &self.q)
    }

    pub fn p_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_columns(self.n, &self.p)
    }

    /// The `(k'+1) x k'` lower-bidiagonal `B`.
    pub fn bidiagonal(&self) -> DenseMatrix {
        let k = self.k_prime;
        let mut b = DenseMatrix::zeros(k + 1, k);
        for j in 0..k {
            b.set(j, j, self.alphas[j]);
            b.set(j + 1, j, self.betas[j + 1]);
        }
        b
    }

    /// `beta_{k'+1}`, the last subdiagonal entry of `B`.
    pub fn beta_last(&self) -> f64 {
        *self.betas.last().expect("betas always holds beta_1")
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Classical Gram-Schmidt of `w` against the orthonormal `basis`, repeated
/// `passes` times.
pub(crate) fn reorthogonalize(w: &mut [f64], basis: &[Vec<f64>], passes: u8) {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..passes {
        for (c, b) in coeffs.iter_mut().zip(basis) {
            *c = dot(b, w);
        }
        for (c, b) in coeffs.iter().zip(basis) {
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= c * bi;
            }
        }
    }
}

fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Unit vector orthogonal to `basis`, or zero when `basis` already spans
/// the whole space.
fn orthogonal_filler(len: usize, basis: &[Vec<f64>], seed: Seed) -> Vec<f64> {
    if basis.len() >= len {
        return vec![0.0; len];
    }
    let mut rng = seed.rng(Stream::Breakdown);
    for _ in 0..8 {
        let mut w = normal_vec(&mut rng, len, 0.0, 1.0);
        let before = norm(&w);
        reorthogonalize(&mut w, basis, 2);
        let after = norm(&w);
        if after > 1e-8 * before {
            w.iter_mut().for_each(|x| *x /= after);
            reorthogonalize(&mut w, basis, 1);
            let again = norm(&w);
            w.iter_mut().for_each(|x| *x /= again);
            return w;
        }
    }
    vec![0.0; len]
}

pub fn bidiagonalize<A: LinearOperator + ?Sized>(a: &A, cfg: &BidiagConfig) -> Result<BidiagState> {
    let (m, n) = (a.nrows(), a.ncols());
    cfg.validate(m, n)?;
    let passes = cfg.reorth_passes;

    let mut rng = cfg.seed.rng(Stream::KrylovStart);
    let mut q1 = normal_vec(&mut rng, m, cfg.start_mean, cfg.start_std);
    let beta1 = norm(&q1);
    q1.iter_mut().for_each(|x| *x /= beta1);

    let mut p1 = vec![0.0; n];
    a.apply_transpose(&q1, &mut p1);
    check_finite(&p1, "A^T q_1")?;
    let alpha1 = norm(&p1);

    let mut state = BidiagState {
        m,
        n,
        alphas: Vec::with_capacity(cfg.k_max),
        betas: vec![beta1],
        q: vec![q1],
        p: Vec::with_capacity(cfg.k_max),
        k_prime: 0,
        terminated_early: true,
        degenerate: false,
        alpha_next: 0.0,
    };
    if alpha1 < cfg.eps {
        state.degenerate = true;
        state.alpha_next = alpha1;
        return Ok(state);
    }
    p1.iter_mut().for_each(|x| *x /= alpha1);
    state.alphas.push(alpha1);
    state.p.push(p1);

    let mut w = vec![0.0; m];
    let mut z = vec![0.0; n];
    // True once the next `p` has been attempted (alpha breakdown); otherwise
    // alpha_{k'+1} is computed after the loop.
    let mut next_alpha_known = false;
    let mut i = 1;
    loop {
        // beta_{i+1} q_{i+1} = A p_i - alpha_i q_i
        a.apply(&state.p[i - 1], &mut w);
        let alpha_i = state.alphas[i - 1];
        for (wj, qj) in w.iter_mut().zip(&state.q[i - 1]) {
            *wj -= alpha_i * qj;
        }
        reorthogonalize(&mut w, &state.q, passes);
        check_finite(&w, "A p_i")?;
        let beta = norm(&w);
        state.betas.push(beta);
        if beta < cfg.eps {
            let filler = orthogonal_filler(m, &state.q, cfg.seed.derive(i as u64));
            state.q.push(filler);
            state.k_prime = i;
            break;
        }
        state.q.push(w.iter().map(|x| x / beta).collect());
        if i == cfg.k_max {
            state.k_prime = i;
            break;
        }

        // alpha_{i+1} p_{i+1} = A^T q_{i+1} - beta_{i+1} p_i
        a.apply_transpose(&state.q[i], &mut z);
        for (zj, pj) in z.iter_mut().zip(&state.p[i - 1]) {
            *zj -= beta * pj;
        }
        reorthogonalize(&mut z, &state.p, passes);
        check_finite(&z, "A^T q_{i+1}")?;
        let alpha = norm(&z);
        if alpha < cfg.eps {
            state.k_prime = i;
            state.alpha_next = alpha;
            next_alpha_known = true;
            break;
        }
        state.alphas.push(alpha);
        state.p.push(z.iter().map(|x| x / alpha).collect());
        i += 1;
    }
    state.terminated_early = state.k_prime < cfg.k_max;

    if !next_alpha_known {
        let k = state.k_prime;
        a.apply_transpose(&state.q[k], &mut z);
        let beta = state.betas[k];
        for (zj, pj) in z.iter_mut().zip(&state.p[k - 1]) {
            *zj -= beta * pj;
        }
        reorthogonalize(&mut z, &state.p, passes);
        state.alpha_next = norm(&z);
    }
    Ok(state)
}
