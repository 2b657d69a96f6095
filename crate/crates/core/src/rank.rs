//! Numerical rank from the eigenvalues of `B^T B`.

use serde::{Deserialize, Serialize};

use crate::bidiag::{bidiagonalize, BidiagConfig};
use crate::error::{Error, Result};
use crate::fsvd::gram_tridiag;
use crate::linops::LinearOperator;
use crate::tridiag::symtridiag_eigenvalues;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    /// Count `theta_i > eps`, with `theta = sigma^2`.
    #[default]
    Absolute,
    /// Count `sigma_i > eps * sigma_1`, i.e. `theta_i > eps^2 * theta_1`.
    Relative,
}

impl std::str::FromStr for RankMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" | "abs" => Ok(RankMode::Absolute),
            "relative" | "rel" => Ok(RankMode::Relative),
            other => Err(Error::InvalidArgument(format!(
                "unknown rank mode '{other}' (expected absolute or relative)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    /// Iteration at which the bidiagonalization stopped.
    pub k_prime: usize,
    /// Eigenvalues of `B^T B`, descending.
    pub eigenvalues: Vec<f64>,
    /// The value the eigenvalues were compared against.
    pub threshold_used: f64,
    pub mode: RankMode,
}

impl RankReport {
    /// Re-thresholds the stored eigenvalues without touching the operator.
    pub fn recount(&self, eps: f64, mode: RankMode) -> RankReport {
        let threshold = threshold(&self.eigenvalues, eps, mode);
        RankReport {
            rank: self.eigenvalues.iter().filter(|&&t| t > threshold).count(),
            k_prime: self.k_prime,
            eigenvalues: self.eigenvalues.clone(),
            threshold_used: threshold,
            mode,
        }
    }
}

fn threshold(eigenvalues: &[f64], eps: f64, mode: RankMode) -> f64 {
    match mode {
        RankMode::Absolute => eps,
        RankMode::Relative => eps * eps * eigenvalues.first().copied().unwrap_or(0.0).max(0.0),
    }
}

/// Runs the bidiagonalization to `min(m, n)` steps (stopping early on
/// breakdown) and counts the eigenvalues of `B^T B` that exceed the
/// threshold. `cfg.k_max` is ignored; `cfg.eps` still controls breakdown.
pub fn estimate_rank<A: LinearOperator + ?Sized>(
    a: &A,
    eps: f64,
    mode: RankMode,
    cfg: &BidiagConfig,
) -> Result<RankReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
    }
    let mut bcfg = cfg.clone();
    bcfg.k_max = a.nrows().min(a.ncols());
    let state = bidiagonalize(a, &bcfg)?;
    if state.degenerate {
        return Ok(RankReport {
            rank: 0,
            k_prime: 0,
            eigenvalues: Vec::new(),
            threshold_used: threshold(&[], eps, mode),
            mode,
        });
    }
    let eigenvalues = symtridiag_eigenvalues(&gram_tridiag(&state)?)?;
    let report = RankReport {
        rank: 0,
        k_prime: state.k_prime,
        eigenvalues,
        threshold_used: 0.0,
        mode,
    };
    Ok(report.recount(eps, mode))
}
