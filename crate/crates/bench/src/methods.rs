//! The SVD methods under comparison, behind one call signature.

use std::time::Instant;

use ksvd::fsvd::fsvd as krylov_svd;
use ksvd::linops::ParallelDense;
use ksvd::{dense_svd_oracle, rsvd, BidiagConfig, DenseMatrix, PartialSvd, RsvdConfig, Seed};

use crate::cli::Method;
use crate::error::{BenchError, Result};

/// Breakdown tolerance and absolute rank threshold on `sigma^2`.
pub const RANK_EPS: f64 = 1e-8;
/// Reconstruction residuals are skipped above this many entries.
pub const ERR_RES_CAP: u64 = 100_000_000;
/// Oversampling of the rsvd-default method.
pub const DEFAULT_OVERSAMPLING: usize = 10;

#[derive(Debug, Clone)]
pub struct MethodParams {
    pub r: usize,
    pub k: Option<usize>,
    pub oversampling: usize,
    pub seed: Seed,
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub svd: PartialSvd,
    /// Krylov steps or sketch width.
    pub k_used: usize,
    pub k_prime: Option<usize>,
    pub rank_estimated: Option<usize>,
}

pub fn run_method(method: Method, a: &DenseMatrix, p: &MethodParams) -> Result<MethodRun> {
    let (m, n) = a.shape();
    let min_dim = m.min(n);
    if p.r == 0 || p.r > min_dim {
        return Err(BenchError::Config(format!(
            "r = {} must lie in 1..={min_dim} for a {m}x{n} matrix",
            p.r
        )));
    }
    let mut run = match method {
        Method::Fsvd | Method::FsvdFull => {
            let k = p.k.unwrap_or(min_dim).min(min_dim);
            if k < p.r && method == Method::Fsvd {
                return Err(BenchError::Config(format!("k = {k} is smaller than r = {}", p.r)));
            }
            let r = if method == Method::FsvdFull { k } else { p.r };
            let cfg = BidiagConfig::new(k).with_seed(p.seed);
            let out = krylov_svd(&ParallelDense(a), k, r, &cfg)?;
            let rank = out.ritz_values.iter().filter(|&&t| t > RANK_EPS).count();
            // Full capture keeps the numerically nonzero triplets only.
            let svd = if method == Method::FsvdFull {
                out.svd.truncate(rank)
            } else {
                out.svd
            };
            MethodRun {
                svd,
                k_used: k,
                k_prime: Some(out.k_prime),
                rank_estimated: Some(rank),
            }
        }
        Method::RsvdDefault | Method::RsvdOversampled => {
            let over = if method == Method::RsvdDefault {
                DEFAULT_OVERSAMPLING
            } else {
                p.oversampling
            };
            let over = over.min(min_dim - p.r);
            let cfg = RsvdConfig::new(p.r).with_oversampling(over).with_seed(p.seed);
            MethodRun {
                svd: rsvd(a, &cfg)?,
                k_used: cfg.sketch_width(),
                k_prime: None,
                rank_estimated: None,
            }
        }
        Method::Dense => {
            let full = dense_svd_oracle(a)?;
            let rank = full.sigma.iter().filter(|&&s| s * s > RANK_EPS).count();
            MethodRun {
                svd: full.truncate(p.r),
                k_used: min_dim,
                k_prime: None,
                rank_estimated: Some(rank),
            }
        }
    };
    run.svd.normalize_signs();
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub median: f64,
    pub mean: f64,
}

/// Runs `f` once to warm up, then `repeats` timed times. Returns the
/// first timed result.
pub fn timed<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, Timing)> {
    if repeats == 0 {
        return Err(BenchError::Config("--repeats must be at least 1".into()));
    }
    f()?;
    let mut times = Vec::with_capacity(repeats);
    let mut first = None;
    for _ in 0..repeats {
        let start = Instant::now();
        let value = f()?;
        times.push(start.elapsed().as_secs_f64());
        first.get_or_insert(value);
    }
    Ok((first.expect("repeats >= 1"), summarize(&mut times)))
}

pub fn summarize(times: &mut [f64]) -> Timing {
    times.sort_by(f64::total_cmp);
    let n = times.len();
    let median = if n % 2 == 1 {
        times[n / 2]
    } else {
        0.5 * (times[n / 2 - 1] + times[n / 2])
    };
    Timing {
        median,
        mean: times.iter().sum::<f64>() / n as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_mean() {
        let t = summarize(&mut [3.0, 1.0, 2.0]);
        assert_eq!((t.median, t.mean), (2.0, 2.0));
        let t = summarize(&mut [4.0, 1.0, 2.0, 3.0]);
        assert_eq!(t.median, 2.5);
    }

    #[test]
    fn zero_repeats_is_a_config_error() {
        let err = timed(0, || Ok(())).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
    }
}
