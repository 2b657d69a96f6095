//! WebAssembly bindings for the demo page in `www/`. Each exported
//! function returns a JSON string; the plain `*_report` functions hold the
//! logic so they can be tested natively.

use ksvd::fsvd::fsvd;
use ksvd::metrics::{err_rel, TripletQuality};
use ksvd::{
    dense_svd_oracle, estimate_rank, gaussian_matrix, low_rank_synth, rsvd, BidiagConfig,
    DenseMatrix, RankMode, RsvdConfig, Seed,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest side the page accepts; the dense SVD runs on every request.
pub const MAX_SIDE: usize = 400;

#[derive(Debug, Serialize)]
pub struct SpectrumReport {
    pub dense: Vec<f64>,
    pub fsvd: Vec<f64>,
    pub rsvd: Vec<f64>,
    pub k_prime: usize,
    pub err_rel_fsvd: f64,
    pub err_rel_rsvd: f64,
    pub millis: Timings,
}

#[derive(Debug, Default, Serialize)]
pub struct Timings {
    pub dense: f64,
    pub fsvd: f64,
    pub rsvd: f64,
}

#[derive(Debug, Serialize)]
pub struct RankPoint {
    pub eps: f64,
    pub absolute: usize,
    pub relative: usize,
}

#[derive(Debug, Serialize)]
pub struct RankSweep {
    pub k_prime: usize,
    /// Eigenvalues of `B^T B`, descending.
    pub eigenvalues: Vec<f64>,
    pub sweep: Vec<RankPoint>,
}

#[derive(Debug, Serialize)]
pub struct TripletReport {
    pub fsvd: TripletQuality,
    pub rsvd: TripletQuality,
}

fn check_shape(rows: usize, cols: usize, rank: usize, r: usize) -> Result<(), String> {
    if rows == 0 || cols == 0 || rows > MAX_SIDE || cols > MAX_SIDE {
        return Err(format!("sides must lie in 1..={MAX_SIDE}"));
    }
    if rank > rows.min(cols) || r == 0 || r > rows.min(cols) {
        return Err(format!("ranks must lie in 1..={}", rows.min(cols)));
    }
    Ok(())
}

/// Low-rank matrix plus Gaussian noise of the given level (rank 0: pure noise).
pub fn test_matrix(rows: usize, cols: usize, rank: usize, noise: f64, seed: u64) -> Result<DenseMatrix, String> {
    let mut a = if rank == 0 {
        DenseMatrix::zeros(rows, cols)
    } else {
        low_rank_synth(rows, cols, rank, Seed(seed)).map_err(|e| e.to_string())?
    };
    if noise > 0.0 {
        let g = gaussian_matrix(rows, cols, 0.0, noise, Seed(seed).derive(7)).map_err(|e| e.to_string())?;
        a.add_scaled(1.0, &g).map_err(|e| e.to_string())?;
    }
    Ok(a)
}

/// Runs the three SVDs; `clock` returns milliseconds.
pub fn spectrum_report(
    rows: usize,
    cols: usize,
    rank: usize,
    r: usize,
    oversampling: usize,
    noise: f64,
    seed: u64,
    clock: &dyn Fn() -> f64,
) -> Result<SpectrumReport, String> {
    check_shape(rows, cols, rank, r)?;
    let a = test_matrix(rows, cols, rank, noise, seed)?;
    let k = rows.min(cols);
    let mut millis = Timings::default();

    let t = clock();
    let dense = dense_svd_oracle(&a).map_err(|e| e.to_string())?;
    millis.dense = clock() - t;

    let t = clock();
    let krylov = fsvd(&a, k, r, &BidiagConfig::new(k).with_seed(Seed(seed))).map_err(|e| e.to_string())?;
    millis.fsvd = clock() - t;

    let over = oversampling.min(k - r);
    let t = clock();
    let randomized = rsvd(&a, &RsvdConfig::new(r).with_oversampling(over).with_seed(Seed(seed).derive(1)))
        .map_err(|e| e.to_string())?;
    millis.rsvd = clock() - t;

    Ok(SpectrumReport {
        dense: dense.sigma.iter().take(r).copied().collect(),
        err_rel_fsvd: err_rel(&a, &krylov.svd).map_err(|e| e.to_string())?,
        err_rel_rsvd: err_rel(&a, &randomized).map_err(|e| e.to_string())?,
        fsvd: krylov.svd.sigma,
        rsvd: randomized.sigma,
        k_prime: krylov.k_prime,
        millis,
    })
}

/// Rank estimates for thresholds `1e-1, 1e-2, ..., 1e-14` from one run.
pub fn rank_sweep_report(rows: usize, cols: usize, rank: usize, noise: f64, seed: u64) -> Result<RankSweep, String> {
    check_shape(rows, cols, rank, 1)?;
    let a = test_matrix(rows, cols, rank, noise, seed)?;
    let cfg = BidiagConfig::new(rows.min(cols)).with_seed(Seed(seed));
    let base = estimate_rank(&a, 1e-8, RankMode::Absolute, &cfg).map_err(|e| e.to_string())?;
    let sweep = (1..=14)
        .map(|p| {
            let eps = 10f64.powi(-p);
            RankPoint {
                eps,
                absolute: base.recount(eps, RankMode::Absolute).rank,
                relative: base.recount(eps, RankMode::Relative).rank,
            }
        })
        .collect();
    Ok(RankSweep {
        k_prime: base.k_prime,
        eigenvalues: base.eigenvalues,
        sweep,
    })
}

pub fn triplet_report(
    rows: usize,
    cols: usize,
    rank: usize,
    r: usize,
    oversampling: usize,
    seed: u64,
) -> Result<TripletReport, String> {
    check_shape(rows, cols, rank, r)?;
    let a = test_matrix(rows, cols, rank, 0.0, seed)?;
    let k = rows.min(cols);
    let mut reference = dense_svd_oracle(&a).map_err(|e| e.to_string())?.truncate(r);
    reference.normalize_signs();
    let krylov = fsvd(&a, k, r, &BidiagConfig::new(k).with_seed(Seed(seed))).map_err(|e| e.to_string())?;
    let mut randomized = rsvd(
        &a,
        &RsvdConfig::new(r)
            .with_oversampling(oversampling.min(k - r))
            .with_seed(Seed(seed).derive(1)),
    )
    .map_err(|e| e.to_string())?;
    randomized.normalize_signs();
    Ok(TripletReport {
        fsvd: TripletQuality::compare(&reference, &krylov.svd).map_err(|e| e.to_string())?,
        rsvd: TripletQuality::compare(&reference, &randomized).map_err(|e| e.to_string())?,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn spectrum(
    rows: usize,
    cols: usize,
    rank: usize,
    r: usize,
    oversampling: usize,
    noise: f64,
    seed: u32,
) -> Result<String, JsError> {
    to_js(spectrum_report(rows, cols, rank, r, oversampling, noise, seed.into(), &js_sys::Date::now))
}

#[wasm_bindgen]
pub fn rank_sweep(rows: usize, cols: usize, rank: usize, noise: f64, seed: u32) -> Result<String, JsError> {
    to_js(rank_sweep_report(rows, cols, rank, noise, seed.into()))
}

#[wasm_bindgen]
pub fn triplets(rows: usize, cols: usize, rank: usize, r: usize, oversampling: usize, seed: u32) -> Result<String, JsError> {
    to_js(triplet_report(rows, cols, rank, r, oversampling, seed.into()))
}
