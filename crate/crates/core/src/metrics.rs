//! Accuracy measures shared by tests, the benchmark harness and the demo.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsvd::PartialSvd;
use crate::linops::{DenseMatrix, LinearOperator};

/// `max |M^T M - I|` over all entries.
pub fn orthonormality_error(m: &DenseMatrix) -> f64 {
    let k = m.cols();
    let cols = m.columns();
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in i..k {
            let d: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((d - target).abs());
        }
    }
    worst
}

/// `||A^T U - V Sigma||_F / ||Sigma||_F`.
pub fn err_rel<A: LinearOperator + ?Sized>(a: &A, svd: &PartialSvd) -> Result<f64> {
    check_shapes(a, svd)?;
    let sigma_norm = svd.sigma.iter().map(|s| s * s).sum::<f64>().sqrt();
    if sigma_norm == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut atu = vec![0.0; a.ncols()];
    for i in 0..svd.rank() {
        a.apply_transpose(&svd.u.column(i), &mut atu);
        let s = svd.sigma[i];
        for (row, &x) in atu.iter().enumerate() {
            let d = x - svd.v.get(row, i) * s;
            total += d * d;
        }
    }
    Ok(total.sqrt() / sigma_norm)
}

/// `||A - U Sigma V^T||_F` for a dense `A`.
pub fn err_res(a: &DenseMatrix, svd: &PartialSvd) -> Result<f64> {
    check_shapes(a, svd)?;
    Ok(a.sub(&svd.reconstruct())?.frobenius_norm())
}

fn check_shapes<A: LinearOperator + ?Sized>(a: &A, svd: &PartialSvd) -> Result<()> {
    if svd.u.rows() != a.nrows() || svd.v.rows() != a.ncols() {
        return Err(Error::shape(
            "SVD factors vs operator",
            format!("{}x{}", a.nrows(), a.ncols()),
            format!("U rows {}, V rows {}", svd.u.rows(), svd.v.rows()),
        ));
    }
    Ok(())
}

/// Largest principal angle (radians) between the column spaces of two
/// matrices with orthonormal columns.
pub fn max_principal_angle(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    if a.rows() != b.rows() {
        return Err(Error::shape("subspace ambient dimension", a.rows(), b.rows()));
    }
    if b.cols() == 0 {
        return Ok(0.0);
    }
    // sin of the largest angle is the spectral norm of (I - A A^T) B.
    let proj = a.matmul(&a.tr_matmul(b)?)?;
    let resid = b.sub(&proj)?;
    let s = resid
        .to_nalgebra()
        .singular_values()
        .iter()
        .fold(0.0_f64, |m, &x| m.max(x));
    Ok(s.min(1.0).asin())
}

/// Per-index agreement of an approximate SVD with a reference one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletQuality {
    /// `(U_ref^T U)_{ii} * (V_ref^T V)_{ii}`; 1 means both vectors match.
    pub q: Vec<f64>,
    /// `|sigma_ref_i - sigma_i|`.
    pub sigma_dev: Vec<f64>,
}

impl TripletQuality {
    pub fn compare(reference: &PartialSvd, approx: &PartialSvd) -> Result<Self> {
        if reference.u.rows() != approx.u.rows() || reference.v.rows() != approx.v.rows() {
            return Err(Error::shape(
                "triplet comparison",
                format!("{}x{}", reference.u.rows(), reference.v.rows()),
                format!("{}x{}", approx.u.rows(), approx.v.rows()),
            ));
        }
        let k = reference.rank().min(approx.rank());
        let mut q = Vec::with_capacity(k);
        let mut sigma_dev = Vec::with_capacity(k);
        for i in 0..k {
            let du: f64 = (0..reference.u.rows())
                .map(|r| reference.u.get(r, i) * approx.u.get(r, i))
                .sum();
            let dv: f64 = (0..reference.v.rows())
                .map(|r| reference.v.get(r, i) * approx.v.get(r, i))
                .sum();
            q.push(du * dv);
            sigma_dev.push((reference.sigma[i] - approx.sigma[i]).abs());
        }
        Ok(TripletQuality { q, sigma_dev })
    }

    pub fn min_q(&self) -> f64 {
        self.q.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_sigma_dev(&self) -> f64 {
        self.sigma_dev.iter().copied().fold(0.0, f64::max)
    }
}
