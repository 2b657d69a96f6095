//! Fixed-rank matrix manifold: factored points `U diag(S) V^T`, tangent
//! vectors `U M V^T + Up V^T + U Vp^T`, projection of ambient gradients,
//! truncated-SVD retraction and the RSGD step built from them.

use serde::{Deserialize, Serialize};

use crate::bidiag::{reorthogonalize, BidiagConfig};
use crate::error::{Error, Result};
use crate::fsvd::{fsvd, PartialSvd};
use crate::linops::{dense_svd_oracle, DenseMatrix, LinearOperator};
use crate::seed::{normal_vec, Seed, Stream};

/// Ambient matrices up to this many entries are formed explicitly before
/// retraction; larger ones go through [`FactoredOperator`].
pub const DENSE_AMBIENT_LIMIT: usize = 10_000_000;

/// Relative size given to singular values invented when a retraction loses
/// rank.
pub const PAD_SIGMA_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedRankPoint {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl FixedRankPoint {
    pub fn new(u: DenseMatrix, s: Vec<f64>, v: DenseMatrix) -> Result<Self> {
        if u.cols() != s.len() || v.cols() != s.len() || s.is_empty() {
            return Err(Error::shape(
                "fixed-rank factors",
                format!("U and V with {} > 0 columns", s.len()),
                format!("U {}x{}, V {}x{}", u.rows(), u.cols(), v.rows(), v.cols()),
            ));
        }
        if !s.iter().all(|&x| x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidArgument(
                "singular values of a fixed-rank point must be positive".into(),
            ));
        }
        Ok(FixedRankPoint { u, s, v })
    }

    pub fn from_svd(svd: PartialSvd) -> Result<Self> {
        Self::new(svd.u, svd.sigma, svd.v)
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `(d1, d2)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.u.rows(), self.v.rows())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.u
            .scale_columns(&self.s)
            .matmul_tr(&self.v)
            .expect("factor shapes checked on construction")
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.s.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// The same subspaces with `S` multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> FixedRankPoint {
        FixedRankPoint {
            u: self.u.clone(),
            s: self.s.iter().map(|x| x * c).collect(),
            v: self.v.clone(),
        }
    }

    pub fn sigma_min(&self) -> f64 {
        self.s.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sigma_max(&self) -> f64 {
        self.s.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub m: DenseMatrix,
    pub up: DenseMatrix,
    pub vp: DenseMatrix,
}

impl TangentVector {
    pub fn zeros(base: &FixedRankPoint) -> Self {
        let (d1, d2) = base.dims();
        let r = base.rank();
        TangentVector {
            m: DenseMatrix::zeros(r, r),
            up: DenseMatrix::zeros(d1, r),
            vp: DenseMatrix::zeros(d2, r),
        }
    }

    /// `U M V^T + Up V^T + U Vp^T` as a dense `d1 x d2` matrix.
    pub fn embed(&self, base: &FixedRankPoint) -> DenseMatrix {
        let left = base.u.matmul(&self.m).expect("tangent shapes").add(&self.up);
        let mut out = left.matmul_tr(&base.v).expect("tangent shapes");
        out.add_scaled(1.0, &base.u.matmul_tr(&self.vp).expect("tangent shapes"))
            .expect("tangent shapes");
        out
    }

    pub fn scaled(&self, c: f64) -> TangentVector {
        TangentVector {
            m: self.m.scaled(c),
            up: self.up.scaled(c),
            vp: self.vp.scaled(c),
        }
    }

    /// Frobenius norm of the embedded matrix, from the factors alone.
    pub fn norm(&self) -> f64 {
        let sq = |a: &DenseMatrix| a.frobenius_norm().powi(2);
        (sq(&self.m) + sq(&self.up) + sq(&self.vp)).sqrt()
    }
}

trait AddExt {
    fn add(self, other: &DenseMatrix) -> DenseMatrix;
}

impl AddExt for DenseMatrix {
    fn add(mut self, other: &DenseMatrix) -> DenseMatrix {
        self.add_scaled(1.0, other).expect("same shape");
        self
    }
}

/// Orthogonal projection of an ambient matrix onto the tangent space at `w`:
/// `M = U^T G V`, `Up = G V - U M`, `Vp = G^T U - V M^T`.
pub fn project_tangent(w: &FixedRankPoint, g: &DenseMatrix) -> Result<TangentVector> {
    let (d1, d2) = w.dims();
    if g.shape() != (d1, d2) {
        return Err(Error::shape(
            "gradient shape",
            format!("{d1}x{d2}"),
            format!("{}x{}", g.rows(), g.cols()),
        ));
    }
    let gv = g.matmul(&w.v)?;
    let gtu = g.tr_matmul(&w.u)?;
    let m = w.u.tr_matmul(&gv)?;
    let mut up = gv;
    up.add_scaled(-1.0, &w.u.matmul(&m)?)?;
    let mut vp = gtu;
    vp.add_scaled(-1.0, &w.v.matmul_tr(&m)?)?;
    Ok(TangentVector { m, up, vp })
}

/// `L C R^T` applied without forming the product.
#[derive(Debug, Clone)]
pub struct FactoredOperator {
    pub left: DenseMatrix,
    pub core: DenseMatrix,
    pub right: DenseMatrix,
}

impl FactoredOperator {
    /// `W + step * xi` as a rank `<= 2r` factorization
    /// `[U Up] [[S + step M, step I], [step I, 0]] [V Vp]^T`.
    pub fn retraction_argument(w: &FixedRankPoint, xi: &TangentVector, step: f64) -> Self {
        let (d1, d2) = w.dims();
        let r = w.rank();
        let left = DenseMatrix::from_fn(d1, 2 * r, |i, j| {
            if j < r {
                w.u.get(i, j)
            } else {
                xi.up.get(i, j - r)
            }
        });
        let right = DenseMatrix::from_fn(d2, 2 * r, |i, j| {
            if j < r {
                w.v.get(i, j)
            } else {
                xi.vp.get(i, j - r)
            }
        });
        let core = DenseMatrix::from_fn(2 * r, 2 * r, |i, j| match (i < r, j < r) {
            (true, true) => step * xi.m.get(i, j) + if i == j { w.s[i] } else { 0.0 },
            (true, false) if j - r == i => step,
            (false, true) if i - r == j => step,
            _ => 0.0,
        });
        FactoredOperator { left, core, right }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.left
            .matmul(&self.core)
            .and_then(|lc| lc.matmul_tr(&self.right))
            .expect("factor shapes")
    }
}

impl LinearOperator for FactoredOperator {
    fn nrows(&self) -> usize {
        self.left.rows()
    }

    fn ncols(&self) -> usize {
        self.right.rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut a = vec![0.0; self.right.cols()];
        self.right.apply_transpose(x, &mut a);
        let mut b = vec![0.0; self.core.rows()];
        self.core.apply(&a, &mut b);
        self.left.apply(&b, y);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        let mut a = vec![0.0; self.left.cols()];
        self.left.apply_transpose(x, &mut a);
        let mut b = vec![0.0; self.core.cols()];
        self.core.apply_transpose(&a, &mut b);
        self.right.apply(&b, y);
    }
}

/// Which SVD computes retractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SvdBackend {
    /// Krylov partial SVD with `inner_k` bidiagonalization steps.
    Fsvd { inner_k: usize },
    /// Full dense SVD (reference).
    Dense,
}

impl std::fmt::Display for SvdBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SvdBackend::Fsvd { inner_k } => write!(f, "fsvd:{inner_k}"),
            SvdBackend::Dense => write!(f, "dense"),
        }
    }
}

impl std::str::FromStr for SvdBackend {
    type Err = Error;

    /// `dense`, or `fsvd:<inner_k>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "dense" {
            return Ok(SvdBackend::Dense);
        }
        if let Some(k) = s.strip_prefix("fsvd:") {
            let inner_k = k
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad inner_k in '{s}'")))?;
            return Ok(SvdBackend::Fsvd { inner_k });
        }
        Err(Error::InvalidArgument(format!(
            "unknown SVD backend '{s}' (expected dense or fsvd:<k>)"
        )))
    }
}

#[derive(Debug, Clone)]
pub struct Retraction {
    pub point: FixedRankPoint,
    /// Directions invented because fewer than `r` usable triplets survived.
    pub padded: usize,
}

/// Rank-`r` truncated SVD of an ambient operator, padded back to rank `r`
/// if it collapses.
pub fn truncate_to_rank<A: LinearOperator + ?Sized>(
    x: &A,
    dense: Option<&DenseMatrix>,
    r: usize,
    backend: SvdBackend,
    seed: Seed,
) -> Result<Retraction> {
    let (d1, d2) = (x.nrows(), x.ncols());
    if r == 0 || r > d1.min(d2) {
        return Err(Error::InvalidArgument(format!(
            "rank {r} out of range for a {d1}x{d2} matrix"
        )));
    }
    let svd = match backend {
        SvdBackend::Fsvd { inner_k } => {
            if inner_k < r {
                return Err(Error::InvalidArgument(format!(
                    "inner_k = {inner_k} must be at least the rank {r}"
                )));
            }
            let k = inner_k.min(d1.min(d2));
            let cfg = BidiagConfig::new(k).with_seed(seed);
            fsvd(x, k, r, &cfg)?.svd
        }
        SvdBackend::Dense => {
            let owned;
            let m = match dense {
                Some(m) => m,
                None => {
                    owned = materialize(x);
                    &owned
                }
            };
            dense_svd_oracle(m)?.truncate(r)
        }
    };
    let sigma1 = svd.sigma.first().copied().unwrap_or(0.0);
    if !(sigma1 > 0.0) {
        return Err(Error::Numerical(
            "retraction argument is zero; rank-r point undefined".into(),
        ));
    }
    let keep = svd
        .sigma
        .iter()
        .take_while(|&&s| s > 1e-14 * sigma1)
        .count();
    let svd = svd.truncate(keep);
    let padded = r - keep;
    let point = if padded == 0 {
        FixedRankPoint::from_svd(svd)?
    } else {
        pad(svd, r, seed)?
    };
    Ok(Retraction { point, padded })
}

fn materialize<A: LinearOperator + ?Sized>(x: &A) -> DenseMatrix {
    let (m, n) = (x.nrows(), x.ncols());
    let mut cols = Vec::with_capacity(n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let mut c = vec![0.0; m];
        x.apply(&e, &mut c);
        cols.push(c);
        e[j] = 0.0;
    }
    DenseMatrix::from_columns(m, &cols)
}

fn pad(svd: PartialSvd, r: usize, seed: Seed) -> Result<FixedRankPoint> {
    let mut us = svd.u.columns();
    let mut vs = svd.v.columns();
    let mut sigma = svd.sigma.clone();
    let tiny = PAD_SIGMA_RATIO * sigma[0];
    let mut rng = seed.rng(Stream::Padding);
    while sigma.len() < r {
        for basis in [&mut us, &mut vs] {
            let len = basis[0].len();
            let mut w = normal_vec(&mut rng, len, 0.0, 1.0);
            reorthogonalize(&mut w, basis, 2);
            let nrm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(nrm > 0.0) {
                return Err(Error::Numerical("could not pad collapsed retraction".into()));
            }
            w.iter_mut().for_each(|x| *x /= nrm);
            basis.push(w);
        }
        sigma.push(tiny);
    }
    let u = DenseMatrix::from_columns(svd.u.rows(), &us);
    let v = DenseMatrix::from_columns(svd.v.rows(), &vs);
    FixedRankPoint::new(u, sigma, v)
}

/// Truncated-SVD retraction of `w + step * xi` through the Krylov SVD.
pub fn retract(
    w: &FixedRankPoint,
    xi: &TangentVector,
    step: f64,
    inner_k: usize,
) -> Result<Retraction> {
    retract_with(w, xi, step, SvdBackend::Fsvd { inner_k }, Seed(0))
}

pub fn retract_with(
    w: &FixedRankPoint,
    xi: &TangentVector,
    step: f64,
    backend: SvdBackend,
    seed: Seed,
) -> Result<Retraction> {
    let (d1, d2) = w.dims();
    let op = FactoredOperator::retraction_argument(w, xi, step);
    let r = w.rank();
    if d1 * d2 <= DENSE_AMBIENT_LIMIT || backend == SvdBackend::Dense {
        let x = op.to_dense();
        truncate_to_rank(&x, Some(&x), r, backend, seed)
    } else {
        truncate_to_rank(&op, None, r, backend, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsgdConfig {
    pub eta: f64,
    /// Coefficient of the `- lambda W` term added to the gradient.
    pub lambda: f64,
    pub rank: usize,
    pub inner_k: usize,
    pub steps: usize,
    pub batch: usize,
    /// Build the tangent projector from an SVD of the gradient instead of
    /// from the iterate's factors.
    pub gradient_projector: bool,
    pub seed: Seed,
}

impl RsgdConfig {
    pub fn new(rank: usize) -> Self {
        RsgdConfig {
            eta: 0.05,
            lambda: 0.0,
            rank,
            inner_k: 4 * rank,
            steps: 1000,
            batch: 32,
            gradient_projector: false,
            seed: Seed(0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta must be >= 0, got {}", self.eta)));
        }
        if self.rank == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        if self.inner_k < self.rank {
            return Err(Error::InvalidArgument(format!(
                "inner_k = {} must be at least rank = {}",
                self.inner_k, self.rank
            )));
        }
        if self.batch == 0 {
            return Err(Error::InvalidArgument("batch must be at least 1".into()));
        }
        Ok(())
    }
}

/// One Riemannian SGD step with the Krylov SVD (`inner_k` from `cfg`).
pub fn rsgd_step(w: &FixedRankPoint, g: &DenseMatrix, cfg: &RsgdConfig) -> Result<Retraction> {
    rsgd_step_with(
        w,
        g,
        cfg,
        SvdBackend::Fsvd {
            inner_k: cfg.inner_k,
        },
        cfg.seed,
    )
}

pub fn rsgd_step_with(
    w: &FixedRankPoint,
    g: &DenseMatrix,
    cfg: &RsgdConfig,
    backend: SvdBackend,
    seed: Seed,
) -> Result<Retraction> {
    let mut g = g.clone();
    if cfg.lambda != 0.0 {
        g.add_scaled(-cfg.lambda, &w.to_dense())?;
    }
    if !cfg.gradient_projector {
        let z = project_tangent(w, &g)?;
        return retract_with(w, &z, -cfg.eta, backend, seed);
    }

    // Projector taken from the gradient's own rank-r SVD.
    let (d1, d2) = w.dims();
    if g.shape() != (d1, d2) {
        return Err(Error::shape(
            "gradient shape",
            format!("{d1}x{d2}"),
            format!("{}x{}", g.rows(), g.cols()),
        ));
    }
    let mut x = w.to_dense();
    if g.max_abs() > 0.0 {
        let grad_svd = truncate_to_rank(&g, Some(&g), w.rank(), backend, seed.derive(1))?;
        let ur = &grad_svd.point.u;
        let vr = &grad_svd.point.v;
        // Pu G + G Pv - Pu G Pv
        let utg = ur.tr_matmul(&g)?;
        let pug = ur.matmul(&utg)?;
        let gpv = g.matmul(vr)?.matmul_tr(vr)?;
        let pugpv = ur.matmul(&utg.matmul(vr)?)?.matmul_tr(vr)?;
        let mut z = pug;
        z.add_scaled(1.0, &gpv)?;
        z.add_scaled(-1.0, &pugpv)?;
        x.add_scaled(-cfg.eta, &z)?;
    }
    truncate_to_rank(&x, Some(&x), w.rank(), backend, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::gaussian_matrix;
    use crate::metrics::{max_principal_angle, orthonormality_error};
    use crate::rsvd::orthonormal_basis;

    pub(crate) fn random_point(d1: usize, d2: usize, r: usize, seed: u64) -> FixedRankPoint {
        let u = orthonormal_basis(&gaussian_matrix(d1, r, 0.0, 1.0, Seed(seed)).unwrap());
        let v = orthonormal_basis(&gaussian_matrix(d2, r, 0.0, 1.0, Seed(seed + 1)).unwrap());
        let s = (0..r).map(|i| 3.0 + (r - i) as f64).collect();
        FixedRankPoint::new(u, s, v).unwrap()
    }

    fn random_tangent(w: &FixedRankPoint, seed: u64) -> TangentVector {
        let (d1, d2) = w.dims();
        let g = gaussian_matrix(d1, d2, 0.0, 1.0, Seed(seed)).unwrap();
        project_tangent(w, &g).unwrap()
    }

    fn max_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn projection_fixes_tangent_vectors() {
        let w = random_point(30, 20, 4, 1);
        let xi = random_tangent(&w, 5);
        assert!(w.u.tr_matmul(&xi.up).unwrap().max_abs() <= 1e-8);
        assert!(w.v.tr_matmul(&xi.vp).unwrap().max_abs() <= 1e-8);
        let again = project_tangent(&w, &xi.embed(&w)).unwrap();
        assert!(max_diff(&again.embed(&w), &xi.embed(&w)) <= 1e-12);
    }

    #[test]
    fn point_is_tangent_at_itself() {
        let w = random_point(30, 20, 4, 2);
        let t = project_tangent(&w, &w.to_dense()).unwrap();
        assert!(max_diff(&t.m, &DenseMatrix::diag(4, 4, &w.s)) <= 1e-12);
        assert!(t.up.max_abs() <= 1e-12);
        assert!(t.vp.max_abs() <= 1e-12);
    }

    #[test]
    fn projection_matches_dense_projectors() {
        let w = random_point(30, 20, 4, 3);
        let g = gaussian_matrix(30, 20, 0.0, 1.0, Seed(10)).unwrap();
        let t = project_tangent(&w, &g).unwrap();
        let pu = w.u.matmul_tr(&w.u).unwrap();
        let pv = w.v.matmul_tr(&w.v).unwrap();
        let pu_perp = DenseMatrix::identity(30).sub(&pu).unwrap();
        let pv_perp = DenseMatrix::identity(20).sub(&pv).unwrap();
        let term = |a: &DenseMatrix, b: &DenseMatrix| a.matmul(&g).unwrap().matmul(b).unwrap();
        let mut want = term(&pu, &pv);
        want.add_scaled(1.0, &term(&pu_perp, &pv)).unwrap();
        want.add_scaled(1.0, &term(&pu, &pv_perp)).unwrap();
        assert!(max_diff(&t.embed(&w), &want) <= 1e-12);
        assert!(t.embed(&w).frobenius_norm() <= g.frobenius_norm() + 1e-12);
        assert!((t.norm() - t.embed(&w).frobenius_norm()).abs() <= 1e-10);
    }

    #[test]
    fn projection_shape_error() {
        let w = random_point(10, 8, 2, 4);
        assert!(project_tangent(&w, &DenseMatrix::zeros(8, 10)).is_err());
    }

    #[test]
    fn factored_operator_matches_embedding() {
        let w = random_point(25, 18, 3, 6);
        let xi = random_tangent(&w, 7);
        let op = FactoredOperator::retraction_argument(&w, &xi, 0.3);
        let mut want = w.to_dense();
        want.add_scaled(0.3, &xi.embed(&w)).unwrap();
        assert!(max_diff(&op.to_dense(), &want) <= 1e-12);
        let dense = materialize(&op);
        assert!(max_diff(&dense, &want) <= 1e-12);
        let y: Vec<f64> = (0..25).map(|i| (i as f64).sin()).collect();
        let mut got = vec![0.0; 18];
        op.apply_transpose(&y, &mut got);
        let expect = crate::linops::rmatvec(&want, &y).unwrap();
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn retraction_at_zero_is_identity() {
        let w = random_point(40, 30, 5, 8);
        for step in [0.0, 1.0, -2.5] {
            let out = retract(&w, &TangentVector::zeros(&w), step, 20).unwrap();
            assert_eq!(out.padded, 0);
            for (a, b) in out.point.s.iter().zip(&w.s) {
                assert!((a - b).abs() <= 1e-10);
            }
            assert!(max_principal_angle(&out.point.u, &w.u).unwrap() <= 1e-10);
            assert!(max_principal_angle(&out.point.v, &w.v).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn retraction_along_own_direction() {
        let u = DenseMatrix::from_columns(4, &[vec![1.0, 0.0, 0.0, 0.0]]);
        let v = DenseMatrix::from_columns(3, &[vec![1.0, 0.0, 0.0]]);
        let w = FixedRankPoint::new(u, vec![2.0], v).unwrap();
        let mut xi = TangentVector::zeros(&w);
        xi.m.set(0, 0, 0.5);
        let out = retract(&w, &xi, 0.4, 1).unwrap();
        assert!((out.point.s[0] - 2.2).abs() <= 1e-10);
        assert!(max_diff(&out.point.u, &w.u) <= 1e-10);
        assert!(max_diff(&out.point.v, &w.v) <= 1e-10);
    }

    #[test]
    fn retraction_matches_dense_truncation() {
        let w = random_point(40, 30, 5, 9);
        let xi = random_tangent(&w, 11);
        let out = retract(&w, &xi, 0.1, 20).unwrap();
        let mut x = w.to_dense();
        x.add_scaled(0.1, &xi.embed(&w)).unwrap();
        let oracle = dense_svd_oracle(&x).unwrap().truncate(5);
        for (a, b) in out.point.s.iter().zip(&oracle.sigma) {
            assert!((a - b).abs() <= 1e-8 * b);
        }
        assert!(max_principal_angle(&out.point.u, &oracle.u).unwrap() <= 1e-6);
        assert!(max_principal_angle(&out.point.v, &oracle.v).unwrap() <= 1e-6);
        assert!(orthonormality_error(&out.point.u) <= 1e-8);
        // Dense backend agrees with the Krylov one.
        let d = retract_with(&w, &xi, 0.1, SvdBackend::Dense, Seed(0)).unwrap();
        assert!(max_diff(&d.point.to_dense(), &out.point.to_dense()) <= 1e-10);
    }

    #[test]
    fn factored_route_matches_dense_route() {
        let w = random_point(40, 30, 3, 12);
        let xi = random_tangent(&w, 13);
        let op = FactoredOperator::retraction_argument(&w, &xi, 0.2);
        let a = truncate_to_rank(&op, None, 3, SvdBackend::Fsvd { inner_k: 12 }, Seed(1)).unwrap();
        let b = retract_with(&w, &xi, 0.2, SvdBackend::Fsvd { inner_k: 12 }, Seed(1)).unwrap();
        assert!(max_diff(&a.point.to_dense(), &b.point.to_dense()) <= 1e-10);
    }

    #[test]
    fn retraction_is_second_order() {
        let w = random_point(30, 25, 3, 14);
        let xi = random_tangent(&w, 15);
        let xi = xi.scaled(1.0 / xi.norm());
        let ts = [1e-1, 1e-2, 1e-3, 1e-4];
        let errs: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let r = retract(&w, &xi, t, 12).unwrap();
                let mut lin = w.to_dense();
                lin.add_scaled(t, &xi.embed(&w)).unwrap();
                r.point.to_dense().sub(&lin).unwrap().frobenius_norm()
            })
            .collect();
        let slope = loglog_slope(&ts, &errs);
        assert!(slope >= 1.9, "slope {slope}, errors {errs:?}");
    }

    pub(crate) fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        let n = lx.len() as f64;
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        cov / var
    }

    #[test]
    fn collapse_is_padded() {
        // Rank-1 argument retracted to rank 2.
        let x = DenseMatrix::diag(6, 5, &[3.0]);
        let out = truncate_to_rank(&x, Some(&x), 2, SvdBackend::Fsvd { inner_k: 4 }, Seed(2)).unwrap();
        assert_eq!(out.padded, 1);
        assert!(orthonormality_error(&out.point.u) <= 1e-12);
        assert!((out.point.s[1] - 3.0 * PAD_SIGMA_RATIO).abs() < 1e-20);
        let zero = DenseMatrix::zeros(6, 5);
        assert!(truncate_to_rank(&zero, Some(&zero), 2, SvdBackend::Dense, Seed(2)).is_err());
        assert!(truncate_to_rank(&zero, Some(&zero), 2, SvdBackend::Fsvd { inner_k: 3 }, Seed(2)).is_err());
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let w = random_point(20, 15, 3, 16);
        let g = DenseMatrix::zeros(20, 15);
        for literal in [false, true] {
            let mut cfg = RsgdConfig::new(3);
            cfg.gradient_projector = literal;
            let out = rsgd_step(&w, &g, &cfg).unwrap();
            assert!(max_diff(&out.point.to_dense(), &w.to_dense()) <= 1e-10);
        }
    }

    #[test]
    fn descends_on_distance_to_target() {
        for seed in 0..20 {
            let target = random_point(20, 15, 3, 100 + seed);
            let w = random_point(20, 15, 3, 200 + seed);
            let t = target.to_dense();
            let dist = |p: &FixedRankPoint| p.to_dense().sub(&t).unwrap().frobenius_norm();
            // Gradient of 0.5 ||W - W*||^2 is W - W*.
            let g = w.to_dense().sub(&t).unwrap();
            let mut cfg = RsgdConfig::new(3);
            cfg.eta = 0.1;
            cfg.seed = Seed(seed);
            let next = rsgd_step(&w, &g, &cfg).unwrap();
            assert!(dist(&next.point) < dist(&w), "seed {seed}");
        }
    }

    #[test]
    fn literal_projector_differs_from_default() {
        let w = random_point(20, 15, 3, 30);
        let g = gaussian_matrix(20, 15, 0.0, 1.0, Seed(31)).unwrap();
        let mut cfg = RsgdConfig::new(3);
        cfg.eta = 0.1;
        let a = rsgd_step(&w, &g, &cfg).unwrap();
        cfg.gradient_projector = true;
        let b = rsgd_step(&w, &g, &cfg).unwrap();
        assert!(max_diff(&a.point.to_dense(), &b.point.to_dense()) > 1e-6);
    }

    #[test]
    fn backend_parsing() {
        assert_eq!("dense".parse::<SvdBackend>().unwrap(), SvdBackend::Dense);
        assert_eq!(
            "fsvd:20".parse::<SvdBackend>().unwrap(),
            SvdBackend::Fsvd { inner_k: 20 }
        );
        assert!("fsvd:x".parse::<SvdBackend>().is_err());
        assert_eq!(SvdBackend::Fsvd { inner_k: 7 }.to_string(), "fsvd:7");
    }
}
