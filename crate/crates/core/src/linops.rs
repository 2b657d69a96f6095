//! Dense row-major storage, matrix-vector products, seeded test matrices and
//! the small-scale dense SVD used as a reference.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fsvd::PartialSvd;
use crate::seed::{fill_normal, Seed, Stream};

pub type Vector = Vec<f64>;

/// Largest `min(rows, cols)` accepted by [`dense_svd_oracle`].
pub const ORACLE_CAP: usize = 1024;

/// Something that can be applied to a vector and, transposed, to another.
///
/// Krylov code only ever touches the matrix through this trait.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`, with `x.len() == ncols` and `y.len() == nrows`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `y = A^T x`, with `x.len() == nrows` and `y.len() == ncols`.
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_transpose(x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "matrix data length",
                rows * cols,
                data.len(),
            ));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// `rows x cols` matrix with `diag` on the main diagonal.
    pub fn diag(rows: usize, cols: usize, diag: &[f64]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, &d) in diag.iter().enumerate().take(rows.min(cols)) {
            m.data[i * cols + i] = d;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::shape("row length", c, row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(DenseMatrix {
            rows: r,
            cols: c,
            data,
        })
    }

    /// Matrix whose columns are the given vectors (all of length `rows`).
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length");
            for (i, &x) in col.iter().enumerate() {
                m.data[i * cols + j] = x;
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[f64]) {
        assert_eq!(col.len(), self.rows);
        for (i, &x) in col.iter().enumerate() {
            self.data[i * self.cols + j] = x;
        }
    }

    /// The first `k` columns.
    pub fn leading_columns(&self, k: usize) -> DenseMatrix {
        let k = k.min(self.cols);
        DenseMatrix::from_fn(self.rows, k, |i, j| self.get(i, j))
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn scale_in_place(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: f64, other: &DenseMatrix) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }

    /// Scales column `j` by `s[j]`.
    pub fn scale_columns(&self, s: &[f64]) -> DenseMatrix {
        assert_eq!(s.len(), self.cols);
        DenseMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * s[j])
    }

    fn check_same_shape(&self, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                "matrix shapes",
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(())
    }

    /// `self * other`. Output rows are computed independently, each with a
    /// fixed summation order, so the result does not depend on threading.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "matmul inner dimension",
                format!("{}x{} * {}x_", self.rows, self.cols, self.cols),
                format!("{}x{} * {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let (n, p) = (self.cols, other.cols);
        let mut out = DenseMatrix::zeros(self.rows, p);
        let row_kernel = |i: usize, out_row: &mut [f64]| {
            let a_row = &self.data[i * n..(i + 1) * n];
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * p..(k + 1) * p];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        };
        if p == 0 {
            return Ok(out);
        }
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if self.rows * n * p > 1 << 16 {
                out.data
                    .par_chunks_mut(p)
                    .enumerate()
                    .for_each(|(i, row)| row_kernel(i, row));
                return Ok(out);
            }
        }
        out.data
            .chunks_mut(p)
            .enumerate()
            .for_each(|(i, row)| row_kernel(i, row));
        Ok(out)
    }

    /// `self^T * other` without forming the transpose.
    pub fn tr_matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::shape(
                "tr_matmul shared dimension",
                self.rows,
                other.rows,
            ));
        }
        self.transpose().matmul(other)
    }

    /// `self * other^T`.
    pub fn matmul_tr(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.matmul(&other.transpose())
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> DenseMatrix {
        DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (yi, row) in y.iter_mut().zip(self.data.chunks_exact(self.cols.max(1))) {
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *yi = acc;
        }
        if self.cols == 0 {
            y.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        y.iter_mut().for_each(|v| *v = 0.0);
        if self.cols == 0 {
            return;
        }
        for (&xi, row) in x.iter().zip(self.data.chunks_exact(self.cols)) {
            for (yj, a) in y.iter_mut().zip(row) {
                *yj += xi * a;
            }
        }
    }
}

/// Row-parallel view of a dense matrix. The transposed product reduces
/// per-chunk partial sums, so its rounding differs from the sequential path.
#[cfg(feature = "parallel")]
#[derive(Debug, Clone, Copy)]
pub struct ParallelDense<'a>(pub &'a DenseMatrix);

#[cfg(feature = "parallel")]
impl LinearOperator for ParallelDense<'_> {
    fn nrows(&self) -> usize {
        self.0.rows
    }

    fn ncols(&self) -> usize {
        self.0.cols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        use rayon::prelude::*;
        let a = self.0;
        if a.cols == 0 {
            y.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        y.par_iter_mut()
            .zip(a.data.par_chunks_exact(a.cols))
            .for_each(|(yi, row)| *yi = row.iter().zip(x).map(|(a, b)| a * b).sum());
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        use rayon::prelude::*;
        let a = self.0;
        let n = a.cols;
        if n == 0 {
            return;
        }
        const CHUNK: usize = 64;
        let partial = a
            .data
            .par_chunks(CHUNK * n)
            .zip(x.par_chunks(CHUNK))
            .map(|(block, xs)| {
                let mut acc = vec![0.0; n];
                for (&xi, row) in xs.iter().zip(block.chunks_exact(n)) {
                    for (s, v) in acc.iter_mut().zip(row) {
                        *s += xi * v;
                    }
                }
                acc
            })
            .reduce(
                || vec![0.0; n],
                |mut l, r| {
                    l.iter_mut().zip(&r).for_each(|(a, b)| *a += b);
                    l
                },
            );
        y.copy_from_slice(&partial);
    }
}

/// `A x` with a fixed left-to-right summation order per row.
pub fn matvec(a: &DenseMatrix, x: &[f64]) -> Result<Vector> {
    if x.len() != a.cols {
        return Err(Error::shape(
            "matvec operand",
            format!("A {}x{} needs x of length {}", a.rows, a.cols, a.cols),
            format!("x of length {}", x.len()),
        ));
    }
    let mut y = vec![0.0; a.rows];
    a.apply(x, &mut y);
    Ok(y)
}

/// `A^T y` without materializing the transpose.
pub fn rmatvec(a: &DenseMatrix, y: &[f64]) -> Result<Vector> {
    if y.len() != a.rows {
        return Err(Error::shape(
            "rmatvec operand",
            format!("A {}x{} needs y of length {}", a.rows, a.cols, a.rows),
            format!("y of length {}", y.len()),
        ));
    }
    let mut x = vec![0.0; a.cols];
    a.apply_transpose(y, &mut x);
    Ok(x)
}

/// i.i.d. `N(mean, std^2)` entries, drawn row-major from the seed's
/// Gaussian stream.
pub fn gaussian_matrix(m: usize, n: usize, mean: f64, std: f64, seed: Seed) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "gaussian matrix needs positive dimensions, got {m}x{n}"
        )));
    }
    if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gaussian matrix needs finite mean and std > 0, got mean={mean} std={std}"
        )));
    }
    let mut rng = seed.rng(Stream::Gaussian);
    let mut data = vec![0.0; m * n];
    fill_normal(&mut rng, &mut data, mean, std);
    Ok(DenseMatrix { rows: m, cols: n, data })
}

/// `M N` with `M` (m x l) and `N` (l x n) standard Gaussian.
pub fn low_rank_synth(m: usize, n: usize, l: usize, seed: Seed) -> Result<DenseMatrix> {
    if l == 0 || l > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "rank {l} must lie in 1..={} for a {m}x{n} matrix",
            m.min(n)
        )));
    }
    let mut left = DenseMatrix::zeros(m, l);
    fill_normal(&mut seed.rng(Stream::FactorLeft), &mut left.data, 0.0, 1.0);
    let mut right = DenseMatrix::zeros(l, n);
    fill_normal(&mut seed.rng(Stream::FactorRight), &mut right.data, 0.0, 1.0);
    left.matmul(&right)
}

/// Full thin SVD through nalgebra's bidiagonal QR, sorted descending with
/// the same sign convention as [`crate::fsvd`]. Test and benchmark scale only.
pub fn dense_svd_oracle(a: &DenseMatrix) -> Result<PartialSvd> {
    let (m, n) = a.shape();
    if m.min(n) > ORACLE_CAP {
        return Err(Error::TooLarge {
            rows: m,
            cols: n,
            cap: ORACLE_CAP,
        });
    }
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("dense_svd_oracle input"));
    }
    let svd = a
        .to_nalgebra()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("dense SVD did not converge".into()))?;
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;
    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let sigma: Vec<f64> = order.iter().map(|&i| s[i]).collect();
    let u_sorted = DenseMatrix::from_fn(m, k, |i, j| u[(i, order[j])]);
    let v_sorted = DenseMatrix::from_fn(n, k, |i, j| vt[(order[j], i)]);
    let mut out = PartialSvd::new(u_sorted, sigma, v_sorted)?;
    out.normalize_signs();
    Ok(out)
}
