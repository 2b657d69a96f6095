//! Symmetric tridiagonal eigensolver (implicit-shift QL).

use crate::error::{Error, Result};
use crate::linops::DenseMatrix;

/// Symmetric tridiagonal matrix stored as its diagonal and first
/// super-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidArgument("empty tridiagonal matrix".into()));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::shape(
                "tridiagonal off-diagonal length",
                diag.len() - 1,
                offdiag.len(),
            ));
        }
        if !diag.iter().chain(&offdiag).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("tridiagonal entries"));
        }
        Ok(SymTridiag { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut t = DenseMatrix::zeros(n, n);
        for i in 0..n {
            t.set(i, i, self.diag[i]);
        }
        for (i, &e) in self.offdiag.iter().enumerate() {
            t.set(i, i + 1, e);
            t.set(i + 1, i, e);
        }
        t
    }

    /// `T x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.offdiag[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.offdiag[i] * x[i + 1];
                }
                y
            })
            .collect()
    }
}

/// Eigenvalues in descending order with matching eigenvectors.
#[derive(Debug, Clone)]
pub struct TridiagEigen {
    pub values: Vec<f64>,
    /// `vectors[i]` is the unit eigenvector for `values[i]`.
    pub vectors: Vec<Vec<f64>>,
}

impl TridiagEigen {
    /// Eigenvectors as the columns of a square matrix.
    pub fn vector_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_columns(self.values.len(), &self.vectors)
    }

    /// Whether some eigenvalue is negative beyond rounding, i.e. the input
    /// cannot have been a Gram matrix.
    pub fn is_indefinite(&self) -> bool {
        let scale = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        self.values.iter().any(|&v| v < -1e-12 * scale)
    }
}

pub fn symtridiag_eig(t: &SymTridiag) -> Result<TridiagEigen> {
    let (values, vectors) = tql(t, true)?;
    Ok(TridiagEigen { values, vectors })
}

/// Eigenvalues only, descending. Skips the O(n^3) vector accumulation.
pub fn symtridiag_eigenvalues(t: &SymTridiag) -> Result<Vec<f64>> {
    Ok(tql(t, false)?.0)
}

fn tql(t: &SymTridiag, want_vectors: bool) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = t.dim();
    let mut d = t.diag.clone();
    let mut e = t.offdiag.clone();
    e.push(0.0);
    let mut z: Vec<Vec<f64>> = if want_vectors {
        (0..n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                v
            })
            .collect()
    } else {
        Vec::new()
    };
    // z[i] holds column i of the accumulated rotation, so each Givens update
    // touches two contiguous rows.

    let eps = f64::EPSILON;
    let max_iter = 60 * n.max(1);
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::Numerical(format!(
                        "tridiagonal QL did not converge for eigenvalue {l}"
                    )));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        let (lo, hi) = z.split_at_mut(i + 1);
                        let (zi, zi1) = (&mut lo[i], &mut hi[0]);
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let h = *b;
                            *b = s * *a + c * h;
                            *a = c * *a - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = if want_vectors {
        order.iter().map(|&i| std::mem::take(&mut z[i])).collect()
    } else {
        Vec::new()
    };
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::orthonormality_error;
    use nalgebra::SymmetricEigen;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn diagonal_input() {
        let t = SymTridiag::new(vec![2.0, 2.0], vec![0.0]).unwrap();
        let eig = symtridiag_eig(&t).unwrap();
        assert_eq!(eig.values, vec![2.0, 2.0]);
        assert!(!eig.is_indefinite());
    }

    #[test]
    fn non_gram_input_is_flagged() {
        let t = SymTridiag::new(vec![0.0, 0.0], vec![1.0]).unwrap();
        let eig = symtridiag_eig(&t).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-15);
        assert!((eig.values[1] + 1.0).abs() < 1e-15);
        assert!(eig.is_indefinite());
    }

    #[test]
    fn one_by_one() {
        let t = SymTridiag::new(vec![13.0], vec![]).unwrap();
        let eig = symtridiag_eig(&t).unwrap();
        assert_eq!(eig.values, vec![13.0]);
        assert_eq!(eig.vectors, vec![vec![1.0]]);
    }

    #[test]
    fn malformed_input() {
        assert!(SymTridiag::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(SymTridiag::new(vec![], vec![]).is_err());
        assert!(SymTridiag::new(vec![f64::NAN], vec![]).is_err());
    }

    #[test]
    fn matches_dense_symmetric_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 5, 30, 80] {
            let diag: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            let off: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-3.0..3.0)).collect();
            let t = SymTridiag::new(diag, off).unwrap();
            let eig = symtridiag_eig(&t).unwrap();

            let mut oracle: Vec<f64> = SymmetricEigen::new(t.to_dense().to_nalgebra())
                .eigenvalues
                .iter()
                .copied()
                .collect();
            oracle.sort_by(|a, b| b.total_cmp(a));
            let scale = oracle.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for (a, b) in eig.values.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
            }
            for (theta, g) in eig.values.iter().zip(&eig.vectors) {
                let tg = t.apply(g);
                let res: f64 = tg
                    .iter()
                    .zip(g)
                    .map(|(x, y)| (x - theta * y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-12 * scale, "residual {res}");
            }
            assert!(orthonormality_error(&eig.vector_matrix()) <= 1e-12);
            let vals_only = symtridiag_eigenvalues(&t).unwrap();
            for (a, b) in vals_only.iter().zip(&eig.values) {
                assert!((a - b).abs() <= 1e-13 * scale);
            }
        }
    }
}
