//! Matrix-free partial SVD toolkit.
//!
//! The central pieces are Golub-Kahan bidiagonalization with full
//! reorthogonalization ([`bidiag`]), the truncated SVD built on top of it
//! ([`fsvd`]), and numerical rank determination from the same bidiagonal
//! factor ([`rank`]). A randomized SVD baseline ([`rsvd`]) and a fixed-rank
//! Riemannian SGD for bilinear similarity learning ([`manifold`], [`rsl`])
//! round out the crate.

pub mod bidiag;
pub mod error;
pub mod fsvd;
pub mod io;
pub mod linops;
pub mod manifold;
pub mod metrics;
pub mod rank;
pub mod rsl;
pub mod rsvd;
pub mod seed;
pub mod tridiag;

pub use bidiag::{bidiagonalize, BidiagConfig, BidiagState};
pub use error::{Error, Result};
pub use fsvd::{fsvd, gram_tridiag, FsvdOptions, FsvdOutput, PartialSvd};
pub use linops::{
    dense_svd_oracle, gaussian_matrix, low_rank_synth, matvec, rmatvec, DenseMatrix,
    LinearOperator,
};
pub use rank::{estimate_rank, RankMode, RankReport};
pub use rsvd::{rsvd, RsvdConfig};
pub use seed::Seed;
pub use tridiag::{symtridiag_eig, SymTridiag, TridiagEigen};
