//! Dense linear algebra and random sampling primitives.

mod matrix;
mod qr;
mod rng;
mod svd;

pub use matrix::{axpy, dot, gemm, norm2, Matrix, Op};
pub use qr::{r_factor_from_columns, thin_qr};
pub use rng::{gaussian, Rng};
pub use svd::{thin_svd, Svd, SVD_MAX_SWEEPS, SVD_TOLERANCE};
