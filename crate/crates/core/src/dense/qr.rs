//! Householder thin QR with the non-negative diagonal convention.
//!
//! With `diag(R) >= 0` the thin factorization of a full-column-rank matrix is
//! unique, and `R[k][k]` is the distance from column `k` to the span of the
//! columns before it.

use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};

struct Reflector {
    /// Householder vector for rows `k..m`, `v[0] == 1`.
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    fn apply(&self, k: usize, col: &mut [f64]) {
        if self.beta == 0.0 {
            return;
        }
        let tail = &mut col[k..];
        let s = self.beta * dot(&self.v, tail);
        for (t, vi) in tail.iter_mut().zip(&self.v) {
            *t -= s * vi;
        }
    }
}

/// Factorizes column-major data in place. Returns the reflectors and the
/// upper triangle (signs not yet normalized).
fn householder(cols: &mut [Vec<f64>], m: usize) -> (Vec<Reflector>, Matrix) {
    let n = cols.len();
    let mut reflectors = Vec::with_capacity(n);
    let mut r = Matrix::zeros(n, n);
    for k in 0..n {
        let (head, rest) = cols.split_at_mut(k + 1);
        let x = &mut head[k];
        let alpha = x[k];
        let sigma: f64 = x[k + 1..].iter().map(|v| v * v).sum();
        let norm = (alpha * alpha + sigma).sqrt();
        let refl = if norm == 0.0 || (sigma == 0.0 && alpha >= 0.0) {
            // Already in triangular form.
            Reflector {
                v: Vec::new(),
                beta: 0.0,
            }
        } else {
            let diag = if alpha > 0.0 { -norm } else { norm };
            let v0 = alpha - diag;
            let mut v = Vec::with_capacity(m - k);
            v.push(1.0);
            v.extend(x[k + 1..].iter().map(|xi| xi / v0));
            let beta = -v0 / diag;
            Reflector { v, beta }
        };
        refl.apply(k, x);
        for col in rest.iter_mut() {
            refl.apply(k, col);
        }
        for i in 0..=k {
            r[(i, k)] = head[k][i];
        }
        reflectors.push(refl);
    }
    (reflectors, r)
}

fn to_columns(a: &Matrix) -> Vec<Vec<f64>> {
    (0..a.cols()).map(|j| a.column(j)).collect()
}

fn check_tall(rows: usize, cols: usize) -> Result<()> {
    if rows < cols {
        return Err(Error::shape(format!(
            "thin QR needs rows >= cols, got {rows}x{cols}"
        )));
    }
    Ok(())
}

/// Thin QR `A = Q R` with `Q` (m x n) orthonormal columns and `R` (n x n)
/// upper triangular with a non-negative diagonal.
///
/// Rank deficiency shows up as zero diagonal entries in `R`.
pub fn thin_qr(a: &Matrix) -> Result<(Matrix, Matrix)> {
    let (m, n) = a.shape();
    check_tall(m, n)?;
    let mut cols = to_columns(a);
    let (reflectors, mut r) = householder(&mut cols, m);

    // Q = H_0 ... H_{n-1} [I; 0]
    let mut q_cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            for (k, refl) in reflectors.iter().enumerate().rev() {
                refl.apply(k, &mut e);
            }
            e
        })
        .collect();

    for k in 0..n {
        if r[(k, k)] < 0.0 {
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
            q_cols[k].iter_mut().for_each(|v| *v = -*v);
        }
    }
    let mut q = Matrix::zeros(m, n);
    for (j, c) in q_cols.iter().enumerate() {
        q.set_column(j, c);
    }
    Ok((q, r))
}

/// Only the `R` factor of a thin QR, from column-major data. Avoids forming
/// `Q` for very tall matrices.
pub fn r_factor_from_columns(mut cols: Vec<Vec<f64>>) -> Result<Matrix> {
    let n = cols.len();
    let m = cols.first().map_or(0, Vec::len);
    if cols.iter().any(|c| c.len() != m) {
        return Err(Error::shape("columns have unequal lengths"));
    }
    check_tall(m, n)?;
    let (_, mut r) = householder(&mut cols, m);
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
        }
    }
    Ok(r)
}
