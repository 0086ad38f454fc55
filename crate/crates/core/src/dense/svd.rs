//! Economy SVD by QR preconditioning followed by one-sided (Hestenes) Jacobi.
//!
//! For an `m x n` input with `m >= n` the matrix is first reduced to its
//! `n x n` triangular factor, so Jacobi sweeps cost `O(n^3)` regardless of
//! the row count. Wide inputs are handled through the transpose.

use super::matrix::{dot, Matrix};
use super::qr::thin_qr;
use crate::error::{Error, Result};

/// Relative off-diagonal tolerance for the Jacobi sweeps.
pub const SVD_TOLERANCE: f64 = 1e-14;
/// Sweep cap before reporting non-convergence.
pub const SVD_MAX_SWEEPS: usize = 100;

/// Thin singular value decomposition `A = U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `m x p` with orthonormal columns, `p = min(m, n)`.
    pub u: Matrix,
    /// Non-increasing, non-negative.
    pub sigma: Vec<f64>,
    /// `n x p` with orthonormal columns.
    pub v: Matrix,
}

impl Svd {
    /// Rank-`r` truncation `U_r diag(sigma_r) V_r^T`.
    pub fn reconstruct(&self, r: usize) -> Matrix {
        let r = r.min(self.sigma.len());
        let mut us = self.u.first_columns(r);
        for i in 0..us.rows() {
            for (j, s) in self.sigma[..r].iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul_t(&self.v.first_columns(r))
    }
}

pub fn thin_svd(a: &Matrix) -> Result<Svd> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::shape(format!("svd of empty {m}x{n} matrix")));
    }
    if !a.is_finite() {
        return Err(Error::shape(format!("svd of non-finite {m}x{n} matrix")));
    }
    if m < n {
        let t = tall_svd(&a.transpose(), (m, n))?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    tall_svd(a, (m, n))
}

fn tall_svd(a: &Matrix, reported: (usize, usize)) -> Result<Svd> {
    let (m, n) = a.shape();
    let (q, r) = thin_qr(a)?;
    let (w, v_cols, sigma, order) = jacobi(&r, reported)?;

    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let floor = sigma_max * (n as f64) * f64::EPSILON;
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut spare = 0usize;
    for (pos, &j) in order.iter().enumerate() {
        let s = sigma[pos];
        let mut u = if s > floor {
            w[j].iter().map(|x| x / s).collect()
        } else {
            unit(n, spare)
        };
        // Completes the basis for (numerically) zero singular values.
        loop {
            if orthonormalize(&mut u, &u_cols) {
                break;
            }
            spare += 1;
            u = unit(n, spare % n);
            if spare > 2 * n {
                return Err(Error::SvdNoConvergence {
                    rows: reported.0,
                    cols: reported.1,
                    sweeps: SVD_MAX_SWEEPS,
                });
            }
        }
        if s <= floor {
            spare += 1;
        }
        u_cols.push(u);
    }

    let mut u_r = Matrix::zeros(n, n);
    let mut v = Matrix::zeros(n, n);
    for (pos, &j) in order.iter().enumerate() {
        u_r.set_column(pos, &u_cols[pos]);
        v.set_column(pos, &v_cols[j]);
    }
    debug_assert_eq!(q.shape(), (m, n));
    Ok(Svd {
        u: q.matmul(&u_r),
        sigma,
        v,
    })
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k % n] = 1.0;
    e
}

/// Two passes of modified Gram-Schmidt. Returns false when `u` is
/// (nearly) dependent on `basis`.
fn orthonormalize(u: &mut [f64], basis: &[Vec<f64>]) -> bool {
    let start = dot(u, u).sqrt();
    if start == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for b in basis {
            let c = dot(u, b);
            for (ui, bi) in u.iter_mut().zip(b) {
                *ui -= c * bi;
            }
        }
    }
    let norm = dot(u, u).sqrt();
    if norm < 0.5 * start {
        return false;
    }
    u.iter_mut().for_each(|x| *x /= norm);
    true
}

type JacobiOut = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>, Vec<usize>);

/// One-sided Jacobi on the columns of a square matrix. Returns the rotated
/// columns, accumulated right rotations, sorted singular values and the
/// column order that sorts them.
fn jacobi(r: &Matrix, reported: (usize, usize)) -> Result<JacobiOut> {
    let n = r.cols();
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| r.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|j| unit(n, j)).collect();
    let tol = SVD_TOLERANCE.max(n as f64 * f64::EPSILON);
    let scale = r.frobenius_norm();
    let negligible = (f64::EPSILON * scale).powi(2);

    let mut converged = n < 2;
    let mut norms = vec![0.0; n];
    for _sweep in 0..SVD_MAX_SWEEPS {
        if converged {
            break;
        }
        for (nj, col) in norms.iter_mut().zip(&w) {
            *nj = dot(col, col);
        }
        let mut rotated = false;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let alpha = norms[i];
                let beta = norms[j];
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = dot(&w[i], &w[j]);
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, i, j, c, s);
                rotate(&mut v, i, j, c, s);
                norms[i] = alpha - t * gamma;
                norms[j] = beta + t * gamma;
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::SvdNoConvergence {
            rows: reported.0,
            cols: reported.1,
            sweeps: SVD_MAX_SWEEPS,
        });
    }

    let raw: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]).then(a.cmp(&b)));
    let sigma = order.iter().map(|&j| raw[j]).collect();
    Ok((w, v, sigma, order))
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    let a = &mut lo[i];
    let b = &mut hi[0];
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let xi = *x;
        let yj = *y;
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}
