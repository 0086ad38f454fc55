//! Linear reduction of nodal data: the snapshot matrix, its singular
//! spectrum, the frozen basis used by the fixed model, and the QR memory
//! diagnostic.

use serde::{Deserialize, Serialize};

use crate::datagen::{TrainingDataset, TrajectorySet};
use crate::dense::{norm2, r_factor_from_columns, thin_qr, thin_svd, Matrix, Svd};
use crate::error::{Error, Result};

/// Singular values of the data matrix and rank-`r` truncation errors for
/// `r = 1..=max_rank`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub singular_values: Vec<f64>,
    pub relative_values: Vec<f64>,
    /// `||D - D_r||_F`, index `r - 1`
    pub frob_errors: Vec<f64>,
    /// `max |D - D_r|`, index `r - 1`
    pub max_errors: Vec<f64>,
}

impl SpectrumReport {
    pub fn max_rank(&self) -> usize {
        self.frob_errors.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedBasis {
    pub n_red: usize,
    /// `n_full x n_red`, orthonormal columns
    pub v_red: Matrix,
    pub source_spectrum: SpectrumReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub r_diag: Vec<f64>,
    /// `R_kk / ||column k||`, zero for a zero column
    pub relative: Vec<f64>,
}

/// Stacks every chunk's observations as rows: row `l * chunk_len + k` is
/// chunk `l` at time `k`.
pub fn assemble_data_matrix(d: &TrainingDataset) -> Result<Matrix> {
    let (n_traj, n_full, len) = (d.n_traj(), d.n_full(), d.chunks.n_time());
    if n_traj == 0 || n_full == 0 || len == 0 {
        return Err(Error::config("empty dataset"));
    }
    let mut out = Matrix::zeros(n_traj * len, n_full);
    for l in 0..n_traj {
        for i in 0..n_full {
            for (k, v) in d.chunks.series(l, i).iter().enumerate() {
                out[(l * len + k, i)] = *v;
            }
        }
    }
    Ok(out)
}

fn spectrum_from_svd(d: &Matrix, svd: &Svd, max_rank: usize) -> SpectrumReport {
    let s1 = svd.sigma[0];
    let relative_values = svd
        .sigma
        .iter()
        .map(|s| if s1 > 0.0 { s / s1 } else { 0.0 })
        .collect();
    // E_r = E_{r-1} - sigma_r u_r v_r^T
    let mut err = d.clone();
    let m = d.rows();
    let mut frob_errors = Vec::with_capacity(max_rank);
    let mut max_errors = Vec::with_capacity(max_rank);
    for r in 0..max_rank {
        let s = svd.sigma[r];
        let v = svd.v.column(r);
        for i in 0..m {
            let a = s * svd.u[(i, r)];
            for (e, vj) in err.row_mut(i).iter_mut().zip(&v) {
                *e -= a * vj;
            }
        }
        frob_errors.push(err.frobenius_norm());
        max_errors.push(err.max_abs());
    }
    SpectrumReport {
        singular_values: svd.sigma.clone(),
        relative_values,
        frob_errors,
        max_errors,
    }
}

fn check_rank(d: &Matrix, r: usize, what: &str) -> Result<()> {
    let p = d.rows().min(d.cols());
    if r > p {
        return Err(Error::config(format!(
            "{what} {r} exceeds min(rows, cols) = {p} of the {}x{} data matrix",
            d.rows(),
            d.cols()
        )));
    }
    Ok(())
}

pub fn analyze_spectrum(d: &Matrix, max_rank: usize) -> Result<SpectrumReport> {
    check_rank(d, max_rank, "max_rank")?;
    let svd = thin_svd(d)?;
    Ok(spectrum_from_svd(d, &svd, max_rank))
}

/// Leading `n_red` right singular vectors of `d`, each flipped so its
/// largest-magnitude entry is positive.
pub fn fixed_basis(d: &Matrix, n_red: usize) -> Result<ReducedBasis> {
    fixed_basis_with_report(d, n_red, n_red)
}

/// As [`fixed_basis`], with truncation errors reported up to `max_rank`.
pub fn fixed_basis_with_report(d: &Matrix, n_red: usize, max_rank: usize) -> Result<ReducedBasis> {
    if n_red == 0 {
        return Err(Error::config("n_red must be at least 1"));
    }
    check_rank(d, n_red, "n_red")?;
    check_rank(d, max_rank, "max_rank")?;
    let svd = thin_svd(d)?;
    let mut v_red = svd.v.first_columns(n_red);
    for j in 0..n_red {
        let col = v_red.column(j);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            let flipped: Vec<f64> = col.iter().map(|x| -x).collect();
            v_red.set_column(j, &flipped);
        }
    }
    Ok(ReducedBasis {
        n_red,
        v_red,
        source_spectrum: spectrum_from_svd(d, &svd, max_rank),
    })
}

/// Trajectories as columns in time: entry `(l * n_full + i, k)` is
/// component `i` of trajectory `l` at time `k`. Reports the diagonal of the
/// `R` factor of its thin QR.
pub fn memory_qr_diagnostic(trajs: &TrajectorySet) -> Result<MemoryReport> {
    let n_time = trajs.n_time();
    if n_time < 2 {
        return Err(Error::config("memory diagnostic needs at least 2 time samples"));
    }
    let cols: Vec<Vec<f64>> = (0..n_time)
        .map(|k| {
            let mut c = Vec::with_capacity(trajs.n_traj() * trajs.n_full());
            for l in 0..trajs.n_traj() {
                for i in 0..trajs.n_full() {
                    c.push(trajs.data.get(l, i, k));
                }
            }
            c
        })
        .collect();
    memory_report_from_columns(cols)
}

/// Same diagnostic on arbitrary column data.
pub fn memory_report_from_columns(cols: Vec<Vec<f64>>) -> Result<MemoryReport> {
    let norms: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    let r = r_factor_from_columns(cols)?;
    let r_diag: Vec<f64> = (0..norms.len()).map(|k| r[(k, k)]).collect();
    let relative = r_diag
        .iter()
        .zip(&norms)
        .map(|(d, n)| if *n > 0.0 { d / n } else { 0.0 })
        .collect();
    Ok(MemoryReport { r_diag, relative })
}

/// Sines of the principal angles between the column spans of `a` and `b`
/// (both tall), largest first.
pub fn principal_angle_sines(a: &Matrix, b: &Matrix) -> Result<Vec<f64>> {
    if a.rows() != b.rows() {
        return Err(Error::shape(format!(
            "subspaces live in R^{} and R^{}",
            a.rows(),
            b.rows()
        )));
    }
    let (qa, _) = thin_qr(a)?;
    let (qb, _) = thin_qr(b)?;
    // (I - Qa Qa^T) Qb
    let resid = qb.sub(&qa.matmul(&qa.t_matmul(&qb)));
    Ok(thin_svd(&resid)?.sigma)
}

/// Largest singular value expected from i.i.d. `N(0, sigma^2)` noise in an
/// `m x n` matrix.
pub fn noise_floor(m: usize, n: usize, sigma: f64) -> f64 {
    sigma * ((m as f64).sqrt() + (n as f64).sqrt())
}
