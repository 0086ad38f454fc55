//! `v_t = w_x, w_t = v_x` on `[-1, 1]` with periodic boundaries. Only `v`
//! is recorded.
//!
//! The solution splits along characteristics: with `p = v + w` and
//! `q = v - w`, `p` moves left and `q` moves right at unit speed.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{ExampleId, Grid, Tensor3, TrajectorySet, DT};
use crate::dense::Rng;

/// Number of Fourier modes in the random initial conditions.
pub const WAVE1D_MODES: usize = 2;

/// Truncated Fourier series for `v(x, 0)` and `w(x, 0)` in `cos(n pi x)`,
/// `sin(n pi x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wave1dIc {
    pub a0: f64,
    pub c0: f64,
    /// `(a_n, b_n, c_n, d_n)` for `n = 1..`
    pub modes: Vec<[f64; 4]>,
}

impl Wave1dIc {
    pub fn random(rng: &mut Rng) -> Self {
        let a0 = rng.uniform(-0.5, 0.5);
        let c0 = rng.uniform(-0.5, 0.5);
        let modes = (1..=WAVE1D_MODES)
            .map(|n| {
                let r = 1.0 / n as f64;
                [
                    rng.uniform(-r, r),
                    rng.uniform(-r, r),
                    rng.uniform(-r, r),
                    rng.uniform(-r, r),
                ]
            })
            .collect();
        Self { a0, c0, modes }
    }

    fn series(&self, x: f64, constant: f64, cos_at: usize, sin_at: usize) -> f64 {
        self.modes
            .iter()
            .enumerate()
            .fold(constant, |acc, (idx, m)| {
                let k = (idx + 1) as f64 * PI;
                acc + m[cos_at] * (k * x).cos() + m[sin_at] * (k * x).sin()
            })
    }

    pub fn v0(&self, x: f64) -> f64 {
        self.series(x, self.a0, 0, 1)
    }

    pub fn w0(&self, x: f64) -> f64 {
        self.series(x, self.c0, 2, 3)
    }

    /// Left-moving invariant `v0 + w0`.
    pub fn p0(&self, x: f64) -> f64 {
        self.v0(x) + self.w0(x)
    }

    /// Right-moving invariant `v0 - w0`.
    pub fn q0(&self, x: f64) -> f64 {
        self.v0(x) - self.w0(x)
    }

    /// `(p0(x + t) + q0(x - t)) / 2`, grouped so that `t = 0` reproduces
    /// `v0` bit for bit.
    pub fn v(&self, x: f64, t: f64) -> f64 {
        0.5 * (self.v0(x + t) + self.v0(x - t)) + 0.5 * (self.w0(x + t) - self.w0(x - t))
    }

    pub fn w(&self, x: f64, t: f64) -> f64 {
        0.5 * (self.w0(x + t) + self.w0(x - t)) + 0.5 * (self.v0(x + t) - self.v0(x - t))
    }
}

pub fn gen_wave1d(grid: &Grid, n_traj: usize, n_steps: usize, rng: &Rng) -> TrajectorySet {
    let xs = grid.xs();
    let n_time = n_steps + 1;
    let per_traj: Vec<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|l| {
            let ic = Wave1dIc::random(&mut rng.derive(l as u64));
            let mut block = Vec::with_capacity(xs.len() * n_time);
            for &x in &xs {
                block.extend((0..n_time).map(|k| ic.v(x, k as f64 * DT)));
            }
            block
        })
        .collect();
    let data = Tensor3::from_vec(n_traj, xs.len(), n_time, per_traj.concat())
        .expect("blocks sized by construction");
    TrajectorySet {
        example: ExampleId::Wave1d,
        grid: grid.clone(),
        dt: DT,
        n_steps,
        data,
        clean: true,
        sigma: 0.0,
        seed: rng.seed(),
    }
}
