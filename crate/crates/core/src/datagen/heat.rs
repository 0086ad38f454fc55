//! `pi^2 u_t = u_xx` on `[0, 1]` with zero Dirichlet ends.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{ExampleId, Grid, Tensor3, TrajectorySet, DT};
use crate::dense::Rng;

/// `u(x, 0) = a1 sin(pi x) + a2 sin(2 pi x)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatIc {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl HeatIc {
    pub fn random(rng: &mut Rng) -> Self {
        Self {
            alpha1: rng.uniform(-1.0, 1.0),
            alpha2: rng.uniform(-1.0, 1.0),
        }
    }
}

/// Separated solution: each mode decays as `exp(-n^2 t)`.
pub fn heat_solution(ic: HeatIc, x: f64, t: f64) -> f64 {
    ic.alpha1 * (PI * x).sin() * (-t).exp() + ic.alpha2 * (2.0 * PI * x).sin() * (-4.0 * t).exp()
}

/// Exact trajectories sampled at `DT` for `n_steps` steps.
pub fn gen_heat1d(grid: &Grid, n_traj: usize, n_steps: usize, rng: &Rng) -> TrajectorySet {
    let xs = grid.xs();
    let n_time = n_steps + 1;
    let per_traj: Vec<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|l| {
            let ic = HeatIc::random(&mut rng.derive(l as u64));
            let mut block = Vec::with_capacity(xs.len() * n_time);
            for &x in &xs {
                block.extend((0..n_time).map(|k| heat_solution(ic, x, k as f64 * DT)));
            }
            block
        })
        .collect();
    let data = Tensor3::from_vec(n_traj, xs.len(), n_time, per_traj.concat())
        .expect("blocks sized by construction");
    TrajectorySet {
        example: ExampleId::Heat1d,
        grid: grid.clone(),
        dt: DT,
        n_steps,
        data,
        clean: true,
        sigma: 0.0,
        seed: rng.seed(),
    }
}
