//! `u_tt = u_xx + u_yy` on `[-1, 1]^2`: zero Dirichlet at `x = +-1`, zero
//! Neumann at `y = +-1`. Only `u` is recorded; `u_t` is never observed.
//!
//! Leapfrog on a uniform tensor grid with ghost-point reflection in `y`,
//! then bilinear interpolation onto the observation points.

use std::f64::consts::FRAC_PI_2;
use std::f64::consts::PI;

use rayon::prelude::*;

use super::{ExampleId, Grid, Tensor3, TrajectorySet, DT};
use crate::dense::Rng;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave2dSolverConfig {
    pub nx: usize,
    pub ny: usize,
    pub substep: f64,
    /// `substep * substeps_per_obs == DT`
    pub substeps_per_obs: usize,
}

impl Default for Wave2dSolverConfig {
    fn default() -> Self {
        Self {
            nx: 101,
            ny: 101,
            substep: 5e-3,
            substeps_per_obs: 2,
        }
    }
}

pub const MIN_SOLVER_RESOLUTION: usize = 65;

impl Wave2dSolverConfig {
    pub fn dx(&self) -> f64 {
        2.0 / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 / (self.ny - 1) as f64
    }

    /// Largest stable leapfrog step.
    pub fn cfl_limit(&self) -> f64 {
        1.0 / (1.0 / self.dx().powi(2) + 1.0 / self.dy().powi(2)).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < MIN_SOLVER_RESOLUTION || self.ny < MIN_SOLVER_RESOLUTION {
            return Err(Error::config(format!(
                "solver grid {}x{} below minimum {MIN_SOLVER_RESOLUTION}x{MIN_SOLVER_RESOLUTION}",
                self.nx, self.ny
            )));
        }
        if self.substeps_per_obs == 0
            || !(self.substep > 0.0)
            || (self.substep * self.substeps_per_obs as f64 - DT).abs() > 1e-12
        {
            return Err(Error::config(format!(
                "{} substeps of {} do not make up the observation step {DT}",
                self.substeps_per_obs, self.substep
            )));
        }
        let limit = self.cfl_limit();
        if self.substep > limit {
            let n = (DT / limit).ceil() as usize;
            return Err(Error::config(format!(
                "CFL violated: substep {} exceeds {limit:.6}; use substep {} with {n} substeps per observation",
                self.substep,
                DT / n as f64
            )));
        }
        Ok(())
    }
}

/// `u(x, y, 0) = atan(a1 cos(pi x / 2))`,
/// `u_t(x, y, 0) = a2 sin(pi x) exp(a3 sin(pi y / 2))`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave2dIc {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl Wave2dIc {
    pub fn random(rng: &mut Rng) -> Self {
        let alpha1 = rng.uniform(-1.0, 1.0);
        let alpha2 = rng.uniform(-3.0, 3.0);
        let alpha3 = rng.uniform(-1.0, 1.0);
        Self {
            alpha1,
            alpha2,
            alpha3,
        }
    }

    pub fn u0(&self, x: f64, _y: f64) -> f64 {
        (self.alpha1 * (FRAC_PI_2 * x).cos()).atan()
    }

    pub fn ut0(&self, x: f64, y: f64) -> f64 {
        self.alpha2 * (PI * x).sin() * (self.alpha3 * (FRAC_PI_2 * y).sin()).exp()
    }
}

/// Leapfrog state on the solver grid, indexed `j * nx + i`.
#[derive(Debug, Clone)]
pub struct Wave2dSolver {
    cfg: Wave2dSolverConfig,
    prev: Vec<f64>,
    curr: Vec<f64>,
    scratch: Vec<f64>,
    steps: usize,
}

impl Wave2dSolver {
    pub fn new(ic: Wave2dIc, cfg: Wave2dSolverConfig) -> Result<Self> {
        cfg.validate()?;
        let (nx, ny) = (cfg.nx, cfg.ny);
        let (dx, dy) = (cfg.dx(), cfg.dy());
        let mut u0 = vec![0.0; nx * ny];
        let mut v0 = vec![0.0; nx * ny];
        for j in 0..ny {
            let y = -1.0 + j as f64 * dy;
            for i in 1..nx - 1 {
                let x = -1.0 + i as f64 * dx;
                u0[j * nx + i] = ic.u0(x, y);
                v0[j * nx + i] = ic.ut0(x, y);
            }
        }
        let mut solver = Self {
            cfg,
            prev: u0.clone(),
            curr: u0,
            scratch: vec![0.0; nx * ny],
            steps: 0,
        };
        // Taylor start: u^1 = u^0 + k v0 + k^2/2 Lap u^0
        let k = cfg.substep;
        solver.laplacian_into_scratch();
        let mut first = solver.curr.clone();
        for (idx, f) in first.iter_mut().enumerate() {
            *f += k * v0[idx] + 0.5 * k * k * solver.scratch[idx];
        }
        solver.pin_dirichlet(&mut first);
        solver.prev = std::mem::replace(&mut solver.curr, first);
        solver.steps = 1;
        Ok(solver)
    }

    pub fn config(&self) -> &Wave2dSolverConfig {
        &self.cfg
    }

    /// Current solution field.
    pub fn field(&self) -> &[f64] {
        &self.curr
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn pin_dirichlet(&self, u: &mut [f64]) {
        let nx = self.cfg.nx;
        for j in 0..self.cfg.ny {
            u[j * nx] = 0.0;
            u[j * nx + nx - 1] = 0.0;
        }
    }

    fn laplacian_into_scratch(&mut self) {
        let (nx, ny) = (self.cfg.nx, self.cfg.ny);
        let (idx2, idy2) = (1.0 / self.cfg.dx().powi(2), 1.0 / self.cfg.dy().powi(2));
        let u = &self.curr;
        for j in 0..ny {
            // ghost rows mirror the first interior row
            let jm = if j == 0 { 1 } else { j - 1 };
            let jp = if j == ny - 1 { ny - 2 } else { j + 1 };
            for i in 1..nx - 1 {
                let c = u[j * nx + i];
                self.scratch[j * nx + i] = (u[j * nx + i - 1] - 2.0 * c + u[j * nx + i + 1]) * idx2
                    + (u[jm * nx + i] - 2.0 * c + u[jp * nx + i]) * idy2;
            }
            self.scratch[j * nx] = 0.0;
            self.scratch[j * nx + nx - 1] = 0.0;
        }
    }

    /// One leapfrog substep.
    pub fn step(&mut self) {
        self.laplacian_into_scratch();
        let k2 = self.cfg.substep.powi(2);
        for idx in 0..self.curr.len() {
            let next = 2.0 * self.curr[idx] - self.prev[idx] + k2 * self.scratch[idx];
            self.prev[idx] = self.curr[idx];
            self.curr[idx] = next;
        }
        let mut curr = std::mem::take(&mut self.curr);
        self.pin_dirichlet(&mut curr);
        self.curr = curr;
        self.steps += 1;
    }

    /// Discrete `1/2 int (u_t^2 + |grad u|^2)` at the current level, with
    /// the velocity centred between the previous and next levels.
    /// Trapezoid weights are used in `y` (the Neumann direction).
    pub fn energy(&self) -> f64 {
        let mut ahead = self.clone();
        ahead.step();
        let (nx, ny) = (self.cfg.nx, self.cfg.ny);
        let (dx, dy) = (self.cfg.dx(), self.cfg.dy());
        let k = self.cfg.substep;
        let wy = |j: usize| if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
        let u = &self.curr;
        let mut kinetic = 0.0;
        let mut grad_x = 0.0;
        let mut grad_y = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let idx = j * nx + i;
                let ut = (ahead.curr[idx] - self.prev[idx]) / (2.0 * k);
                kinetic += wy(j) * ut * ut;
                if i + 1 < nx {
                    let d = (u[idx + 1] - u[idx]) / dx;
                    grad_x += wy(j) * d * d;
                }
                if j + 1 < ny {
                    let d = (u[idx + nx] - u[idx]) / dy;
                    grad_y += d * d;
                }
            }
        }
        0.5 * (kinetic + grad_x + grad_y) * dx * dy
    }

    /// Bilinear interpolation of the current field.
    pub fn sample(&self, stencils: &[Stencil]) -> Vec<f64> {
        sample_field(&self.curr, stencils)
    }
}

/// Bilinear interpolation weights for one observation point.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    idx: [usize; 4],
    w: [f64; 4],
}

fn sample_field(field: &[f64], stencils: &[Stencil]) -> Vec<f64> {
    stencils
        .iter()
        .map(|s| s.idx.iter().zip(&s.w).map(|(&i, w)| w * field[i]).sum())
        .collect()
}

pub fn stencils(grid: &Grid, cfg: &Wave2dSolverConfig) -> Result<Vec<Stencil>> {
    if grid.dim != 2 {
        return Err(Error::config("wave2d observations need a 2D grid"));
    }
    let (nx, ny) = (cfg.nx, cfg.ny);
    let (dx, dy) = (cfg.dx(), cfg.dy());
    grid.points
        .iter()
        .map(|p| {
            let (x, y) = (p[0], p[1]);
            if !(-1.0..=1.0).contains(&x) || !(-1.0..=1.0).contains(&y) {
                return Err(Error::config(format!("observation point ({x}, {y}) outside domain")));
            }
            let fi = ((x + 1.0) / dx).min((nx - 1) as f64);
            let fj = ((y + 1.0) / dy).min((ny - 1) as f64);
            let i = (fi.floor() as usize).min(nx - 2);
            let j = (fj.floor() as usize).min(ny - 2);
            let (tx, ty) = (fi - i as f64, fj - j as f64);
            Ok(Stencil {
                idx: [j * nx + i, j * nx + i + 1, (j + 1) * nx + i, (j + 1) * nx + i + 1],
                w: [
                    (1.0 - tx) * (1.0 - ty),
                    tx * (1.0 - ty),
                    (1.0 - tx) * ty,
                    tx * ty,
                ],
            })
        })
        .collect()
}

/// Solves each trajectory and records `u` at the observation points
/// every `DT` for `n_steps` steps.
pub fn gen_wave2d(
    grid: &Grid,
    n_traj: usize,
    n_steps: usize,
    cfg: Wave2dSolverConfig,
    rng: &Rng,
) -> Result<TrajectorySet> {
    cfg.validate()?;
    let st = stencils(grid, &cfg)?;
    let n_time = n_steps + 1;
    let n_grid = grid.n_grid();
    let per_traj: Vec<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|l| -> Result<Vec<f64>> {
            let ic = Wave2dIc::random(&mut rng.derive(l as u64));
            let mut solver = Wave2dSolver::new(ic, cfg)?;
            // time-major while solving; the solver starts at substep level 1
            let mut frames = Vec::with_capacity(n_time);
            frames.push(sample_field(&solver.prev, &st));
            for k in 1..n_time {
                while solver.steps() < k * cfg.substeps_per_obs {
                    solver.step();
                }
                frames.push(solver.sample(&st));
            }
            let mut block = vec![0.0; n_grid * n_time];
            for (k, f) in frames.iter().enumerate() {
                for (i, v) in f.iter().enumerate() {
                    block[i * n_time + k] = *v;
                }
            }
            Ok(block)
        })
        .collect::<Result<_>>()?;
    let data = Tensor3::from_vec(n_traj, n_grid, n_time, per_traj.concat())?;
    Ok(TrajectorySet {
        example: ExampleId::Wave2d,
        grid: grid.clone(),
        dt: DT,
        n_steps,
        data,
        clean: true,
        sigma: 0.0,
        seed: rng.seed(),
    })
}
