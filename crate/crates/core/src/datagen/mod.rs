//! Trajectory generation for the benchmark problems, chunk extraction,
//! measurement noise and the on-disk dataset format.
//!
//! Tensors are stored `[trajectory][component][time]`, the same order as
//! the binary payload of a dataset file.

mod chunks;
mod grid;
mod heat;
pub mod io;
mod wave1d;
mod wave2d;

use serde::{Deserialize, Serialize};

use crate::dense::Matrix;
use crate::error::{Error, Result};

pub use chunks::{add_noise, sample_chunks};
pub use grid::{
    halton_grid, heat1d_grid, periodic_uniform_grid, random_interval_grid, Grid, HEAT_N_GRID,
    HEAT_WINDOW, WAVE1D_N_GRID, WAVE2D_N_GRID,
};
pub use heat::{gen_heat1d, heat_solution, HeatIc};
pub use wave1d::{gen_wave1d, Wave1dIc, WAVE1D_MODES};
pub use wave2d::{gen_wave2d, Wave2dIc, Wave2dSolver, Wave2dSolverConfig};

/// Observation time step shared by every example.
pub const DT: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleId {
    Heat1d,
    Wave1d,
    Wave2d,
}

impl ExampleId {
    pub fn as_str(self) -> &'static str {
        match self {
            ExampleId::Heat1d => "heat1d",
            ExampleId::Wave1d => "wave1d",
            ExampleId::Wave2d => "wave2d",
        }
    }

    /// Observation steps in a training trajectory.
    pub fn default_steps(self) -> usize {
        match self {
            ExampleId::Heat1d => 200,
            ExampleId::Wave1d => 100,
            ExampleId::Wave2d => 400,
        }
    }
}

impl std::fmt::Display for ExampleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dense `[traj][component][time]` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n_traj: usize,
    n_full: usize,
    n_time: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n_traj: usize, n_full: usize, n_time: usize) -> Self {
        Self {
            n_traj,
            n_full,
            n_time,
            data: vec![0.0; n_traj * n_full * n_time],
        }
    }

    pub fn from_vec(n_traj: usize, n_full: usize, n_time: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_traj * n_full * n_time {
            return Err(Error::shape(format!(
                "tensor {n_traj}x{n_full}x{n_time} needs {} values, got {}",
                n_traj * n_full * n_time,
                data.len()
            )));
        }
        Ok(Self {
            n_traj,
            n_full,
            n_time,
            data,
        })
    }

    #[inline]
    pub fn n_traj(&self) -> usize {
        self.n_traj
    }

    #[inline]
    pub fn n_full(&self) -> usize {
        self.n_full
    }

    #[inline]
    pub fn n_time(&self) -> usize {
        self.n_time
    }

    #[inline]
    fn offset(&self, l: usize, i: usize, k: usize) -> usize {
        debug_assert!(l < self.n_traj && i < self.n_full && k < self.n_time);
        (l * self.n_full + i) * self.n_time + k
    }

    #[inline]
    pub fn get(&self, l: usize, i: usize, k: usize) -> f64 {
        self.data[self.offset(l, i, k)]
    }

    #[inline]
    pub fn set(&mut self, l: usize, i: usize, k: usize, v: f64) {
        let o = self.offset(l, i, k);
        self.data[o] = v;
    }

    /// Time series of one component.
    pub fn series(&self, l: usize, i: usize) -> &[f64] {
        let o = self.offset(l, i, 0);
        &self.data[o..o + self.n_time]
    }

    pub fn series_mut(&mut self, l: usize, i: usize) -> &mut [f64] {
        let o = self.offset(l, i, 0);
        &mut self.data[o..o + self.n_time]
    }

    /// State vector of trajectory `l` at time `k`.
    pub fn state(&self, l: usize, k: usize) -> Vec<f64> {
        (0..self.n_full).map(|i| self.get(l, i, k)).collect()
    }

    pub fn set_state(&mut self, l: usize, k: usize, v: &[f64]) {
        for (i, &x) in v.iter().enumerate() {
            self.set(l, i, k, x);
        }
    }

    /// States at time `k` for every trajectory, one per row.
    pub fn time_slice(&self, k: usize) -> Matrix {
        Matrix::from_fn(self.n_traj, self.n_full, |l, i| self.get(l, i, k))
    }

    /// `[time_slice(0), ..., time_slice(n_time - 1)]`
    pub fn time_slices(&self) -> Vec<Matrix> {
        (0..self.n_time).map(|k| self.time_slice(k)).collect()
    }

    /// Copies times `start..start + len` of every trajectory.
    pub fn time_window(&self, start: usize, len: usize) -> Result<Tensor3> {
        if start + len > self.n_time {
            return Err(Error::config(format!(
                "time window {start}..{} exceeds {} samples",
                start + len,
                self.n_time
            )));
        }
        let mut out = Tensor3::zeros(self.n_traj, self.n_full, len);
        for l in 0..self.n_traj {
            for i in 0..self.n_full {
                out.series_mut(l, i)
                    .copy_from_slice(&self.series(l, i)[start..start + len]);
            }
        }
        Ok(out)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Observed solution trajectories on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub example: ExampleId,
    pub grid: Grid,
    pub dt: f64,
    /// `n_time - 1`
    pub n_steps: usize,
    pub data: Tensor3,
    pub clean: bool,
    pub sigma: f64,
    pub seed: u64,
}

impl TrajectorySet {
    pub fn n_traj(&self) -> usize {
        self.data.n_traj()
    }

    pub fn n_full(&self) -> usize {
        self.data.n_full()
    }

    pub fn n_time(&self) -> usize {
        self.data.n_time()
    }
}

/// `n_traj` chunks of `n_mem + n_rec` consecutive observations.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingDataset {
    pub example: ExampleId,
    pub grid: Grid,
    pub dt: f64,
    pub n_mem: usize,
    pub n_rec: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Start index of each chunk in its source trajectory.
    pub starts: Vec<usize>,
    pub chunks: Tensor3,
}

impl TrainingDataset {
    pub fn n_traj(&self) -> usize {
        self.chunks.n_traj()
    }

    pub fn n_full(&self) -> usize {
        self.chunks.n_full()
    }

    pub fn chunk_len(&self) -> usize {
        self.n_mem + self.n_rec
    }
}
