use serde::{Deserialize, Serialize};

use crate::dense::Rng;
use crate::error::{Error, Result};

/// Observation points. For `dim == 1` points are sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
}

/// Interval observed in the heat example.
pub const HEAT_WINDOW: (f64, f64) = (0.2399, 0.7577);
pub const HEAT_N_GRID: usize = 100;
pub const WAVE1D_N_GRID: usize = 50;
pub const WAVE2D_N_GRID: usize = 1537;

impl Grid {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::config(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::config("grid point with wrong dimension or non-finite coordinate"));
        }
        if dim == 1 && points.windows(2).any(|w| w[0][0] > w[1][0]) {
            return Err(Error::config("1D grid points must be sorted ascending"));
        }
        Ok(Self { dim, points })
    }

    pub fn n_grid(&self) -> usize {
        self.points.len()
    }

    /// First coordinate of every point.
    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p[0]).collect()
    }
}

/// `n` sorted i.i.d. uniform draws in `[lo, hi]`.
pub fn random_interval_grid(n: usize, lo: f64, hi: f64, rng: &mut Rng) -> Grid {
    let mut xs: Vec<f64> = (0..n).map(|_| rng.uniform(lo, hi)).collect();
    xs.sort_by(f64::total_cmp);
    Grid {
        dim: 1,
        points: xs.into_iter().map(|x| vec![x]).collect(),
    }
}

/// Non-uniform grid over the middle of `[0, 1]` for the heat example.
pub fn heat1d_grid(seed: u64) -> Grid {
    let mut rng = Rng::new(seed);
    random_interval_grid(HEAT_N_GRID, HEAT_WINDOW.0, HEAT_WINDOW.1, &mut rng)
}

/// `x_i = -1 + 2 i / n` for `i = 0..n` (periodic, right end excluded).
pub fn periodic_uniform_grid(n: usize) -> Grid {
    Grid {
        dim: 1,
        points: (0..n)
            .map(|i| vec![-1.0 + 2.0 * i as f64 / n as f64])
            .collect(),
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton(2, 3) points `1..=n` mapped to `[-1, 1]^2`.
pub fn halton_grid(n: usize) -> Grid {
    Grid {
        dim: 2,
        points: (1..=n as u64)
            .map(|i| {
                vec![
                    2.0 * radical_inverse(i, 2) - 1.0,
                    2.0 * radical_inverse(i, 3) - 1.0,
                ]
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_grid_sorted_inside_window() {
        let g = heat1d_grid(17);
        assert_eq!(g.n_grid(), 100);
        let xs = g.xs();
        assert!(xs.windows(2).all(|w| w[0] <= w[1]));
        assert!(xs.iter().all(|&x| (HEAT_WINDOW.0..=HEAT_WINDOW.1).contains(&x)));
        assert_eq!(heat1d_grid(17), g);
    }

    #[test]
    fn wave_grid_spacing() {
        let g = periodic_uniform_grid(50);
        assert_eq!(g.points[0][0], -1.0);
        assert!((g.points[49][0] - 0.96).abs() < 1e-15);
    }

    #[test]
    fn halton_first_points() {
        let g = halton_grid(3);
        // (1/2, 1/3), (1/4, 2/3), (3/4, 1/9)
        let expect = [(0.5, 1.0 / 3.0), (0.25, 2.0 / 3.0), (0.75, 1.0 / 9.0)];
        for (p, (a, b)) in g.points.iter().zip(expect) {
            assert!((p[0] - (2.0 * a - 1.0)).abs() < 1e-15);
            assert!((p[1] - (2.0 * b - 1.0)).abs() < 1e-15);
        }
        let full = halton_grid(WAVE2D_N_GRID);
        assert!(full
            .points
            .iter()
            .all(|p| p.iter().all(|v| (-1.0..=1.0).contains(v))));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(3, vec![]).is_err());
        assert!(Grid::new(1, vec![vec![0.5], vec![0.1]]).is_err());
        assert!(Grid::new(2, vec![vec![0.5]]).is_err());
    }
}
