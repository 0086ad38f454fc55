use super::{TrainingDataset, TrajectorySet};
use crate::dense::{gaussian, Rng};
use crate::error::{Error, Result};

/// Cuts one chunk of `n_mem + n_rec` consecutive observations from each
/// trajectory at a uniformly random start.
pub fn sample_chunks(
    trajs: &TrajectorySet,
    n_mem: usize,
    n_rec: usize,
    rng: &mut Rng,
) -> Result<TrainingDataset> {
    if n_mem == 0 || n_rec == 0 {
        return Err(Error::config("n_mem and n_rec must be at least 1"));
    }
    let len = n_mem + n_rec;
    let n_time = trajs.n_time();
    if n_time < len {
        return Err(Error::config(format!(
            "trajectories have {n_time} samples, chunks need {len}"
        )));
    }
    let seed = rng.seed();
    let slack = n_time - len + 1;
    let starts: Vec<usize> = (0..trajs.n_traj()).map(|_| rng.index(slack)).collect();
    let mut chunks = super::Tensor3::zeros(trajs.n_traj(), trajs.n_full(), len);
    for (l, &s) in starts.iter().enumerate() {
        for i in 0..trajs.n_full() {
            chunks
                .series_mut(l, i)
                .copy_from_slice(&trajs.data.series(l, i)[s..s + len]);
        }
    }
    Ok(TrainingDataset {
        example: trajs.example,
        grid: trajs.grid.clone(),
        dt: trajs.dt,
        n_mem,
        n_rec,
        sigma: trajs.sigma,
        seed,
        starts,
        chunks,
    })
}

/// Adds i.i.d. `N(0, sigma^2)` to every entry.
pub fn add_noise(data: &mut [f64], sigma: f64, rng: &mut Rng) -> Result<()> {
    if sigma == 0.0 {
        return Ok(());
    }
    let noise = gaussian(rng, data.len(), sigma)?;
    for (d, e) in data.iter_mut().zip(noise) {
        *d += e;
    }
    Ok(())
}

impl TrajectorySet {
    pub fn add_noise(&mut self, sigma: f64, rng: &mut Rng) -> Result<()> {
        add_noise(self.data.as_mut_slice(), sigma, rng)?;
        if sigma > 0.0 {
            self.clean = false;
            self.sigma = sigma;
        }
        Ok(())
    }
}

impl TrainingDataset {
    pub fn add_noise(&mut self, sigma: f64, rng: &mut Rng) -> Result<()> {
        add_noise(self.chunks.as_mut_slice(), sigma, rng)?;
        if sigma > 0.0 {
            self.sigma = sigma;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_heat1d, heat1d_grid, Tensor3};

    fn heat(n_traj: usize, n_steps: usize) -> TrajectorySet {
        gen_heat1d(&heat1d_grid(1), n_traj, n_steps, &Rng::new(5))
    }

    #[test]
    fn exact_length_forces_zero_start() {
        let t = heat(6, 29);
        let d = sample_chunks(&t, 20, 10, &mut Rng::new(3)).unwrap();
        assert!(d.starts.iter().all(|&s| s == 0));
        assert_eq!(d.chunks, t.data);
    }

    #[test]
    fn chunk_shapes_and_contents() {
        let t = heat(40, 200);
        let d = sample_chunks(&t, 20, 10, &mut Rng::new(3)).unwrap();
        assert_eq!((d.n_traj(), d.n_full(), d.chunk_len()), (40, 100, 30));
        for (l, &s) in d.starts.iter().enumerate() {
            assert!(s + 30 <= 201);
            for k in [0, 13, 29] {
                assert_eq!(d.chunks.get(l, 7, k), t.data.get(l, 7, s + k));
            }
        }
        let other = sample_chunks(&t, 20, 10, &mut Rng::new(4)).unwrap();
        assert_ne!(d.starts, other.starts);
    }

    #[test]
    fn too_short_rejected() {
        let t = heat(2, 10);
        assert!(matches!(
            sample_chunks(&t, 20, 10, &mut Rng::new(0)),
            Err(Error::InvalidConfig(_))
        ));
        assert!(sample_chunks(&t, 0, 10, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn noise_moments_and_determinism() {
        let mut t = heat(3, 20);
        let before = t.clone();
        t.add_noise(0.0, &mut Rng::new(1)).unwrap();
        assert_eq!(t, before);
        assert!(t.add_noise(-0.1, &mut Rng::new(1)).is_err());

        let mut z = Tensor3::zeros(1000, 10, 100);
        add_noise(z.as_mut_slice(), 0.1, &mut Rng::new(77)).unwrap();
        let n = z.as_slice().len() as f64;
        let mean = z.as_slice().iter().sum::<f64>() / n;
        let std = (z.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((std - 0.1).abs() < 1e-3, "std {std}");

        let mut a = before.clone();
        let mut b = before.clone();
        a.add_noise(0.1, &mut Rng::new(9)).unwrap();
        b.add_noise(0.1, &mut Rng::new(9)).unwrap();
        assert_eq!(a, b);
        assert!(!a.clean);
    }
}
