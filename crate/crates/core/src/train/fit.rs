use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::recurrent_loss_slices;
use super::rollout::Ensemble;
use crate::datagen::TrainingDataset;
use crate::dense::{Matrix, Rng};
use crate::error::{Error, Result};
use crate::models::FlowModel;
use crate::nn::{AdamConfig, AdamState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub adam: AdamConfig,
    /// Orthogonality weight, constrained mode only.
    pub lambda: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10_000,
            adam: AdamConfig::default(),
            lambda: 1e-2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.adam.lr > 0.0) {
            return Err(Error::config(format!("learning rate must be > 0, got {}", self.adam.lr)));
        }
        Ok(())
    }
}

/// Full-batch Adam on the recurrent loss. Returns the loss at the start of
/// every epoch (before that epoch's update).
pub fn train<M: FlowModel>(model: &mut M, dataset: &TrainingDataset, cfg: &TrainConfig) -> Result<Vec<f64>> {
    let slices = dataset.chunks.time_slices();
    train_slices(model, &slices, dataset.n_mem, dataset.n_rec, cfg)
}

pub fn train_slices<M: FlowModel>(
    model: &mut M,
    slices: &[Matrix],
    n_mem: usize,
    n_rec: usize,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut params = model.trainable();
    let mut adam = AdamState::new(params.len(), cfg.adam);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let eval = recurrent_loss_slices(model, slices, n_mem, n_rec, cfg.lambda).map_err(|e| match e {
            Error::Divergence { detail, .. } => Error::Divergence { epoch, detail },
            other => other,
        })?;
        history.push(eval.loss);
        adam.step(&mut params, &eval.grads)?;
        model.set_trainable(&params)?;
    }
    Ok(history)
}

/// Trains `n_members` models built by `make` from seeds `cfg.seed + i`.
/// Members run in parallel; results are ordered by member index.
pub fn train_ensemble<M, F>(
    make: F,
    dataset: &TrainingDataset,
    cfg: &TrainConfig,
    n_members: usize,
) -> Result<(Ensemble<M>, Vec<Vec<f64>>)>
where
    M: FlowModel,
    F: Fn(&mut Rng) -> Result<M> + Sync,
{
    if n_members == 0 {
        return Err(Error::config("an ensemble needs at least one member"));
    }
    let seeds: Vec<u64> = (0..n_members as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    train_ensemble_seeds(make, dataset, cfg, &seeds)
}

/// As [`train_ensemble`] with explicit member seeds.
pub fn train_ensemble_seeds<M, F>(
    make: F,
    dataset: &TrainingDataset,
    cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<(Ensemble<M>, Vec<Vec<f64>>)>
where
    M: FlowModel,
    F: Fn(&mut Rng) -> Result<M> + Sync,
{
    let slices = dataset.chunks.time_slices();
    let results: Vec<Result<(M, Vec<f64>)>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut model = make(&mut Rng::new(seed))?;
            let member_cfg = TrainConfig { seed, ..*cfg };
            let hist = train_slices(&mut model, &slices, dataset.n_mem, dataset.n_rec, &member_cfg)?;
            Ok((model, hist))
        })
        .collect();
    let mut members = Vec::with_capacity(seeds.len());
    let mut histories = Vec::with_capacity(seeds.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((m, h)) => {
                members.push(m);
                histories.push(h);
            }
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Members { failures });
    }
    Ok((Ensemble::new(members)?, histories))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{ExampleId, Grid, Tensor3};
    use crate::models::{Mode, PcfmlConfig, PcfmlModel};
    use crate::reduction::{assemble_data_matrix, fixed_basis};

    /// Chunks of a known linear map acting inside a 2D subspace of R^6.
    fn linear_dataset() -> TrainingDataset {
        let n_full = 6;
        let (n_mem, n_rec) = (3, 2);
        let len = n_mem + n_rec;
        let mut rng = Rng::new(42);
        let basis: Vec<Vec<f64>> = (0..2)
            .map(|j| (0..n_full).map(|i| ((i + 1) as f64 * (j + 1) as f64 * 0.7).sin()).collect())
            .collect();
        let (c, s) = (0.98f64.cos() * 0.99, 0.98f64.sin() * 0.99);
        let mut data = Tensor3::zeros(20, n_full, len);
        for l in 0..20 {
            let mut z = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
            for k in 0..len {
                for i in 0..n_full {
                    data.set(l, i, k, z[0] * basis[0][i] + z[1] * basis[1][i]);
                }
                // slow rotation with mild decay
                let (a, b) = (z[0], z[1]);
                z = [
                    a + 0.1 * (c * a - s * b - a),
                    b + 0.1 * (s * a + c * b - b),
                ];
            }
        }
        TrainingDataset {
            example: ExampleId::Heat1d,
            grid: Grid {
                dim: 1,
                points: (0..n_full).map(|i| vec![i as f64]).collect(),
            },
            dt: 1e-2,
            n_mem,
            n_rec,
            sigma: 0.0,
            seed: 0,
            starts: vec![0; 20],
            chunks: data,
        }
    }

    fn fixed_model(ds: &TrainingDataset, rng: &mut Rng) -> Result<PcfmlModel> {
        let basis = fixed_basis(&assemble_data_matrix(ds)?, 2)?;
        PcfmlModel::new(
            PcfmlConfig {
                n_full: 6,
                n_red: 2,
                n_mem: 3,
                hidden: 8,
                mode: Mode::Fixed,
                project_skip: true,
            },
            Some(&basis),
            rng,
        )
    }

    #[test]
    fn zero_epochs_is_noop() {
        let ds = linear_dataset();
        let mut m = fixed_model(&ds, &mut Rng::new(1)).unwrap();
        let before = m.clone();
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(train(&mut m, &ds, &cfg).unwrap().is_empty());
        assert_eq!(m, before);
    }

    #[test]
    fn learns_linear_flow_map_and_keeps_fixed_basis() {
        let ds = linear_dataset();
        let mut m = fixed_model(&ds, &mut Rng::new(1)).unwrap();
        let p_in = m.p_in().clone();
        let cfg = TrainConfig {
            epochs: 2000,
            ..Default::default()
        };
        let hist = train(&mut m, &ds, &cfg).unwrap();
        let last = *hist.last().unwrap();
        assert!(last < 1e-4, "final loss {last}");
        let tenth = hist.len() / 10;
        let head: f64 = hist[..tenth].iter().sum::<f64>() / tenth as f64;
        let tail: f64 = hist[hist.len() - tenth..].iter().sum::<f64>() / tenth as f64;
        assert!(tail < head);
        assert_eq!(m.p_in(), &p_in);

        let mut again = fixed_model(&ds, &mut Rng::new(1)).unwrap();
        assert_eq!(train(&mut again, &ds, &cfg).unwrap(), hist);
    }

    #[test]
    fn ensemble_members_differ_by_seed() {
        let ds = linear_dataset();
        let cfg = TrainConfig {
            epochs: 20,
            seed: 5,
            ..Default::default()
        };
        let (e, hist) = train_ensemble(|rng| fixed_model(&ds, rng), &ds, &cfg, 3).unwrap();
        assert_eq!(e.len(), 3);
        assert_ne!(hist[0], hist[1]);
        let (_, solo) = train_ensemble_seeds(|rng| fixed_model(&ds, rng), &ds, &cfg, &[6]).unwrap();
        assert_eq!(solo[0], hist[1]);
        assert!(train_ensemble(|rng| fixed_model(&ds, rng), &ds, &cfg, 0).is_err());
    }

    #[test]
    fn divergence_reports_member_and_epoch() {
        let ds = linear_dataset();
        let cfg = TrainConfig {
            epochs: 3,
            ..Default::default()
        };
        let err = train_ensemble(
            |rng| {
                let mut m = fixed_model(&ds, rng)?;
                let mut p = m.trainable();
                p[0] = f64::NAN;
                m.set_trainable(&p)?;
                Ok(m)
            },
            &ds,
            &cfg,
            2,
        )
        .unwrap_err();
        match err {
            Error::Members { failures } => {
                assert_eq!(failures.len(), 2);
                assert!(failures[0].1.contains("epoch 0"), "{}", failures[0].1);
            }
            other => panic!("unexpected {other}"),
        }
    }
}
