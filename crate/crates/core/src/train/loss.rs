use crate::datagen::TrainingDataset;
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::models::FlowModel;

/// Value and flat gradient of the training objective.
#[derive(Debug, Clone)]
pub struct LossEval {
    /// `data_loss + penalty`
    pub loss: f64,
    pub data_loss: f64,
    pub penalty: f64,
    /// Layout of [`FlowModel::trainable`].
    pub grads: Vec<f64>,
}

/// Recurrent loss over every chunk of `dataset`, see [`recurrent_loss_slices`].
pub fn recurrent_loss<M: FlowModel>(model: &M, dataset: &TrainingDataset, lambda: f64) -> Result<LossEval> {
    let slices = dataset.chunks.time_slices();
    recurrent_loss_slices(model, &slices, dataset.n_mem, dataset.n_rec, lambda)
}

/// `slices[t]` holds every chunk at time `t` (one chunk per row). The first
/// `n_mem` slices seed the window, the model is composed `n_rec` times
/// feeding predictions back, and
///
/// ```text
/// loss = 1 / (B K) * sum_b sum_k ||pred_k - slices[n_mem + k]||^2 + penalty
/// ```
///
/// Gradients are propagated through the whole recurrence.
pub fn recurrent_loss_slices<M: FlowModel>(
    model: &M,
    slices: &[Matrix],
    n_mem: usize,
    n_rec: usize,
    lambda: f64,
) -> Result<LossEval> {
    if n_mem != model.n_mem() {
        return Err(Error::shape(format!(
            "dataset memory {n_mem} does not match model memory {}",
            model.n_mem()
        )));
    }
    if n_rec == 0 || slices.len() != n_mem + n_rec {
        return Err(Error::shape(format!(
            "chunks have {} samples, need n_mem + n_rec = {}",
            slices.len(),
            n_mem + n_rec
        )));
    }
    let (batch, n_full) = slices[0].shape();
    if n_full != model.n_full() || batch == 0 {
        return Err(Error::shape(format!(
            "chunks are {batch}x{n_full}, model width is {}",
            model.n_full()
        )));
    }
    let total = n_mem + n_rec;
    let mut states: Vec<Matrix> = slices[..n_mem].to_vec();
    let mut feats: Vec<Matrix> = states.iter().map(|s| model.encode(s)).collect();
    let mut tapes = Vec::with_capacity(n_rec);
    let mut diffs = Vec::with_capacity(n_rec);
    let mut sq = 0.0;
    for k in 0..n_rec {
        let t = n_mem + k;
        let win_states: Vec<&Matrix> = (0..n_mem).map(|j| &states[t - 1 - j]).collect();
        let win_feats: Vec<&Matrix> = (0..n_mem).map(|j| &feats[t - 1 - j]).collect();
        let (pred, tape) = model.advance(&win_states, &win_feats)?;
        let diff = pred.sub(&slices[t]);
        sq += diff.as_slice().iter().map(|v| v * v).sum::<f64>();
        if k + 1 < n_rec {
            feats.push(model.encode(&pred));
        }
        states.push(pred);
        tapes.push(tape);
        diffs.push(diff);
    }
    let scale = 1.0 / (batch * n_rec) as f64;
    let data_loss = sq * scale;
    if !data_loss.is_finite() {
        return Err(Error::Divergence {
            epoch: 0,
            detail: format!("non-finite recurrent loss {data_loss}"),
        });
    }

    let mut g = model.zero_grads();
    let mut d_state: Vec<Matrix> = (0..total).map(|_| Matrix::zeros(0, 0)).collect();
    let mut d_feat: Vec<Option<Matrix>> = (0..total).map(|_| None).collect();
    let accumulate = |slot: &mut Option<Matrix>, m: Matrix| match slot {
        Some(acc) => acc.add_assign(&m),
        None => *slot = Some(m),
    };
    for k in (0..n_rec).rev() {
        let t = n_mem + k;
        let mut adj = std::mem::replace(&mut diffs[k], Matrix::zeros(0, 0));
        adj.scale(2.0 * scale);
        if d_state[t].rows() > 0 {
            adj.add_assign(&d_state[t]);
        }
        if let Some(df) = d_feat[t].take() {
            adj.add_assign(&model.encode_backward(&states[t], &df, &mut g));
        }
        let (direct, dfs) = model.advance_backward(&tapes[k], &adj, &mut g)?;
        for (j, df) in dfs.into_iter().enumerate() {
            accumulate(&mut d_feat[t - 1 - j], df);
        }
        if let Some(d) = direct {
            if t - 1 >= n_mem {
                if d_state[t - 1].rows() == 0 {
                    d_state[t - 1] = d;
                } else {
                    d_state[t - 1].add_assign(&d);
                }
            }
        }
    }
    // data states carry no adjoint of their own but their encodings may
    // depend on trainable parameters
    for t in 0..n_mem {
        if let Some(df) = d_feat[t].take() {
            model.encode_backward(&states[t], &df, &mut g);
        }
    }
    let penalty = model.regularize(lambda, &mut g);
    Ok(LossEval {
        loss: data_loss + penalty,
        data_loss,
        penalty,
        grads: model.flatten_grads(&g),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::Rng;
    use crate::models::{Mode, NodalConfig, NodalModel, PcfmlConfig, PcfmlModel};
    use crate::reduction::fixed_basis;

    fn slices(batch: usize, n_full: usize, len: usize, seed: u64) -> Vec<Matrix> {
        let mut rng = Rng::new(seed);
        (0..len)
            .map(|_| Matrix::from_fn(batch, n_full, |_, _| rng.uniform(-1.0, 1.0)))
            .collect()
    }

    #[test]
    fn perfect_model_has_zero_loss() {
        let cfg = PcfmlConfig {
            n_full: 6,
            n_red: 2,
            n_mem: 3,
            hidden: 4,
            mode: Mode::Unconstrained,
            project_skip: false,
        };
        let mut m = PcfmlModel::new(cfg, None, &mut Rng::new(1)).unwrap();
        let zero = vec![0.0; m.count_params()];
        m.set_trainable(&zero).unwrap();
        // constant data is reproduced by the identity map
        let s = Matrix::from_fn(4, 6, |b, i| (b * 6 + i) as f64 * 0.1);
        let sl = vec![s; 5];
        let e = recurrent_loss_slices(&m, &sl, 3, 2, 0.0).unwrap();
        assert_eq!(e.loss, 0.0);
        assert!(e.grads.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn single_step_is_mean_squared_error() {
        let cfg = NodalConfig {
            n_full: 5,
            n_mem: 2,
            hidden: 3,
        };
        let m = NodalModel::new(cfg, &mut Rng::new(2)).unwrap();
        let sl = slices(3, 5, 3, 3);
        let e = recurrent_loss_slices(&m, &sl, 2, 1, 0.0).unwrap();
        let w = crate::models::Window::new(vec![sl[1].clone(), sl[0].clone()]).unwrap();
        let pred = m.step_batch(&w).unwrap();
        let mse = pred.sub(&sl[2]).as_slice().iter().map(|v| v * v).sum::<f64>() / 3.0;
        assert!((e.loss - mse).abs() < 1e-15 * mse.max(1.0));
    }

    #[test]
    fn shape_errors() {
        let cfg = NodalConfig {
            n_full: 5,
            n_mem: 2,
            hidden: 3,
        };
        let m = NodalModel::new(cfg, &mut Rng::new(2)).unwrap();
        assert!(recurrent_loss_slices(&m, &slices(3, 5, 3, 3), 3, 0, 0.0).is_err());
        assert!(recurrent_loss_slices(&m, &slices(3, 4, 4, 3), 2, 2, 0.0).is_err());
        assert!(recurrent_loss_slices(&m, &slices(3, 5, 5, 3), 2, 2, 0.0).is_err());
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
    }

    fn check_gradient<M: FlowModel>(model: &M, sl: &[Matrix], n_mem: usize, n_rec: usize, lambda: f64) -> f64 {
        let e = recurrent_loss_slices(model, sl, n_mem, n_rec, lambda).unwrap();
        let base = model.trainable();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..base.len() {
            let mut m = model.clone();
            let mut p = base.clone();
            p[i] += h;
            m.set_trainable(&p).unwrap();
            let up = recurrent_loss_slices(&m, sl, n_mem, n_rec, lambda).unwrap().loss;
            p[i] -= 2.0 * h;
            m.set_trainable(&p).unwrap();
            let down = recurrent_loss_slices(&m, sl, n_mem, n_rec, lambda).unwrap().loss;
            worst = worst.max(rel_err(e.grads[i], (up - down) / (2.0 * h)));
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences_all_modes() {
        let sl = slices(4, 6, 5, 11);
        let mut rng = Rng::new(12);
        let d = Matrix::from_fn(20, 6, |_, _| rng.uniform(-1.0, 1.0));
        let basis = fixed_basis(&d, 2).unwrap();
        for mode in [Mode::Fixed, Mode::Constrained, Mode::Unconstrained] {
            for skip in [true, false] {
                let cfg = PcfmlConfig {
                    n_full: 6,
                    n_red: 2,
                    n_mem: 3,
                    hidden: 4,
                    mode,
                    project_skip: skip,
                };
                let m = PcfmlModel::new(cfg, Some(&basis), &mut rng).unwrap();
                // a large lambda makes the penalty gradient visible
                let worst = check_gradient(&m, &sl, 3, 2, 0.5);
                assert!(worst < 1e-5, "{mode} skip={skip}: {worst}");
            }
        }
        let nodal = NodalModel::new(
            NodalConfig {
                n_full: 6,
                n_mem: 3,
                hidden: 3,
            },
            &mut rng,
        )
        .unwrap();
        assert!(check_gradient(&nodal, &sl, 3, 2, 0.0) < 1e-5);
    }

    #[test]
    fn penalty_value() {
        let cfg = PcfmlConfig {
            n_full: 6,
            n_red: 2,
            n_mem: 3,
            hidden: 4,
            mode: Mode::Constrained,
            project_skip: true,
        };
        let m = PcfmlModel::new(cfg, None, &mut Rng::new(8)).unwrap();
        let sl = slices(2, 6, 5, 1);
        let a = recurrent_loss_slices(&m, &sl, 3, 2, 0.0).unwrap();
        let b = recurrent_loss_slices(&m, &sl, 3, 2, 1e-2).unwrap();
        assert_eq!(a.data_loss, b.data_loss);
        assert!((b.penalty - m.orthogonality_penalty(1e-2)).abs() < 1e-18);
        assert!(b.penalty > 0.0);
    }
}
