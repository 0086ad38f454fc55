use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::TrajectorySet;
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::models::{FlowModel, Window};

/// Independently trained models of one architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<M> {
    members: Vec<M>,
}

impl<M: FlowModel> Ensemble<M> {
    pub fn new(members: Vec<M>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::config("an ensemble needs at least one member"))?;
        let key = (first.n_full(), first.n_mem(), first.count_params());
        if members
            .iter()
            .any(|m| (m.n_full(), m.n_mem(), m.count_params()) != key)
        {
            return Err(Error::shape("ensemble members differ in architecture"));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[M] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn n_full(&self) -> usize {
        self.members[0].n_full()
    }

    pub fn n_mem(&self) -> usize {
        self.members[0].n_mem()
    }
}

/// Predicted states for a batch of trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    /// `states[k]` is the prediction `k + 1` steps past the initial window.
    pub states: Vec<Matrix>,
    /// First step (1-based) at which a trajectory turned non-finite.
    pub blowup: Vec<Option<usize>>,
}

impl Rollout {
    pub fn steps(&self) -> usize {
        self.states.len()
    }

    /// Trajectory `l`, truncated before its blow-up step.
    pub fn trajectory(&self, l: usize) -> Vec<Vec<f64>> {
        let end = self.blowup[l].map_or(self.states.len(), |s| s - 1);
        self.states[..end].iter().map(|s| s.row(l).to_vec()).collect()
    }
}

/// Elementwise mean, exact when every member agrees.
fn average(outs: &[Matrix]) -> Matrix {
    let mut avg = outs[0].clone();
    if outs.len() == 1 {
        return avg;
    }
    let n = outs.len() as f64;
    for (idx, a) in avg.as_mut_slice().iter_mut().enumerate() {
        let first = *a;
        if outs[1..].iter().all(|o| o.as_slice()[idx] == first) {
            continue;
        }
        *a = outs.iter().map(|o| o.as_slice()[idx]).sum::<f64>() / n;
    }
    avg
}

/// Every member maps the same window; their mean is emitted and pushed into
/// the window for the next step.
pub fn rollout<M: FlowModel>(e: &Ensemble<M>, init: &Window, steps: usize) -> Result<Rollout> {
    e.members[0].check_window(init)?;
    let n_mem = e.n_mem();
    let mut states: VecDeque<Matrix> = init.states().cloned().collect();
    let mut feats: Vec<VecDeque<Matrix>> = e
        .members
        .iter()
        .map(|m| states.iter().map(|s| m.encode(s)).collect())
        .collect();
    let batch = init.batch();
    let mut blowup = vec![None; batch];
    let mut out = Vec::with_capacity(steps);
    for step in 1..=steps {
        let st: Vec<&Matrix> = states.iter().collect();
        let preds: Vec<Matrix> = e
            .members
            .par_iter()
            .zip(feats.par_iter())
            .map(|(m, f)| {
                let fr: Vec<&Matrix> = f.iter().collect();
                m.advance(&st, &fr).map(|(p, _)| p)
            })
            .collect::<Result<_>>()?;
        let avg = average(&preds);
        for (l, b) in blowup.iter_mut().enumerate() {
            if b.is_none() && avg.row(l).iter().any(|v| !v.is_finite()) {
                *b = Some(step);
            }
        }
        if step < steps {
            for (m, f) in e.members.iter().zip(feats.iter_mut()) {
                f.pop_back();
                f.push_front(m.encode(&avg));
            }
            states.pop_back();
            states.push_front(avg.clone());
            debug_assert_eq!(states.len(), n_mem);
        }
        out.push(avg);
    }
    Ok(Rollout { states: out, blowup })
}

/// `e[k] = mean over trajectories of ||pred_k - truth_k||_2`; non-finite
/// predictions count as infinite error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub values: Vec<f64>,
}

impl ErrorCurve {
    pub fn horizon(&self) -> usize {
        self.values.len()
    }
}

pub fn avg_l2_error(preds: &[Matrix], truths: &[Matrix]) -> Result<ErrorCurve> {
    if preds.len() != truths.len() {
        return Err(Error::shape(format!(
            "{} predicted steps vs {} truth steps",
            preds.len(),
            truths.len()
        )));
    }
    let values = preds
        .iter()
        .zip(truths)
        .map(|(p, t)| {
            if p.shape() != t.shape() {
                return Err(Error::shape(format!(
                    "prediction {}x{} vs truth {}x{}",
                    p.rows(),
                    p.cols(),
                    t.rows(),
                    t.cols()
                )));
            }
            let n = p.rows() as f64;
            let total: f64 = (0..p.rows())
                .map(|l| {
                    let d = p
                        .row(l)
                        .iter()
                        .zip(t.row(l))
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    if d.is_finite() {
                        d
                    } else {
                        f64::INFINITY
                    }
                })
                .sum();
            Ok(total / n)
        })
        .collect::<Result<_>>()?;
    Ok(ErrorCurve { values })
}

/// Rolls out from the first `n_mem` samples of `observed` and scores the
/// prediction against `truth` from the next sample on.
pub fn evaluate<M: FlowModel>(
    e: &Ensemble<M>,
    observed: &TrajectorySet,
    truth: &TrajectorySet,
    horizon: usize,
) -> Result<(Rollout, ErrorCurve)> {
    let n_mem = e.n_mem();
    if observed.data.n_traj() != truth.data.n_traj() || observed.n_full() != truth.n_full() {
        return Err(Error::shape("observed and truth sets differ in shape"));
    }
    if truth.n_time() < n_mem + horizon || observed.n_time() < n_mem {
        return Err(Error::config(format!(
            "test trajectories have {} samples, need n_mem + horizon = {}",
            truth.n_time(),
            n_mem + horizon
        )));
    }
    let init = Window::from_tensor(&observed.data, n_mem - 1, n_mem)?;
    let r = rollout(e, &init, horizon)?;
    let truths: Vec<Matrix> = (1..=horizon).map(|k| truth.data.time_slice(n_mem - 1 + k)).collect();
    let curve = avg_l2_error(&r.states, &truths)?;
    Ok((r, curve))
}
