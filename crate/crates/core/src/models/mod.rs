//! One-step flow map models acting on a memory window of nodal states.
//!
//! All models work on batches: a state is a `batch x n_full` matrix with one
//! trajectory per row. A step is split into a per-state [`FlowModel::encode`]
//! and an [`FlowModel::advance`] on the encoded window, so each state is
//! encoded once even though it sits in `n_mem` consecutive windows.

mod checkpoint;
mod nodal;
mod pcfml;

use std::collections::VecDeque;

use crate::dense::Matrix;
use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointManifest};
pub use nodal::{NodalConfig, NodalGrads, NodalModel, NodalTape, ASSEMBLY_SIZES, N_CHANNELS};
pub use pcfml::{Mode, PcfmlConfig, PcfmlGrads, PcfmlModel, PcfmlTape, MLP_HIDDEN_LAYERS};

pub trait FlowModel: Clone + Send + Sync {
    type Grads: Send;
    type Tape: Send;

    fn n_full(&self) -> usize;
    fn n_mem(&self) -> usize;

    /// Number of trainable scalars.
    fn count_params(&self) -> usize;

    /// Trainable parameters in checkpoint order.
    fn trainable(&self) -> Vec<f64>;
    fn set_trainable(&mut self, flat: &[f64]) -> Result<()>;

    fn zero_grads(&self) -> Self::Grads;
    /// Same layout as [`FlowModel::trainable`].
    fn flatten_grads(&self, g: &Self::Grads) -> Vec<f64>;

    /// Per-state features fed to [`FlowModel::advance`].
    fn encode(&self, state: &Matrix) -> Matrix;
    /// Adjoint of [`FlowModel::encode`]; returns `d state`.
    fn encode_backward(&self, state: &Matrix, d_feat: &Matrix, g: &mut Self::Grads) -> Matrix;

    /// Next state from a window, most recent first. `states[0]` is the current
    /// state, `feats[j] = encode(states[j])`.
    fn advance(&self, states: &[&Matrix], feats: &[&Matrix]) -> Result<(Matrix, Self::Tape)>;

    /// Returns `(d states[0] through the direct skip, d feats[j] for every j)`.
    fn advance_backward(
        &self,
        tape: &Self::Tape,
        d_out: &Matrix,
        g: &mut Self::Grads,
    ) -> Result<(Option<Matrix>, Vec<Matrix>)>;

    /// Adds a parameter penalty to `g` and returns its value.
    fn regularize(&self, _lambda: f64, _g: &mut Self::Grads) -> f64 {
        0.0
    }

    /// Convenience single step.
    fn step_batch(&self, w: &Window) -> Result<Matrix> {
        self.check_window(w)?;
        let feats: Vec<Matrix> = w.states.iter().map(|s| self.encode(s)).collect();
        let states: Vec<&Matrix> = w.states.iter().collect();
        let feat_refs: Vec<&Matrix> = feats.iter().collect();
        Ok(self.advance(&states, &feat_refs)?.0)
    }

    /// Single-trajectory step.
    fn step(&self, w: &Window) -> Result<Vec<f64>> {
        if w.batch() != 1 {
            return Err(Error::shape(format!("step expects one trajectory, window holds {}", w.batch())));
        }
        Ok(self.step_batch(w)?.into_vec())
    }

    fn check_window(&self, w: &Window) -> Result<()> {
        if w.len() != self.n_mem() {
            return Err(Error::shape(format!(
                "window holds {} states, model memory is {}",
                w.len(),
                self.n_mem()
            )));
        }
        if w.n_full() != self.n_full() {
            return Err(Error::shape(format!(
                "window states have {} components, model expects {}",
                w.n_full(),
                self.n_full()
            )));
        }
        Ok(())
    }
}

/// The last `n_mem` states of a batch of trajectories, most recent first.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    states: VecDeque<Matrix>,
}

impl Window {
    /// `states[0]` is the most recent.
    pub fn new(states: Vec<Matrix>) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::config("window needs at least one state"))?;
        let shape = first.shape();
        if states.iter().any(|s| s.shape() != shape) {
            return Err(Error::shape("window states differ in shape"));
        }
        if states.iter().any(|s| !s.is_finite()) {
            return Err(Error::shape("window contains non-finite values"));
        }
        Ok(Self {
            states: states.into(),
        })
    }

    /// Single trajectory, most recent first.
    pub fn from_vectors(states: &[Vec<f64>]) -> Result<Self> {
        let mats = states
            .iter()
            .map(|v| Matrix::from_vec(1, v.len(), v.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(mats)
    }

    /// Window ending at time `end` (inclusive) of every trajectory in a
    /// `[traj][component][time]` tensor.
    pub fn from_tensor(t: &crate::datagen::Tensor3, end: usize, n_mem: usize) -> Result<Self> {
        if n_mem == 0 || end + 1 < n_mem || end >= t.n_time() {
            return Err(Error::config(format!(
                "window of {n_mem} ending at {end} does not fit {} samples",
                t.n_time()
            )));
        }
        Self::new((0..n_mem).map(|j| t.time_slice(end - j)).collect())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn batch(&self) -> usize {
        self.states[0].rows()
    }

    pub fn n_full(&self) -> usize {
        self.states[0].cols()
    }

    pub fn latest(&self) -> &Matrix {
        &self.states[0]
    }

    pub fn states(&self) -> impl Iterator<Item = &Matrix> {
        self.states.iter()
    }

    /// Pushes a new most-recent state and drops the oldest.
    pub fn push(&mut self, s: Matrix) {
        self.states.pop_back();
        self.states.push_front(s);
    }
}
