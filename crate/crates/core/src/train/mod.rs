//! Recurrent-loss training, ensembles and rollout evaluation.

mod fit;
mod loss;
mod rollout;

pub use fit::{train, train_ensemble, train_ensemble_seeds, train_slices, TrainConfig};
pub use loss::{recurrent_loss, recurrent_loss_slices, LossEval};
pub use rollout::{avg_l2_error, evaluate, rollout, Ensemble, ErrorCurve, Rollout};
