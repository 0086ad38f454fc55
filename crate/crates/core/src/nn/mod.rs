//! Minimal tanh MLP with exact reverse-mode gradients, and Adam.

mod adam;
mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use mlp::{glorot, param_count, Mlp, MlpGrads, Tape};
