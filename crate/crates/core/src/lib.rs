//! Flow map learning of partially observed PDEs in a reduced linear basis.
//!
//! Nodal measurements are projected onto a low-dimensional basis, a memory
//! network advances the reduced coordinates one step, and the update is
//! expanded back to the grid. Modules, bottom to top:
//!
//! - [`dense`]: matrices, thin SVD/QR, seeded random streams
//! - [`nn`]: tanh MLP with reverse-mode gradients and Adam
//! - [`datagen`]: trajectories for the three benchmark PDEs, chunking, noise, dataset files
//! - [`reduction`]: data matrix, singular spectrum, fixed basis, memory diagnostic
//! - [`models`]: the reduced-basis step model and the nodal baseline
//! - [`train`]: recurrent loss, training, ensembles, rollout and error curves

pub mod datagen;
pub mod dense;
pub mod error;
pub mod models;
pub mod nn;
pub mod reduction;
pub mod train;

pub use error::{Error, Result};
