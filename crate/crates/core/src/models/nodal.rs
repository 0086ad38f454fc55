//! Nodal memory baseline
//!
//! Each of the five channels maps the flattened window to a full-grid field
//! (one tanh hidden layer). A small pointwise network shared by every grid
//! point combines the five channel values, and the result is added to the
//! current state.

use serde::{Deserialize, Serialize};

use super::FlowModel;
use crate::dense::{Matrix, Rng};
use crate::error::{Error, Result};
use crate::nn::{param_count, Mlp, MlpGrads, Tape};

pub const N_CHANNELS: usize = 5;
pub const ASSEMBLY_SIZES: [usize; 3] = [N_CHANNELS, N_CHANNELS, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodalConfig {
    pub n_full: usize,
    pub n_mem: usize,
    pub hidden: usize,
}

impl NodalConfig {
    pub fn channel_sizes(&self) -> [usize; 3] {
        [self.n_mem * self.n_full, self.hidden, self.n_full]
    }

    pub fn param_count(&self) -> usize {
        N_CHANNELS * param_count(&self.channel_sizes()) + param_count(&ASSEMBLY_SIZES)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_full == 0 || self.n_mem == 0 || self.hidden == 0 {
            return Err(Error::config("nodal model sizes must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodalModel {
    cfg: NodalConfig,
    channels: Vec<Mlp>,
    assembly: Mlp,
}

#[derive(Debug, Clone)]
pub struct NodalGrads {
    pub channels: Vec<MlpGrads>,
    pub assembly: MlpGrads,
}

#[derive(Debug)]
pub struct NodalTape {
    batch: usize,
    channels: Vec<Tape>,
    assembly: Tape,
}

impl NodalModel {
    /// Glorot-uniform channel weights, then assembly weights.
    pub fn new(cfg: NodalConfig, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        let channels = (0..N_CHANNELS)
            .map(|_| Mlp::new(&cfg.channel_sizes(), rng))
            .collect::<Result<_>>()?;
        let assembly = Mlp::new(&ASSEMBLY_SIZES, rng)?;
        Ok(Self {
            cfg,
            channels,
            assembly,
        })
    }

    pub fn from_parts(cfg: NodalConfig, channels: Vec<Mlp>, assembly: Mlp) -> Result<Self> {
        cfg.validate()?;
        if channels.len() != N_CHANNELS
            || channels.iter().any(|c| c.sizes() != cfg.channel_sizes().as_slice())
            || assembly.sizes() != ASSEMBLY_SIZES.as_slice()
        {
            return Err(Error::shape("nodal parts do not match config"));
        }
        Ok(Self {
            cfg,
            channels,
            assembly,
        })
    }

    pub fn config(&self) -> &NodalConfig {
        &self.cfg
    }

    pub fn channels(&self) -> &[Mlp] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [Mlp] {
        &mut self.channels
    }

    pub fn assembly(&self) -> &Mlp {
        &self.assembly
    }

    pub fn assembly_mut(&mut self) -> &mut Mlp {
        &mut self.assembly
    }

    /// Applies the shared pointwise combiner to channel outputs
    /// (`batch x n_full` each).
    pub fn assemble(&self, fields: &[Matrix]) -> Result<Matrix> {
        Ok(self.assemble_with_tape(fields)?.0)
    }

    fn assemble_with_tape(&self, fields: &[Matrix]) -> Result<(Matrix, Tape)> {
        if fields.len() != N_CHANNELS {
            return Err(Error::shape(format!("assembly takes {N_CHANNELS} fields")));
        }
        let (batch, n) = fields[0].shape();
        if fields.iter().any(|f| f.shape() != (batch, n)) {
            return Err(Error::shape("channel fields differ in shape"));
        }
        let input = Matrix::from_fn(batch * n, N_CHANNELS, |r, c| fields[c].as_slice()[r]);
        let (a, tape) = self.assembly.forward_batch(&input)?;
        Ok((Matrix::from_vec(batch, n, a.into_vec())?, tape))
    }
}

impl FlowModel for NodalModel {
    type Grads = NodalGrads;
    type Tape = NodalTape;

    fn n_full(&self) -> usize {
        self.cfg.n_full
    }

    fn n_mem(&self) -> usize {
        self.cfg.n_mem
    }

    fn count_params(&self) -> usize {
        self.cfg.param_count()
    }

    fn trainable(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count_params());
        for c in &self.channels {
            c.append_flat(&mut out);
        }
        self.assembly.append_flat(&mut out);
        out
    }

    fn set_trainable(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.count_params() {
            return Err(Error::shape(format!(
                "model has {} trainable parameters, got {}",
                self.count_params(),
                flat.len()
            )));
        }
        let mut at = 0;
        for c in &mut self.channels {
            at += c.load_flat(&flat[at..])?;
        }
        self.assembly.load_flat(&flat[at..])?;
        Ok(())
    }

    fn zero_grads(&self) -> NodalGrads {
        NodalGrads {
            channels: self.channels.iter().map(MlpGrads::zeros_like).collect(),
            assembly: MlpGrads::zeros_like(&self.assembly),
        }
    }

    fn flatten_grads(&self, g: &NodalGrads) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count_params());
        for c in &g.channels {
            c.append_flat(&mut out);
        }
        g.assembly.append_flat(&mut out);
        out
    }

    fn encode(&self, state: &Matrix) -> Matrix {
        state.clone()
    }

    fn encode_backward(&self, _state: &Matrix, d_feat: &Matrix, _g: &mut NodalGrads) -> Matrix {
        d_feat.clone()
    }

    fn advance(&self, states: &[&Matrix], feats: &[&Matrix]) -> Result<(Matrix, NodalTape)> {
        let (n_mem, n_full) = (self.cfg.n_mem, self.cfg.n_full);
        if feats.len() != n_mem || states.is_empty() {
            return Err(Error::shape(format!(
                "window holds {} states, model memory is {n_mem}",
                feats.len()
            )));
        }
        let batch = feats[0].rows();
        if feats.iter().any(|f| f.shape() != (batch, n_full)) {
            return Err(Error::shape("window has inconsistent shapes"));
        }
        // most recent state first
        let mut x = Matrix::zeros(batch, n_mem * n_full);
        for b in 0..batch {
            let row = x.row_mut(b);
            for (j, f) in feats.iter().enumerate() {
                row[j * n_full..(j + 1) * n_full].copy_from_slice(f.row(b));
            }
        }
        let mut fields = Vec::with_capacity(N_CHANNELS);
        let mut tapes = Vec::with_capacity(N_CHANNELS);
        for c in &self.channels {
            let (f, t) = c.forward_batch(&x)?;
            fields.push(f);
            tapes.push(t);
        }
        let (mut out, assembly) = self.assemble_with_tape(&fields)?;
        out.add_assign(states[0]);
        Ok((
            out,
            NodalTape {
                batch,
                channels: tapes,
                assembly,
            },
        ))
    }

    fn advance_backward(
        &self,
        tape: &NodalTape,
        d_out: &Matrix,
        g: &mut NodalGrads,
    ) -> Result<(Option<Matrix>, Vec<Matrix>)> {
        let (n_mem, n_full, batch) = (self.cfg.n_mem, self.cfg.n_full, tape.batch);
        let da = Matrix::from_vec(batch * n_full, 1, d_out.as_slice().to_vec())?;
        let d_in = self.assembly.backward_batch(&tape.assembly, &da, &mut g.assembly)?;
        let mut dx = Matrix::zeros(batch, n_mem * n_full);
        for (c, (net, t)) in self.channels.iter().zip(&tape.channels).enumerate() {
            let df = Matrix::from_fn(batch, n_full, |b, i| d_in[(b * n_full + i, c)]);
            dx.add_assign(&net.backward_batch(t, &df, &mut g.channels[c])?);
        }
        let d_feats = (0..n_mem)
            .map(|j| Matrix::from_fn(batch, n_full, |b, i| dx[(b, j * n_full + i)]))
            .collect();
        Ok((Some(d_out.clone()), d_feats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Window;

    #[test]
    fn table_counts() {
        let c = |n_full, hidden| {
            NodalConfig {
                n_full,
                n_mem: 20,
                hidden,
            }
            .param_count()
        };
        assert_eq!(c(100, 100), 1_051_036);
        assert_eq!(c(50, 50), 263_036);
        assert_eq!(c(1537, 13), 2_105_791);
        assert_eq!(c(1537, 5), 814_671);
        assert_eq!(param_count(&ASSEMBLY_SIZES), 36);
    }

    #[test]
    fn zero_network_is_identity() {
        let cfg = NodalConfig {
            n_full: 6,
            n_mem: 3,
            hidden: 4,
        };
        let mut m = NodalModel::new(cfg, &mut Rng::new(1)).unwrap();
        let zeros = vec![0.0; m.count_params()];
        m.set_trainable(&zeros).unwrap();
        let mut rng = Rng::new(2);
        let w: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..6).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect();
        assert_eq!(m.step(&Window::from_vectors(&w).unwrap()).unwrap(), w[0]);
    }

    #[test]
    fn assembly_is_pointwise_and_permutation_equivariant() {
        let cfg = NodalConfig {
            n_full: 7,
            n_mem: 2,
            hidden: 3,
        };
        let m = NodalModel::new(cfg, &mut Rng::new(4)).unwrap();
        let mut rng = Rng::new(5);
        let fields: Vec<Matrix> = (0..N_CHANNELS)
            .map(|_| Matrix::from_fn(2, 7, |_, _| rng.uniform(-2.0, 2.0)))
            .collect();
        let out = m.assemble(&fields).unwrap();
        let perm = [3usize, 0, 6, 1, 5, 2, 4];
        let permuted: Vec<Matrix> = fields
            .iter()
            .map(|f| Matrix::from_fn(2, 7, |b, i| f[(b, perm[i])]))
            .collect();
        let out_p = m.assemble(&permuted).unwrap();
        for b in 0..2 {
            for i in 0..7 {
                assert_eq!(out_p[(b, i)], out[(b, perm[i])]);
                let point: Vec<f64> = fields.iter().map(|f| f[(b, i)]).collect();
                assert_eq!(m.assembly().forward(&point).unwrap().0[0], out[(b, i)]);
            }
        }
    }

    #[test]
    fn flat_round_trip() {
        let cfg = NodalConfig {
            n_full: 4,
            n_mem: 2,
            hidden: 3,
        };
        let mut m = NodalModel::new(cfg, &mut Rng::new(9)).unwrap();
        let flat: Vec<f64> = (0..m.count_params()).map(|i| i as f64 * 1e-3).collect();
        m.set_trainable(&flat).unwrap();
        assert_eq!(m.trainable(), flat);
        assert!(m.set_trainable(&flat[1..]).is_err());
    }
}
