//! Checkpoints: `<name>.json` manifest plus `<name>.f64` little-endian
//! payload.
//!
//! Reduced-basis models store `P_in` (row-major `n_red x n_full`), then
//! `P_out` (row-major `n_full x n_red`), then the MLP layer by layer with
//! weights before biases. Nodal models store the five channels, then the
//! assembly network, in the same per-layer order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FlowModel, Mode, NodalConfig, NodalModel, PcfmlConfig, PcfmlModel, ASSEMBLY_SIZES, N_CHANNELS};
use crate::datagen::io::{dataset_paths, read_f64s, read_versioned_json, write_f64s, write_json};
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::nn::Mlp;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Pcfml,
    Nodal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub kind: ModelKind,
    pub n_full: usize,
    pub n_mem: usize,
    pub hidden: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_red: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project_skip: Option<bool>,
    /// Layer sizes of every network, in payload order.
    pub layer_sizes: Vec<Vec<usize>>,
    pub trainable_params: usize,
    pub payload_len: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Pcfml(PcfmlModel),
    Nodal(NodalModel),
}

impl Checkpoint {
    fn manifest_and_payload(&self, seed: u64) -> (CheckpointManifest, Vec<f64>) {
        match self {
            Checkpoint::Pcfml(m) => {
                let c = m.config();
                let mut payload = m.p_in().as_slice().to_vec();
                payload.extend_from_slice(m.p_out().as_slice());
                m.mlp().append_flat(&mut payload);
                let manifest = CheckpointManifest {
                    format_version: CHECKPOINT_VERSION,
                    kind: ModelKind::Pcfml,
                    n_full: c.n_full,
                    n_mem: c.n_mem,
                    hidden: c.hidden,
                    mode: Some(c.mode),
                    n_red: Some(c.n_red),
                    project_skip: Some(c.project_skip),
                    layer_sizes: vec![c.mlp_sizes()],
                    trainable_params: m.count_params(),
                    payload_len: payload.len(),
                    seed,
                };
                (manifest, payload)
            }
            Checkpoint::Nodal(m) => {
                let c = m.config();
                let payload = m.trainable();
                let mut layer_sizes = vec![c.channel_sizes().to_vec(); N_CHANNELS];
                layer_sizes.push(ASSEMBLY_SIZES.to_vec());
                let manifest = CheckpointManifest {
                    format_version: CHECKPOINT_VERSION,
                    kind: ModelKind::Nodal,
                    n_full: c.n_full,
                    n_mem: c.n_mem,
                    hidden: c.hidden,
                    mode: None,
                    n_red: None,
                    project_skip: None,
                    layer_sizes,
                    trainable_params: m.count_params(),
                    payload_len: payload.len(),
                    seed,
                };
                (manifest, payload)
            }
        }
    }
}

pub fn save_checkpoint(path: &Path, model: &Checkpoint, seed: u64) -> Result<()> {
    let (json, bin) = dataset_paths(path);
    if let Some(dir) = json.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let (manifest, payload) = model.manifest_and_payload(seed);
    write_f64s(&bin, &payload)?;
    write_json(&json, &manifest)
}

pub fn load_checkpoint(path: &Path) -> Result<(Checkpoint, CheckpointManifest)> {
    let (json, bin) = dataset_paths(path);
    let m: CheckpointManifest = read_versioned_json(&json, CHECKPOINT_VERSION)?;
    let malformed = |detail: &str| Error::Malformed {
        path: json.clone(),
        detail: detail.to_string(),
    };
    let payload = read_f64s(&bin)?;
    if payload.len() != m.payload_len {
        return Err(Error::shape(format!(
            "{}: payload has {} values, manifest says {}",
            bin.display(),
            payload.len(),
            m.payload_len
        )));
    }
    let model = match m.kind {
        ModelKind::Pcfml => {
            let (Some(mode), Some(n_red), Some(project_skip)) = (m.mode, m.n_red, m.project_skip) else {
                return Err(malformed("reduced-basis checkpoint needs mode, n_red and project_skip"));
            };
            let cfg = PcfmlConfig {
                n_full: m.n_full,
                n_red,
                n_mem: m.n_mem,
                hidden: m.hidden,
                mode,
                project_skip,
            };
            cfg.validate()?;
            let proj = n_red * m.n_full;
            let mut mlp = Mlp::zeros(&cfg.mlp_sizes())?;
            if payload.len() != 2 * proj + mlp.param_count() {
                return Err(Error::shape(format!(
                    "{}: {} values do not fit the declared architecture",
                    bin.display(),
                    payload.len()
                )));
            }
            let p_in = Matrix::from_vec(n_red, m.n_full, payload[..proj].to_vec())?;
            let p_out = Matrix::from_vec(m.n_full, n_red, payload[proj..2 * proj].to_vec())?;
            mlp.load_flat(&payload[2 * proj..])?;
            let p_out = match mode {
                Mode::Unconstrained => Some(p_out),
                _ => {
                    if p_out != p_in.transpose() {
                        return Err(malformed("tied mode checkpoint has P_out != P_in^T"));
                    }
                    None
                }
            };
            Checkpoint::Pcfml(PcfmlModel::from_parts(cfg, p_in, p_out, mlp)?)
        }
        ModelKind::Nodal => {
            let cfg = NodalConfig {
                n_full: m.n_full,
                n_mem: m.n_mem,
                hidden: m.hidden,
            };
            cfg.validate()?;
            if payload.len() != cfg.param_count() {
                return Err(Error::shape(format!(
                    "{}: {} values do not fit the declared architecture",
                    bin.display(),
                    payload.len()
                )));
            }
            let channels = (0..N_CHANNELS)
                .map(|_| Mlp::zeros(&cfg.channel_sizes()))
                .collect::<Result<Vec<_>>>()?;
            let mut model = NodalModel::from_parts(cfg, channels, Mlp::zeros(&ASSEMBLY_SIZES)?)?;
            model.set_trainable(&payload)?;
            Checkpoint::Nodal(model)
        }
    };
    Ok((model, m))
}
