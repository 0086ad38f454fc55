//! Dataset files: `<name>.json` manifest plus `<name>.f64` payload of
//! little-endian doubles in `[traj][component][time]` order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExampleId, Grid, Tensor3, TrainingDataset, TrajectorySet};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Trajectories,
    Chunks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub kind: DatasetKind,
    pub example_id: ExampleId,
    pub n_traj: usize,
    pub n_full: usize,
    pub n_time: usize,
    pub dt: f64,
    pub sigma: f64,
    pub grid: Grid,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clean: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_mem: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rec: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Trajectories(TrajectorySet),
    Chunks(TrainingDataset),
}

/// `(manifest, payload)` paths for a dataset name; any extension on
/// `path` is replaced.
pub fn dataset_paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("json"), path.with_extension("f64"))
}

pub fn write_f64s(path: &Path, values: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_f64s(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::shape(format!(
            "{}: {} bytes is not a whole number of f64 values",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Parses a versioned JSON manifest, rejecting unknown versions before
/// looking at any other field.
pub fn read_versioned_json<T: serde::de::DeserializeOwned>(path: &Path, expected: u32) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Malformed {
        path: path.into(),
        detail: e.to_string(),
    })?;
    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Malformed {
            path: path.into(),
            detail: "missing format_version".into(),
        })?;
    if found != expected as u64 {
        return Err(Error::FormatVersion {
            path: path.into(),
            found: found.min(u32::MAX as u64) as u32,
            expected,
        });
    }
    serde_json::from_value(value).map_err(|e| Error::Malformed {
        path: path.into(),
        detail: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("manifest serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn write(path: &Path, manifest: &Manifest, data: &Tensor3) -> Result<()> {
    let (json, bin) = dataset_paths(path);
    if let Some(dir) = json.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_f64s(&bin, data.as_slice())?;
    write_json(&json, manifest)
}

pub fn write_trajectories(path: &Path, t: &TrajectorySet) -> Result<()> {
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        kind: DatasetKind::Trajectories,
        example_id: t.example,
        n_traj: t.n_traj(),
        n_full: t.n_full(),
        n_time: t.n_time(),
        dt: t.dt,
        sigma: t.sigma,
        grid: t.grid.clone(),
        seed: t.seed,
        clean: Some(t.clean),
        n_mem: None,
        n_rec: None,
        starts: None,
    };
    write(path, &manifest, &t.data)
}

pub fn write_chunks(path: &Path, d: &TrainingDataset) -> Result<()> {
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        kind: DatasetKind::Chunks,
        example_id: d.example,
        n_traj: d.n_traj(),
        n_full: d.n_full(),
        n_time: d.chunk_len(),
        dt: d.dt,
        sigma: d.sigma,
        grid: d.grid.clone(),
        seed: d.seed,
        clean: None,
        n_mem: Some(d.n_mem),
        n_rec: Some(d.n_rec),
        starts: Some(d.starts.clone()),
    };
    write(path, &manifest, &d.chunks)
}

pub fn write_dataset(path: &Path, d: &Dataset) -> Result<()> {
    match d {
        Dataset::Trajectories(t) => write_trajectories(path, t),
        Dataset::Chunks(c) => write_chunks(path, c),
    }
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let (json, bin) = dataset_paths(path);
    let m: Manifest = read_versioned_json(&json, FORMAT_VERSION)?;
    let malformed = |detail: String| Error::Malformed {
        path: json.clone(),
        detail,
    };
    if m.grid.n_grid() != m.n_full {
        return Err(malformed(format!(
            "grid has {} points but n_full is {}",
            m.grid.n_grid(),
            m.n_full
        )));
    }
    let grid = Grid::new(m.grid.dim, m.grid.points).map_err(|e| malformed(e.to_string()))?;
    let values = read_f64s(&bin)?;
    let expected = m.n_traj * m.n_full * m.n_time;
    if values.len() != expected {
        return Err(Error::shape(format!(
            "{}: payload has {} values, manifest implies {expected}",
            bin.display(),
            values.len()
        )));
    }
    let data = Tensor3::from_vec(m.n_traj, m.n_full, m.n_time, values)?;
    match m.kind {
        DatasetKind::Trajectories => Ok(Dataset::Trajectories(TrajectorySet {
            example: m.example_id,
            grid,
            dt: m.dt,
            n_steps: m.n_time.saturating_sub(1),
            data,
            clean: m.clean.unwrap_or(m.sigma == 0.0),
            sigma: m.sigma,
            seed: m.seed,
        })),
        DatasetKind::Chunks => {
            let (n_mem, n_rec) = match (m.n_mem, m.n_rec) {
                (Some(a), Some(b)) if a >= 1 && b >= 1 && a + b == m.n_time => (a, b),
                _ => return Err(malformed("chunk manifest needs n_mem + n_rec == n_time".into())),
            };
            let starts = m.starts.unwrap_or_else(|| vec![0; m.n_traj]);
            if starts.len() != m.n_traj {
                return Err(malformed(format!("{} start indices for {} chunks", starts.len(), m.n_traj)));
            }
            Ok(Dataset::Chunks(TrainingDataset {
                example: m.example_id,
                grid,
                dt: m.dt,
                n_mem,
                n_rec,
                sigma: m.sigma,
                seed: m.seed,
                starts,
                chunks: data,
            }))
        }
    }
}

pub fn read_trajectories(path: &Path) -> Result<TrajectorySet> {
    match read_dataset(path)? {
        Dataset::Trajectories(t) => Ok(t),
        Dataset::Chunks(_) => Err(Error::Malformed {
            path: path.into(),
            detail: "expected trajectories, found chunks".into(),
        }),
    }
}

pub fn read_chunks(path: &Path) -> Result<TrainingDataset> {
    match read_dataset(path)? {
        Dataset::Chunks(c) => Ok(c),
        Dataset::Trajectories(_) => Err(Error::Malformed {
            path: path.into(),
            detail: "expected chunks, found trajectories".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_heat1d, heat1d_grid, sample_chunks};
    use crate::dense::Rng;

    fn sample() -> (TrajectorySet, TrainingDataset) {
        let mut t = gen_heat1d(&heat1d_grid(2), 5, 40, &Rng::new(1));
        t.add_noise(0.1, &mut Rng::new(2)).unwrap();
        let c = sample_chunks(&t, 20, 10, &mut Rng::new(3)).unwrap();
        (t, c)
    }

    #[test]
    fn round_trip_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let (t, c) = sample();
        write_trajectories(&dir.path().join("train"), &t).unwrap();
        write_chunks(&dir.path().join("chunks"), &c).unwrap();
        assert_eq!(read_trajectories(&dir.path().join("train")).unwrap(), t);
        assert_eq!(read_chunks(&dir.path().join("chunks.json")).unwrap(), c);
        assert!(read_chunks(&dir.path().join("train")).is_err());
    }

    #[test]
    fn truncated_payload_is_shape_error() {
        let dir = tempfile::tempdir().unwrap();
        let (t, _) = sample();
        let p = dir.path().join("d");
        write_trajectories(&p, &t).unwrap();
        let bin = p.with_extension("f64");
        let bytes = fs::read(&bin).unwrap();
        fs::write(&bin, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_dataset(&p), Err(Error::Shape(_))));
        fs::write(&bin, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_dataset(&p), Err(Error::Shape(_))));
    }

    #[test]
    fn unknown_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (t, _) = sample();
        let p = dir.path().join("d");
        write_trajectories(&p, &t).unwrap();
        let json = p.with_extension("json");
        let text = fs::read_to_string(&json).unwrap();
        // later versions may change every other field
        fs::write(&json, text.replace("\"format_version\": 1", "\"format_version\": 7").replace("\"kind\"", "\"layout\"")).unwrap();
        match read_dataset(&p) {
            Err(Error::FormatVersion { found, expected, .. }) => assert_eq!((found, expected), (7, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_manifest_field_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (t, _) = sample();
        let p = dir.path().join("d");
        write_trajectories(&p, &t).unwrap();
        let json = p.with_extension("json");
        let text = fs::read_to_string(&json).unwrap();
        fs::write(&json, text.replacen('{', "{\n  \"extra\": 1,", 1)).unwrap();
        assert!(matches!(read_dataset(&p), Err(Error::Malformed { .. })));
    }
}
