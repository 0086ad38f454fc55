use std::path::{Path, PathBuf};

use pcfml::datagen::{ExampleId, Wave2dSolverConfig, DT};
use pcfml::models::Mode;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A value that may differ between the noiseless and noisy settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerNoise<T> {
    Same(T),
    Split(NoiseSplit<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSplit<T> {
    pub clean: T,
    pub noisy: T,
}

impl<T: Copy> PerNoise<T> {
    pub fn at(&self, sigma: f64) -> T {
        match *self {
            PerNoise::Same(v) => v,
            PerNoise::Split(NoiseSplit { clean, noisy }) => {
                if sigma > 0.0 {
                    noisy
                } else {
                    clean
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Fixed,
    Constrained,
    Unconstrained,
    Nodal,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Fixed => "fixed",
            Family::Constrained => "constrained",
            Family::Unconstrained => "unconstrained",
            Family::Nodal => "nodal",
        }
    }

    pub fn mode(self) -> Option<Mode> {
        match self {
            Family::Fixed => Some(Mode::Fixed),
            Family::Constrained => Some(Mode::Constrained),
            Family::Unconstrained => Some(Mode::Unconstrained),
            Family::Nodal => None,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Epoch and member counts that replace the shared ones for one family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub ensemble: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub nx: usize,
    pub ny: usize,
    pub substep: f64,
    pub substeps_per_obs: usize,
}

impl From<SolverSection> for Wave2dSolverConfig {
    fn from(s: SolverSection) -> Self {
        Wave2dSolverConfig {
            nx: s.nx,
            ny: s.ny,
            substep: s.substep,
            substeps_per_obs: s.substeps_per_obs,
        }
    }
}

fn default_families() -> Vec<Family> {
    vec![Family::Fixed, Family::Constrained, Family::Unconstrained, Family::Nodal]
}
fn default_true() -> bool {
    true
}
fn default_n_mem() -> usize {
    20
}
fn default_n_rec() -> usize {
    10
}
fn default_n_traj() -> usize {
    100
}
fn default_dt() -> f64 {
    DT
}
fn default_epochs() -> usize {
    10_000
}
fn default_lr() -> f64 {
    1e-3
}
fn default_lambda() -> f64 {
    1e-2
}
fn default_ensemble() -> usize {
    10
}

/// Experiment description as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub example_id: ExampleId,
    #[serde(default)]
    pub sigma: f64,
    pub n_red: PerNoise<usize>,
    #[serde(default = "default_families")]
    pub models: Vec<Family>,
    #[serde(default = "default_true")]
    pub project_skip: bool,
    #[serde(default = "default_n_mem")]
    pub n_mem: usize,
    #[serde(default = "default_n_rec")]
    pub n_rec: usize,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default = "default_n_traj")]
    pub n_test: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Observation steps per training trajectory; the example default when absent.
    #[serde(default)]
    pub n_steps: Option<usize>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    /// Width of the three hidden layers of the reduced network.
    pub hidden: PerNoise<usize>,
    /// Hidden width of each nodal channel.
    pub nodal_hidden: PerNoise<usize>,
    #[serde(default)]
    pub nodal_budget: Budget,
    pub horizon: PerNoise<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Seed of the random heat observation grid.
    #[serde(default)]
    pub grid_seed: u64,
    #[serde(default)]
    pub solver: Option<SolverSection>,
    /// Rollout steps written to `trajectory_<l>.csv`.
    #[serde(default)]
    pub snapshot_steps: Vec<usize>,
    #[serde(default)]
    pub snapshot_trajectories: Vec<usize>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// Command-line replacements, recorded in every manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<Family>>,
}

/// Concrete settings for one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub example_id: ExampleId,
    pub sigma: f64,
    pub n_red: usize,
    pub models: Vec<Family>,
    pub project_skip: bool,
    pub n_mem: usize,
    pub n_rec: usize,
    pub n_traj: usize,
    pub n_test: usize,
    pub dt: f64,
    pub n_steps: usize,
    /// Samples per test trajectory: enough for the window plus the horizon.
    pub test_len: usize,
    pub epochs: usize,
    pub lr: f64,
    pub lambda: f64,
    pub ensemble: usize,
    pub hidden: usize,
    pub nodal_hidden: usize,
    pub nodal_epochs: usize,
    pub nodal_ensemble: usize,
    pub horizon: usize,
    pub seed: u64,
    pub grid_seed: u64,
    pub solver: Option<SolverSection>,
    pub snapshot_steps: Vec<usize>,
    pub snapshot_trajectories: Vec<usize>,
    pub out_dir: PathBuf,
}

impl Resolved {
    pub fn epochs_for(&self, f: Family) -> usize {
        if f == Family::Nodal {
            self.nodal_epochs
        } else {
            self.epochs
        }
    }

    pub fn ensemble_for(&self, f: Family) -> usize {
        if f == Family::Nodal {
            self.nodal_ensemble
        } else {
            self.ensemble
        }
    }

    pub fn solver_config(&self) -> Wave2dSolverConfig {
        self.solver.map(Into::into).unwrap_or_default()
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn resolve(&self, ov: &Overrides) -> Result<Resolved, CliError> {
        let sigma = ov.sigma.unwrap_or(self.sigma);
        let n_steps = self.n_steps.unwrap_or(self.example_id.default_steps());
        let horizon = self.horizon.at(sigma);
        let epochs = ov.epochs.unwrap_or(self.epochs);
        let ensemble = ov.ensemble.unwrap_or(self.ensemble);
        let r = Resolved {
            example_id: self.example_id,
            sigma,
            n_red: self.n_red.at(sigma),
            models: ov.models.clone().unwrap_or_else(|| self.models.clone()),
            project_skip: self.project_skip,
            n_mem: self.n_mem,
            n_rec: self.n_rec,
            n_traj: self.n_traj,
            n_test: self.n_test,
            dt: self.dt,
            n_steps,
            test_len: (n_steps + 1).max(self.n_mem + horizon),
            epochs,
            lr: self.lr,
            lambda: self.lambda,
            ensemble,
            hidden: self.hidden.at(sigma),
            nodal_hidden: self.nodal_hidden.at(sigma),
            // command-line budgets apply to every family
            nodal_epochs: ov.epochs.or(self.nodal_budget.epochs).unwrap_or(epochs),
            nodal_ensemble: ov.ensemble.or(self.nodal_budget.ensemble).unwrap_or(ensemble),
            horizon,
            seed: ov.seed.unwrap_or(self.seed),
            grid_seed: self.grid_seed,
            solver: self.solver,
            snapshot_steps: self.snapshot_steps.clone(),
            snapshot_trajectories: self.snapshot_trajectories.clone(),
            out_dir: ov
                .out_dir
                .clone()
                .or_else(|| self.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from(format!("runs/{}", self.example_id))),
        };
        r.validate()?;
        Ok(r)
    }
}

impl Resolved {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.sigma >= 0.0) {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if (self.dt - DT).abs() > 1e-15 {
            return bad(format!("dt is fixed at {DT}, got {}", self.dt));
        }
        if self.n_mem == 0 || self.n_rec == 0 || self.n_traj == 0 || self.n_test == 0 {
            return bad("n_mem, n_rec, n_traj and n_test must be at least 1".into());
        }
        if self.n_steps + 1 < self.n_mem + self.n_rec {
            return bad(format!(
                "trajectories of {} steps are shorter than a chunk of {}",
                self.n_steps,
                self.n_mem + self.n_rec
            ));
        }
        if self.models.is_empty() {
            return bad("no model families selected".into());
        }
        if self.ensemble == 0 || self.nodal_ensemble == 0 {
            return bad("ensemble size must be at least 1".into());
        }
        if !(self.lr > 0.0) || !(self.lambda >= 0.0) {
            return bad("lr must be > 0 and lambda >= 0".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if let Some(&s) = self.snapshot_steps.iter().find(|&&s| s == 0 || s > self.horizon) {
            return bad(format!("snapshot step {s} outside 1..={}", self.horizon));
        }
        if let Some(&l) = self.snapshot_trajectories.iter().find(|&&l| l >= self.n_test) {
            return bad(format!("snapshot trajectory {l} outside 0..{}", self.n_test));
        }
        if self.example_id == ExampleId::Wave2d {
            self.solver_config()
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
        } else if self.solver.is_some() {
            return bad("solver settings only apply to wave2d".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "example_id": "heat1d",
        "n_red": 2,
        "hidden": 10,
        "nodal_hidden": 100,
        "horizon": 500
    }"#;

    #[test]
    fn defaults_follow_shared_parameters() {
        let c: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        let r = c.resolve(&Overrides::default()).unwrap();
        assert_eq!((r.n_mem, r.n_rec, r.n_traj, r.epochs, r.ensemble), (20, 10, 100, 10_000, 10));
        assert_eq!((r.lr, r.lambda, r.dt), (1e-3, 1e-2, 1e-2));
        assert_eq!(r.n_steps, 200);
        assert_eq!(r.test_len, 520);
        assert!(r.project_skip);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"n_red\"", "\"n_rde\": 2, \"n_red\"");
        assert!(serde_json::from_str::<ExperimentConfig>(&text).is_err());
        let text = MINIMAL.replace("\"n_red\": 2", "\"n_red\": {\"clean\": 2, \"noisy\": 1, \"other\": 3}");
        assert!(serde_json::from_str::<ExperimentConfig>(&text).is_err());
    }

    #[test]
    fn noise_split_and_overrides() {
        let text = MINIMAL.replace("\"n_red\": 2", "\"n_red\": {\"clean\": 13, \"noisy\": 5}");
        let c: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(c.resolve(&Overrides::default()).unwrap().n_red, 13);
        let ov = Overrides {
            sigma: Some(0.1),
            epochs: Some(7),
            ..Default::default()
        };
        let r = c.resolve(&ov).unwrap();
        assert_eq!((r.n_red, r.epochs, r.nodal_epochs), (5, 7, 7));
        assert!(c
            .resolve(&Overrides {
                sigma: Some(-1.0),
                ..Default::default()
            })
            .is_err());
    }
}
