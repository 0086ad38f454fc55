use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;
use pcfml::datagen::{
    self, gen_heat1d, gen_wave1d, gen_wave2d, halton_grid, heat1d_grid, io as dio, periodic_uniform_grid,
    ExampleId, Grid, TrainingDataset, TrajectorySet, WAVE1D_N_GRID, WAVE2D_N_GRID,
};
use pcfml::dense::{Matrix, Rng};
use pcfml::models::{
    load_checkpoint, save_checkpoint, Checkpoint, FlowModel, NodalConfig, NodalModel, PcfmlConfig, PcfmlModel,
};
use pcfml::nn::AdamConfig;
use pcfml::reduction::{
    assemble_data_matrix, fixed_basis_with_report, memory_qr_diagnostic, noise_floor, MemoryReport, ReducedBasis,
    SpectrumReport,
};
use pcfml::train::{evaluate, train_ensemble, Ensemble, ErrorCurve, Rollout, TrainConfig};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Family, Overrides, Resolved};
use crate::tables::{fmt_f64, Table};
use crate::CliError;

/// Sub-streams of the root seed.
pub const TRAIN_STREAM: u64 = 0;
pub const TEST_STREAM: u64 = 1;
pub const CHUNK_STREAM: u64 = 2;
pub const TRAIN_NOISE_STREAM: u64 = 3;
pub const TEST_NOISE_STREAM: u64 = 4;

/// Ranks for which truncation errors are reported.
const SPECTRUM_ERROR_RANKS: usize = 50;

#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
    pub fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }
    pub fn train_set(&self) -> PathBuf {
        self.data_dir().join("train")
    }
    pub fn chunks(&self) -> PathBuf {
        self.data_dir().join("chunks")
    }
    pub fn test_clean(&self) -> PathBuf {
        self.data_dir().join("test_clean")
    }
    pub fn test_observed(&self) -> PathBuf {
        self.data_dir().join("test_observed")
    }
    pub fn reduce_dir(&self) -> PathBuf {
        self.root.join("reduce")
    }
    pub fn spectrum_csv(&self) -> PathBuf {
        self.reduce_dir().join("spectrum.csv")
    }
    pub fn basis_csv(&self) -> PathBuf {
        self.reduce_dir().join("basis.csv")
    }
    pub fn memory_csv(&self) -> PathBuf {
        self.reduce_dir().join("memory.csv")
    }
    pub fn train_dir(&self, f: Family) -> PathBuf {
        self.root.join("train").join(f.as_str())
    }
    /// Checkpoint stem; the files are `<stem>.json` and `<stem>.f64`.
    pub fn member(&self, f: Family, i: usize) -> PathBuf {
        self.train_dir(f).join(format!("member_{i}"))
    }
    pub fn predict_dir(&self, f: Family) -> PathBuf {
        self.root.join("predict").join(f.as_str())
    }
    pub fn errors_csv(&self, f: Family) -> PathBuf {
        self.predict_dir(f).join("errors.csv")
    }
    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }
}

/// A resolved configuration bound to its output directory.
#[derive(Debug, Clone)]
pub struct Run {
    pub cfg: Resolved,
    pub overrides: Overrides,
    pub source: Option<PathBuf>,
    pub layout: Layout,
}

impl Run {
    pub fn new(cfg: &ExperimentConfig, overrides: Overrides, source: Option<PathBuf>) -> Result<Self, CliError> {
        let resolved = cfg.resolve(&overrides)?;
        let layout = Layout::new(resolved.out_dir.clone());
        Ok(Self {
            cfg: resolved,
            overrides,
            source,
            layout,
        })
    }

    pub fn from_file(path: &Path, overrides: Overrides) -> Result<Self, CliError> {
        Self::new(&ExperimentConfig::load(path)?, overrides, Some(path.to_path_buf()))
    }

    fn write_manifest(&self, dir: &Path, stage: &str, extra: serde_json::Value) -> Result<(), CliError> {
        let m = json!({
            "stage": stage,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "config_source": self.source,
            "overrides": self.overrides,
            "config": self.cfg,
            "seeds": {
                "root": self.cfg.seed,
                "grid": self.cfg.grid_seed,
                "streams": {
                    "train": TRAIN_STREAM,
                    "test": TEST_STREAM,
                    "chunks": CHUNK_STREAM,
                    "train_noise": TRAIN_NOISE_STREAM,
                    "test_noise": TEST_NOISE_STREAM,
                },
            },
            "stage_info": extra,
        });
        dio::write_json(&dir.join("manifest.json"), &m)?;
        Ok(())
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn require(path: &Path, what: &'static str, stage: &'static str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Missing {
            what,
            stage,
            path: path.into(),
        })
    }
}

fn read_set(path: &Path, what: &'static str) -> Result<TrajectorySet, CliError> {
    require(&dio::dataset_paths(path).0, what, "generate")?;
    Ok(dio::read_trajectories(path)?)
}

pub fn observation_grid(r: &Resolved) -> Grid {
    match r.example_id {
        ExampleId::Heat1d => heat1d_grid(r.grid_seed),
        ExampleId::Wave1d => periodic_uniform_grid(WAVE1D_N_GRID),
        ExampleId::Wave2d => halton_grid(WAVE2D_N_GRID),
    }
}

fn simulate(r: &Resolved, grid: &Grid, n_traj: usize, n_steps: usize, rng: &Rng) -> Result<TrajectorySet, CliError> {
    Ok(match r.example_id {
        ExampleId::Heat1d => gen_heat1d(grid, n_traj, n_steps, rng),
        ExampleId::Wave1d => gen_wave1d(grid, n_traj, n_steps, rng),
        ExampleId::Wave2d => gen_wave2d(grid, n_traj, n_steps, r.solver_config(), rng)?,
    })
}

#[derive(Debug, Clone)]
pub struct Generated {
    /// Observed training trajectories (noisy when `sigma > 0`).
    pub train: TrajectorySet,
    pub chunks: TrainingDataset,
    pub test_clean: TrajectorySet,
    pub test_observed: TrajectorySet,
}

/// Simulates training and test trajectories, cuts chunks and adds noise.
pub fn generate_data(r: &Resolved) -> Result<Generated, CliError> {
    let root = Rng::new(r.seed);
    let grid = observation_grid(r);
    let mut train = simulate(r, &grid, r.n_traj, r.n_steps, &root.derive(TRAIN_STREAM))?;
    train.add_noise(r.sigma, &mut root.derive(TRAIN_NOISE_STREAM))?;
    let chunks = datagen::sample_chunks(&train, r.n_mem, r.n_rec, &mut root.derive(CHUNK_STREAM))?;
    let test_clean = simulate(r, &grid, r.n_test, r.test_len - 1, &root.derive(TEST_STREAM))?;
    let mut test_observed = test_clean.clone();
    test_observed.add_noise(r.sigma, &mut root.derive(TEST_NOISE_STREAM))?;
    Ok(Generated {
        train,
        chunks,
        test_clean,
        test_observed,
    })
}

pub fn generate(run: &Run) -> Result<Generated, CliError> {
    let r = &run.cfg;
    info!("generate: {} with sigma {}", r.example_id, r.sigma);
    let g = generate_data(r)?;
    let l = &run.layout;
    create_dir(&l.data_dir())?;
    dio::write_trajectories(&l.train_set(), &g.train)?;
    dio::write_chunks(&l.chunks(), &g.chunks)?;
    dio::write_trajectories(&l.test_clean(), &g.test_clean)?;
    dio::write_trajectories(&l.test_observed(), &g.test_observed)?;
    run.write_manifest(
        &l.data_dir(),
        "generate",
        json!({
            "n_full": g.train.n_full(),
            "train_shape": [g.train.n_traj(), g.train.n_full(), g.train.n_time()],
            "chunk_shape": [g.chunks.n_traj(), g.chunks.n_full(), g.chunks.chunk_len()],
            "test_shape": [g.test_clean.n_traj(), g.test_clean.n_full(), g.test_clean.n_time()],
        }),
    )?;
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct Reduced {
    pub basis: ReducedBasis,
    pub memory: MemoryReport,
    /// Singular values above `max(1e-10 sigma_1, noise floor)`.
    pub recommended_rank: usize,
    pub noise_floor: f64,
}

fn coord_names(dim: usize) -> &'static [&'static str] {
    if dim == 1 {
        &["x"]
    } else {
        &["x", "y"]
    }
}

pub fn reduce(run: &Run) -> Result<Reduced, CliError> {
    let r = &run.cfg;
    let l = &run.layout;
    require(&dio::dataset_paths(&l.chunks()).0, "training chunks", "generate")?;
    let chunks = dio::read_chunks(&l.chunks())?;
    let train = read_set(&l.train_set(), "training trajectories")?;
    let d = assemble_data_matrix(&chunks)?;
    let ranks = SPECTRUM_ERROR_RANKS.min(d.rows().min(d.cols()));
    info!("reduce: data matrix {}x{}, n_red {}", d.rows(), d.cols(), r.n_red);
    let basis = fixed_basis_with_report(&d, r.n_red, ranks.max(r.n_red))?;
    let memory = memory_qr_diagnostic(&train)?;
    let s = &basis.source_spectrum;
    let floor = noise_floor(d.rows(), d.cols(), r.sigma);
    let threshold = floor.max(1e-10 * s.singular_values.first().copied().unwrap_or(0.0));
    let recommended_rank = s.singular_values.iter().take_while(|&&v| v > threshold).count();

    create_dir(&l.reduce_dir())?;
    let mut t = Table::new(["rank", "sigma", "rel_sigma", "frob_err", "max_err"]);
    for (i, (&sv, &rel)) in s.singular_values.iter().zip(&s.relative_values).enumerate() {
        let err = |v: &[f64]| v.get(i).map_or(String::new(), |&e| fmt_f64(e));
        t.push(vec![
            (i + 1).to_string(),
            fmt_f64(sv),
            fmt_f64(rel),
            err(&s.frob_errors),
            err(&s.max_errors),
        ]);
    }
    t.write(&l.spectrum_csv())?;

    let names = coord_names(chunks.grid.dim);
    let header = names
        .iter()
        .map(|s| s.to_string())
        .chain((1..=r.n_red).map(|j| format!("b_{j}")));
    let mut t = Table::new(header);
    for (i, p) in chunks.grid.points.iter().enumerate() {
        let row = p
            .iter()
            .map(|&c| fmt_f64(c))
            .chain((0..r.n_red).map(|j| fmt_f64(basis.v_red[(i, j)])))
            .collect();
        t.push(row);
    }
    t.write(&l.basis_csv())?;

    let mut t = Table::new(["k", "r_diag", "relative"]);
    for (k, (&rd, &rel)) in memory.r_diag.iter().zip(&memory.relative).enumerate() {
        t.push(vec![k.to_string(), fmt_f64(rd), fmt_f64(rel)]);
    }
    t.write(&l.memory_csv())?;

    run.write_manifest(
        &l.reduce_dir(),
        "reduce",
        json!({
            "data_matrix": [d.rows(), d.cols()],
            "n_red": r.n_red,
            "recommended_rank": recommended_rank,
            "noise_floor": floor,
            "captured_energy": captured_energy(s, r.n_red),
        }),
    )?;
    Ok(Reduced {
        basis,
        memory,
        recommended_rank,
        noise_floor: floor,
    })
}

fn captured_energy(s: &SpectrumReport, r: usize) -> f64 {
    let total: f64 = s.singular_values.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return 1.0;
    }
    s.singular_values[..r.min(s.singular_values.len())].iter().map(|v| v * v).sum::<f64>() / total
}

/// Reads the basis and spectrum written by [`reduce`].
pub fn load_basis(layout: &Layout) -> Result<ReducedBasis, CliError> {
    let (bp, sp) = (layout.basis_csv(), layout.spectrum_csv());
    require(&bp, "reduced basis", "reduce")?;
    require(&sp, "singular spectrum", "reduce")?;
    let bt = Table::read(&bp)?;
    let cols: Vec<usize> = (0..bt.header.len()).filter(|&c| bt.header[c].starts_with("b_")).collect();
    if cols.is_empty() {
        return Err(CliError::table(bp, "no basis columns"));
    }
    let mut v_red = Matrix::zeros(bt.rows.len(), cols.len());
    for i in 0..bt.rows.len() {
        for (j, &c) in cols.iter().enumerate() {
            v_red[(i, j)] = bt.float(&bp, i, c)?;
        }
    }
    let st = Table::read(&sp)?;
    let singular_values = st.float_column(&sp, "sigma")?;
    let relative_values = st.float_column(&sp, "rel_sigma")?;
    let optional = |name: &str| -> Result<Vec<f64>, CliError> {
        let c = st
            .column_index(name)
            .ok_or_else(|| CliError::table(sp.clone(), format!("no column `{name}`")))?;
        (0..st.rows.len())
            .take_while(|&r| !st.rows[r][c].is_empty())
            .map(|r| st.float(&sp, r, c))
            .collect()
    };
    Ok(ReducedBasis {
        n_red: cols.len(),
        v_red,
        source_spectrum: SpectrumReport {
            singular_values,
            relative_values,
            frob_errors: optional("frob_err")?,
            max_errors: optional("max_err")?,
        },
    })
}

pub fn pcfml_config(r: &Resolved, n_full: usize, f: Family) -> Option<PcfmlConfig> {
    Some(PcfmlConfig {
        n_full,
        n_red: r.n_red,
        n_mem: r.n_mem,
        hidden: r.hidden,
        mode: f.mode()?,
        project_skip: r.project_skip,
    })
}

pub fn nodal_config(r: &Resolved, n_full: usize) -> NodalConfig {
    NodalConfig {
        n_full,
        n_mem: r.n_mem,
        hidden: r.nodal_hidden,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainedFamily {
    pub family: Family,
    pub params: usize,
    pub member_seeds: Vec<u64>,
    pub final_losses: Vec<f64>,
}

pub fn train(run: &Run) -> Result<Vec<TrainedFamily>, CliError> {
    let l = &run.layout;
    require(&dio::dataset_paths(&l.chunks()).0, "training chunks", "generate")?;
    let chunks = dio::read_chunks(&l.chunks())?;
    let basis = if run.cfg.models.contains(&Family::Fixed) {
        Some(load_basis(l)?)
    } else {
        None
    };
    run.cfg
        .models
        .iter()
        .map(|&f| {
            train_family(run, f, &chunks, basis.as_ref()).map_err(|e| CliError::Family {
                stage: "train",
                family: f,
                source: Box::new(e),
            })
        })
        .collect()
}

fn save_members<M: Clone>(
    run: &Run,
    f: Family,
    e: &Ensemble<M>,
    wrap: impl Fn(M) -> Checkpoint,
    seeds: &[u64],
) -> Result<(), CliError>
where
    M: FlowModel,
{
    for (i, (m, &seed)) in e.members().iter().zip(seeds).enumerate() {
        save_checkpoint(&run.layout.member(f, i), &wrap(m.clone()), seed)?;
    }
    Ok(())
}

fn train_family(
    run: &Run,
    f: Family,
    chunks: &TrainingDataset,
    basis: Option<&ReducedBasis>,
) -> Result<TrainedFamily, CliError> {
    let r = &run.cfg;
    let n_full = chunks.n_full();
    let tc = TrainConfig {
        epochs: r.epochs_for(f),
        adam: AdamConfig {
            lr: r.lr,
            ..AdamConfig::default()
        },
        lambda: r.lambda,
        seed: r.seed,
    };
    let n = r.ensemble_for(f);
    let seeds: Vec<u64> = (0..n as u64).map(|i| tc.seed.wrapping_add(i)).collect();
    let dir = run.layout.train_dir(f);
    create_dir(&dir)?;
    info!("train: {f}, {n} member(s) x {} epochs", tc.epochs);
    let (params, histories) = match pcfml_config(r, n_full, f) {
        Some(pc) => {
            let b = if f == Family::Fixed { basis } else { None };
            let (e, h) = train_ensemble(|rng| PcfmlModel::new(pc, b, rng), chunks, &tc, n)?;
            save_members(run, f, &e, Checkpoint::Pcfml, &seeds)?;
            (e.members()[0].count_params(), h)
        }
        None => {
            let nc = nodal_config(r, n_full);
            let (e, h) = train_ensemble(|rng| NodalModel::new(nc, rng), chunks, &tc, n)?;
            save_members(run, f, &e, Checkpoint::Nodal, &seeds)?;
            (e.members()[0].count_params(), h)
        }
    };
    let mut t = Table::new(std::iter::once("epoch".to_string()).chain((0..n).map(|i| format!("member_{i}"))));
    for epoch in 0..tc.epochs {
        t.push(
            std::iter::once(epoch.to_string())
                .chain(histories.iter().map(|h| fmt_f64(h[epoch])))
                .collect(),
        );
    }
    t.write(&dir.join("loss_history.csv"))?;
    let out = TrainedFamily {
        family: f,
        params,
        member_seeds: seeds,
        final_losses: histories.iter().map(|h| h.last().copied().unwrap_or(f64::NAN)).collect(),
    };
    run.write_manifest(
        &dir,
        "train",
        json!({
            "family": f,
            "params": params,
            "epochs": tc.epochs,
            "members": n,
            "member_seeds": out.member_seeds,
        }),
    )?;
    Ok(out)
}

/// Loads the trained members of one family.
pub fn load_members(layout: &Layout, f: Family, n: usize) -> Result<Vec<Checkpoint>, CliError> {
    (0..n)
        .map(|i| {
            let stem = layout.member(f, i);
            require(&dio::dataset_paths(&stem).0, "checkpoint", "train")?;
            Ok(load_checkpoint(&stem)?.0)
        })
        .collect()
}

pub fn pcfml_ensemble(members: Vec<Checkpoint>) -> Result<Ensemble<PcfmlModel>, CliError> {
    let ms = members
        .into_iter()
        .map(|c| match c {
            Checkpoint::Pcfml(m) => Ok(m),
            Checkpoint::Nodal(_) => Err(CliError::Config("expected a reduced-basis checkpoint".into())),
        })
        .collect::<Result<_, _>>()?;
    Ok(Ensemble::new(ms)?)
}

pub fn nodal_ensemble(members: Vec<Checkpoint>) -> Result<Ensemble<NodalModel>, CliError> {
    let ms = members
        .into_iter()
        .map(|c| match c {
            Checkpoint::Nodal(m) => Ok(m),
            Checkpoint::Pcfml(_) => Err(CliError::Config("expected a nodal checkpoint".into())),
        })
        .collect::<Result<_, _>>()?;
    Ok(Ensemble::new(ms)?)
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub family: Family,
    pub params: usize,
    pub rollout: Rollout,
    pub curve: ErrorCurve,
}

#[derive(Debug, Clone, Serialize)]
struct PredictSummary {
    family: Family,
    params: usize,
    members: usize,
    epochs: usize,
    horizon: usize,
    /// `null` when the rollout blew up
    final_error: f64,
    max_error: f64,
    error_at: BTreeMap<usize, f64>,
    blowup_trajectories: usize,
    first_blowup_step: Option<usize>,
}

pub fn predict(run: &Run) -> Result<Vec<Prediction>, CliError> {
    let l = &run.layout;
    let clean = read_set(&l.test_clean(), "clean test set")?;
    let observed = read_set(&l.test_observed(), "observed test set")?;
    run.cfg
        .models
        .iter()
        .map(|&f| {
            predict_family(run, f, &observed, &clean).map_err(|e| CliError::Family {
                stage: "predict",
                family: f,
                source: Box::new(e),
            })
        })
        .collect()
}

fn predict_family(
    run: &Run,
    f: Family,
    observed: &TrajectorySet,
    clean: &TrajectorySet,
) -> Result<Prediction, CliError> {
    let r = &run.cfg;
    let members = load_members(&run.layout, f, r.ensemble_for(f))?;
    info!("predict: {f}, horizon {}", r.horizon);
    let (params, (rollout, curve)) = if f == Family::Nodal {
        let e = nodal_ensemble(members)?;
        (e.members()[0].count_params(), evaluate(&e, observed, clean, r.horizon)?)
    } else {
        let e = pcfml_ensemble(members)?;
        (e.members()[0].count_params(), evaluate(&e, observed, clean, r.horizon)?)
    };
    let dir = run.layout.predict_dir(f);
    create_dir(&dir)?;
    let mut t = Table::new(["step", "t", "e"]);
    for (k, &e) in curve.values.iter().enumerate() {
        let step = k + 1;
        t.push(vec![
            step.to_string(),
            fmt_f64((r.n_mem - 1 + step) as f64 * r.dt),
            fmt_f64(e),
        ]);
    }
    t.write(&run.layout.errors_csv(f))?;

    let names = coord_names(clean.grid.dim);
    for &traj in &r.snapshot_trajectories {
        let header = names.iter().map(|s| s.to_string()).chain(
            r.snapshot_steps
                .iter()
                .flat_map(|s| [format!("truth_{s}"), format!("pred_{s}")]),
        );
        let mut t = Table::new(header);
        for (i, p) in clean.grid.points.iter().enumerate() {
            let mut row: Vec<String> = p.iter().map(|&c| fmt_f64(c)).collect();
            for &s in &r.snapshot_steps {
                row.push(fmt_f64(clean.data.get(traj, i, r.n_mem - 1 + s)));
                row.push(fmt_f64(rollout.states[s - 1][(traj, i)]));
            }
            t.push(row);
        }
        t.write(&dir.join(format!("trajectory_{traj}.csv")))?;
    }

    let blown: Vec<usize> = rollout.blowup.iter().flatten().copied().collect();
    let summary = PredictSummary {
        family: f,
        params,
        members: r.ensemble_for(f),
        epochs: r.epochs_for(f),
        horizon: r.horizon,
        final_error: *curve.values.last().expect("horizon >= 1"),
        max_error: curve.values.iter().copied().fold(0.0, f64::max),
        error_at: r
            .snapshot_steps
            .iter()
            .map(|&s| (s, curve.values[s - 1]))
            .collect(),
        blowup_trajectories: blown.len(),
        first_blowup_step: blown.iter().copied().min(),
    };
    dio::write_json(&dir.join("summary.json"), &summary)?;
    run.write_manifest(&dir, "predict", json!({ "family": f }))?;
    Ok(Prediction {
        family: f,
        params,
        rollout,
        curve,
    })
}

/// Joins every family's error curve on the step index.
pub fn report(run: &Run) -> Result<Table, CliError> {
    let l = &run.layout;
    let mut curves = Vec::new();
    let mut times = Vec::new();
    for &f in &run.cfg.models {
        let p = l.errors_csv(f);
        require(&p, "error curve", "predict")?;
        let t = Table::read(&p)?;
        let e = t.float_column(&p, "e")?;
        if times.is_empty() {
            times = t.rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
        } else if e.len() != times.len() {
            return Err(CliError::table(p, format!("{} steps, expected {}", e.len(), times.len())));
        }
        curves.push((f, e));
    }
    let mut t = Table::new(["step".to_string(), "t".to_string()].into_iter().chain(curves.iter().map(|(f, _)| f.to_string())));
    for (k, (step, time)) in times.iter().enumerate() {
        t.push(
            [step.clone(), time.clone()]
                .into_iter()
                .chain(curves.iter().map(|(_, e)| fmt_f64(e[k])))
                .collect(),
        );
    }
    create_dir(&l.report_dir())?;
    t.write(&l.report_dir().join("comparison.csv"))?;

    let finals: BTreeMap<Family, f64> = curves.iter().map(|(f, e)| (*f, *e.last().unwrap_or(&f64::NAN))).collect();
    let ratios: BTreeMap<Family, f64> = match finals.get(&Family::Nodal) {
        Some(&nodal) => finals
            .iter()
            .filter(|(f, _)| **f != Family::Nodal)
            .map(|(&f, &e)| (f, nodal / e))
            .collect(),
        None => BTreeMap::new(),
    };
    dio::write_json(
        &l.report_dir().join("summary.json"),
        &json!({
            "example_id": run.cfg.example_id,
            "sigma": run.cfg.sigma,
            "horizon": run.cfg.horizon,
            "final_error": finals,
            "nodal_over_family_final_error": ratios,
        }),
    )?;
    run.write_manifest(&l.report_dir(), "report", json!({}))?;
    Ok(t)
}

/// Every stage in order.
pub fn run_all(run: &Run) -> Result<(), CliError> {
    generate(run)?;
    reduce(run)?;
    train(run)?;
    predict(run)?;
    report(run)?;
    Ok(())
}
