use std::path::Path;
use std::process::Command;

use pcfml::datagen::io as dio;
use pcfml::datagen::{HEAT_N_GRID, WAVE1D_N_GRID, WAVE2D_N_GRID};
use pcfml_cli::config::ExperimentConfig;
use pcfml_cli::pipeline::{self, generate_data};
use pcfml_cli::{CliError, Family, Overrides, Run};

fn workspace_config(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn tiny_heat(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::load(&workspace_config("ex1.json")).unwrap();
    c.n_traj = 8;
    c.n_test = 4;
    c.epochs = 5;
    c.ensemble = 2;
    c.horizon = pcfml_cli::PerNoise::Same(40);
    c.snapshot_steps = vec![1, 40];
    c.snapshot_trajectories = vec![0];
    c.nodal_hidden = pcfml_cli::PerNoise::Same(4);
    c.out_dir = Some(out.to_path_buf());
    c
}

#[test]
fn shipped_configs_resolve_to_shared_parameters() {
    for (name, n_red, hidden, horizon) in [
        ("ex1.json", (2, 2), (10, 10), (500, 500)),
        ("ex2.json", (5, 5), (15, 15), (150, 100)),
        ("ex3.json", (13, 5), (15, 15), (1000, 200)),
    ] {
        let c = ExperimentConfig::load(&workspace_config(name)).unwrap();
        for (sigma, pick) in [(0.0, 0), (0.1, 1)] {
            let r = c
                .resolve(&Overrides {
                    sigma: Some(sigma),
                    ..Default::default()
                })
                .unwrap();
            let at = |p: (usize, usize)| if pick == 0 { p.0 } else { p.1 };
            assert_eq!(r.n_red, at(n_red), "{name}");
            assert_eq!(r.hidden, at(hidden), "{name}");
            assert_eq!(r.horizon, at(horizon), "{name}");
            assert_eq!((r.n_mem, r.n_rec, r.n_traj, r.n_test), (20, 10, 100, 100));
            assert_eq!((r.epochs, r.ensemble, r.lr, r.lambda), (10_000, 10, 1e-3, 1e-2));
            assert_eq!(r.models.len(), 4);
        }
    }
}

#[test]
fn generated_shapes_per_example() {
    for (name, n_full, n_time) in [
        ("ex1.json", HEAT_N_GRID, 201),
        ("ex2.json", WAVE1D_N_GRID, 101),
        ("ex3.json", WAVE2D_N_GRID, 401),
    ] {
        let mut c = ExperimentConfig::load(&workspace_config(name)).unwrap();
        c.n_traj = 3;
        c.n_test = 2;
        let r = c.resolve(&Overrides::default()).unwrap();
        let g = generate_data(&r).unwrap();
        assert_eq!((g.train.n_traj(), g.train.n_full(), g.train.n_time()), (3, n_full, n_time), "{name}");
        assert_eq!((g.chunks.n_traj(), g.chunks.chunk_len()), (3, 30), "{name}");
        assert_eq!(g.test_clean.n_time(), r.n_mem + r.horizon, "{name}");
        assert_eq!(g.test_clean, g.test_observed);
    }
}

#[test]
fn noise_only_touches_observations() {
    let mut c = ExperimentConfig::load(&workspace_config("ex1.json")).unwrap();
    c.n_traj = 3;
    c.n_test = 2;
    let clean = generate_data(&c.resolve(&Overrides::default()).unwrap()).unwrap();
    let noisy = generate_data(
        &c.resolve(&Overrides {
            sigma: Some(0.1),
            ..Default::default()
        })
        .unwrap(),
    )
    .unwrap();
    assert_eq!(clean.test_clean, noisy.test_clean);
    assert_ne!(noisy.test_observed, noisy.test_clean);
    assert_eq!(clean.chunks.starts, noisy.chunks.starts);
    assert!(!noisy.train.clean && noisy.train.sigma == 0.1);
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run::new(&tiny_heat(dir.path()), Overrides::default(), None).unwrap();
    pipeline::run_all(&run).unwrap();
    let l = &run.layout;
    for p in [
        l.data_dir().join("manifest.json"),
        l.spectrum_csv(),
        l.basis_csv(),
        l.memory_csv(),
        l.report_dir().join("comparison.csv"),
        l.report_dir().join("summary.json"),
    ] {
        assert!(p.exists(), "{}", p.display());
    }
    let basis = std::fs::read_to_string(l.basis_csv()).unwrap();
    assert_eq!(basis.lines().next(), Some("x,b_1,b_2"));
    assert_eq!(basis.lines().count(), 1 + HEAT_N_GRID);

    let params = [(Family::Fixed, 652), (Family::Constrained, 852), (Family::Unconstrained, 1052)];
    for (f, n) in params {
        let s: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(l.predict_dir(f).join("summary.json")).unwrap()).unwrap();
        assert_eq!(s["params"], n, "{f}");
        let hist = std::fs::read_to_string(l.train_dir(f).join("loss_history.csv")).unwrap();
        assert_eq!(hist.lines().next(), Some("epoch,member_0,member_1"));
        assert_eq!(hist.lines().count(), 1 + 5);
        assert!(l.member(f, 1).with_extension("f64").exists());
    }
    let errors = std::fs::read_to_string(l.errors_csv(Family::Fixed)).unwrap();
    assert_eq!(errors.lines().next(), Some("step,t,e"));
    assert_eq!(errors.lines().count(), 41);
    assert!(errors.lines().nth(1).unwrap().starts_with("1,2.0000000000000001e-1,"));
    let snap = std::fs::read_to_string(l.predict_dir(Family::Nodal).join("trajectory_0.csv")).unwrap();
    assert_eq!(snap.lines().next(), Some("x,truth_1,pred_1,truth_40,pred_40"));

    let cmp = std::fs::read_to_string(l.report_dir().join("comparison.csv")).unwrap();
    assert_eq!(cmp.lines().next(), Some("step,t,fixed,constrained,unconstrained,nodal"));
    assert_eq!(cmp.lines().count(), 41);

    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(l.train_dir(Family::Fixed).join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m["config"]["epochs"], 5);
    assert_eq!(m["stage_info"]["member_seeds"], serde_json::json!([1, 2]));
}

#[test]
fn basis_survives_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run::new(&tiny_heat(dir.path()), Overrides::default(), None).unwrap();
    pipeline::generate(&run).unwrap();
    let reduced = pipeline::reduce(&run).unwrap();
    let loaded = pipeline::load_basis(&run.layout).unwrap();
    assert_eq!(loaded.v_red, reduced.basis.v_red);
    assert_eq!(loaded.source_spectrum, reduced.basis.source_spectrum);
    assert_eq!(reduced.recommended_rank, 2);
}

#[test]
fn stages_report_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run::new(&tiny_heat(dir.path()), Overrides::default(), None).unwrap();
    assert!(matches!(pipeline::reduce(&run), Err(CliError::Missing { stage: "generate", .. })));
    pipeline::generate(&run).unwrap();
    let err = pipeline::train(&run).unwrap_err();
    assert!(matches!(err, CliError::Missing { stage: "reduce", .. }), "{err}");
    let err = pipeline::predict(&run).unwrap_err();
    assert!(err.to_string().contains("fixed"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let mut c = tiny_heat(&dir.path().join("run"));
    c.models = vec![Family::Fixed];
    std::fs::write(&cfg, serde_json::to_string(&c).unwrap()).unwrap();
    let bin = env!("CARGO_BIN_EXE_pcfml");

    let ok = Command::new(bin).args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/data/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config_source"], cfg.to_str().unwrap());

    let over = Command::new(bin)
        .args(["generate", "--seed", "9", "--sigma", "0.1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("other"))
        .output()
        .unwrap();
    assert!(over.status.success());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("other/data/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["overrides"]["seed"], 9);
    assert_eq!(m["config"]["sigma"], 0.1);
    assert_eq!(dio::read_trajectories(&dir.path().join("other/data/train")).unwrap().seed, {
        pcfml::dense::Rng::new(9).derive(pipeline::TRAIN_STREAM).seed()
    });

    let missing = Command::new(bin)
        .args(["predict", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("empty"))
        .output()
        .unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("run `generate` first"));

    let mut text = std::fs::read_to_string(&cfg).unwrap();
    text = text.replacen('{', "{\"epoch\": 3,", 1);
    std::fs::write(&cfg, text).unwrap();
    let typo = Command::new(bin).args(["generate", "--config"]).arg(&cfg).output().unwrap();
    assert!(!typo.status.success());
    assert!(String::from_utf8_lossy(&typo.stderr).contains("unknown field"));
}
