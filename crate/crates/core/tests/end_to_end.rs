//! Generate, reduce, train and roll out through the library API alone.

use pcfml::datagen::{gen_heat1d, heat1d_grid, io, sample_chunks};
use pcfml::dense::Rng;
use pcfml::models::{load_checkpoint, save_checkpoint, Checkpoint, Mode, PcfmlConfig, PcfmlModel};
use pcfml::reduction::{assemble_data_matrix, fixed_basis};
use pcfml::train::{evaluate, train_ensemble, Ensemble, TrainConfig};

#[test]
fn small_heat_pipeline() {
    let grid = heat1d_grid(3);
    let trajs = gen_heat1d(&grid, 30, 60, &Rng::new(1));
    let ds = sample_chunks(&trajs, 5, 3, &mut Rng::new(2)).unwrap();
    let basis = fixed_basis(&assemble_data_matrix(&ds).unwrap(), 2).unwrap();
    let cfg = PcfmlConfig {
        n_full: grid.n_grid(),
        n_red: 2,
        n_mem: 5,
        hidden: 6,
        mode: Mode::Fixed,
        project_skip: true,
    };
    let tc = TrainConfig {
        epochs: 300,
        seed: 11,
        ..Default::default()
    };
    let (e, hist) = train_ensemble(|rng| PcfmlModel::new(cfg, Some(&basis), rng), &ds, &tc, 2).unwrap();
    for h in &hist {
        assert!(h.last().unwrap() < &h[0]);
    }

    let test = gen_heat1d(&grid, 5, 40, &Rng::new(9));
    let (rollout, curve) = evaluate(&e, &test, &test, 30).unwrap();
    assert_eq!(curve.horizon(), 30);
    assert!(rollout.blowup.iter().all(Option::is_none));
    assert!(curve.values.iter().all(|v| v.is_finite()));

    // checkpoints reproduce the rollout bit for bit
    let dir = tempfile::tempdir().unwrap();
    let members: Vec<PcfmlModel> = e
        .members()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let stem = dir.path().join(format!("m{i}"));
            save_checkpoint(&stem, &Checkpoint::Pcfml(m.clone()), 11 + i as u64).unwrap();
            match load_checkpoint(&stem).unwrap() {
                (Checkpoint::Pcfml(m), manifest) => {
                    assert_eq!(manifest.seed, 11 + i as u64);
                    m
                }
                _ => panic!("wrong kind"),
            }
        })
        .collect();
    let (again, curve2) = evaluate(&Ensemble::new(members).unwrap(), &test, &test, 30).unwrap();
    assert_eq!(again, rollout);
    assert_eq!(curve2, curve);

    // datasets written and read back feed the same pipeline
    let path = dir.path().join("chunks");
    io::write_chunks(&path, &ds).unwrap();
    assert_eq!(io::read_chunks(&path).unwrap(), ds);
}
