use pcfml::dense::{thin_qr, thin_svd, Matrix, Rng};
use pcfml::models::{FlowModel, Mode, NodalConfig, NodalModel, PcfmlConfig, PcfmlModel, Window};
use pcfml::reduction::fixed_basis;
use proptest::prelude::*;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = Rng::new(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-1.0, 1.0))
}

fn reconstruct(u: &Matrix, sigma: &[f64], v: &Matrix, rank: usize) -> Matrix {
    let mut us = u.first_columns(rank);
    for i in 0..us.rows() {
        for (j, s) in sigma[..rank].iter().enumerate() {
            us[(i, j)] *= s;
        }
    }
    us.matmul_t(&v.first_columns(rank))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn svd_round_trip_and_truncation(rows in 1usize..30, cols in 1usize..12, seed in any::<u64>()) {
        let a = random_matrix(rows, cols, seed);
        let s = thin_svd(&a).unwrap();
        let p = rows.min(cols);
        prop_assert_eq!(s.sigma.len(), p);
        prop_assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        let full = reconstruct(&s.u, &s.sigma, &s.v, p);
        prop_assert!(a.sub(&full).frobenius_norm() <= 1e-10 * a.frobenius_norm().max(1e-300));
        // Eckart-Young: the rank-r error is the tail of the spectrum
        for r in 0..p {
            let err = a.sub(&reconstruct(&s.u, &s.sigma, &s.v, r)).frobenius_norm().powi(2);
            let tail: f64 = s.sigma[r..].iter().map(|v| v * v).sum();
            prop_assert!((err - tail).abs() <= 1e-10 * tail.max(1e-12), "r={} {} vs {}", r, err, tail);
        }
    }

    #[test]
    fn qr_factors(cols in 1usize..8, extra in 0usize..20, seed in any::<u64>()) {
        let a = random_matrix(cols + extra, cols, seed);
        let (q, r) = thin_qr(&a).unwrap();
        prop_assert!(q.t_matmul(&q).sub(&Matrix::identity(cols)).max_abs() < 1e-12);
        prop_assert!(q.matmul(&r).sub(&a).max_abs() < 1e-12);
        for i in 0..cols {
            prop_assert!(r[(i, i)] >= 0.0);
            for j in 0..i {
                prop_assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn pcfml_step_is_deterministic_and_projected(seed in any::<u64>(), n_full in 3usize..9, batch in 1usize..4) {
        let n_red = 1 + (seed % (n_full as u64 - 1)) as usize;
        let basis = fixed_basis(&random_matrix(4 * n_full, n_full, seed ^ 1), n_red).unwrap();
        let cfg = PcfmlConfig { n_full, n_red, n_mem: 2, hidden: 3, mode: Mode::Fixed, project_skip: true };
        let m = PcfmlModel::new(cfg, Some(&basis), &mut Rng::new(seed)).unwrap();
        let w = Window::new(vec![random_matrix(batch, n_full, seed ^ 2), random_matrix(batch, n_full, seed ^ 3)]).unwrap();
        let out = m.step_batch(&w).unwrap();
        prop_assert_eq!(&out, &m.step_batch(&w).unwrap());
        let back = out.matmul(&basis.v_red).matmul_t(&basis.v_red);
        prop_assert!(out.sub(&back).max_abs() < 1e-12);
    }

    #[test]
    fn trainable_round_trip(seed in any::<u64>()) {
        let cfg = PcfmlConfig { n_full: 6, n_red: 2, n_mem: 3, hidden: 4, mode: Mode::Unconstrained, project_skip: false };
        let mut m = PcfmlModel::new(cfg, None, &mut Rng::new(seed)).unwrap();
        let p = m.trainable();
        prop_assert_eq!(p.len(), m.count_params());
        let before = m.clone();
        m.set_trainable(&p).unwrap();
        prop_assert_eq!(&m, &before);

        let mut n = NodalModel::new(NodalConfig { n_full: 5, n_mem: 2, hidden: 3 }, &mut Rng::new(seed)).unwrap();
        let q = n.trainable();
        prop_assert_eq!(q.len(), n.count_params());
        let before = n.clone();
        n.set_trainable(&q).unwrap();
        prop_assert_eq!(&n, &before);
    }
}

#[test]
fn rng_streams_repeat() {
    let (mut a, mut b) = (Rng::new(2024), Rng::new(2024));
    for _ in 0..10_000 {
        assert_eq!(a.next_u64(), b.next_u64());
    }
    let mut c = Rng::new(2025);
    assert_ne!(Rng::new(2024).next_u64(), c.next_u64());
}
