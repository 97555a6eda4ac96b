use meshgnn_core::baselines::{train_baseline, ModelKind};
use meshgnn_core::datagen::{generate_mesh, generate_simulation, sample_params, wear_oracle, GeneratorConfig, WEAR_FIELD};
use meshgnn_core::mesh::{cell_to_point_average, mesh_to_graph, Graph};
use meshgnn_core::model::{train, SurrogateModel};
use meshgnn_core::numerics::{DenseMatrix, Prng};
use meshgnn_core::train::{fit, EarlyStopping, Regressor, TrainConfig};

fn small_set(count: usize, target: impl Fn(&Graph) -> Vec<f64>) -> Vec<Graph> {
    let cfg = GeneratorConfig { grid: (5, 5), n_sims: count, ..GeneratorConfig::default() };
    (0..count)
        .map(|i| {
            let g = mesh_to_graph(&generate_simulation(&cfg, i).unwrap(), None).unwrap();
            let t = target(&g);
            let n = g.num_nodes();
            g.with_target(Some(DenseMatrix::new(n, 1, t).unwrap())).unwrap()
        })
        .collect()
}

fn oracle_set(count: usize) -> Vec<Graph> {
    let cfg = GeneratorConfig { grid: (5, 5), n_sims: count, ..GeneratorConfig::default() };
    (0..count).map(|i| mesh_to_graph(&generate_simulation(&cfg, i).unwrap(), Some(WEAR_FIELD)).unwrap()).collect()
}

#[test]
fn same_seed_same_history_and_weights() {
    let data = oracle_set(4);
    let config = TrainConfig { epochs: 6, seed: 11, ..TrainConfig::default() };
    for kind in ModelKind::ALL {
        let (m1, h1) = train_baseline(kind, &data[..3], &data[3..], &config).unwrap();
        let (m2, h2) = train_baseline(kind, &data[..3], &data[3..], &config).unwrap();
        assert_eq!(h1, h2, "{kind}");
        assert_eq!(m1, m2, "{kind}");
        let (_, h3) = train_baseline(kind, &data[..3], &data[3..], &TrainConfig { seed: 12, ..config.clone() }).unwrap();
        assert_ne!(h1.train, h3.train, "{kind}");
    }
}

#[test]
fn constant_target_is_learned() {
    let k = 40.0;
    let data = small_set(4, |g| vec![k; g.num_nodes()]);
    let config = TrainConfig { epochs: 200, ..TrainConfig::default() };
    let (_, history) = train(&data[..3], &data[3..], &config).unwrap();
    let last = *history.train.last().unwrap();
    assert!(last < 0.01 * k * k, "gnn final train mse {last}");

    for kind in [ModelKind::PointNet, ModelKind::Dgcnn] {
        let (_, h) = train_baseline(kind, &data[..3], &data[3..], &config).unwrap();
        let best = h.test.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        assert!(best < 0.01 * k * k, "{kind} best test mse {best}");
    }
}

#[test]
fn patience_zero_stops_at_first_non_improvement() {
    let data = oracle_set(4);
    let es = EarlyStopping { patience: 0, min_delta: 0.0 };
    let config = TrainConfig { epochs: 400, seed: 3, early_stopping: Some(es), ..TrainConfig::default() };
    let (model, h) = train(&data[..3], &data[3..], &config).unwrap();
    let test: Vec<f64> = h.test.iter().map(|t| t.unwrap()).collect();
    assert!(h.stopped_early);
    let last = test.len() - 1;
    // Every epoch improved on the previous one except the last.
    assert!(test[..last].windows(2).all(|w| w[1] < w[0]));
    assert!(test[last] >= test[last - 1]);
    assert_eq!(h.best_epoch, Some(last - 1));

    // The returned weights are the best epoch's, not the last.
    let samples: Vec<_> = data[3..].iter().map(|g| model.prepare(g).unwrap()).collect();
    let restored = meshgnn_core::train::mean_loss(&model, &samples).unwrap().unwrap();
    assert_eq!(restored, test[last - 1]);
}

#[test]
fn min_delta_demands_real_improvement() {
    let data = oracle_set(3);
    let es = EarlyStopping { patience: 2, min_delta: 1e9 };
    let config = TrainConfig { epochs: 50, early_stopping: Some(es), ..TrainConfig::default() };
    let (_, h) = train(&data[..2], &data[2..], &config).unwrap();
    assert_eq!(h.epochs(), 4);
    assert_eq!(h.best_epoch, Some(0));
}

#[test]
fn empty_test_set_records_none() {
    let data = oracle_set(2);
    let config = TrainConfig { epochs: 3, ..TrainConfig::default() };
    let (_, h) = train(&data, &[], &config).unwrap();
    assert_eq!(h.test, vec![None, None, None]);
}

#[test]
fn invalid_inputs_are_rejected() {
    let data = oracle_set(2);
    assert!(train(&[], &data, &TrainConfig::default()).is_err());
    let unlabeled: Vec<Graph> = data.iter().map(|g| g.clone().with_target(None).unwrap()).collect();
    assert!(train(&unlabeled, &[], &TrainConfig { epochs: 1, ..TrainConfig::default() }).is_err());
    assert!(train(&data, &[], &TrainConfig { epochs: 0, ..TrainConfig::default() }).is_err());
    assert!(train(&data, &[], &TrainConfig { batch_size: 2, ..TrainConfig::default() }).is_err());

    let mut rng = Prng::new(0);
    let narrow = SurrogateModel::new(&[4, 8, 1], 0.0, &mut rng).unwrap();
    assert!(fit(narrow, &data, &[], &TrainConfig { epochs: 1, ..TrainConfig::default() }, &mut rng).is_err());
}

#[test]
fn scaler_is_fitted_on_train_only() {
    let data = oracle_set(4);
    let config = TrainConfig { epochs: 1, ..TrainConfig::default() };
    let (model, _) = train(&data[..2], &data[2..], &config).unwrap();
    let expected = meshgnn_core::mesh::FeatureScaler::fit(&data[..2]).unwrap();
    assert_eq!(model.scaler(), &expected);
}

#[test]
fn generated_wear_is_the_oracle_at_centroids() {
    let cfg = GeneratorConfig { n_sims: 6, ..GeneratorConfig::default() };
    for i in 0..cfg.n_sims {
        let mesh = generate_simulation(&cfg, i).unwrap();
        let p = mesh.params();
        assert!((cfg.t_range.0..=cfg.t_range.1).contains(&p.temperature));
        assert!((cfg.mu_range.0..=cfg.mu_range.1).contains(&p.friction));
        assert_eq!(p, sample_params(&cfg, i).unwrap());
        let wear = &mesh.cell_fields()[WEAR_FIELD];
        for (c, &w) in wear.iter().enumerate() {
            let [x, y, _] = mesh.cell_centroid(c);
            assert_eq!(w, wear_oracle(x, y, p.temperature, p.friction));
            assert!(w >= 0.0);
        }
    }
}

/// Max |point average - oracle at the point| over a simulation, and the
/// field's range.
fn averaging_error(grid: (usize, usize)) -> (f64, f64) {
    let cfg = GeneratorConfig { grid, n_sims: 1, ..GeneratorConfig::default() };
    let mesh = generate_simulation(&cfg, 0).unwrap();
    let p = mesh.params();
    let avg = cell_to_point_average(&mesh, WEAR_FIELD).unwrap().values;
    let exact: Vec<f64> = mesh.points().iter().map(|q| wear_oracle(q[0], q[1], p.temperature, p.friction)).collect();
    let err = avg.iter().zip(&exact).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
    let lo = exact.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = exact.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (err, hi - lo)
}

#[test]
fn averaging_error_shrinks_under_refinement() {
    let (e16, range16) = averaging_error((16, 16));
    let (e32, _) = averaging_error((32, 32));
    assert!(e16 <= 0.15 * range16, "16x16 error {e16} vs range {range16}");
    assert!(e32 < e16, "32x32 error {e32} not below 16x16 error {e16}");
}

#[test]
fn large_preset_has_9216_points() {
    let mesh = generate_mesh(&GeneratorConfig { grid: (96, 96), ..GeneratorConfig::default() }).unwrap();
    assert_eq!(mesh.num_points(), 9216);
}
