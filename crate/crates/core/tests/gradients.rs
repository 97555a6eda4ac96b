use meshgnn_core::baselines::{DgcnnModel, PointNetModel};
use meshgnn_core::mesh::Graph;
use meshgnn_core::model::SurrogateModel;
use meshgnn_core::numerics::{finite_difference_check, DenseMatrix, GradCheckReport, Mode, Prng};
use meshgnn_core::train::Regressor;

fn random_graph(rng: &mut Prng, n: usize) -> Graph {
    let data: Vec<f64> = (0..n * 5).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (rng.below(i), i)).collect();
    edges.push((0, n - 1));
    let target = DenseMatrix::new(n, 1, (0..n).map(|_| rng.uniform(0.0, 2.0)).collect()).unwrap();
    Graph::new(DenseMatrix::new(n, 5, data).unwrap(), edges, Some(target)).unwrap()
}

fn check<M: Regressor>(model: &M, graph: &Graph) -> GradCheckReport {
    let sample = model.prepare(graph).unwrap();
    let (_, grads) = model.loss_and_gradients_sample(&sample, Mode::Eval, &mut Prng::new(0)).unwrap();
    let params: Vec<DenseMatrix> = model.params().into_iter().cloned().collect();
    let mut probe = model.clone();
    finite_difference_check(&params, &grads, 1e-6, |p| {
        probe.set_params(p).unwrap();
        probe.loss_and_gradients_sample(&sample, Mode::Eval, &mut Prng::new(0)).unwrap().0
    })
    .unwrap()
}

#[test]
fn gnn_default_widths() {
    let mut rng = Prng::new(101);
    for n in [3, 7, 10] {
        let mut model = SurrogateModel::with_defaults(&mut rng);
        model.set_dropout(0.0).unwrap();
        let report = check(&model, &random_graph(&mut rng, n));
        assert!(report.passes(1e-5), "n={n}: {report:?}");
    }
}

#[test]
fn pointnet_compact_widths() {
    let mut rng = Prng::new(102);
    for n in [2, 6, 10] {
        let model = PointNetModel::new(&[5, 8, 12, 16], &[32, 8, 1], 0.0, &mut rng).unwrap();
        let report = check(&model, &random_graph(&mut rng, n));
        assert!(report.passes(1e-5), "n={n}: {report:?}");
    }
}

#[test]
fn dgcnn_compact_widths() {
    let mut rng = Prng::new(103);
    for n in [5, 8, 10] {
        let model = DgcnnModel::new(3, &[5, 8, 8], &[8, 6, 1], 0.0, &mut rng).unwrap();
        let report = check(&model, &random_graph(&mut rng, n));
        assert!(report.passes(1e-5), "n={n}: {report:?}");
    }
}

#[test]
fn corrupted_gradient_is_caught() {
    let mut rng = Prng::new(104);
    let model = PointNetModel::new(&[5, 6, 8], &[16, 4, 1], 0.0, &mut rng).unwrap();
    let graph = random_graph(&mut rng, 6);
    let sample = model.prepare(&graph).unwrap();
    let (_, mut grads) = model.loss_and_gradients_sample(&sample, Mode::Eval, &mut Prng::new(0)).unwrap();
    grads[0].data_mut()[0] += 0.5;
    let params: Vec<DenseMatrix> = model.params().into_iter().cloned().collect();
    let mut probe = model.clone();
    let report = finite_difference_check(&params, &grads, 1e-6, |p| {
        probe.set_params(p).unwrap();
        probe.loss_and_gradients_sample(&sample, Mode::Eval, &mut Prng::new(0)).unwrap().0
    })
    .unwrap();
    assert!(!report.passes(1e-5));
}
