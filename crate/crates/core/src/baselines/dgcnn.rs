use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::knn_graph;
use super::pointnet::chain_dims;
use crate::mesh::FeatureScaler;
use crate::numerics::{
    dropout, matmul, matmul_nt, matmul_tn, relu, relu_backward, DenseMatrix, DropoutMask, Linear, Mode, Prng,
};
use crate::train::{mse_loss, Regressor, Sample};
use crate::{Error, Result};

pub const DGCNN_K: usize = 5;
/// Output widths of the EdgeConv layers; each takes `2 x` the previous width.
pub const DGCNN_EDGE_DIMS: [usize; 3] = [5, 64, 64];
pub const DGCNN_HEAD_DIMS: [usize; 3] = [64, 32, 1];

/// DGCNN-style per-point regressor. Each EdgeConv layer rebuilds a kNN graph
/// on its current input, applies a shared affine + ReLU to every edge feature
/// `[x_i, x_j - x_i]`, and max-pools over the `k` edges of each point.
#[derive(Debug, Clone, PartialEq)]
pub struct DgcnnModel {
    k: usize,
    edge_layers: Vec<Linear>,
    head_layers: Vec<Linear>,
    dropout_p: f64,
    scaler: FeatureScaler,
}

struct EdgeTape {
    input: DenseMatrix,
    /// Pooled pre-activation.
    pre: DenseMatrix,
    /// For each `(point, channel)`, the neighbour whose edge won the max.
    argmax: Vec<usize>,
}

struct Tape {
    edges: Vec<EdgeTape>,
    head_inputs: Vec<DenseMatrix>,
    head_pre: Vec<DenseMatrix>,
    masks: Vec<DropoutMask>,
}

/// Stacks `[x_i, x_j - x_i]` for every point `i` and each of its neighbours
/// `j`, point-major: row `i * k + m` belongs to the `m`-th neighbour of `i`.
pub fn edge_features(x: &DenseMatrix, neighbours: &[Vec<usize>]) -> Result<DenseMatrix> {
    let f = x.cols();
    let k = neighbours.first().map_or(0, Vec::len);
    let mut data = Vec::with_capacity(x.rows() * k * 2 * f);
    for (i, nb) in neighbours.iter().enumerate() {
        let xi = x.row(i);
        for &j in nb {
            data.extend_from_slice(xi);
            data.extend(x.row(j).iter().zip(xi).map(|(a, b)| a - b));
        }
    }
    DenseMatrix::new(neighbours.len() * k, 2 * f, data)
}

impl DgcnnModel {
    /// `edge_dims[0]` is the input width; each EdgeConv layer maps
    /// `2 * edge_dims[l]` to `edge_dims[l + 1]`. `head_dims[0]` must equal
    /// the last edge width.
    pub fn new(
        k: usize,
        edge_dims: &[usize],
        head_dims: &[usize],
        dropout_p: f64,
        rng: &mut Prng,
    ) -> Result<Self> {
        check(k, edge_dims, head_dims, dropout_p)?;
        let edge_layers = edge_dims.windows(2).map(|w| Linear::new(2 * w[0], w[1], rng)).collect();
        let head_layers = head_dims.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect();
        Ok(DgcnnModel {
            k,
            edge_layers,
            head_layers,
            dropout_p,
            scaler: FeatureScaler::identity(edge_dims[0]),
        })
    }

    pub fn with_defaults(rng: &mut Prng) -> Self {
        Self::new(DGCNN_K, &DGCNN_EDGE_DIMS, &DGCNN_HEAD_DIMS, crate::model::DEFAULT_DROPOUT, rng)
            .expect("default dims are valid")
    }

    pub fn from_parts(
        k: usize,
        edge_layers: Vec<Linear>,
        head_layers: Vec<Linear>,
        dropout_p: f64,
        scaler: FeatureScaler,
    ) -> Result<Self> {
        let edge_dims = edge_dims_of(&edge_layers)?;
        let head_dims = chain_dims(&head_layers)?;
        check(k, &edge_dims, &head_dims, dropout_p)?;
        if scaler.width() != edge_dims[0] {
            return Err(Error::Config("scaler width does not match input width".into()));
        }
        Ok(DgcnnModel { k, edge_layers, head_layers, dropout_p, scaler })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edge_layers(&self) -> &[Linear] {
        &self.edge_layers
    }

    pub fn head_layers(&self) -> &[Linear] {
        &self.head_layers
    }

    pub fn edge_dims(&self) -> Vec<usize> {
        edge_dims_of(&self.edge_layers).expect("validated")
    }

    pub fn head_dims(&self) -> Vec<usize> {
        chain_dims(&self.head_layers).expect("validated")
    }

    pub fn dropout_p(&self) -> f64 {
        self.dropout_p
    }

    pub fn set_dropout(&mut self, p: f64) -> Result<()> {
        check(self.k, &self.edge_dims(), &self.head_dims(), p)?;
        self.dropout_p = p;
        Ok(())
    }

    fn run(&self, features: &DenseMatrix, mode: Mode, rng: &mut Prng) -> Result<(DenseMatrix, Tape)> {
        if features.cols() != self.input_width() {
            return Err(Error::LayerShape { layer: 0, expected: self.input_width(), found: features.cols() });
        }
        let n = features.rows();
        let k = self.k;
        let mut tape =
            Tape { edges: Vec::new(), head_inputs: Vec::new(), head_pre: Vec::new(), masks: Vec::new() };
        let mut h = features.clone();
        for layer in &self.edge_layers {
            // [x_i, x_j - x_i] W + b = x_i (W_a - W_b) + b + x_j W_b, and
            // relu commutes with the max over edges.
            let neighbours = knn_graph(&h, k)?;
            let (w_diff, w_b) = split_edge_weight(&layer.weight);
            let mut pre = matmul(&h, &w_diff)?;
            pre.add_row_broadcast(&layer.bias)?;
            let q = matmul(&h, &w_b)?;
            let width = q.cols();
            let mut argmax = vec![0usize; n * width];
            for (i, nb) in neighbours.iter().enumerate() {
                let mut best = q.row(nb[0]).to_vec();
                let winners = &mut argmax[i * width..(i + 1) * width];
                winners.fill(nb[0]);
                for &j in &nb[1..] {
                    for (c, &v) in q.row(j).iter().enumerate() {
                        if v > best[c] {
                            best[c] = v;
                            winners[c] = j;
                        }
                    }
                }
                for (o, b) in pre.row_mut(i).iter_mut().zip(&best) {
                    *o += b;
                }
            }
            let act = relu(&pre);
            tape.edges.push(EdgeTape { input: h, pre, argmax });
            h = act;
        }

        let last = self.head_layers.len() - 1;
        for (l, layer) in self.head_layers.iter().enumerate() {
            let z = layer.forward(&h)?;
            tape.head_inputs.push(h);
            let a = relu(&z);
            h = if l < last {
                let (d, mask) = dropout(&a, self.dropout_p, mode, rng)?;
                tape.masks.push(mask);
                d
            } else {
                a
            };
            tape.head_pre.push(z);
        }
        Ok((h, tape))
    }

    fn backward(&self, tape: &Tape, grad_out: DenseMatrix) -> Result<Vec<DenseMatrix>> {
        let mut head_grads = Vec::new();
        let last = self.head_layers.len() - 1;
        let mut g = grad_out;
        for l in (0..self.head_layers.len()).rev() {
            if l < last {
                g = tape.masks[l].backward(&g)?;
            }
            g = relu_backward(&tape.head_pre[l], &g)?;
            let (gw, gb, gx) = self.head_layers[l].backward(&tape.head_inputs[l], &g)?;
            head_grads.push(gb);
            head_grads.push(gw);
            g = gx;
        }

        let mut edge_grads = Vec::new();
        for l in (0..self.edge_layers.len()).rev() {
            let et = &tape.edges[l];
            let g_pre = relu_backward(&et.pre, &g)?;
            let width = g_pre.cols();
            let mut g_q = DenseMatrix::zeros(g_pre.rows(), width);
            for i in 0..g_pre.rows() {
                for (c, &v) in g_pre.row(i).iter().enumerate() {
                    let j = et.argmax[i * width + c];
                    let acc = g_q.get(j, c) + v;
                    g_q.set(j, c, acc);
                }
            }
            let (w_diff, w_b) = split_edge_weight(&self.edge_layers[l].weight);
            let gw_a = matmul_tn(&et.input, &g_pre)?;
            let mut gw_b = matmul_tn(&et.input, &g_q)?;
            gw_b.add_assign(&gw_a.map(|v| -v))?;
            let mut gw = gw_a.into_data();
            gw.extend_from_slice(gw_b.data());
            edge_grads.push(g_pre.column_sums());
            edge_grads.push(DenseMatrix::new(2 * et.input.cols(), width, gw)?);

            let mut g_in = matmul_nt(&g_pre, &w_diff)?;
            g_in.add_assign(&matmul_nt(&g_q, &w_b)?)?;
            g = g_in;
        }
        edge_grads.reverse();
        head_grads.reverse();
        edge_grads.extend(head_grads);
        Ok(edge_grads)
    }
}

/// Splits `[W_a; W_b]` into `(W_a - W_b, W_b)`.
fn split_edge_weight(w: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let f = w.rows() / 2;
    let split = f * w.cols();
    let (top, bottom) = w.data().split_at(split);
    let diff = top.iter().zip(bottom).map(|(a, b)| a - b).collect();
    (
        DenseMatrix::new(f, w.cols(), diff).expect("finite weights"),
        DenseMatrix::new(f, w.cols(), bottom.to_vec()).expect("finite weights"),
    )
}

fn edge_dims_of(layers: &[Linear]) -> Result<Vec<usize>> {
    let first = layers.first().ok_or_else(|| Error::Config("no EdgeConv layers".into()))?;
    let mut dims = vec![first.in_dim() / 2];
    for (l, layer) in layers.iter().enumerate() {
        let prev = dims[dims.len() - 1];
        if layer.in_dim() != 2 * prev {
            return Err(Error::LayerShape { layer: l, expected: 2 * prev, found: layer.in_dim() });
        }
        dims.push(layer.out_dim());
    }
    Ok(dims)
}

fn check(k: usize, edge_dims: &[usize], head_dims: &[usize], dropout_p: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if edge_dims.len() < 2 || head_dims.len() < 2 || edge_dims.contains(&0) || head_dims.contains(&0) {
        return Err(Error::Config(format!("invalid widths {edge_dims:?} / {head_dims:?}")));
    }
    if head_dims[0] != edge_dims[edge_dims.len() - 1] {
        return Err(Error::Config("head input must equal the last EdgeConv width".into()));
    }
    if head_dims[head_dims.len() - 1] != 1 {
        return Err(Error::Config("head must end in one output".into()));
    }
    if !(0.0..1.0).contains(&dropout_p) {
        return Err(Error::Config(format!("dropout probability {dropout_p} outside [0, 1)")));
    }
    Ok(())
}

impl Regressor for DgcnnModel {
    fn input_width(&self) -> usize {
        self.edge_layers[0].in_dim() / 2
    }

    fn scaler(&self) -> &FeatureScaler {
        &self.scaler
    }

    fn set_scaler(&mut self, scaler: FeatureScaler) -> Result<()> {
        if scaler.width() != self.input_width() {
            return Err(Error::Config("scaler width does not match input width".into()));
        }
        self.scaler = scaler;
        Ok(())
    }

    fn forward_sample(&self, sample: &Sample, mode: Mode, rng: &mut Prng) -> Result<DenseMatrix> {
        Ok(self.run(&sample.features, mode, rng)?.0)
    }

    fn loss_and_gradients_sample(
        &self,
        sample: &Sample,
        mode: Mode,
        rng: &mut Prng,
    ) -> Result<(f64, Vec<DenseMatrix>)> {
        let target = sample.target.as_ref().ok_or(Error::MissingTarget)?;
        let (pred, tape) = self.run(&sample.features, mode, rng)?;
        let (loss, grad) = mse_loss(&pred, target)?;
        Ok((loss, self.backward(&tape, grad)?))
    }

    /// EdgeConv layers then head layers, each as `[W, b]`.
    fn params(&self) -> Vec<&DenseMatrix> {
        self.edge_layers.iter().chain(&self.head_layers).flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut DenseMatrix> {
        self.edge_layers
            .iter_mut()
            .chain(self.head_layers.iter_mut())
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_edge_feature() {
        let x = DenseMatrix::column(&[1.0, 4.0]).unwrap();
        let nb = knn_graph(&x, 1).unwrap();
        let e = edge_features(&x, &nb).unwrap();
        assert_eq!(e.row(0), &[1.0, 3.0]);
        assert_eq!(e.row(1), &[4.0, -3.0]);
    }

    #[test]
    fn edge_conv_matches_explicit_edge_features() {
        let mut rng = Prng::new(9);
        let model = DgcnnModel::new(3, &[5, 7], &[7, 1], 0.0, &mut rng).unwrap();
        let x = DenseMatrix::new(9, 5, (0..45).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let (_, tape) = model.run(&x, Mode::Eval, &mut rng).unwrap();
        let fast = relu(&tape.edges[0].pre);

        let nb = knn_graph(&x, 3).unwrap();
        let per_edge = relu(&model.edge_layers[0].forward(&edge_features(&x, &nb).unwrap()).unwrap());
        for i in 0..9 {
            for c in 0..7 {
                let explicit = (0..3).map(|m| per_edge.get(i * 3 + m, c)).fold(f64::MIN, f64::max);
                assert!((fast.get(i, c) - explicit).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn default_widths() {
        let m = DgcnnModel::with_defaults(&mut Prng::new(0));
        assert_eq!(m.k(), 5);
        assert_eq!(m.edge_layers()[0].in_dim(), 10);
        assert_eq!(m.edge_layers()[1].in_dim(), 128);
        assert_eq!(m.head_dims(), DGCNN_HEAD_DIMS.to_vec());
    }

    #[test]
    fn k_must_be_below_point_count() {
        let mut rng = Prng::new(0);
        let m = DgcnnModel::with_defaults(&mut rng);
        let s = Sample::prepare(
            &crate::mesh::Graph::new(DenseMatrix::zeros(5, 5), [], None).unwrap(),
            m.scaler(),
        )
        .unwrap();
        assert!(matches!(m.forward_sample(&s, Mode::Eval, &mut rng), Err(Error::Config(_))));
    }
}
