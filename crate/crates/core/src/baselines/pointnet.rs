use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::mesh::FeatureScaler;
use crate::numerics::{
    dropout, matmul, matmul_nt, matmul_tn, relu, relu_backward, DenseMatrix, DropoutMask, Linear, Mode, Prng,
};
use crate::train::{mse_loss, Regressor, Sample};
use crate::{Error, Result};

pub const POINTNET_POINT_DIMS: [usize; 4] = [5, 64, 128, 256];
pub const POINTNET_HEAD_DIMS: [usize; 3] = [512, 128, 1];

/// PointNet-style per-point regressor: a shared per-point MLP, a global
/// feature by columnwise max pooling, and a head over
/// `[local | global]` for each point. Mesh edges are never read.
#[derive(Debug, Clone, PartialEq)]
pub struct PointNetModel {
    point_layers: Vec<Linear>,
    head_layers: Vec<Linear>,
    dropout_p: f64,
    scaler: FeatureScaler,
}

struct Tape {
    point_inputs: Vec<DenseMatrix>,
    point_pre: Vec<DenseMatrix>,
    argmax: Vec<usize>,
    head_inputs: Vec<DenseMatrix>,
    head_pre: Vec<DenseMatrix>,
    masks: Vec<DropoutMask>,
    global: DenseMatrix,
}

/// Columnwise maximum and the row (lowest on ties) attaining it.
pub fn global_max_pool(x: &DenseMatrix) -> (DenseMatrix, Vec<usize>) {
    let mut max = vec![f64::NEG_INFINITY; x.cols()];
    let mut arg = vec![0usize; x.cols()];
    for r in 0..x.rows() {
        for (c, &v) in x.row(r).iter().enumerate() {
            if v > max[c] {
                max[c] = v;
                arg[c] = r;
            }
        }
    }
    (DenseMatrix::new(1, x.cols(), max).unwrap_or_else(|_| DenseMatrix::zeros(1, x.cols())), arg)
}

impl PointNetModel {
    /// `head_dims[0]` must be twice the last point width.
    pub fn new(point_dims: &[usize], head_dims: &[usize], dropout_p: f64, rng: &mut Prng) -> Result<Self> {
        check_dims(point_dims, head_dims, dropout_p)?;
        let point_layers = point_dims.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect();
        let head_layers = head_dims.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect();
        Ok(PointNetModel {
            point_layers,
            head_layers,
            dropout_p,
            scaler: FeatureScaler::identity(point_dims[0]),
        })
    }

    pub fn with_defaults(rng: &mut Prng) -> Self {
        Self::new(&POINTNET_POINT_DIMS, &POINTNET_HEAD_DIMS, crate::model::DEFAULT_DROPOUT, rng)
            .expect("default dims are valid")
    }

    pub fn from_parts(
        point_layers: Vec<Linear>,
        head_layers: Vec<Linear>,
        dropout_p: f64,
        scaler: FeatureScaler,
    ) -> Result<Self> {
        let point_dims = chain_dims(&point_layers)?;
        let head_dims = chain_dims(&head_layers)?;
        check_dims(&point_dims, &head_dims, dropout_p)?;
        if scaler.width() != point_dims[0] {
            return Err(Error::Config("scaler width does not match input width".into()));
        }
        Ok(PointNetModel { point_layers, head_layers, dropout_p, scaler })
    }

    pub fn point_layers(&self) -> &[Linear] {
        &self.point_layers
    }

    pub fn head_layers(&self) -> &[Linear] {
        &self.head_layers
    }

    pub fn point_dims(&self) -> Vec<usize> {
        chain_dims(&self.point_layers).expect("validated")
    }

    pub fn head_dims(&self) -> Vec<usize> {
        chain_dims(&self.head_layers).expect("validated")
    }

    pub fn dropout_p(&self) -> f64 {
        self.dropout_p
    }

    pub fn set_dropout(&mut self, p: f64) -> Result<()> {
        check_dims(&self.point_dims(), &self.head_dims(), p)?;
        self.dropout_p = p;
        Ok(())
    }

    fn run(&self, features: &DenseMatrix, mode: Mode, rng: &mut Prng) -> Result<(DenseMatrix, Tape)> {
        if features.cols() != self.input_width() {
            return Err(Error::LayerShape { layer: 0, expected: self.input_width(), found: features.cols() });
        }
        let mut tape = Tape {
            point_inputs: Vec::new(),
            point_pre: Vec::new(),
            argmax: Vec::new(),
            head_inputs: Vec::new(),
            head_pre: Vec::new(),
            masks: Vec::new(),
            global: DenseMatrix::zeros(1, 0),
        };
        let mut h = features.clone();
        for layer in &self.point_layers {
            let z = layer.forward(&h)?;
            tape.point_inputs.push(h);
            h = relu(&z);
            tape.point_pre.push(z);
        }
        let (global, argmax) = global_max_pool(&h);
        tape.argmax = argmax;

        let last = self.head_layers.len() - 1;
        for (l, layer) in self.head_layers.iter().enumerate() {
            let z = if l == 0 {
                // [local | global] W = local W_top + global W_bot, with the
                // global term shared by every row.
                let (w_top, w_bot) = split_rows(&layer.weight, h.cols());
                let mut shared = matmul(&global, &w_bot)?;
                shared.add_assign(&layer.bias)?;
                let mut z = matmul(&h, &w_top)?;
                z.add_row_broadcast(&shared)?;
                z
            } else {
                layer.forward(&h)?
            };
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
        tape.global = global;
        Ok((h, tape))
    }

    fn backward(&self, tape: &Tape, grad_out: DenseMatrix) -> Result<Vec<DenseMatrix>> {
        let mut head_grads = Vec::new();
        let last = self.head_layers.len() - 1;
        let mut g = grad_out;
        let mut g_global = DenseMatrix::zeros(1, 0);
        for l in (0..self.head_layers.len()).rev() {
            if l < last {
                g = tape.masks[l].backward(&g)?;
            }
            g = relu_backward(&tape.head_pre[l], &g)?;
            if l == 0 {
                let local = &tape.head_inputs[0];
                let (w_top, w_bot) = split_rows(&self.head_layers[0].weight, local.cols());
                let gb = g.column_sums();
                let gw_top = matmul_tn(local, &g)?;
                let gw_bot = matmul_tn(&tape.global, &gb)?;
                head_grads.push(gb.clone());
                head_grads.push(stack_rows(&gw_top, &gw_bot));
                g_global = matmul_nt(&gb, &w_bot)?;
                g = matmul_nt(&g, &w_top)?;
            } else {
                let (gw, gb, gx) = self.head_layers[l].backward(&tape.head_inputs[l], &g)?;
                head_grads.push(gb);
                head_grads.push(gw);
                g = gx;
            }
        }
        // Each global entry came from one row; route its gradient back there.
        let mut g_local = g;
        for (c, &r) in tape.argmax.iter().enumerate() {
            let v = g_local.get(r, c) + g_global.get(0, c);
            g_local.set(r, c, v);
        }

        let mut point_grads = Vec::new();
        g = g_local;
        for l in (0..self.point_layers.len()).rev() {
            g = relu_backward(&tape.point_pre[l], &g)?;
            let (gw, gb, gx) = self.point_layers[l].backward(&tape.point_inputs[l], &g)?;
            point_grads.push(gb);
            point_grads.push(gw);
            g = gx;
        }
        point_grads.reverse();
        head_grads.reverse();
        point_grads.extend(head_grads);
        Ok(point_grads)
    }
}

fn split_rows(m: &DenseMatrix, at: usize) -> (DenseMatrix, DenseMatrix) {
    let top = DenseMatrix::new(at, m.cols(), m.data()[..at * m.cols()].to_vec());
    let bottom = DenseMatrix::new(m.rows() - at, m.cols(), m.data()[at * m.cols()..].to_vec());
    (top.expect("finite weights"), bottom.expect("finite weights"))
}

fn stack_rows(top: &DenseMatrix, bottom: &DenseMatrix) -> DenseMatrix {
    let mut data = top.data().to_vec();
    data.extend_from_slice(bottom.data());
    DenseMatrix::new(top.rows() + bottom.rows(), top.cols(), data).expect("finite gradients")
}

pub(crate) fn chain_dims(layers: &[Linear]) -> Result<Vec<usize>> {
    let first = layers.first().ok_or_else(|| Error::Config("no layers".into()))?;
    let mut dims = vec![first.in_dim()];
    for (l, layer) in layers.iter().enumerate() {
        if layer.in_dim() != *dims.last().expect("non-empty") {
            return Err(Error::LayerShape { layer: l, expected: dims[dims.len() - 1], found: layer.in_dim() });
        }
        dims.push(layer.out_dim());
    }
    Ok(dims)
}

fn check_dims(point_dims: &[usize], head_dims: &[usize], dropout_p: f64) -> Result<()> {
    if point_dims.len() < 2 || head_dims.len() < 2 || point_dims.contains(&0) || head_dims.contains(&0) {
        return Err(Error::Config(format!("invalid widths {point_dims:?} / {head_dims:?}")));
    }
    let local = point_dims[point_dims.len() - 1];
    if head_dims[0] != 2 * local {
        return Err(Error::Config(format!(
            "head input {} must equal local + global width {}",
            head_dims[0],
            2 * local
        )));
    }
    if head_dims[head_dims.len() - 1] != 1 {
        return Err(Error::Config("head must end in one output".into()));
    }
    if !(0.0..1.0).contains(&dropout_p) {
        return Err(Error::Config(format!("dropout probability {dropout_p} outside [0, 1)")));
    }
    Ok(())
}

impl Regressor for PointNetModel {
    fn input_width(&self) -> usize {
        self.point_layers[0].in_dim()
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

    /// Point layers then head layers, each as `[W, b]`.
    fn params(&self) -> Vec<&DenseMatrix> {
        self.point_layers.iter().chain(&self.head_layers).flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut DenseMatrix> {
        self.point_layers
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
    fn max_pool_columns() {
        let x = DenseMatrix::from_rows(&[[1.0, 5.0], [3.0, 2.0]]).unwrap();
        let (g, arg) = global_max_pool(&x);
        assert_eq!(g.data(), &[3.0, 5.0]);
        assert_eq!(arg, vec![1, 0]);
    }

    #[test]
    fn default_widths() {
        let m = PointNetModel::with_defaults(&mut Prng::new(0));
        assert_eq!(m.point_dims(), POINTNET_POINT_DIMS.to_vec());
        assert_eq!(m.head_dims(), POINTNET_HEAD_DIMS.to_vec());
    }

    #[test]
    fn head_width_must_match() {
        assert!(PointNetModel::new(&[5, 8], &[15, 1], 0.0, &mut Prng::new(0)).is_err());
    }
}
