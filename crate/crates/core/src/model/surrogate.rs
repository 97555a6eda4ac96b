use alloc::format;
use alloc::vec::Vec;

use super::{GcnLayer, NormalizedAdjacency};
use crate::mesh::{FeatureScaler, Graph};
use crate::numerics::{dropout, relu, relu_backward, DenseMatrix, DropoutMask, Mode, Prng};
use crate::train::{fit, mse_loss, LossHistory, Regressor, Sample, TrainConfig};
use crate::{Error, Result};

/// Feature widths of the default stack: 5 inputs, one output.
pub const DEFAULT_DIMS: [usize; 6] = [5, 50, 100, 50, 50, 1];
pub const DEFAULT_DROPOUT: f64 = 0.01;

/// Stack of GCN layers: `[GCN -> ReLU -> dropout]` for each hidden layer,
/// then `GCN -> ReLU` so every prediction is non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    dims: Vec<usize>,
    layers: Vec<GcnLayer>,
    dropout_p: f64,
    scaler: FeatureScaler,
}

struct Tape {
    inputs: Vec<DenseMatrix>,
    pre_activation: Vec<DenseMatrix>,
    masks: Vec<DropoutMask>,
}

impl SurrogateModel {
    /// Glorot-initialized layers for `dims` (at least two widths, all
    /// positive) and an identity scaler.
    pub fn new(dims: &[usize], dropout_p: f64, rng: &mut Prng) -> Result<Self> {
        validate(dims, dropout_p)?;
        let layers = dims.windows(2).map(|w| GcnLayer::new(w[0], w[1], rng)).collect();
        Ok(SurrogateModel {
            dims: dims.to_vec(),
            layers,
            dropout_p,
            scaler: FeatureScaler::identity(dims[0]),
        })
    }

    pub fn with_defaults(rng: &mut Prng) -> Self {
        Self::new(&DEFAULT_DIMS, DEFAULT_DROPOUT, rng).expect("default dims are valid")
    }

    /// Reassembles a model, checking that layer shapes follow `dims`.
    pub fn from_parts(
        dims: Vec<usize>,
        layers: Vec<GcnLayer>,
        dropout_p: f64,
        scaler: FeatureScaler,
    ) -> Result<Self> {
        validate(&dims, dropout_p)?;
        if layers.len() != dims.len() - 1 {
            return Err(Error::Config(format!(
                "dims {:?} need {} layers, found {}",
                dims,
                dims.len() - 1,
                layers.len()
            )));
        }
        for (l, (layer, w)) in layers.iter().zip(dims.windows(2)).enumerate() {
            if layer.in_dim() != w[0] || layer.out_dim() != w[1] {
                return Err(Error::LayerShape { layer: l, expected: w[0], found: layer.in_dim() });
            }
        }
        if scaler.width() != dims[0] {
            return Err(Error::Config(format!(
                "scaler width {} does not match input width {}",
                scaler.width(),
                dims[0]
            )));
        }
        Ok(SurrogateModel { dims, layers, dropout_p, scaler })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn layers(&self) -> &[GcnLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [GcnLayer] {
        &mut self.layers
    }

    pub fn dropout_p(&self) -> f64 {
        self.dropout_p
    }

    pub fn set_dropout(&mut self, p: f64) -> Result<()> {
        validate(&self.dims, p)?;
        self.dropout_p = p;
        Ok(())
    }

    fn run(
        &self,
        features: &DenseMatrix,
        adjacency: &NormalizedAdjacency,
        mode: Mode,
        rng: &mut Prng,
    ) -> Result<(DenseMatrix, Tape)> {
        let last = self.layers.len() - 1;
        let mut tape = Tape {
            inputs: Vec::with_capacity(self.layers.len()),
            pre_activation: Vec::with_capacity(self.layers.len()),
            masks: Vec::with_capacity(last),
        };
        let mut h = features.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            if h.cols() != layer.in_dim() {
                return Err(Error::LayerShape { layer: l, expected: layer.in_dim(), found: h.cols() });
            }
            let z = layer.forward(adjacency, &h)?;
            let activated = relu(&z);
            tape.inputs.push(h);
            h = if l < last {
                let (dropped, mask) = dropout(&activated, self.dropout_p, mode, rng)?;
                tape.masks.push(mask);
                dropped
            } else {
                activated
            };
            tape.pre_activation.push(z);
        }
        Ok((h, tape))
    }

    fn backward(
        &self,
        adjacency: &NormalizedAdjacency,
        tape: &Tape,
        grad_out: DenseMatrix,
    ) -> Result<Vec<DenseMatrix>> {
        let last = self.layers.len() - 1;
        let mut grads = Vec::with_capacity(2 * self.layers.len());
        let mut g = grad_out;
        for l in (0..self.layers.len()).rev() {
            if l < last {
                g = tape.masks[l].backward(&g)?;
            }
            g = relu_backward(&tape.pre_activation[l], &g)?;
            let (gw, gb, gh) = self.layers[l].backward(adjacency, &tape.inputs[l], &g, l > 0)?;
            grads.push(gb);
            grads.push(gw);
            if let Some(gh) = gh {
                g = gh;
            }
        }
        grads.reverse();
        Ok(grads)
    }
}

fn validate(dims: &[usize], dropout_p: f64) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::Config(format!("invalid layer widths {dims:?}")));
    }
    if !(0.0..1.0).contains(&dropout_p) {
        return Err(Error::Config(format!("dropout probability {dropout_p} outside [0, 1)")));
    }
    Ok(())
}

impl Regressor for SurrogateModel {
    fn input_width(&self) -> usize {
        self.dims[0]
    }

    fn scaler(&self) -> &FeatureScaler {
        &self.scaler
    }

    fn set_scaler(&mut self, scaler: FeatureScaler) -> Result<()> {
        if scaler.width() != self.dims[0] {
            return Err(Error::Config(format!(
                "scaler width {} does not match input width {}",
                scaler.width(),
                self.dims[0]
            )));
        }
        self.scaler = scaler;
        Ok(())
    }

    fn forward_sample(&self, sample: &Sample, mode: Mode, rng: &mut Prng) -> Result<DenseMatrix> {
        Ok(self.run(&sample.features, &sample.adjacency, mode, rng)?.0)
    }

    fn loss_and_gradients_sample(
        &self,
        sample: &Sample,
        mode: Mode,
        rng: &mut Prng,
    ) -> Result<(f64, Vec<DenseMatrix>)> {
        let target = sample.target.as_ref().ok_or(Error::MissingTarget)?;
        let (pred, tape) = self.run(&sample.features, &sample.adjacency, mode, rng)?;
        let (loss, grad) = mse_loss(&pred, target)?;
        Ok((loss, self.backward(&sample.adjacency, &tape, grad)?))
    }

    /// `[W0, b0, W1, b1, ...]`.
    fn params(&self) -> Vec<&DenseMatrix> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut DenseMatrix> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias]).collect()
    }
}

/// Builds a default surrogate seeded from `config.seed` and fits it.
pub fn train(
    train: &[Graph],
    test: &[Graph],
    config: &TrainConfig,
) -> Result<(SurrogateModel, LossHistory)> {
    let mut rng = Prng::new(config.seed);
    let model = SurrogateModel::with_defaults(&mut rng);
    fit(model, train, test, config, &mut rng)
}
