//! Model-agnostic training: the [`Regressor`] interface, per-graph
//! preparation, MSE loss and the Adam loop with optional early stopping.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::mesh::{FeatureScaler, Graph};
use crate::model::NormalizedAdjacency;
use crate::numerics::{AdamConfig, AdamState, DenseMatrix, Mode, Prng};
use crate::{Error, Result};

/// A graph prepared for a model: standardized features, aggregation
/// operator and target.
#[derive(Debug, Clone)]
pub struct Sample {
    pub features: DenseMatrix,
    pub adjacency: NormalizedAdjacency,
    pub target: Option<DenseMatrix>,
}

impl Sample {
    /// Applies `scaler` unless the graph says its features are already
    /// scaled.
    pub fn prepare(graph: &Graph, scaler: &FeatureScaler) -> Result<Self> {
        let features = if graph.features_scaled() {
            graph.node_features().clone()
        } else {
            scaler.transform(graph.node_features())?
        };
        Ok(Sample {
            features,
            adjacency: NormalizedAdjacency::from_graph(graph),
            target: graph.target().cloned(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }
}

/// Mean squared error over nodes and its gradient with respect to the
/// predictions.
pub fn mse_loss(predicted: &DenseMatrix, target: &DenseMatrix) -> Result<(f64, DenseMatrix)> {
    if predicted.shape() != target.shape() {
        return Err(Error::Shape { op: "mse_loss", left: predicted.shape(), right: target.shape() });
    }
    let n = predicted.rows().max(1) as f64;
    let mut grad = predicted.clone();
    let mut sum = 0.0;
    for (g, &y) in grad.data_mut().iter_mut().zip(target.data()) {
        let e = *g - y;
        sum += e * e;
        *g = 2.0 * e / n;
    }
    Ok((sum / n, grad))
}

/// A per-node regression model trainable by [`fit`].
pub trait Regressor: Clone {
    /// Number of input features per node.
    fn input_width(&self) -> usize;

    fn scaler(&self) -> &FeatureScaler;

    fn set_scaler(&mut self, scaler: FeatureScaler) -> Result<()>;

    /// Forward pass on prepared features; `N x 1` predictions.
    fn forward_sample(&self, sample: &Sample, mode: Mode, rng: &mut Prng) -> Result<DenseMatrix>;

    /// MSE against the sample target and its gradient for every parameter
    /// block, in [`params`](Self::params) order.
    fn loss_and_gradients_sample(
        &self,
        sample: &Sample,
        mode: Mode,
        rng: &mut Prng,
    ) -> Result<(f64, Vec<DenseMatrix>)>;

    fn params(&self) -> Vec<&DenseMatrix>;

    fn params_mut(&mut self) -> Vec<&mut DenseMatrix>;

    fn prepare(&self, graph: &Graph) -> Result<Sample> {
        if graph.num_features() != self.input_width() {
            return Err(Error::LayerShape {
                layer: 0,
                expected: self.input_width(),
                found: graph.num_features(),
            });
        }
        Sample::prepare(graph, self.scaler())
    }

    /// Predictions for `graph`, scaling raw features with the model's scaler.
    fn predict(&self, graph: &Graph, mode: Mode, rng: &mut Prng) -> Result<DenseMatrix> {
        self.forward_sample(&self.prepare(graph)?, mode, rng)
    }

    fn loss_and_gradients(
        &self,
        graph: &Graph,
        mode: Mode,
        rng: &mut Prng,
    ) -> Result<(f64, Vec<DenseMatrix>)> {
        self.loss_and_gradients_sample(&self.prepare(graph)?, mode, rng)
    }

    /// Overwrites every parameter block; shapes must match.
    fn set_params(&mut self, values: &[DenseMatrix]) -> Result<()> {
        let mut params = self.params_mut();
        if params.len() != values.len() {
            return Err(Error::Config(format!(
                "expected {} parameter blocks, got {}",
                params.len(),
                values.len()
            )));
        }
        for (p, v) in params.iter_mut().zip(values) {
            if p.shape() != v.shape() {
                return Err(Error::Shape { op: "set_params", left: p.shape(), right: v.shape() });
            }
            **p = v.clone();
        }
        Ok(())
    }

    fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.data().len()).sum()
    }
}

/// Stop when the test loss has not improved by more than `min_delta` for
/// more than `patience` consecutive epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub min_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Graphs per optimizer step; only 1 is supported.
    pub batch_size: usize,
    pub seed: u64,
    pub early_stopping: Option<EarlyStopping>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 2500, lr: 8e-4, batch_size: 1, seed: 0, early_stopping: None }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if self.batch_size != 1 {
            return Err(Error::Config(format!("batch size {} unsupported (must be 1)", self.batch_size)));
        }
        if let Some(es) = self.early_stopping {
            if !(es.min_delta >= 0.0 && es.min_delta.is_finite()) {
                return Err(Error::Config("early-stopping min_delta must be >= 0".into()));
            }
        }
        Ok(())
    }
}

/// Per-epoch mean losses. Train losses are measured in train mode before
/// each step; test losses in eval mode after the epoch. `test` entries are
/// `None` when there are no test graphs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossHistory {
    pub train: Vec<f64>,
    pub test: Vec<Option<f64>>,
    /// Epoch (0-based) whose weights were kept, when early stopping ran.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl LossHistory {
    pub fn epochs(&self) -> usize {
        self.train.len()
    }
}

/// Snapshot handed to a [`fit_observed`] callback after every epoch.
#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub test_mse: Option<f64>,
}

/// Mean eval-mode MSE over `samples`.
pub fn mean_loss<M: Regressor>(model: &M, samples: &[Sample]) -> Result<Option<f64>> {
    if samples.is_empty() {
        return Ok(None);
    }
    // Eval mode draws nothing from the generator.
    let mut rng = Prng::new(0);
    let mut total = 0.0;
    for s in samples {
        let pred = model.forward_sample(s, Mode::Eval, &mut rng)?;
        let target = s.target.as_ref().ok_or(Error::MissingTarget)?;
        total += mse_loss(&pred, target)?.0;
    }
    Ok(Some(total / samples.len() as f64))
}

/// [`fit_observed`] without a callback.
pub fn fit<M: Regressor>(
    model: M,
    train: &[Graph],
    test: &[Graph],
    config: &TrainConfig,
    rng: &mut Prng,
) -> Result<(M, LossHistory)> {
    fit_observed(model, train, test, config, rng, |_| {})
}

/// Trains `model` one graph per Adam step, visiting `train` in order every
/// epoch. The scaler is fitted on `train` only.
pub fn fit_observed<M: Regressor>(
    mut model: M,
    train: &[Graph],
    test: &[Graph],
    config: &TrainConfig,
    rng: &mut Prng,
    mut observer: impl FnMut(&EpochStats),
) -> Result<(M, LossHistory)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if let Some(g) = train.iter().chain(test).find(|g| g.num_features() != model.input_width()) {
        return Err(Error::LayerShape {
            layer: 0,
            expected: model.input_width(),
            found: g.num_features(),
        });
    }
    if train.iter().chain(test).any(|g| g.features_scaled()) {
        return Err(Error::Config("training graphs must carry raw features".into()));
    }
    if train.iter().chain(test).any(|g| g.target().is_none()) {
        return Err(Error::MissingTarget);
    }

    model.set_scaler(FeatureScaler::fit(train)?)?;
    let train_samples =
        train.iter().map(|g| Sample::prepare(g, model.scaler())).collect::<Result<Vec<_>>>()?;
    let test_samples =
        test.iter().map(|g| Sample::prepare(g, model.scaler())).collect::<Result<Vec<_>>>()?;

    let adam = AdamConfig { lr: config.lr, ..AdamConfig::default() };
    let mut state = AdamState::new(adam, model.params());
    let mut history = LossHistory::default();
    let mut best: Option<(f64, usize, Vec<DenseMatrix>)> = None;
    let mut stale = 0usize;

    for epoch in 0..config.epochs {
        let mut total = 0.0;
        for (i, sample) in train_samples.iter().enumerate() {
            let fail = |reason: alloc::string::String| Error::Training { epoch, sample: i, reason };
            let (loss, grads) = model
                .loss_and_gradients_sample(sample, Mode::Train, rng)
                .map_err(|e| fail(e.to_string()))?;
            if !loss.is_finite() {
                return Err(fail(format!("loss is {loss}")));
            }
            state.step(&mut model.params_mut(), &grads).map_err(|e| fail(e.to_string()))?;
            total += loss;
        }
        let train_mse = total / train_samples.len() as f64;
        let test_mse = mean_loss(&model, &test_samples)?;
        history.train.push(train_mse);
        history.test.push(test_mse);
        observer(&EpochStats { epoch, train_mse, test_mse });

        if let Some(es) = config.early_stopping {
            let monitored = test_mse.unwrap_or(train_mse);
            let improved = match &best {
                None => true,
                Some((b, _, _)) => monitored < b - es.min_delta,
            };
            if improved {
                let snapshot = model.params().into_iter().cloned().collect();
                best = Some((monitored, epoch, snapshot));
                stale = 0;
            } else {
                stale += 1;
                if stale > es.patience {
                    history.stopped_early = true;
                    break;
                }
            }
        }
    }

    if let Some((_, epoch, params)) = best {
        model.set_params(&params)?;
        history.best_epoch = Some(epoch);
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_and_gradient() {
        let p = DenseMatrix::from_rows(&[[2.0], [2.0]]).unwrap();
        let t = DenseMatrix::from_rows(&[[1.0], [3.0]]).unwrap();
        let (loss, g) = mse_loss(&p, &t).unwrap();
        assert_eq!(loss, 1.0);
        assert_eq!(g.data(), &[1.0, -1.0]);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { lr: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 2, ..Default::default() }.validate().is_err());
    }
}
