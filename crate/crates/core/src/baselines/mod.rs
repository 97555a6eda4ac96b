//! Point-cloud baselines that ignore mesh connectivity, plus a tagged
//! wrapper over every model kind.

mod dgcnn;
mod knn;
mod pointnet;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use dgcnn::{edge_features, DgcnnModel, DGCNN_EDGE_DIMS, DGCNN_HEAD_DIMS, DGCNN_K};
pub use knn::knn_graph;
pub use pointnet::{global_max_pool, PointNetModel, POINTNET_HEAD_DIMS, POINTNET_POINT_DIMS};

use crate::mesh::{FeatureScaler, Graph};
use crate::model::SurrogateModel;
use crate::numerics::{DenseMatrix, Mode, Prng};
use crate::train::{fit, EarlyStopping, LossHistory, Regressor, Sample, TrainConfig};
use crate::{Error, Result};

/// Early stopping used by [`train_baseline`] unless the config sets one.
pub const BASELINE_EARLY_STOPPING: EarlyStopping = EarlyStopping { patience: 100, min_delta: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Gnn,
    PointNet,
    Dgcnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Gnn, ModelKind::PointNet, ModelKind::Dgcnn];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gnn => "gnn",
            ModelKind::PointNet => "pointnet",
            ModelKind::Dgcnn => "dgcnn",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gnn" => Ok(ModelKind::Gnn),
            "pointnet" => Ok(ModelKind::PointNet),
            "dgcnn" => Ok(ModelKind::Dgcnn),
            other => Err(Error::Config(alloc::format!("unknown model kind `{other}`"))),
        }
    }
}

/// Any trained model, tagged by kind.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Gnn(SurrogateModel),
    PointNet(PointNetModel),
    Dgcnn(DgcnnModel),
}

impl AnyModel {
    /// Default architecture of `kind`, initialized from `rng`.
    pub fn with_defaults(kind: ModelKind, rng: &mut Prng) -> Self {
        match kind {
            ModelKind::Gnn => AnyModel::Gnn(SurrogateModel::with_defaults(rng)),
            ModelKind::PointNet => AnyModel::PointNet(PointNetModel::with_defaults(rng)),
            ModelKind::Dgcnn => AnyModel::Dgcnn(DgcnnModel::with_defaults(rng)),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::Gnn(_) => ModelKind::Gnn,
            AnyModel::PointNet(_) => ModelKind::PointNet,
            AnyModel::Dgcnn(_) => ModelKind::Dgcnn,
        }
    }

    pub fn set_dropout(&mut self, p: f64) -> Result<()> {
        match self {
            AnyModel::Gnn(m) => m.set_dropout(p),
            AnyModel::PointNet(m) => m.set_dropout(p),
            AnyModel::Dgcnn(m) => m.set_dropout(p),
        }
    }
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            AnyModel::Gnn($m) => $body,
            AnyModel::PointNet($m) => $body,
            AnyModel::Dgcnn($m) => $body,
        }
    };
}

impl Regressor for AnyModel {
    fn input_width(&self) -> usize {
        dispatch!(self, m => m.input_width())
    }

    fn scaler(&self) -> &FeatureScaler {
        dispatch!(self, m => m.scaler())
    }

    fn set_scaler(&mut self, scaler: FeatureScaler) -> Result<()> {
        dispatch!(self, m => m.set_scaler(scaler))
    }

    fn forward_sample(&self, sample: &Sample, mode: Mode, rng: &mut Prng) -> Result<DenseMatrix> {
        dispatch!(self, m => m.forward_sample(sample, mode, rng))
    }

    fn loss_and_gradients_sample(
        &self,
        sample: &Sample,
        mode: Mode,
        rng: &mut Prng,
    ) -> Result<(f64, Vec<DenseMatrix>)> {
        dispatch!(self, m => m.loss_and_gradients_sample(sample, mode, rng))
    }

    fn params(&self) -> Vec<&DenseMatrix> {
        dispatch!(self, m => m.params())
    }

    fn params_mut(&mut self) -> Vec<&mut DenseMatrix> {
        dispatch!(self, m => m.params_mut())
    }
}

/// Trains the default architecture of `kind` with the shared trainer.
/// Baselines get [`BASELINE_EARLY_STOPPING`] when the config has none; the
/// GNN uses the config unchanged.
pub fn train_baseline(
    kind: ModelKind,
    train: &[Graph],
    test: &[Graph],
    config: &TrainConfig,
) -> Result<(AnyModel, LossHistory)> {
    let mut config = config.clone();
    if kind != ModelKind::Gnn && config.early_stopping.is_none() {
        config.early_stopping = Some(BASELINE_EARLY_STOPPING);
    }
    let mut rng = Prng::new(config.seed);
    let model = AnyModel::with_defaults(kind, &mut rng);
    fit(model, train, test, &config, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_roundtrip() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert!("mlp".parse::<ModelKind>().is_err());
    }
}
