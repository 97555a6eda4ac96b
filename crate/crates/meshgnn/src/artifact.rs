//! Versioned `.gnn` model artifacts (JSON).

use meshgnn_core::baselines::{AnyModel, DgcnnModel, ModelKind, PointNetModel};
use meshgnn_core::mesh::FeatureScaler;
use meshgnn_core::model::{GcnLayer, SurrogateModel};
use meshgnn_core::numerics::{DenseMatrix, Linear};
use meshgnn_core::train::Regressor;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const FORMAT: &str = "meshgnn-model";
pub const VERSION: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("malformed model file: {0}")]
    Syntax(String),
    #[error("not a model file (format tag `{0}`)")]
    Format(String),
    #[error("unsupported model file version {found} (expected {VERSION})")]
    Version { found: u64 },
    #[error("inconsistent model file: {0}")]
    Shape(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Layer {
    weight: Matrix,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Scaler {
    mean: Vec<f64>,
    std: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum Body {
    Gnn { dims: Vec<usize>, layers: Vec<Layer> },
    PointNet { point_layers: Vec<Layer>, head_layers: Vec<Layer> },
    Dgcnn { k: usize, edge_layers: Vec<Layer>, head_layers: Vec<Layer> },
}

// `flatten` rules out `deny_unknown_fields` here; `Body` still rejects
// unknown keys.
#[derive(Serialize, Deserialize)]
struct Document {
    format: String,
    version: u64,
    dropout_p: f64,
    scaler: Scaler,
    #[serde(flatten)]
    body: Body,
}

fn matrix(m: &DenseMatrix) -> Matrix {
    Matrix { rows: m.rows(), cols: m.cols(), data: m.data().to_vec() }
}

fn layer(weight: &DenseMatrix, bias: &DenseMatrix) -> Layer {
    Layer { weight: matrix(weight), bias: bias.data().to_vec() }
}

fn linears(layers: &[Linear]) -> Vec<Layer> {
    layers.iter().map(|l| layer(&l.weight, &l.bias)).collect()
}

pub fn save_model(model: &AnyModel) -> String {
    let scaler = model.scaler();
    let (dropout_p, body) = match model {
        AnyModel::Gnn(m) => (
            m.dropout_p(),
            Body::Gnn {
                dims: m.dims().to_vec(),
                layers: m.layers().iter().map(|l| layer(&l.weight, &l.bias)).collect(),
            },
        ),
        AnyModel::PointNet(m) => (
            m.dropout_p(),
            Body::PointNet { point_layers: linears(m.point_layers()), head_layers: linears(m.head_layers()) },
        ),
        AnyModel::Dgcnn(m) => (
            m.dropout_p(),
            Body::Dgcnn {
                k: m.k(),
                edge_layers: linears(m.edge_layers()),
                head_layers: linears(m.head_layers()),
            },
        ),
    };
    let doc = Document {
        format: FORMAT.into(),
        version: VERSION,
        dropout_p,
        scaler: Scaler { mean: scaler.mean().to_vec(), std: scaler.std().to_vec() },
        body,
    };
    let mut text = serde_json::to_string(&doc).expect("model values are finite");
    text.push('\n');
    text
}

pub fn load_model(text: &str) -> Result<AnyModel, ArtifactError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ArtifactError::Syntax(e.to_string()))?;
    match value.get("format").and_then(Value::as_str) {
        Some(FORMAT) => {}
        Some(other) => return Err(ArtifactError::Format(other.into())),
        None => return Err(ArtifactError::Syntax("missing `format`".into())),
    }
    match value.get("version").and_then(Value::as_u64) {
        Some(VERSION) => {}
        Some(found) => return Err(ArtifactError::Version { found }),
        None => return Err(ArtifactError::Syntax("missing `version`".into())),
    }
    let doc: Document = serde_json::from_value(value).map_err(|e| ArtifactError::Syntax(e.to_string()))?;
    build(doc).map_err(|e| ArtifactError::Shape(e.to_string()))
}

fn to_dense(m: Matrix) -> meshgnn_core::Result<DenseMatrix> {
    DenseMatrix::new(m.rows, m.cols, m.data)
}

fn to_linear(l: Layer) -> meshgnn_core::Result<Linear> {
    let bias = DenseMatrix::new(1, l.bias.len(), l.bias)?;
    Linear::from_parts(to_dense(l.weight)?, bias)
}

fn build(doc: Document) -> meshgnn_core::Result<AnyModel> {
    let scaler = FeatureScaler::from_parts(doc.scaler.mean, doc.scaler.std)?;
    let lin = |ls: Vec<Layer>| ls.into_iter().map(to_linear).collect::<meshgnn_core::Result<Vec<_>>>();
    Ok(match doc.body {
        Body::Gnn { dims, layers } => {
            let layers = layers
                .into_iter()
                .map(|l| {
                    let lin = to_linear(l)?;
                    GcnLayer::from_parts(lin.weight, lin.bias)
                })
                .collect::<meshgnn_core::Result<Vec<_>>>()?;
            AnyModel::Gnn(SurrogateModel::from_parts(dims, layers, doc.dropout_p, scaler)?)
        }
        Body::PointNet { point_layers, head_layers } => AnyModel::PointNet(PointNetModel::from_parts(
            lin(point_layers)?,
            lin(head_layers)?,
            doc.dropout_p,
            scaler,
        )?),
        Body::Dgcnn { k, edge_layers, head_layers } => AnyModel::Dgcnn(DgcnnModel::from_parts(
            k,
            lin(edge_layers)?,
            lin(head_layers)?,
            doc.dropout_p,
            scaler,
        )?),
    })
}

/// Kind recorded in an artifact, without building the model.
pub fn peek_kind(text: &str) -> Option<ModelKind> {
    let value: Value = serde_json::from_str(text).ok()?;
    value.get("kind")?.as_str()?.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use meshgnn_core::numerics::Prng;

    #[test]
    fn round_trip_every_kind() {
        for kind in ModelKind::ALL {
            let model = AnyModel::with_defaults(kind, &mut Prng::new(3));
            let text = save_model(&model);
            assert_eq!(peek_kind(&text), Some(kind));
            let back = load_model(&text).unwrap();
            assert_eq!(back, model);
            assert_eq!(save_model(&back), text);
        }
    }

    #[test]
    fn version_mismatch() {
        let text = save_model(&AnyModel::with_defaults(ModelKind::Gnn, &mut Prng::new(0)));
        let bumped = text.replacen("\"version\":1", "\"version\":2", 1);
        assert!(matches!(load_model(&bumped), Err(ArtifactError::Version { found: 2 })));
    }

    #[test]
    fn truncated_file() {
        let text = save_model(&AnyModel::with_defaults(ModelKind::Gnn, &mut Prng::new(0)));
        assert!(matches!(load_model(&text[..text.len() / 2]), Err(ArtifactError::Syntax(_))));
    }

    #[test]
    fn dims_disagree_with_layers() {
        let text = save_model(&AnyModel::with_defaults(ModelKind::Gnn, &mut Prng::new(0)));
        let bad = text.replacen("\"dims\":[5,50,100,50,50,1]", "\"dims\":[5,50]", 1);
        assert_ne!(bad, text);
        assert!(matches!(load_model(&bad), Err(ArtifactError::Shape(_))));
    }
}
