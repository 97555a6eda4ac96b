use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Violations of the [`SurfaceMesh`](crate::mesh::SurfaceMesh) invariants.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshError {
    IndexOutOfRange { cell: usize, index: usize, num_points: usize },
    CellArity { cell: usize, arity: usize },
    RepeatedVertex { cell: usize },
    FieldLength { field: String, expected: usize, found: usize },
    NonFinite { location: String },
    InvalidParams(String),
    DuplicateField(String),
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::IndexOutOfRange { cell, index, num_points } => write!(
                f,
                "cell {cell}: index out of range ({index} >= {num_points} points)"
            ),
            MeshError::CellArity { cell, arity } => {
                write!(f, "cell {cell}: expected 3 or 4 vertices, found {arity}")
            }
            MeshError::RepeatedVertex { cell } => write!(f, "cell {cell}: repeated vertex index"),
            MeshError::FieldLength { field, expected, found } => write!(
                f,
                "field `{field}`: expected {expected} values, found {found}"
            ),
            MeshError::NonFinite { location } => write!(f, "non-finite number at {location}"),
            MeshError::InvalidParams(msg) => write!(f, "invalid process parameters: {msg}"),
            MeshError::DuplicateField(name) => write!(f, "field `{name}` already exists"),
        }
    }
}

impl core::error::Error for MeshError {}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes do not agree.
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    /// Feature width entering a layer does not match its declared input width.
    LayerShape { layer: usize, expected: usize, found: usize },
    NonFinite { context: String },
    NonFiniteGradient { block: usize },
    Config(String),
    MissingTarget,
    UnknownField(String),
    Training { epoch: usize, sample: usize, reason: String },
    Mesh(MeshError),
    GradCheck(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { op, left, right } => write!(
                f,
                "{op}: shape mismatch {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Error::LayerShape { layer, expected, found } => write!(
                f,
                "layer {layer}: expected {expected} input features, found {found}"
            ),
            Error::NonFinite { context } => write!(f, "non-finite value in {context}"),
            Error::NonFiniteGradient { block } => {
                write!(f, "non-finite gradient in parameter block {block}")
            }
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::MissingTarget => f.write_str("graph has no target field"),
            Error::UnknownField(name) => write!(f, "unknown field `{name}`"),
            Error::Training { epoch, sample, reason } => {
                write!(f, "training failed at epoch {epoch}, sample {sample}: {reason}")
            }
            Error::Mesh(e) => write!(f, "invalid mesh: {e}"),
            Error::GradCheck(msg) => write!(f, "gradient check failed: {msg}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::Mesh(e) => Some(e),
            _ => None,
        }
    }
}

impl From<MeshError> for Error {
    fn from(e: MeshError) -> Self {
        Error::Mesh(e)
    }
}
