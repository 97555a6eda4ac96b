//! The GCN surrogate: symmetric-normalized aggregation, graph convolution
//! layers and the five-layer regression stack.

mod adjacency;
mod layer;
mod surrogate;

pub use adjacency::NormalizedAdjacency;
pub use layer::GcnLayer;
pub use surrogate::{train, SurrogateModel, DEFAULT_DIMS, DEFAULT_DROPOUT};
