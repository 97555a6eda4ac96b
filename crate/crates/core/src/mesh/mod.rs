//! Surface meshes and their conversion to graphs.

mod average;
mod graph;
mod scaler;
mod surface;

pub use average::{cell_to_point_average, PointAverage};
pub use graph::{mesh_to_graph, mesh_to_graph_with, FeatureColumn, Graph, DEFAULT_FEATURES};
pub use scaler::FeatureScaler;
pub use surface::{Cell, ProcessParams, SurfaceMesh};
