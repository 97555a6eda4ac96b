use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{cell_to_point_average, SurfaceMesh};
use crate::numerics::DenseMatrix;
use crate::{Error, Result};

/// Node-regression sample: features, undirected edges, optional target.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    node_features: DenseMatrix,
    target: Option<DenseMatrix>,
    features_scaled: bool,
}

impl Graph {
    /// Edges are canonicalized to `i < j`, sorted and deduplicated.
    /// Self-loops and out-of-range endpoints are rejected.
    pub fn new(
        node_features: DenseMatrix,
        edges: impl IntoIterator<Item = (usize, usize)>,
        target: Option<DenseMatrix>,
    ) -> Result<Self> {
        let n = node_features.rows();
        let mut canonical = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Config(format!("self-loop on node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Config(format!("edge ({a}, {b}) outside {n} nodes")));
            }
            canonical.push((a.min(b), a.max(b)));
        }
        canonical.sort_unstable();
        canonical.dedup();
        if let Some(t) = &target {
            if t.shape() != (n, 1) {
                return Err(Error::Shape { op: "Graph::new target", left: (n, 1), right: t.shape() });
            }
        }
        Ok(Graph { num_nodes: n, edges: canonical, node_features, target, features_scaled: false })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_features(&self) -> usize {
        self.node_features.cols()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_features(&self) -> &DenseMatrix {
        &self.node_features
    }

    pub fn target(&self) -> Option<&DenseMatrix> {
        self.target.as_ref()
    }

    /// True once the features have been standardized by a
    /// [`FeatureScaler`](super::FeatureScaler).
    pub fn features_scaled(&self) -> bool {
        self.features_scaled
    }

    pub fn with_target(mut self, target: Option<DenseMatrix>) -> Result<Self> {
        if let Some(t) = &target {
            if t.shape() != (self.num_nodes, 1) {
                return Err(Error::Shape {
                    op: "Graph::with_target",
                    left: (self.num_nodes, 1),
                    right: t.shape(),
                });
            }
        }
        self.target = target;
        Ok(self)
    }

    pub(crate) fn with_scaled_features(mut self, features: DenseMatrix) -> Self {
        debug_assert_eq!(features.shape(), self.node_features.shape());
        self.node_features = features;
        self.features_scaled = true;
        self
    }

    /// Relabels nodes: old node `i` becomes node `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.num_nodes;
        if perm.len() != n {
            return Err(Error::Config(format!("permutation of length {} for {n} nodes", perm.len())));
        }
        let mut inverse = alloc::vec![usize::MAX; n];
        for (old, &new) in perm.iter().enumerate() {
            if new >= n || inverse[new] != usize::MAX {
                return Err(Error::Config("not a permutation".into()));
            }
            inverse[new] = old;
        }
        let features = self.node_features.select_rows(&inverse);
        let target = self.target.as_ref().map(|t| t.select_rows(&inverse));
        let mut g = Graph::new(features, self.edges.iter().map(|&(a, b)| (perm[a], perm[b])), target)?;
        g.features_scaled = self.features_scaled;
        Ok(g)
    }
}

/// One column of the node-feature matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureColumn {
    X,
    Y,
    Z,
    Temperature,
    Friction,
    PointField(String),
    /// A cell field moved to points by [`cell_to_point_average`].
    CellField(String),
}

/// `[x, y, z, temperature, friction]`.
pub const DEFAULT_FEATURES: [FeatureColumn; 5] = [
    FeatureColumn::X,
    FeatureColumn::Y,
    FeatureColumn::Z,
    FeatureColumn::Temperature,
    FeatureColumn::Friction,
];

/// [`mesh_to_graph_with`] using [`DEFAULT_FEATURES`].
pub fn mesh_to_graph(mesh: &SurfaceMesh, target_field: Option<&str>) -> Result<Graph> {
    mesh_to_graph_with(mesh, &DEFAULT_FEATURES, target_field)
}

/// Builds a graph whose edges are the perimeter edges of every cell and
/// whose features are `columns`. Process parameters are broadcast to every
/// node.
///
/// A target field is looked up among cell fields first (and averaged onto
/// points), then among point fields.
pub fn mesh_to_graph_with(
    mesh: &SurfaceMesh,
    columns: &[FeatureColumn],
    target_field: Option<&str>,
) -> Result<Graph> {
    let n = mesh.num_points();
    let params = mesh.params();
    let mut per_column: Vec<Vec<f64>> = Vec::with_capacity(columns.len());
    for col in columns {
        let values = match col {
            FeatureColumn::X => mesh.points().iter().map(|p| p[0]).collect(),
            FeatureColumn::Y => mesh.points().iter().map(|p| p[1]).collect(),
            FeatureColumn::Z => mesh.points().iter().map(|p| p[2]).collect(),
            FeatureColumn::Temperature => alloc::vec![params.temperature; n],
            FeatureColumn::Friction => alloc::vec![params.friction; n],
            FeatureColumn::PointField(name) => mesh
                .point_fields()
                .get(name)
                .cloned()
                .ok_or_else(|| Error::UnknownField(name.clone()))?,
            FeatureColumn::CellField(name) => cell_to_point_average(mesh, name)?.values,
        };
        per_column.push(values);
    }
    let mut data = Vec::with_capacity(n * columns.len());
    for p in 0..n {
        data.extend(per_column.iter().map(|c| c[p]));
    }
    let features = DenseMatrix::new(n, columns.len(), data)?;

    let target = match target_field {
        None => None,
        Some(name) => {
            let values = if mesh.cell_fields().contains_key(name) {
                cell_to_point_average(mesh, name)?.values
            } else if let Some(v) = mesh.point_fields().get(name) {
                v.clone()
            } else {
                return Err(Error::UnknownField(name.into()));
            };
            Some(DenseMatrix::new(n, 1, values)?)
        }
    };

    let edges = mesh.cells().iter().flat_map(|c| c.boundary_edges());
    Graph::new(features, edges, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Cell, ProcessParams};
    use alloc::collections::BTreeMap;
    use alloc::vec;

    fn mesh(points: usize, cells: Vec<Cell>) -> SurfaceMesh {
        let pts = (0..points).map(|i| [i as f64, 2.0 * i as f64, 0.5]).collect();
        let wear = vec![1.0; cells.len()];
        let mut cf = BTreeMap::new();
        cf.insert("wear".into(), wear);
        SurfaceMesh::new(pts, cells, cf, BTreeMap::new(), ProcessParams::new(1000.0, 0.3).unwrap())
            .unwrap()
    }

    #[test]
    fn two_triangles() {
        let g = mesh_to_graph(&mesh(4, vec![Cell::Tri([0, 1, 2]), Cell::Tri([1, 2, 3])]), None).unwrap();
        assert_eq!(g.num_nodes(), 4);
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn broadcast_params() {
        let g = mesh_to_graph(&mesh(3, vec![Cell::Tri([0, 1, 2])]), Some("wear")).unwrap();
        assert_eq!(g.num_features(), 5);
        for r in 0..3 {
            assert_eq!(&g.node_features().row(r)[3..], &[1000.0, 0.3]);
        }
        assert_eq!(g.node_features().row(2)[..3], [2.0, 4.0, 0.5]);
        assert_eq!(g.target().unwrap().data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn quad_perimeter_only() {
        let g = mesh_to_graph(&mesh(4, vec![Cell::Quad([0, 1, 2, 3])]), None).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 3), (1, 2), (2, 3)]);
    }

    #[test]
    fn unknown_target() {
        let err = mesh_to_graph(&mesh(3, vec![Cell::Tri([0, 1, 2])]), Some("nope")).unwrap_err();
        assert_eq!(err, Error::UnknownField("nope".into()));
    }

    #[test]
    fn configurable_columns() {
        let m = mesh(3, vec![Cell::Tri([0, 1, 2])]);
        let cols = [FeatureColumn::Friction, FeatureColumn::CellField("wear".into())];
        let g = mesh_to_graph_with(&m, &cols, None).unwrap();
        assert_eq!(g.node_features().row(0), &[0.3, 1.0]);
    }

    #[test]
    fn graph_rejects_self_loops() {
        assert!(Graph::new(DenseMatrix::zeros(2, 1), [(1, 1)], None).is_err());
        assert!(Graph::new(DenseMatrix::zeros(2, 1), [(0, 2)], None).is_err());
        let g = Graph::new(DenseMatrix::zeros(3, 1), [(2, 0), (0, 2), (1, 0)], None).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2)]);
    }
}
