use alloc::vec;
use alloc::vec::Vec;

use crate::mesh::Graph;
use crate::numerics::DenseMatrix;
use crate::{Error, Result};

/// `D^-1/2 (A + I) D^-1/2` in compressed-row form, where `D` is the degree
/// matrix of `A + I`. Each row lists the node itself and its neighbours in
/// increasing column order.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn from_graph(graph: &Graph) -> Self {
        let n = graph.num_nodes();
        let mut neighbours: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(a, b) in graph.edges() {
            neighbours[a].push(b);
            neighbours[b].push(a);
        }
        let degree: Vec<f64> = neighbours.iter().map(|nb| nb.len() as f64).collect();

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(n + 2 * graph.edges().len());
        let mut vals = Vec::with_capacity(cols.capacity());
        row_ptr.push(0);
        for (i, nb) in neighbours.iter_mut().enumerate() {
            nb.sort_unstable();
            for &j in nb.iter() {
                cols.push(j);
                // d_i * d_j is commutative, so the operator is exactly symmetric.
                vals.push(1.0 / libm::sqrt(degree[i] * degree[j]));
            }
            row_ptr.push(cols.len());
        }
        NormalizedAdjacency { row_ptr, cols, vals }
    }

    pub fn num_nodes(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Number of stored coefficients, self-loops included.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Coefficient `(i, j)`; zero when the nodes are not adjacent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[lo..hi].binary_search(&j) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    /// `(i, j, value)` for every stored coefficient, row by row.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_nodes()).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k]))
        })
    }

    /// Sparse product `Â * h`.
    pub fn apply(&self, h: &DenseMatrix) -> Result<DenseMatrix> {
        let n = self.num_nodes();
        if h.rows() != n {
            return Err(Error::Shape { op: "adjacency apply", left: (n, n), right: h.shape() });
        }
        let f = h.cols();
        let mut out = DenseMatrix::zeros(n, f);
        for i in 0..n {
            let row = out.row_mut(i);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let w = self.vals[k];
                for (o, &x) in row.iter_mut().zip(h.row(self.cols[k])) {
                    *o += w * x;
                }
            }
        }
        Ok(out)
    }
}
