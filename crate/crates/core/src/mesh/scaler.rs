use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Graph;
use crate::numerics::DenseMatrix;
use crate::{Error, Result};

/// Per-column standardization `(x - mean) / std`, fitted on training graphs
/// only. Targets are never scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl FeatureScaler {
    /// Mean 0, std 1: leaves features unchanged.
    pub fn identity(width: usize) -> Self {
        FeatureScaler { mean: vec![0.0; width], std: vec![1.0; width] }
    }

    /// Fails if lengths differ or any `std` is not strictly positive.
    pub fn from_parts(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::Config(format!(
                "scaler has {} means but {} stds",
                mean.len(),
                std.len()
            )));
        }
        if mean.iter().any(|m| !m.is_finite()) || std.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Config("scaler entries must be finite with std > 0".into()));
        }
        Ok(FeatureScaler { mean, std })
    }

    /// Population mean and std of each column over all rows of all graphs.
    /// Columns with zero variance (including constant columns) get std 1.
    pub fn fit<'a>(graphs: impl IntoIterator<Item = &'a Graph>) -> Result<Self> {
        let graphs: Vec<&Graph> = graphs.into_iter().collect();
        let first = graphs
            .first()
            .ok_or_else(|| Error::Config("cannot fit a scaler on zero graphs".into()))?;
        let width = first.num_features();
        if let Some(g) = graphs.iter().find(|g| g.num_features() != width) {
            return Err(Error::Config(format!(
                "feature width {} differs from {width}",
                g.num_features()
            )));
        }
        let rows: usize = graphs.iter().map(|g| g.num_nodes()).sum();
        if rows == 0 {
            return Err(Error::Config("cannot fit a scaler on graphs with no nodes".into()));
        }
        let all_rows = || graphs.iter().flat_map(|g| (0..g.num_nodes()).map(move |r| g.node_features().row(r)));

        let mut mean = vec![0.0; width];
        for row in all_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= rows as f64);

        let mut var = vec![0.0; width];
        let mut constant = vec![true; width];
        let reference: Vec<f64> = all_rows().next().map(|r| r.to_vec()).unwrap_or_default();
        for row in all_rows() {
            for c in 0..width {
                let d = row[c] - mean[c];
                var[c] += d * d;
                constant[c] &= row[c] == reference[c];
            }
        }
        let mut std = Vec::with_capacity(width);
        for c in 0..width {
            if constant[c] {
                // Exact mean so the scaled column is exactly zero.
                mean[c] = reference[c];
                std.push(1.0);
            } else {
                let s = libm::sqrt(var[c] / rows as f64);
                std.push(if s > 0.0 { s } else { 1.0 });
            }
        }
        Ok(FeatureScaler { mean, std })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn transform(&self, features: &DenseMatrix) -> Result<DenseMatrix> {
        if features.cols() != self.width() {
            return Err(Error::LayerShape { layer: 0, expected: self.width(), found: features.cols() });
        }
        let mut out = features.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out.ensure_finite("feature scaling")?;
        Ok(out)
    }

    /// Returns `graph` with standardized features, target untouched.
    pub fn apply(&self, graph: &Graph) -> Result<Graph> {
        if graph.features_scaled() {
            return Err(Error::Config("graph features are already scaled".into()));
        }
        let features = self.transform(graph.node_features())?;
        Ok(graph.clone().with_scaled_features(features))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(rows: &[&[f64]]) -> Graph {
        Graph::new(DenseMatrix::from_rows(rows).unwrap(), [], None).unwrap()
    }

    #[test]
    fn constant_column() {
        let g = graph(&[&[0.3, 1.0], &[0.3, 2.0], &[0.3, 4.0]]);
        let s = FeatureScaler::fit([&g]).unwrap();
        assert_eq!(s.std()[0], 1.0);
        let scaled = s.apply(&g).unwrap();
        for r in 0..3 {
            assert_eq!(scaled.node_features().get(r, 0), 0.0);
        }
    }

    #[test]
    fn population_std() {
        let g = graph(&[&[0.0], &[2.0]]);
        let s = FeatureScaler::fit([&g]).unwrap();
        assert_eq!(s.mean(), &[1.0]);
        assert_eq!(s.std(), &[1.0]);
        let scaled = s.apply(&g).unwrap();
        assert_eq!(scaled.node_features().data(), &[-1.0, 1.0]);
        assert!(scaled.features_scaled());
    }

    #[test]
    fn fitted_columns_have_zero_mean() {
        let g = graph(&[&[1.5, -3.0], &[2.25, 8.0], &[9.0, 0.5], &[-4.0, 0.125]]);
        let s = FeatureScaler::fit([&g]).unwrap();
        let scaled = s.apply(&g).unwrap();
        for c in 0..2 {
            let m: f64 = (0..4).map(|r| scaled.node_features().get(r, c)).sum::<f64>() / 4.0;
            assert!(m.abs() < 1e-12);
        }
    }

    #[test]
    fn fit_over_several_graphs() {
        let a = graph(&[&[0.0]]);
        let b = graph(&[&[4.0]]);
        let s = FeatureScaler::fit([&a, &b]).unwrap();
        assert_eq!((s.mean()[0], s.std()[0]), (2.0, 2.0));
    }

    #[test]
    fn empty_set_is_config_error() {
        assert!(matches!(FeatureScaler::fit([]), Err(Error::Config(_))));
    }

    #[test]
    fn width_mismatch() {
        let s = FeatureScaler::identity(3);
        assert!(s.apply(&graph(&[&[1.0]])).is_err());
    }
}
