use alloc::vec;
use alloc::vec::Vec;

use super::SurfaceMesh;
use crate::{Error, Result};

/// A cell field moved onto the points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointAverage {
    pub values: Vec<f64>,
    /// Points that belong to no cell; their value is 0.
    pub isolated: Vec<usize>,
}

/// Value at each point = arithmetic mean of `field_name` over the cells that
/// contain the point.
pub fn cell_to_point_average(mesh: &SurfaceMesh, field_name: &str) -> Result<PointAverage> {
    let field = mesh
        .cell_fields()
        .get(field_name)
        .ok_or_else(|| Error::UnknownField(field_name.into()))?;
    let n = mesh.num_points();
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for (cell, &value) in mesh.cells().iter().zip(field) {
        for &p in cell.vertices() {
            sums[p] += value;
            counts[p] += 1;
        }
    }
    let mut isolated = Vec::new();
    let values = sums
        .into_iter()
        .zip(&counts)
        .enumerate()
        .map(|(p, (s, &c))| {
            if c == 0 {
                isolated.push(p);
                0.0
            } else {
                s / c as f64
            }
        })
        .collect();
    Ok(PointAverage { values, isolated })
}
