use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::MeshError;

/// Process inputs of one simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    /// Kelvin, strictly positive.
    pub temperature: f64,
    /// Dimensionless, non-negative.
    pub friction: f64,
}

impl ProcessParams {
    pub fn new(temperature: f64, friction: f64) -> Result<Self, MeshError> {
        let p = ProcessParams { temperature, friction };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if !self.temperature.is_finite() || !self.friction.is_finite() {
            return Err(MeshError::NonFinite { location: "params".into() });
        }
        if self.temperature <= 0.0 {
            return Err(MeshError::InvalidParams(format!(
                "temperature {} must be positive",
                self.temperature
            )));
        }
        if self.friction < 0.0 {
            return Err(MeshError::InvalidParams(format!(
                "friction {} must be non-negative",
                self.friction
            )));
        }
        Ok(())
    }
}

/// A triangle or quadrilateral, vertices in boundary order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Tri([usize; 3]),
    Quad([usize; 4]),
}

impl Cell {
    /// Fails unless `vertices` has 3 or 4 entries. Index validity is checked
    /// by [`SurfaceMesh::new`].
    pub fn from_slice(vertices: &[usize]) -> Option<Cell> {
        match *vertices {
            [a, b, c] => Some(Cell::Tri([a, b, c])),
            [a, b, c, d] => Some(Cell::Quad([a, b, c, d])),
            _ => None,
        }
    }

    pub fn vertices(&self) -> &[usize] {
        match self {
            Cell::Tri(v) => v,
            Cell::Quad(v) => v,
        }
    }

    /// Perimeter edges `(v[k], v[k+1])`, closing back to `v[0]`. Quads get
    /// no diagonal.
    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let v = self.vertices();
        (0..v.len()).map(move |k| (v[k], v[(k + 1) % v.len()]))
    }
}

/// A finite-element surface with fields and process parameters.
///
/// Construction validates every invariant, so a `SurfaceMesh` value is
/// always well formed.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    points: Vec<[f64; 3]>,
    cells: Vec<Cell>,
    cell_fields: BTreeMap<String, Vec<f64>>,
    point_fields: BTreeMap<String, Vec<f64>>,
    params: ProcessParams,
}

impl SurfaceMesh {
    pub fn new(
        points: Vec<[f64; 3]>,
        cells: Vec<Cell>,
        cell_fields: BTreeMap<String, Vec<f64>>,
        point_fields: BTreeMap<String, Vec<f64>>,
        params: ProcessParams,
    ) -> Result<Self, MeshError> {
        for (i, p) in points.iter().enumerate() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(MeshError::NonFinite { location: format!("points[{i}]") });
            }
        }
        for (ci, cell) in cells.iter().enumerate() {
            let v = cell.vertices();
            for &idx in v {
                if idx >= points.len() {
                    return Err(MeshError::IndexOutOfRange {
                        cell: ci,
                        index: idx,
                        num_points: points.len(),
                    });
                }
            }
            for a in 0..v.len() {
                if v[a + 1..].contains(&v[a]) {
                    return Err(MeshError::RepeatedVertex { cell: ci });
                }
            }
        }
        check_fields("cell_fields", &cell_fields, cells.len())?;
        check_fields("point_fields", &point_fields, points.len())?;
        params.validate()?;
        Ok(SurfaceMesh { points, cells, cell_fields, point_fields, params })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell_fields(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.cell_fields
    }

    pub fn point_fields(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.point_fields
    }

    pub fn params(&self) -> ProcessParams {
        self.params
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn with_params(mut self, params: ProcessParams) -> Result<Self, MeshError> {
        params.validate()?;
        self.params = params;
        Ok(self)
    }

    /// Inserts or replaces a per-point field.
    pub fn set_point_field(&mut self, name: &str, values: Vec<f64>) -> Result<(), MeshError> {
        check_field("point_fields", name, &values, self.points.len())?;
        self.point_fields.insert(name.into(), values);
        Ok(())
    }

    /// Inserts or replaces a per-cell field.
    pub fn set_cell_field(&mut self, name: &str, values: Vec<f64>) -> Result<(), MeshError> {
        check_field("cell_fields", name, &values, self.cells.len())?;
        self.cell_fields.insert(name.into(), values);
        Ok(())
    }

    /// Arithmetic mean of each cell's vertex coordinates.
    pub fn cell_centroid(&self, cell: usize) -> [f64; 3] {
        let v = self.cells[cell].vertices();
        let mut c = [0.0; 3];
        for &i in v {
            for (acc, x) in c.iter_mut().zip(self.points[i]) {
                *acc += x;
            }
        }
        c.map(|s| s / v.len() as f64)
    }
}

fn check_fields(
    kind: &str,
    fields: &BTreeMap<String, Vec<f64>>,
    expected: usize,
) -> Result<(), MeshError> {
    fields.iter().try_for_each(|(name, values)| check_field(kind, name, values, expected))
}

fn check_field(kind: &str, name: &str, values: &[f64], expected: usize) -> Result<(), MeshError> {
    if values.len() != expected {
        return Err(MeshError::FieldLength { field: name.into(), expected, found: values.len() });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(MeshError::NonFinite { location: format!("{kind}.{name}[{i}]") });
    }
    Ok(())
}
