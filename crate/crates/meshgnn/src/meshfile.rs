//! Text mesh format: a JSON document with `points`, `cells`, `cell_fields`,
//! `point_fields` and `params`.
//!
//! ```text
//! {
//!   "points": [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
//!   "cells": [[0, 1, 2]],
//!   "cell_fields": {"wear": [6.0]},
//!   "point_fields": {},
//!   "params": {"temperature": 1000.0, "friction": 0.3}
//! }
//! ```
//!
//! `cell_fields` and `point_fields` may be omitted on input; the writer always
//! emits them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use meshgnn_core::mesh::{Cell, ProcessParams, SurfaceMesh};
use meshgnn_core::MeshError;
use serde_json::{Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum MeshFileError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("unexpected key `{0}`")]
    UnexpectedKey(String),
    #[error("{location}: expected {expected}")]
    Type { location: String, expected: &'static str },
    #[error("{location}: non-finite number")]
    NonFinite { location: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

const KEYS: [&str; 5] = ["points", "cells", "cell_fields", "point_fields", "params"];

pub fn parse_mesh(text: &str) -> Result<SurfaceMesh, MeshFileError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        // serde_json rejects overflowing literals such as 1e999 at parse time.
        if message.starts_with("number out of range") {
            MeshFileError::NonFinite { location: format!("line {}, column {}", e.line(), e.column()) }
        } else {
            MeshFileError::Syntax { line: e.line(), column: e.column(), message }
        }
    })?;
    let root = doc
        .as_object()
        .ok_or(MeshFileError::Type { location: "document".into(), expected: "an object" })?;
    if let Some(k) = root.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(MeshFileError::UnexpectedKey(k.clone()));
    }

    let points_v = root.get("points").ok_or(MeshFileError::MissingKey("points"))?;
    let points = array(points_v, "points")?
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let loc = format!("points[{i}]");
            let xs = array(p, &loc)?;
            if xs.len() != 3 {
                return Err(MeshFileError::Type { location: loc, expected: "3 coordinates" });
            }
            let mut out = [0.0; 3];
            for (c, x) in xs.iter().enumerate() {
                out[c] = number(x, &format!("points[{i}][{c}]"))?;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let cells_v = root.get("cells").ok_or(MeshFileError::MissingKey("cells"))?;
    let cells = array(cells_v, "cells")?
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let loc = format!("cells[{i}]");
            let idx = array(c, &loc)?
                .iter()
                .map(|v| {
                    v.as_u64().and_then(|u| usize::try_from(u).ok()).ok_or(MeshFileError::Type {
                        location: loc.clone(),
                        expected: "non-negative integer indices",
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Cell::from_slice(&idx).ok_or(MeshError::CellArity { cell: i, arity: idx.len() }.into())
        })
        .collect::<Result<Vec<_>, MeshFileError>>()?;

    let cell_fields = fields(root.get("cell_fields"), "cell_fields")?;
    let point_fields = fields(root.get("point_fields"), "point_fields")?;

    let params_v = root.get("params").ok_or(MeshFileError::MissingKey("params"))?;
    let params_o = params_v
        .as_object()
        .ok_or(MeshFileError::Type { location: "params".into(), expected: "an object" })?;
    if let Some(k) = params_o.keys().find(|k| *k != "temperature" && *k != "friction") {
        return Err(MeshFileError::UnexpectedKey(format!("params.{k}")));
    }
    let temperature = number(
        params_o.get("temperature").ok_or(MeshFileError::MissingKey("params.temperature"))?,
        "params.temperature",
    )?;
    let friction = number(
        params_o.get("friction").ok_or(MeshFileError::MissingKey("params.friction"))?,
        "params.friction",
    )?;

    Ok(SurfaceMesh::new(
        points,
        cells,
        cell_fields,
        point_fields,
        ProcessParams { temperature, friction },
    )?)
}

fn array<'a>(v: &'a Value, loc: &str) -> Result<&'a Vec<Value>, MeshFileError> {
    v.as_array().ok_or(MeshFileError::Type { location: loc.into(), expected: "an array" })
}

fn number(v: &Value, loc: &str) -> Result<f64, MeshFileError> {
    let x = v.as_f64().ok_or(MeshFileError::Type { location: loc.into(), expected: "a number" })?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(MeshFileError::NonFinite { location: loc.into() })
    }
}

fn fields(v: Option<&Value>, key: &str) -> Result<BTreeMap<String, Vec<f64>>, MeshFileError> {
    let Some(v) = v else { return Ok(BTreeMap::new()) };
    let map: &Map<String, Value> =
        v.as_object().ok_or(MeshFileError::Type { location: key.into(), expected: "an object" })?;
    map.iter()
        .map(|(name, values)| {
            let loc = format!("{key}.{name}");
            let xs = array(values, &loc)?
                .iter()
                .enumerate()
                .map(|(i, x)| number(x, &format!("{loc}[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((name.clone(), xs))
        })
        .collect()
}

/// Canonical text: fixed key order, fields sorted by name, one point or cell
/// per line, shortest round-trip floats.
pub fn write_mesh(mesh: &SurfaceMesh) -> String {
    let mut out = String::with_capacity(64 * mesh.num_points() + 32 * mesh.num_cells());
    out.push_str("{\n  \"points\": [");
    for (i, p) in mesh.points().iter().enumerate() {
        out.push_str(if i == 0 { "\n    [" } else { ",\n    [" });
        push_floats(&mut out, p);
        out.push(']');
    }
    out.push_str(if mesh.num_points() == 0 { "],\n" } else { "\n  ],\n" });

    out.push_str("  \"cells\": [");
    for (i, c) in mesh.cells().iter().enumerate() {
        out.push_str(if i == 0 { "\n    [" } else { ",\n    [" });
        for (j, v) in c.vertices().iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{v}");
        }
        out.push(']');
    }
    out.push_str(if mesh.num_cells() == 0 { "],\n" } else { "\n  ],\n" });

    push_fields(&mut out, "cell_fields", mesh.cell_fields());
    push_fields(&mut out, "point_fields", mesh.point_fields());

    let p = mesh.params();
    out.push_str("  \"params\": {\"temperature\": ");
    push_float(&mut out, p.temperature);
    out.push_str(", \"friction\": ");
    push_float(&mut out, p.friction);
    out.push_str("}\n}\n");
    out
}

fn push_float(out: &mut String, x: f64) {
    out.push_str(&serde_json::to_string(&x).expect("finite float"));
}

fn push_floats(out: &mut String, xs: &[f64]) {
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        push_float(out, x);
    }
}

fn push_fields(out: &mut String, key: &str, fields: &BTreeMap<String, Vec<f64>>) {
    let _ = write!(out, "  \"{key}\": {{");
    for (i, (name, values)) in fields.iter().enumerate() {
        let name = serde_json::to_string(name).expect("string");
        let _ = write!(out, "{}\n    {name}: [", if i == 0 { "" } else { "," });
        push_floats(out, values);
        out.push(']');
    }
    out.push_str(if fields.is_empty() { "},\n" } else { "\n  },\n" });
}
