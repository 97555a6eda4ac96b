//! Graph convolutional surrogate models for per-node scalar fields on
//! finite-element surface meshes.
//!
//! The crate is `no_std` (it needs `alloc`) and does no I/O. File formats,
//! dataset directories and the command-line front end live in the `meshgnn`
//! companion crate.
//!
//! Pipeline in brief:
//!
//! 1. A [`mesh::SurfaceMesh`] carries points, triangle/quad cells, per-cell
//!    and per-point fields and the [`mesh::ProcessParams`] of one simulation.
//! 2. [`mesh::mesh_to_graph`] turns it into a [`mesh::Graph`]: mesh edges
//!    become graph edges, and each node gets `[x, y, z, temperature,
//!    friction]` as features. Cell fields are moved to points with
//!    [`mesh::cell_to_point_average`].
//! 3. [`model::SurrogateModel`] (five GCN layers) or one of the
//!    [`baselines`] regresses the target field per node; [`train::fit`]
//!    drives Adam over one graph per step.
//! 4. [`metrics`] scores predictions with MSE, RMSE and R².
//!
//! [`datagen`] produces a synthetic die-wear dataset with an analytic ground
//! truth for testing the whole chain.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod baselines;
pub mod datagen;
mod error;
pub mod mesh;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod train;

pub use error::{Error, MeshError, Result};
