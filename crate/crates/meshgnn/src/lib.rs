//! File formats, dataset handling and the `meshgnn` command line built on
//! [`meshgnn_core`].

pub mod artifact;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod meshfile;
pub mod report;

pub use meshgnn_core as core;
