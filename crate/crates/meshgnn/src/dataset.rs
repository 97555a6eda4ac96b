//! Dataset directories: `sim_####.mesh` files plus a `manifest` listing
//! `<filename> <train|test>` per line.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use meshgnn_core::datagen::{generate_simulation, split_counts, GeneratorConfig, WEAR_FIELD};
use meshgnn_core::mesh::{mesh_to_graph, Graph, SurfaceMesh};

use crate::meshfile::{parse_mesh, write_mesh, MeshFileError};

pub const MANIFEST: &str = "manifest";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub file: String,
    pub split: Split,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Mesh { path: PathBuf, source: MeshFileError },
    #[error("{path}:{line}: {message}")]
    Manifest { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Graph { path: PathBuf, source: meshgnn_core::Error },
    #[error(transparent)]
    Core(#[from] meshgnn_core::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

pub fn sim_file_name(index: usize) -> String {
    format!("sim_{index:04}.mesh")
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<Vec<ManifestEntry>, DatasetError> {
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| DatasetError::Manifest { path: path.to_path_buf(), line: n + 1, message };
        let mut parts = line.split_whitespace();
        let (Some(file), Some(split), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad("expected `<filename> <train|test>`".into()));
        };
        let split = match split {
            "train" => Split::Train,
            "test" => Split::Test,
            other => return Err(bad(format!("unknown split `{other}`"))),
        };
        if file.contains('/') || file.contains('\\') || file == ".." {
            return Err(bad(format!("`{file}` must be a plain file name")));
        }
        entries.push(ManifestEntry { file: file.to_string(), split });
    }
    Ok(entries)
}

pub fn write_manifest(entries: &[ManifestEntry]) -> String {
    entries.iter().map(|e| format!("{} {}\n", e.file, e.split.as_str())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateSummary {
    pub n_train: usize,
    pub n_test: usize,
    pub num_points: usize,
    pub num_cells: usize,
}

/// Writes every simulation and the manifest into `out_dir`, creating it if
/// needed. File contents depend only on the config and simulation index.
pub fn generate_dataset(config: &GeneratorConfig, out_dir: &Path) -> Result<GenerateSummary, DatasetError> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let (n_train, n_test) = split_counts(config.n_sims, config.train_fraction);
    let mut entries = Vec::with_capacity(config.n_sims);
    let mut shape = (0, 0);
    for i in 0..config.n_sims {
        let mesh = generate_simulation(config, i)?;
        shape = (mesh.num_points(), mesh.num_cells());
        let file = sim_file_name(i);
        let path = out_dir.join(&file);
        fs::write(&path, write_mesh(&mesh)).map_err(io_err(&path))?;
        entries.push(ManifestEntry { file, split: if i < n_train { Split::Train } else { Split::Test } });
    }
    let path = out_dir.join(MANIFEST);
    fs::write(&path, write_manifest(&entries)).map_err(io_err(&path))?;
    Ok(GenerateSummary { n_train, n_test, num_points: shape.0, num_cells: shape.1 })
}

pub fn read_mesh(path: &Path) -> Result<SurfaceMesh, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_mesh(&text).map_err(|source| DatasetError::Mesh { path: path.to_path_buf(), source })
}

pub fn write_mesh_file(path: &Path, mesh: &SurfaceMesh) -> Result<(), DatasetError> {
    fs::write(path, write_mesh(mesh)).map_err(io_err(path))
}

/// One loaded simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    /// File stem, e.g. `sim_0003`.
    pub id: String,
    pub graph: Graph,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub train: Vec<Simulation>,
    pub test: Vec<Simulation>,
}

impl Dataset {
    /// Reads every manifest entry in order, attaching `target` as the graph
    /// target.
    pub fn load(dir: &Path, target: &str) -> Result<Self, DatasetError> {
        let manifest = dir.join(MANIFEST);
        let text = fs::read_to_string(&manifest).map_err(io_err(&manifest))?;
        let mut data = Dataset::default();
        for entry in parse_manifest(&text, &manifest)? {
            let path = dir.join(&entry.file);
            let mesh = read_mesh(&path)?;
            let graph = mesh_to_graph(&mesh, Some(target))
                .map_err(|source| DatasetError::Graph { path: path.clone(), source })?;
            let id = Path::new(&entry.file)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| entry.file.clone());
            let sim = Simulation { id, graph };
            match entry.split {
                Split::Train => data.train.push(sim),
                Split::Test => data.test.push(sim),
            }
        }
        Ok(data)
    }

    pub fn load_default(dir: &Path) -> Result<Self, DatasetError> {
        Self::load(dir, WEAR_FIELD)
    }

    pub fn train_graphs(&self) -> Vec<Graph> {
        self.train.iter().map(|s| s.graph.clone()).collect()
    }

    pub fn test_graphs(&self) -> Vec<Graph> {
        self.test.iter().map(|s| s.graph.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let entries = vec![
            ManifestEntry { file: "sim_0000.mesh".into(), split: Split::Train },
            ManifestEntry { file: "sim_0001.mesh".into(), split: Split::Test },
        ];
        let text = write_manifest(&entries);
        assert_eq!(text, "sim_0000.mesh train\nsim_0001.mesh test\n");
        assert_eq!(parse_manifest(&text, Path::new("m")).unwrap(), entries);
    }

    #[test]
    fn manifest_errors_name_the_line() {
        let err = parse_manifest("a.mesh train\n\nb.mesh valid\n", Path::new("m")).unwrap_err();
        assert!(err.to_string().starts_with("m:3:"), "{err}");
        assert!(parse_manifest("a.mesh\n", Path::new("m")).is_err());
        assert!(parse_manifest("../a.mesh train\n", Path::new("m")).is_err());
    }
}
