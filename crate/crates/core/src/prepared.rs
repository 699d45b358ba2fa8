//! On-disk cache of renormalized per-view graphs.
//!
//! Layout: `graph_1.csv` … `graph_V.csv` plus `manifest.json` recording k, the
//! metric and a SHA-256 checksum per file. Loading refuses any file whose
//! checksum no longer matches.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::hex_digest;
use crate::data::{read_matrix_csv, write_matrix_csv};
use crate::error::{Error, Result};
use crate::graph::{Graph, Metric};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub k: usize,
    pub metric: Metric,
    pub nodes: usize,
    pub graphs: Vec<GraphFile>,
}

pub fn save_prepared(dir: &Path, graphs: &[Graph], k: usize, metric: Metric) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::with_capacity(graphs.len());
    for (v, g) in graphs.iter().enumerate() {
        let name = format!("graph_{}.csv", v + 1);
        let path = dir.join(&name);
        write_matrix_csv(&path, g.adjacency())?;
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        files.push(GraphFile {
            file: name,
            sha256: hex_digest(&bytes),
        });
    }
    let manifest = Manifest {
        k,
        metric,
        nodes: graphs.first().map_or(0, Graph::nodes),
        graphs: files,
    };
    let path = dir.join(MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn load_prepared(dir: &Path) -> Result<(Manifest, Vec<Graph>)> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let mut graphs = Vec::with_capacity(manifest.graphs.len());
    for entry in &manifest.graphs {
        let path = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if hex_digest(&bytes) != entry.sha256 {
            return Err(Error::Checksum { file: path });
        }
        let adjacency = read_matrix_csv(&path)?;
        if adjacency.rows() != manifest.nodes {
            return Err(Error::Format {
                file: path,
                msg: format!("{} rows, manifest says {}", adjacency.rows(), manifest.nodes),
            });
        }
        graphs.push(Graph::from_adjacency(adjacency, true)?);
    }
    Ok((manifest, graphs))
}
