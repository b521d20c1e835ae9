//! Graph dataset JSONL, one graph per line:
//!
//! ```json
//! {"nodes":3,"edges":[[0,1],[1,2]],"features":[[1.0],[1.0],[1.0]],"label":0,"split":"train","motifs":[],"motif_nodes":[]}
//! ```
//!
//! `motif_nodes` is optional on input. The line index (0-based) is the
//! graph id used by every later artifact.

use std::path::Path;

use glogex_core::autodiff::Matrix;
use glogex_core::datasets::GeneratorConfig;
use glogex_core::{Graph, LabeledGraph, Split};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphRecord {
    pub nodes: usize,
    pub edges: Vec<[usize; 2]>,
    pub features: Vec<Vec<f64>>,
    pub label: u8,
    pub split: Split,
    #[serde(default)]
    pub motifs: Vec<String>,
    #[serde(default)]
    pub motif_nodes: Vec<Vec<usize>>,
}

pub fn graph_parts(g: &Graph) -> (Vec<[usize; 2]>, Vec<Vec<f64>>) {
    (g.edges().iter().map(|&(u, v)| [u, v]).collect(), g.features().to_rows())
}

pub fn build_graph(nodes: usize, edges: &[[usize; 2]], features: &[Vec<f64>]) -> glogex_core::Result<Graph> {
    let features = if nodes == 0 {
        Matrix::zeros(0, features.first().map_or(0, Vec::len))
    } else {
        Matrix::from_rows(features)?
    };
    Graph::new(nodes, edges.iter().map(|e| (e[0], e[1])), features)
}

impl GraphRecord {
    pub fn from_labeled(g: &LabeledGraph) -> Self {
        let (edges, features) = graph_parts(&g.graph);
        Self {
            nodes: g.graph.node_count(),
            edges,
            features,
            label: g.label,
            split: g.split,
            motifs: g.motif_tags.clone(),
            motif_nodes: g.motif_nodes.clone(),
        }
    }

    pub fn into_labeled(self) -> glogex_core::Result<LabeledGraph> {
        let graph = build_graph(self.nodes, &self.edges, &self.features)?;
        let g = LabeledGraph {
            graph,
            label: self.label,
            split: self.split,
            motif_tags: self.motifs,
            motif_nodes: self.motif_nodes,
        };
        g.validate()?;
        Ok(g)
    }
}

pub fn write_dataset(path: &Path, graphs: &[LabeledGraph]) -> Result<()> {
    let rows: Vec<GraphRecord> = graphs.iter().map(GraphRecord::from_labeled).collect();
    fsio::write_jsonl(path, &rows)
}

pub fn parse_dataset(path: &Path, text: &str) -> Result<Vec<LabeledGraph>> {
    fsio::parse_jsonl::<GraphRecord>(path, text)?
        .into_iter()
        .map(|(line, r)| r.into_labeled().map_err(|e| Error::format(path, Some(line), e)))
        .collect()
}

pub fn read_dataset(path: &Path) -> Result<Vec<LabeledGraph>> {
    let text = fsio::read_artifact(path)?;
    parse_dataset(path, &text)
}

/// Provenance sidecar written next to a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSidecar {
    pub format_version: u32,
    pub tool_version: String,
    pub dataset_sha256: String,
    pub node_features: String,
    pub generator: GeneratorConfig,
}
