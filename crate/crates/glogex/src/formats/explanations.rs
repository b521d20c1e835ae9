//! Local-explanations JSONL: the dataset record of the explanation
//! subgraph plus its source graph, the source index of each node and the
//! motif annotation.
//!
//! ```json
//! {"nodes":5,"edges":[[0,1],[0,2],[1,3],[2,3],[2,4],[3,4]],"features":[[1.0],[1.0],[1.0],[1.0],[1.0]],"label":1,"split":"train","motifs":[],"source_graph_id":12,"source_nodes":[40,41,42,43,44],"annotation":"House"}
//! ```
//!
//! `label` and `split` are copied from the source graph.

use std::path::Path;

use glogex_core::datasets::Annotation;
use glogex_core::explain::LocalExplanation;
use glogex_core::graph::Subgraph;
use glogex_core::{LabeledGraph, Split};
use serde::{Deserialize, Serialize};

use super::dataset::{build_graph, graph_parts};
use crate::error::{Error, Result};
use crate::fsio;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplanationRecord {
    pub nodes: usize,
    pub edges: Vec<[usize; 2]>,
    pub features: Vec<Vec<f64>>,
    pub label: u8,
    pub split: Split,
    #[serde(default)]
    pub motifs: Vec<String>,
    pub source_graph_id: usize,
    pub source_nodes: Vec<usize>,
    pub annotation: Annotation,
}

pub fn write_explanations(path: &Path, explanations: &[LocalExplanation], dataset: &[LabeledGraph]) -> Result<()> {
    let rows: Vec<ExplanationRecord> = explanations
        .iter()
        .map(|e| {
            let (edges, features) = graph_parts(&e.subgraph.graph);
            let src = &dataset[e.source_graph_id];
            ExplanationRecord {
                nodes: e.subgraph.graph.node_count(),
                edges,
                features,
                label: src.label,
                split: src.split,
                motifs: Vec::new(),
                source_graph_id: e.source_graph_id,
                source_nodes: e.subgraph.source_nodes.clone(),
                annotation: e.annotation,
            }
        })
        .collect();
    fsio::write_jsonl(path, &rows)
}

/// Parses explanations and checks each against its source graph.
pub fn parse_explanations(path: &Path, text: &str, dataset: &[LabeledGraph]) -> Result<Vec<LocalExplanation>> {
    let mut out = Vec::new();
    for (line, r) in fsio::parse_jsonl::<ExplanationRecord>(path, text)? {
        let err = |msg: String| Error::format(path, Some(line), msg);
        let Some(src) = dataset.get(r.source_graph_id) else {
            return Err(err(format!("unknown graph id {}", r.source_graph_id)));
        };
        let graph = build_graph(r.nodes, &r.edges, &r.features).map_err(|e| err(e.to_string()))?;
        if r.source_nodes.len() != r.nodes {
            return Err(err(format!("{} source nodes for {} nodes", r.source_nodes.len(), r.nodes)));
        }
        for &(u, v) in graph.edges() {
            let (a, b) = (r.source_nodes[u], r.source_nodes[v]);
            if !src.graph.has_edge(a, b) {
                return Err(err(format!("edge ({a}, {b}) not in graph {}", r.source_graph_id)));
            }
        }
        out.push(LocalExplanation {
            source_graph_id: r.source_graph_id,
            subgraph: Subgraph {
                graph,
                source_nodes: r.source_nodes,
            },
            annotation: r.annotation,
        });
    }
    Ok(out)
}

pub fn read_explanations(path: &Path, dataset: &[LabeledGraph]) -> Result<Vec<LocalExplanation>> {
    let text = fsio::read_artifact(path)?;
    parse_explanations(path, &text, dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use glogex_core::datasets::{generate_bamultishapes, GeneratorConfig, MotifSpec};
    use glogex_core::explain::ground_truth_explanations;

    #[test]
    fn round_trip_is_identity() {
        let cfg = GeneratorConfig {
            n_graphs: 20,
            ..GeneratorConfig::default()
        };
        let data = generate_bamultishapes(&cfg).unwrap();
        let motifs = MotifSpec::standard();
        let ex: Vec<LocalExplanation> = data
            .iter()
            .enumerate()
            .flat_map(|(i, g)| ground_truth_explanations(g, i, &motifs).unwrap())
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.jsonl");
        write_explanations(&p, &ex, &data).unwrap();
        assert_eq!(read_explanations(&p, &data).unwrap(), ex);
    }

    #[test]
    fn foreign_edge_is_rejected() {
        let cfg = GeneratorConfig {
            n_graphs: 20,
            ..GeneratorConfig::default()
        };
        let data = generate_bamultishapes(&cfg).unwrap();
        let n = data[0].graph.node_count();
        let (u, v) = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .find(|&(u, v)| !data[0].graph.has_edge(u, v))
            .unwrap();
        let text = format!(
            "{{\"nodes\":2,\"edges\":[[0,1]],\"features\":[[1.0],[1.0]],\"label\":0,\"split\":\"train\",\"source_graph_id\":0,\"source_nodes\":[{u},{v}],\"annotation\":\"Others\"}}\n"
        );
        let err = parse_explanations(Path::new("e.jsonl"), &text, &data).unwrap_err();
        assert!(err.to_string().contains("not in graph 0"), "{err}");
    }
}
