use alloc::vec::Vec;

use super::{EdgeWeights, Threshold};
use crate::datasets::{annotate, Annotation, MotifSpec};
use crate::graph::{connected_components, induced_subgraph, Subgraph};
use crate::{Error, Graph, LabeledGraph, Result};

/// One connected piece of an explanation, tied to its source graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalExplanation {
    pub source_graph_id: usize,
    pub subgraph: Subgraph,
    pub annotation: Annotation,
}

/// Keeps the edges that pass `threshold` and returns every connected
/// component with at least one edge, annotated against `motifs`.
pub fn binarize(
    weights: &EdgeWeights,
    threshold: Threshold,
    source: &Graph,
    motifs: &[MotifSpec],
) -> Result<Vec<LocalExplanation>> {
    if weights.len() != source.edge_count() {
        return Err(Error::LengthMismatch {
            left: weights.len(),
            right: source.edge_count(),
        });
    }
    let w = weights.weights();
    let kept = source.filter_edges(|k, _| threshold.keeps(w[k]));
    Ok(connected_components(&kept)
        .into_iter()
        .filter(|c| c.graph.edge_count() > 0)
        .map(|subgraph| LocalExplanation {
            source_graph_id: weights.graph_id,
            annotation: annotate(&subgraph.graph, motifs),
            subgraph,
        })
        .collect())
}

/// Oracle explanations: the subgraph induced by each planted motif. A
/// graph without motifs is explained by the whole graph.
pub fn ground_truth_explanations(
    record: &LabeledGraph,
    graph_id: usize,
    motifs: &[MotifSpec],
) -> Result<Vec<LocalExplanation>> {
    let all: Vec<usize>;
    let sets: Vec<&[usize]> = if record.motif_nodes.is_empty() {
        all = (0..record.graph.node_count()).collect();
        alloc::vec![all.as_slice()]
    } else {
        record.motif_nodes.iter().map(Vec::as_slice).collect()
    };
    let mut out = Vec::with_capacity(sets.len());
    for nodes in sets {
        let subgraph = induced_subgraph(&record.graph, nodes)?;
        if subgraph.graph.edge_count() == 0 {
            continue;
        }
        out.push(LocalExplanation {
            source_graph_id: graph_id,
            annotation: annotate(&subgraph.graph, motifs),
            subgraph,
        });
    }
    Ok(out)
}
