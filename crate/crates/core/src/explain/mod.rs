//! Local explainers: weighted edge explanations of single predictions and
//! their binarization into motif-like subgraphs.

mod binarize;
mod explainers;
mod threshold;

pub use binarize::{binarize, ground_truth_explanations, LocalExplanation};
pub use explainers::{explain_edge_mask, explain_saliency, EdgeMaskConfig, EdgeModel};
pub use threshold::{elbow_threshold, f1_threshold, f1_threshold_grid, micro_f1, Threshold, ThresholdRule};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Graph, Result};

/// Importance of every edge of one graph, aligned with `graph.edges()`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights {
    pub graph_id: usize,
    weights: Vec<f64>,
}

impl EdgeWeights {
    /// Weights aligned with the edges of the source graph.
    pub fn new(graph_id: usize, graph: &Graph, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != graph.edge_count() {
            return Err(Error::LengthMismatch {
                left: weights.len(),
                right: graph.edge_count(),
            });
        }
        for (k, &w) in weights.iter().enumerate() {
            check_weight(w).map_err(|m| Error::EdgeWeights(format!("edge {k}: {m}")))?;
        }
        Ok(Self { graph_id, weights })
    }

    /// Weights given as `(u, v, w)` triples. Edges left out get weight 0.
    pub fn from_triples(graph_id: usize, graph: &Graph, triples: &[(usize, usize, f64)]) -> Result<Self> {
        let mut weights = vec![0.0; graph.edge_count()];
        let mut seen = vec![false; graph.edge_count()];
        for &(u, v, w) in triples {
            let k = graph
                .edge_index(u, v)
                .ok_or_else(|| Error::EdgeWeights(format!("({u}, {v}) is not an edge of graph {graph_id}")))?;
            if seen[k] {
                return Err(Error::EdgeWeights(format!("edge ({u}, {v}) listed twice")));
            }
            check_weight(w).map_err(|m| Error::EdgeWeights(format!("edge ({u}, {v}): {m}")))?;
            seen[k] = true;
            weights[k] = w;
        }
        Ok(Self { graph_id, weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `(u, v, w)` for every edge.
    pub fn triples(&self, graph: &Graph) -> Vec<(usize, usize, f64)> {
        graph
            .edges()
            .iter()
            .zip(&self.weights)
            .map(|(&(u, v), &w)| (u, v, w))
            .collect()
    }
}

fn check_weight(w: f64) -> core::result::Result<(), &'static str> {
    if !w.is_finite() {
        Err("weight is not finite")
    } else if !(0.0..=1.0).contains(&w) {
        Err("weight outside [0, 1]")
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainMethod {
    Saliency,
    EdgeMask,
    /// Weights read from an edge-weights file.
    Precomputed,
    /// Planted motifs taken straight from the dataset records.
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainerConfig {
    pub method: ExplainMethod,
    pub edge_mask: EdgeMaskConfig,
    pub threshold: ThresholdRule,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        Self {
            method: ExplainMethod::EdgeMask,
            edge_mask: EdgeMaskConfig::default(),
            threshold: ThresholdRule::Elbow { drop: 0.4 },
        }
    }
}

impl ExplainerConfig {
    pub fn validate(&self) -> Result<()> {
        self.threshold.validate()?;
        self.edge_mask.validate()
    }
}
