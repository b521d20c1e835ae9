//! Edge-weights JSONL, one explained graph per line:
//!
//! ```json
//! {"graph_id":7,"weights":[[0,1,0.93],[1,2,0.05]]}
//! ```
//!
//! Edges may be listed in either orientation; unlisted edges weigh 0.

use std::collections::BTreeSet;
use std::path::Path;

use glogex_core::explain::EdgeWeights;
use glogex_core::LabeledGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsRecord {
    pub graph_id: usize,
    pub weights: Vec<(usize, usize, f64)>,
}

pub fn write_weights(path: &Path, weights: &[EdgeWeights], dataset: &[LabeledGraph]) -> Result<()> {
    let rows: Vec<WeightsRecord> = weights
        .iter()
        .map(|w| WeightsRecord {
            graph_id: w.graph_id,
            weights: w.triples(&dataset[w.graph_id].graph),
        })
        .collect();
    fsio::write_jsonl(path, &rows)
}

/// Parses and validates weights against `dataset`.
pub fn parse_weights(path: &Path, text: &str, dataset: &[LabeledGraph]) -> Result<Vec<EdgeWeights>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, rec) in fsio::parse_jsonl::<WeightsRecord>(path, text)? {
        let err = |msg: String| Error::format(path, Some(line), msg);
        let Some(record) = dataset.get(rec.graph_id) else {
            return Err(err(format!("unknown graph id {}", rec.graph_id)));
        };
        if !seen.insert(rec.graph_id) {
            return Err(err(format!("graph id {} listed twice", rec.graph_id)));
        }
        if let Some(&(u, v, w)) = rec.weights.iter().find(|t| !(0.0..=1.0).contains(&t.2)) {
            return Err(err(format!("weight {w} of edge ({u}, {v}) outside [0, 1]")));
        }
        let w = EdgeWeights::from_triples(rec.graph_id, &record.graph, &rec.weights).map_err(|e| err(e.to_string()))?;
        out.push(w);
    }
    Ok(out)
}

pub fn load_precomputed(path: &Path, dataset: &[LabeledGraph]) -> Result<Vec<EdgeWeights>> {
    let text = fsio::read_string(path)?;
    parse_weights(path, &text, dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use glogex_core::{Graph, Split};

    fn data() -> Vec<LabeledGraph> {
        let g = Graph::with_constant_features(3, [(0, 1), (1, 2)], 1.0).unwrap();
        vec![LabeledGraph {
            graph: g,
            label: 0,
            split: Split::Train,
            motif_tags: vec![],
            motif_nodes: vec![],
        }]
    }

    fn parse(text: &str) -> Result<Vec<EdgeWeights>> {
        parse_weights(Path::new("w.jsonl"), text, &data())
    }

    #[test]
    fn round_trip_is_identity() {
        let d = data();
        let w = vec![EdgeWeights::new(0, &d[0].graph, vec![0.25, 1.0]).unwrap()];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.jsonl");
        write_weights(&p, &w, &d).unwrap();
        assert_eq!(load_precomputed(&p, &d).unwrap(), w);
    }

    #[test]
    fn reversed_edges_and_missing_edges() {
        let w = parse("{\"graph_id\":0,\"weights\":[[2,1,0.5]]}\n").unwrap();
        assert_eq!(w[0].weights(), &[0.0, 0.5]);
    }

    #[test]
    fn out_of_range_weight_is_rejected_with_line() {
        let err = parse("{\"graph_id\":0,\"weights\":[]}\n{\"graph_id\":0,\"weights\":[[0,1,1.5]]}\n").unwrap_err();
        // the duplicate id is found first on line 2
        assert!(matches!(err, Error::Format { line: Some(2), .. }));
        let err = parse("{\"graph_id\":0,\"weights\":[[0,1,1.5]]}\n").unwrap_err();
        assert!(err.to_string().contains("outside [0, 1]"), "{err}");
        assert!(matches!(err, Error::Format { line: Some(1), .. }));
    }

    #[test]
    fn unknown_graph_and_non_edge() {
        let err = parse("{\"graph_id\":3,\"weights\":[]}\n").unwrap_err();
        assert!(err.to_string().contains("unknown graph id 3"), "{err}");
        let err = parse("\n{\"graph_id\":0,\"weights\":[[0,2,0.5]]}\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: Some(2), .. }), "{err}");
    }

    #[test]
    fn missing_graph_id_field() {
        let err = parse("{\"weights\":[]}\n").unwrap_err();
        assert!(err.to_string().contains("graph_id"), "{err}");
    }
}
