//! In-memory pipeline steps shared by the CLI stages and the tests. Work
//! that fans out over graphs, prototype counts or seeds runs on the
//! ambient rayon pool; results are collected in input order, so output
//! does not depend on the worker count.

use std::collections::BTreeMap;

use glogex_core::datasets::{generate_graph, layout, Annotation, GeneratorConfig, MotifSpec};
use glogex_core::explain::{
    binarize, elbow_threshold, explain_edge_mask, explain_saliency, f1_threshold, ground_truth_explanations,
    EdgeWeights, ExplainMethod, ExplainerConfig, LocalExplanation, Threshold, ThresholdRule,
};
use glogex_core::glg::{train_glgexplainer, GlgSample, GlgTrainConfig, TrainedGlg};
use glogex_core::gnn::{GnnClassifier, Prediction};
use glogex_core::metrics::{evaluate_glg, prototype_sweep, sweep_row, SweepRow};
use glogex_core::{LabeledGraph, Split};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// BAMultiShapes, generated in parallel; identical to the sequential
/// generator for any worker count.
pub fn generate_dataset(cfg: &GeneratorConfig) -> Result<Vec<LabeledGraph>> {
    cfg.validate()?;
    let motifs = MotifSpec::with_sizes(cfg.grid_side, cfg.wheel_rim)?;
    let slots = layout(cfg)?;
    let graphs = slots
        .par_iter()
        .enumerate()
        .map(|(i, &slot)| generate_graph(cfg, &motifs, slot, i))
        .collect::<glogex_core::Result<Vec<_>>>()?;
    Ok(graphs)
}

pub fn motif_specs(cfg: &GeneratorConfig) -> Result<Vec<MotifSpec>> {
    Ok(MotifSpec::with_sizes(cfg.grid_side, cfg.wheel_rim)?)
}

pub fn predict_all(model: &GnnClassifier, dataset: &[LabeledGraph]) -> Result<Vec<Prediction>> {
    let chunks: Vec<&[LabeledGraph]> = dataset.chunks(64).collect();
    let parts = chunks
        .par_iter()
        .map(|c| model.predict_many(c.iter().map(|g| &g.graph)))
        .collect::<glogex_core::Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Edge weights from a built-in explainer, one entry per graph.
pub fn explain_weights(model: &GnnClassifier, dataset: &[LabeledGraph], cfg: &ExplainerConfig) -> Result<Vec<EdgeWeights>> {
    let weights = dataset
        .par_iter()
        .enumerate()
        .map(|(i, g)| match cfg.method {
            ExplainMethod::Saliency => explain_saliency(model, &g.graph, i),
            ExplainMethod::EdgeMask => explain_edge_mask(model, &g.graph, i, &cfg.edge_mask),
            other => Err(glogex_core::Error::Config(format!("{other:?} is not a model-based explainer"))),
        })
        .collect::<glogex_core::Result<Vec<_>>>()?;
    Ok(weights)
}

/// How the binarization threshold was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSummary {
    pub rule: ThresholdRule,
    /// The global θ of the F1 rule or the fixed θ; absent for per-graph rules.
    pub global_theta: Option<f64>,
    /// Graphs whose elbow rule kept every edge.
    pub keep_all: usize,
}

/// Binarizes weights into annotated local explanations.
pub fn binarize_all(
    weights: &[EdgeWeights],
    dataset: &[LabeledGraph],
    rule: &ThresholdRule,
    motifs: &[MotifSpec],
) -> Result<(Vec<LocalExplanation>, ThresholdSummary)> {
    let global = match *rule {
        ThresholdRule::Fixed { theta } => Some(theta),
        ThresholdRule::F1Oracle => {
            let truth: Vec<Vec<bool>> = weights
                .iter()
                .map(|w| {
                    let g = &dataset[w.graph_id];
                    let gt = g.ground_truth_edges();
                    g.graph.edges().iter().map(|e| gt.contains(e)).collect()
                })
                .collect();
            if truth.iter().all(|t| !t.iter().any(|&x| x)) {
                return Err(Error::Config("f1_oracle needs ground-truth motif edges".into()));
            }
            let samples: Vec<(&[f64], &[bool])> = weights.iter().zip(&truth).map(|(w, t)| (w.weights(), t.as_slice())).collect();
            Some(f1_threshold(&samples)?)
        }
        ThresholdRule::Elbow { .. } => None,
    };
    let per_graph = weights
        .par_iter()
        .map(|w| {
            let threshold = match (*rule, global) {
                (_, Some(theta)) => Threshold::Above(theta),
                (ThresholdRule::Elbow { drop }, None) => {
                    if w.is_empty() {
                        return Ok((Vec::new(), false));
                    }
                    elbow_threshold(w.weights(), drop)?
                }
                _ => unreachable!("global threshold resolved above"),
            };
            let ex = binarize(w, threshold, &dataset[w.graph_id].graph, motifs)?;
            Ok((ex, threshold == Threshold::KeepAll))
        })
        .collect::<glogex_core::Result<Vec<_>>>()?;
    let keep_all = per_graph.iter().filter(|(_, k)| *k).count();
    let explanations = per_graph.into_iter().flat_map(|(e, _)| e).collect();
    Ok((
        explanations,
        ThresholdSummary {
            rule: *rule,
            global_theta: global,
            keep_all,
        },
    ))
}

/// Planted motifs as explanations, for every graph.
pub fn oracle_explanations(dataset: &[LabeledGraph], motifs: &[MotifSpec]) -> Result<Vec<LocalExplanation>> {
    let per_graph = dataset
        .par_iter()
        .enumerate()
        .map(|(i, g)| ground_truth_explanations(g, i, motifs))
        .collect::<glogex_core::Result<Vec<_>>>()?;
    Ok(per_graph.into_iter().flatten().collect())
}

/// Groups explanations under their source graph, with the explained
/// model's prediction as the target.
pub fn build_samples(dataset: &[LabeledGraph], predictions: &[u8], explanations: &[LocalExplanation]) -> Result<Vec<GlgSample>> {
    if predictions.len() != dataset.len() {
        return Err(glogex_core::Error::LengthMismatch {
            left: predictions.len(),
            right: dataset.len(),
        }
        .into());
    }
    let mut samples: Vec<GlgSample> = dataset
        .iter()
        .enumerate()
        .map(|(i, g)| GlgSample {
            graph_id: i,
            split: g.split,
            target: predictions[i],
            label: g.label,
            explanations: Vec::new(),
            annotations: Vec::new(),
        })
        .collect();
    for e in explanations {
        let s = samples
            .get_mut(e.source_graph_id)
            .ok_or_else(|| Error::Config(format!("explanation of unknown graph {}", e.source_graph_id)))?;
        s.explanations.push(e.subgraph.graph.clone());
        s.annotations.push(e.annotation);
    }
    Ok(samples)
}

pub fn annotation_counts(explanations: &[LocalExplanation]) -> BTreeMap<Annotation, usize> {
    let mut counts = BTreeMap::new();
    for e in explanations {
        *counts.entry(e.annotation).or_insert(0) += 1;
    }
    counts
}

/// Test-time scores of one explainer training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub best_epoch: Option<usize>,
    pub epochs_run: usize,
    pub val_fidelity: f64,
    pub test_fidelity: f64,
    pub test_formula_fidelity: f64,
    pub test_formula_accuracy: f64,
}

/// Trains one explainer per seed `base, base + 1, …` in parallel and
/// returns every run with its summary.
pub fn train_glg_runs(samples: &[GlgSample], cfg: &GlgTrainConfig, runs: usize) -> Result<Vec<(TrainedGlg, RunSummary)>> {
    let out = (0..runs as u64)
        .into_par_iter()
        .map(|k| {
            let run_cfg = GlgTrainConfig {
                seed: cfg.seed + k,
                ..*cfg
            };
            let trained = train_glgexplainer(samples, &run_cfg)?;
            let eval = evaluate_glg(&trained.model, &run_cfg, samples, Split::Test)?;
            let test = eval.split(Split::Test).cloned();
            let summary = RunSummary {
                seed: run_cfg.seed,
                best_epoch: trained.best_epoch,
                epochs_run: trained.log.len(),
                val_fidelity: trained.best_val_fidelity,
                test_fidelity: test.as_ref().map_or(0.0, |t| t.fidelity),
                test_formula_fidelity: test.as_ref().map_or(0.0, |t| t.formula_fidelity),
                test_formula_accuracy: test.as_ref().map_or(0.0, |t| t.formula_accuracy),
            };
            Ok((trained, summary))
        })
        .collect::<glogex_core::Result<Vec<_>>>()?;
    Ok(out)
}

/// Index of the run with the highest validation fidelity; ties go to the
/// earlier seed.
pub fn best_run(summaries: &[RunSummary]) -> usize {
    let mut best = 0;
    for (i, s) in summaries.iter().enumerate() {
        if s.val_fidelity > summaries[best].val_fidelity {
            best = i;
        }
    }
    best
}

/// One explainer per prototype count, in parallel.
pub fn parallel_sweep(samples: &[GlgSample], cfg: &GlgTrainConfig, m_values: &[usize]) -> Result<Vec<SweepRow>> {
    if rayon::current_num_threads() <= 1 {
        return Ok(prototype_sweep(samples, cfg, m_values)?);
    }
    let rows = m_values
        .par_iter()
        .map(|&m| sweep_row(samples, cfg, m))
        .collect::<glogex_core::Result<Vec<_>>>()?;
    Ok(rows)
}
