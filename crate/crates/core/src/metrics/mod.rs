//! Fidelity, formula accuracy, concept purity and the per-motif accuracy
//! breakdown.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::datasets::Composition;
use crate::glg::LogicFormula;
use crate::{math, Error, LabeledGraph, Result};

mod harness;

pub use harness::{
    ablate_discretization, evaluate_glg, prototype_sweep, sweep_row, AblationRun, GlgEvaluation, SplitScores, SweepRow,
};

/// Share of samples where the explainer agrees with the explained model.
/// A sample without a prediction (no explanations) counts as a miss.
pub fn fidelity(explainer: &[Option<u8>], model: &[u8]) -> Result<f64> {
    if explainer.len() != model.len() {
        return Err(Error::LengthMismatch {
            left: explainer.len(),
            right: model.len(),
        });
    }
    if model.is_empty() {
        return Err(Error::Empty("fidelity over no samples"));
    }
    let hits = explainer.iter().zip(model).filter(|(e, m)| **e == Some(**m)).count();
    Ok(hits as f64 / model.len() as f64)
}

/// The class whose formula alone is true, if exactly one is.
pub fn formula_prediction(formulas: &[LogicFormula], bits: &[bool]) -> Option<u8> {
    let mut hit = None;
    for (class, f) in formulas.iter().enumerate() {
        if f.evaluate(bits) {
            if hit.is_some() {
                return None;
            }
            hit = Some(class as u8);
        }
    }
    hit
}

/// Formulas used as a classifier (`formulas[c]` describes class `c`). No
/// true formula, several true formulas, or no explanations all count as
/// wrong.
pub fn formula_accuracy(formulas: &[LogicFormula], bits: &[Option<Vec<bool>>], labels: &[u8]) -> Result<f64> {
    if bits.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: bits.len(),
            right: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty("formula accuracy over no samples"));
    }
    let hits = bits
        .iter()
        .zip(labels)
        .filter(|(b, &y)| b.as_ref().and_then(|b| formula_prediction(formulas, b)) == Some(y))
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Share of the most frequent label; `None` for an empty cluster.
pub fn purity<L: Ord>(labels: &[L]) -> Option<f64> {
    if labels.is_empty() {
        return None;
    }
    let mut counts: BTreeMap<&L, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    Some(top as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub per_cluster: Vec<Option<f64>>,
    /// Over non-empty clusters.
    pub mean: f64,
    /// Population standard deviation over non-empty clusters.
    pub std: f64,
}

pub fn concept_purity<L: Ord>(clusters: &[Vec<L>]) -> PurityReport {
    let per_cluster: Vec<Option<f64>> = clusters.iter().map(|c| purity(c)).collect();
    let present: Vec<f64> = per_cluster.iter().flatten().copied().collect();
    let (mean, std) = mean_std(&present);
    PurityReport { per_cluster, mean, std }
}

/// Mean and population standard deviation; zeros for an empty slice.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, math::sqrt(var))
}

pub use crate::glg::concept_entropy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifGroupRow {
    pub group: String,
    pub count: usize,
    pub accuracy: f64,
}

/// Accuracy of `predictions` within each composition group, in table
/// order. Groups without samples are left out.
pub fn per_motif_accuracy(predictions: &[u8], records: &[&LabeledGraph]) -> Result<Vec<MotifGroupRow>> {
    if predictions.len() != records.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: records.len(),
        });
    }
    let mut tally: BTreeMap<Composition, (usize, usize)> = BTreeMap::new();
    for (p, r) in predictions.iter().zip(records) {
        let c = Composition::from_tags(&r.motif_tags)
            .ok_or_else(|| Error::MissingTags(format!("unrecognized motif tags {:?}", r.motif_tags)))?;
        let e = tally.entry(c).or_insert((0, 0));
        e.0 += 1;
        e.1 += usize::from(*p == r.label);
    }
    Ok(Composition::ALL
        .iter()
        .filter_map(|c| {
            tally.get(c).map(|&(n, ok)| MotifGroupRow {
                group: String::from(c.as_str()),
                count: n,
                accuracy: ok as f64 / n as f64,
            })
        })
        .collect())
}
