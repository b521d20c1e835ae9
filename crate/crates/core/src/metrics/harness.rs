//! Scoring a trained global explainer, and the prototype-count sweep and
//! discretization ablation built on it.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{concept_purity, fidelity, formula_accuracy, PurityReport};
use crate::datasets::Annotation;
use crate::glg::{
    concept_entropy, extract_truth_table, formulas_from_table, train_glgexplainer, EpochLog, GlgModel, GlgSample,
    GlgTrainConfig, LogicFormula, SampleOutput,
};
use crate::{math, Result, Split};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitScores {
    pub split: Split,
    pub samples: usize,
    pub without_explanations: usize,
    /// Logic network vs explained model.
    pub fidelity: f64,
    /// Raw formulas vs explained model.
    pub formula_fidelity: f64,
    /// Raw formulas vs dataset labels.
    pub formula_accuracy: f64,
    /// Logic network vs dataset labels.
    pub elen_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlgEvaluation {
    /// Read from the training split, one per class.
    pub formulas: [LogicFormula; 2],
    pub simplified: [LogicFormula; 2],
    pub table_rows: usize,
    pub splits: Vec<SplitScores>,
    pub purity_split: Split,
    pub purity: PurityReport,
    /// Mean soft concept-vector entropy over the purity split.
    pub entropy: f64,
}

impl GlgEvaluation {
    pub fn split(&self, split: Split) -> Option<&SplitScores> {
        self.splits.iter().find(|s| s.split == split)
    }
}

fn to_bits(out: &[SampleOutput]) -> Vec<Option<Vec<bool>>> {
    out.iter().map(|o| o.bits.clone()).collect()
}

pub fn evaluate_glg(model: &GlgModel, cfg: &GlgTrainConfig, samples: &[GlgSample], purity_split: Split) -> Result<GlgEvaluation> {
    let by_split = |s: Split| samples.iter().filter(move |x| x.split == s).collect::<Vec<_>>();
    let train = by_split(Split::Train);
    let train_out = model.evaluate(&train, cfg.discretize, cfg.elen_threshold)?;
    let table = extract_truth_table(&train_out, model.arch.concepts)?;
    let formulas = formulas_from_table(&table);
    let simplified = [formulas[0].simplify(), formulas[1].simplify()];

    let mut splits = Vec::new();
    let mut purity = None;
    let mut entropy = 0.0;
    for split in Split::ALL {
        let part = by_split(split);
        if part.is_empty() {
            continue;
        }
        let out = if split == Split::Train {
            train_out.clone()
        } else {
            model.evaluate(&part, cfg.discretize, cfg.elen_threshold)?
        };
        let classes: Vec<Option<u8>> = out.iter().map(|o| o.class).collect();
        let targets: Vec<u8> = part.iter().map(|s| s.target).collect();
        let labels: Vec<u8> = part.iter().map(|s| s.label).collect();
        let bits = to_bits(&out);
        splits.push(SplitScores {
            split,
            samples: part.len(),
            without_explanations: part.iter().filter(|s| s.explanations.is_empty()).count(),
            fidelity: fidelity(&classes, &targets)?,
            formula_fidelity: formula_accuracy(&formulas, &bits, &targets)?,
            formula_accuracy: formula_accuracy(&formulas, &bits, &labels)?,
            elen_accuracy: fidelity(&classes, &labels)?,
        });
        if split == purity_split {
            let mut clusters: Vec<Vec<Annotation>> = alloc::vec![Vec::new(); model.arch.concepts];
            let mut soft_rows = Vec::new();
            for (s, o) in part.iter().zip(&out) {
                for (k, v) in o.soft.iter().enumerate() {
                    soft_rows.extend_from_slice(v);
                    if let Some(a) = s.annotations.get(k) {
                        clusters[math::argmax(v)].push(*a);
                    }
                }
            }
            let rows = soft_rows.len() / model.arch.concepts;
            entropy = concept_entropy(&crate::autodiff::Matrix::from_vec(rows, model.arch.concepts, soft_rows)?);
            purity = Some(concept_purity(&clusters));
        }
    }
    Ok(GlgEvaluation {
        formulas,
        simplified,
        table_rows: table.len(),
        splits,
        purity_split,
        purity: purity.unwrap_or_else(|| concept_purity::<Annotation>(&[])),
        entropy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub concepts: usize,
    pub val_fidelity: f64,
    pub val_formula_fidelity: f64,
    pub purity_mean: f64,
    pub purity_std: f64,
    pub best_epoch: Option<usize>,
    pub epochs_run: usize,
}

/// One full training run with `concepts` prototypes, scored on validation.
pub fn sweep_row(samples: &[GlgSample], cfg: &GlgTrainConfig, concepts: usize) -> Result<SweepRow> {
    let cfg = GlgTrainConfig { concepts, ..*cfg };
    let trained = train_glgexplainer(samples, &cfg)?;
    let eval = evaluate_glg(&trained.model, &cfg, samples, Split::Val)?;
    let val = eval.split(Split::Val);
    Ok(SweepRow {
        concepts,
        val_fidelity: val.map_or(0.0, |v| v.fidelity),
        val_formula_fidelity: val.map_or(0.0, |v| v.formula_fidelity),
        purity_mean: eval.purity.mean,
        purity_std: eval.purity.std,
        best_epoch: trained.best_epoch,
        epochs_run: trained.log.len(),
    })
}

pub fn prototype_sweep(samples: &[GlgSample], cfg: &GlgTrainConfig, m_values: &[usize]) -> Result<Vec<SweepRow>> {
    m_values.iter().map(|&m| sweep_row(samples, cfg, m)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub discretize: bool,
    pub log: Vec<EpochLog>,
    pub test_fidelity: f64,
}

/// The same training run with and without the straight-through argmax.
pub fn ablate_discretization(samples: &[GlgSample], cfg: &GlgTrainConfig) -> Result<[AblationRun; 2]> {
    let run = |discretize: bool| -> Result<AblationRun> {
        let cfg = GlgTrainConfig { discretize, ..*cfg };
        let trained = train_glgexplainer(samples, &cfg)?;
        let eval = evaluate_glg(&trained.model, &cfg, samples, Split::Test)?;
        Ok(AblationRun {
            discretize,
            log: trained.log,
            test_fidelity: eval.split(Split::Test).map_or(0.0, |s| s.fidelity),
        })
    };
    Ok([run(true)?, run(false)?])
}
