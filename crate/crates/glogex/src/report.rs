//! `report.json` and its flattened CSV form.

use std::collections::BTreeMap;
use std::fmt::Write;

use glogex_core::datasets::Annotation;
use glogex_core::metrics::{mean_std, MotifGroupRow, PurityReport, SplitScores};
use glogex_core::Split;
use serde::{Deserialize, Serialize};

use crate::pipeline::{RunSummary, ThresholdSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool_version: String,
    pub seed: u64,
    /// Prototype count of the reported explainer.
    pub m: usize,
    pub config_sha256: String,
    pub dataset_sha256: String,
    pub explanations_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnSection {
    /// Accuracy of the explained model per split.
    pub accuracy: BTreeMap<Split, f64>,
    /// Accuracy per motif composition group and split; absent for data
    /// without composition tags.
    pub per_motif: Option<BTreeMap<Split, Vec<MotifGroupRow>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationSection {
    pub method: String,
    pub threshold: Option<ThresholdSummary>,
    pub total: usize,
    pub graphs_without_explanations: usize,
    pub annotations: BTreeMap<Annotation, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaText {
    pub class: u8,
    pub raw: String,
    pub positive_only: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlgSection {
    pub seed: u64,
    pub best_epoch: Option<usize>,
    pub table_rows: usize,
    pub splits: Vec<SplitScores>,
    pub formulas: Vec<FormulaText>,
    pub purity_split: Split,
    pub purity: PurityReport,
    /// Mean entropy of the soft concept vectors on the purity split.
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let (mean, std) = mean_std(xs);
        Self { mean, std }
    }
}

/// Fidelity and accuracy over independent explainer trainings; purity in
/// `glg` comes from the best of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedAggregate {
    pub runs: Vec<RunSummary>,
    pub test_fidelity: MeanStd,
    pub test_formula_accuracy: MeanStd,
    pub test_formula_fidelity: MeanStd,
}

impl SeedAggregate {
    pub fn new(runs: Vec<RunSummary>) -> Self {
        let col = |f: fn(&RunSummary) -> f64| MeanStd::of(&runs.iter().map(f).collect::<Vec<_>>());
        Self {
            test_fidelity: col(|r| r.test_fidelity),
            test_formula_accuracy: col(|r| r.test_formula_accuracy),
            test_formula_fidelity: col(|r| r.test_formula_fidelity),
            runs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub kind: String,
    pub run: RunMeta,
    pub gnn: GnnSection,
    pub explanations: ExplanationSection,
    pub glg: GlgSection,
    pub seeds: SeedAggregate,
}

impl EvalReport {
    pub const KIND: &'static str = "report";
}

/// `key,value` rows, one per scalar leaf, keys joined with dots.
pub fn flatten_csv<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    let mut out = String::from("key,value\n");
    walk(&v, &mut String::new(), &mut out);
    out
}

fn walk(v: &serde_json::Value, key: &mut String, out: &mut String) {
    use serde_json::Value;
    let child = |k: &str, v: &Value, key: &mut String, out: &mut String| {
        let len = key.len();
        if !key.is_empty() {
            key.push('.');
        }
        key.push_str(k);
        walk(v, key, out);
        key.truncate(len);
    };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                child(k, x, key, out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                child(&i.to_string(), x, key, out);
            }
        }
        Value::Null => writeln!(out, "{key},").unwrap(),
        Value::String(s) => writeln!(out, "{key},{}", csv_field(s)).unwrap(),
        other => writeln!(out, "{key},{other}").unwrap(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Per-motif rows as CSV: `split,group,count,accuracy`.
pub fn per_motif_csv(rows: &BTreeMap<Split, Vec<MotifGroupRow>>) -> String {
    let mut out = String::from("split,group,count,accuracy\n");
    for (split, rs) in rows {
        for r in rs {
            writeln!(out, "{},{},{},{}", split.as_str(), r.group, r.count, r.accuracy).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_nested_values() {
        let v = serde_json::json!({"a": {"b": 1, "c": [true, null]}, "d": "x,y"});
        let csv = flatten_csv(&v);
        assert_eq!(csv, "key,value\na.b,1\na.c.0,true\na.c.1,\nd,\"x,y\"\n");
    }

    #[test]
    fn seed_aggregate_uses_population_std() {
        let r = |seed, f| RunSummary {
            seed,
            best_epoch: None,
            epochs_run: 1,
            val_fidelity: 0.0,
            test_fidelity: f,
            test_formula_fidelity: f,
            test_formula_accuracy: f,
        };
        let agg = SeedAggregate::new(vec![r(0, 0.9), r(1, 1.0)]);
        assert!((agg.test_fidelity.mean - 0.95).abs() < 1e-12);
        assert!((agg.test_fidelity.std - 0.05).abs() < 1e-12);
    }
}
