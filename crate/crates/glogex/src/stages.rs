//! Pipeline stages over an output directory. Each stage reads the files
//! earlier stages wrote, checks that they belong together (content hashes
//! recorded at write time) and writes its own outputs atomically.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use glogex_core::datasets::{Composition, MotifSpec};
use glogex_core::explain::{ExplainMethod, LocalExplanation};
use glogex_core::glg::{concept_report, ConceptEntry, GlgModel, GlgSample};
use glogex_core::gnn::{train_classifier, GnnClassifier, Prediction};
use glogex_core::metrics::{ablate_discretization, evaluate_glg, per_motif_accuracy, SweepRow};
use glogex_core::{LabeledGraph, Split};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, RunManifest};
use crate::error::{Error, Result};
use crate::formats::checkpoint::{read_gnn, read_glg, read_versioned, GlgCheckpoint, GnnCheckpoint};
use crate::formats::dataset::{read_dataset, write_dataset, GeneratorSidecar};
use crate::formats::explanations::{read_explanations, write_explanations};
use crate::formats::formulas::{FormulaRecord, FormulasFile};
use crate::formats::weights::{load_precomputed, write_weights};
use crate::formats::FORMAT_VERSION;
use crate::pipeline::{self, RunSummary, ThresholdSummary};
use crate::report::{
    flatten_csv, per_motif_csv, EvalReport, ExplanationSection, FormulaText, GlgSection, GnnSection, RunMeta,
    SeedAggregate,
};
use crate::{fsio, plot, version_string};

pub const RUN_CONFIG: &str = "run_config.json";
pub const DATASET: &str = "dataset.jsonl";
pub const GENERATOR_SIDECAR: &str = "dataset.generator.json";
pub const GNN_CKPT: &str = "gnn.ckpt";
pub const GNN_CURVE: &str = "gnn_curve.csv";
pub const PREDICTIONS: &str = "predictions.jsonl";
pub const EDGE_WEIGHTS: &str = "edge_weights.jsonl";
pub const EXPLANATIONS: &str = "explanations.jsonl";
pub const EXPLAIN_SUMMARY: &str = "explain_summary.json";
pub const GLG_CKPT: &str = "glg.ckpt";
pub const GLG_RUNS: &str = "glg_runs.json";
pub const GLG_LOG: &str = "glg_log.csv";
pub const FORMULAS: &str = "formulas.json";
pub const REPORT: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const PER_MOTIF_CSV: &str = "per_motif.csv";
pub const CONCEPTS: &str = "concepts.json";
pub const SWEEP: &str = "sweep.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const ABLATION: &str = "ablation.json";
pub const ABLATION_CSV: &str = "ablation.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageName {
    GenData,
    TrainGnn,
    ExplainLocal,
    TrainGlg,
    ExtractFormulas,
    Evaluate,
    SweepPrototypes,
    AblateDiscretization,
}

impl StageName {
    /// The stages `run-all` chains, in order.
    pub const RUN_ALL: [StageName; 6] = [
        StageName::GenData,
        StageName::TrainGnn,
        StageName::ExplainLocal,
        StageName::TrainGlg,
        StageName::ExtractFormulas,
        StageName::Evaluate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageName::GenData => "gen-data",
            StageName::TrainGnn => "train-gnn",
            StageName::ExplainLocal => "explain-local",
            StageName::TrainGlg => "train-glg",
            StageName::ExtractFormulas => "extract-formulas",
            StageName::Evaluate => "evaluate",
            StageName::SweepPrototypes => "sweep-prototypes",
            StageName::AblateDiscretization => "ablate-discretization",
        }
    }
}

/// A resolved configuration bound to its output directory.
#[derive(Debug, Clone)]
pub struct Runner {
    pub cfg: RunConfig,
    pub dir: PathBuf,
    pub quiet: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PredictionRecord {
    graph_id: usize,
    class: u8,
    probability: f64,
    logit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainSummary {
    pub format_version: u32,
    pub kind: String,
    pub method: ExplainMethod,
    pub threshold: Option<ThresholdSummary>,
    pub dataset_sha256: String,
    pub gnn_sha256: Option<String>,
    pub explanations_sha256: String,
    pub graphs: usize,
    pub graphs_without_explanations: usize,
    pub explanations: usize,
}

impl ExplainSummary {
    const KIND: &'static str = "explain_summary";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlgRuns {
    pub format_version: u32,
    pub kind: String,
    pub explanations_sha256: String,
    pub gnn_sha256: String,
    /// Index into `runs` of the run saved as `glg.ckpt`.
    pub best: usize,
    pub runs: Vec<RunSummary>,
}

impl GlgRuns {
    const KIND: &'static str = "glg_runs";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptsFile {
    pub format_version: u32,
    pub kind: String,
    pub split: Split,
    /// Per prototype; `nearest` holds line indices into `explanations.jsonl`.
    pub concepts: Vec<ConceptRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptRecord {
    pub prototype: usize,
    pub nearest_explanation: Option<usize>,
    pub nearest: Vec<usize>,
    pub nearest_source_graphs: Vec<usize>,
    pub members: usize,
    pub label_counts: BTreeMap<glogex_core::datasets::Annotation, usize>,
    pub purity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFile {
    pub format_version: u32,
    pub kind: String,
    pub split: Split,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSummary {
    pub discretize: bool,
    pub epochs_run: usize,
    pub test_fidelity: f64,
    pub initial_entropy: f64,
    pub max_entropy: f64,
    /// Epochs whose formula accuracy differs from fidelity.
    pub formula_fidelity_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationFile {
    pub format_version: u32,
    pub kind: String,
    pub runs: Vec<AblationSummary>,
    /// Test fidelity with the trick over test fidelity without it.
    pub fidelity_ratio: Option<f64>,
}

/// Everything the explainer stages consume, loaded and cross-checked.
pub struct Inputs {
    pub dataset: Vec<LabeledGraph>,
    pub dataset_sha256: String,
    pub gnn: GnnClassifier,
    pub gnn_sha256: String,
    pub predictions: Vec<Prediction>,
    pub explanations: Vec<LocalExplanation>,
    pub explanations_sha256: String,
    pub samples: Vec<GlgSample>,
}

fn mismatch(artifact: &str, msg: impl Into<String>) -> Error {
    Error::StageMismatch {
        artifact: artifact.into(),
        msg: msg.into(),
    }
}

impl Runner {
    pub fn new(cfg: RunConfig, quiet: bool) -> Self {
        let dir = cfg.out_dir();
        Self { cfg, dir, quiet }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn log(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("[glogex] {}", msg.as_ref());
        }
    }

    pub fn run(&self, stage: StageName) -> Result<()> {
        self.write_manifest()?;
        self.log(format!("stage {}", stage.as_str()));
        match stage {
            StageName::GenData => self.gen_data(),
            StageName::TrainGnn => self.train_gnn(),
            StageName::ExplainLocal => self.explain_local(),
            StageName::TrainGlg => self.train_glg(),
            StageName::ExtractFormulas => self.extract_formulas(),
            StageName::Evaluate => self.evaluate(),
            StageName::SweepPrototypes => self.sweep_prototypes(),
            StageName::AblateDiscretization => self.ablate(),
        }
    }

    pub fn run_all(&self) -> Result<()> {
        StageName::RUN_ALL.iter().try_for_each(|&s| self.run(s))
    }

    fn write_manifest(&self) -> Result<()> {
        let manifest = RunManifest {
            tool_version: version_string(),
            config_sha256: self.cfg.hash(),
            config: self.cfg.clone(),
        };
        fsio::write_json(&self.path(RUN_CONFIG), &manifest)
    }

    fn write_text(&self, name: &str, text: &str) -> Result<()> {
        fsio::atomic_write(&self.path(name), text.as_bytes())
    }

    fn motifs(&self) -> Result<Vec<MotifSpec>> {
        let sidecar = self.path(GENERATOR_SIDECAR);
        let g = if sidecar.exists() {
            fsio::read_json::<GeneratorSidecar>(&sidecar)?.generator
        } else {
            self.cfg.generator.clone()
        };
        pipeline::motif_specs(&g)
    }

    pub fn gen_data(&self) -> Result<()> {
        let (graphs, generated) = match &self.cfg.dataset_path {
            Some(p) => (read_dataset(p)?, false),
            None => (pipeline::generate_dataset(&self.cfg.generator)?, true),
        };
        let path = self.path(DATASET);
        write_dataset(&path, &graphs)?;
        let sidecar = self.path(GENERATOR_SIDECAR);
        if generated {
            let meta = GeneratorSidecar {
                format_version: FORMAT_VERSION,
                tool_version: version_string(),
                dataset_sha256: fsio::file_sha256(&path)?,
                node_features: "constant 1.0 per node".into(),
                generator: self.cfg.generator.clone(),
            };
            fsio::write_json(&sidecar, &meta)?;
        } else if sidecar.exists() {
            std::fs::remove_file(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        }
        self.log(format!("wrote {} graphs", graphs.len()));
        Ok(())
    }

    fn load_dataset(&self) -> Result<(Vec<LabeledGraph>, String)> {
        let path = self.path(DATASET);
        let data = read_dataset(&path)?;
        Ok((data, fsio::file_sha256(&path)?))
    }

    pub fn train_gnn(&self) -> Result<()> {
        let (dataset, sha) = self.load_dataset()?;
        let trained = train_classifier(&dataset, &self.cfg.gnn)?;
        let ck = GnnCheckpoint::new(&trained.model, self.cfg.gnn.seed, trained.steps, trained.best_epoch, sha);
        fsio::write_json(&self.path(GNN_CKPT), &ck)?;
        let mut curve = String::from("epoch,loss,train_accuracy,val_accuracy\n");
        for r in &trained.curve {
            curve.push_str(&format!("{},{},{},{}\n", r.epoch, r.loss, r.train_accuracy, r.val_accuracy));
        }
        self.write_text(GNN_CURVE, &curve)?;
        let preds = pipeline::predict_all(&trained.model, &dataset)?;
        let rows: Vec<PredictionRecord> = preds
            .iter()
            .enumerate()
            .map(|(graph_id, p)| PredictionRecord {
                graph_id,
                class: p.class,
                probability: p.probability,
                logit: p.logit,
            })
            .collect();
        fsio::write_jsonl(&self.path(PREDICTIONS), &rows)?;
        let test: Vec<usize> = (0..dataset.len()).filter(|&i| dataset[i].split == Split::Test).collect();
        let ok = test.iter().filter(|&&i| preds[i].class == dataset[i].label).count();
        self.log(format!(
            "classifier: best epoch {:?}, test accuracy {:.3}",
            trained.best_epoch,
            ok as f64 / test.len().max(1) as f64
        ));
        Ok(())
    }

    fn load_gnn(&self, dataset_sha: &str) -> Result<(GnnClassifier, String)> {
        let path = self.path(GNN_CKPT);
        let ck = read_gnn(&path)?;
        if ck.dataset_sha256 != dataset_sha {
            return Err(mismatch(GNN_CKPT, format!("trained on a different {DATASET}")));
        }
        Ok((ck.model()?, fsio::file_sha256(&path)?))
    }

    pub fn explain_local(&self) -> Result<()> {
        let (dataset, dataset_sha) = self.load_dataset()?;
        let motifs = self.motifs()?;
        let ex_cfg = &self.cfg.explainer;
        let mut gnn_sha = None;
        let (explanations, threshold) = match ex_cfg.method {
            ExplainMethod::GroundTruth => (pipeline::oracle_explanations(&dataset, &motifs)?, None),
            method => {
                let weights = if method == ExplainMethod::Precomputed {
                    let p = self.cfg.precomputed_weights.as_deref().expect("validated");
                    load_precomputed(p, &dataset)?
                } else {
                    let (model, sha) = self.load_gnn(&dataset_sha)?;
                    gnn_sha = Some(sha);
                    pipeline::explain_weights(&model, &dataset, ex_cfg)?
                };
                write_weights(&self.path(EDGE_WEIGHTS), &weights, &dataset)?;
                let (ex, summary) = pipeline::binarize_all(&weights, &dataset, &ex_cfg.threshold, &motifs)?;
                (ex, Some(summary))
            }
        };
        let path = self.path(EXPLANATIONS);
        write_explanations(&path, &explanations, &dataset)?;
        let mut covered = vec![false; dataset.len()];
        for e in &explanations {
            covered[e.source_graph_id] = true;
        }
        let summary = ExplainSummary {
            format_version: FORMAT_VERSION,
            kind: ExplainSummary::KIND.into(),
            method: ex_cfg.method,
            threshold,
            dataset_sha256: dataset_sha,
            gnn_sha256: gnn_sha,
            explanations_sha256: fsio::file_sha256(&path)?,
            graphs: dataset.len(),
            graphs_without_explanations: covered.iter().filter(|c| !**c).count(),
            explanations: explanations.len(),
        };
        fsio::write_json(&self.path(EXPLAIN_SUMMARY), &summary)?;
        self.log(format!(
            "{} explanations, {} graphs without any",
            summary.explanations, summary.graphs_without_explanations
        ));
        Ok(())
    }

    /// Loads dataset, classifier and explanations and checks they belong
    /// to the same run.
    pub fn inputs(&self) -> Result<Inputs> {
        let (dataset, dataset_sha256) = self.load_dataset()?;
        let (gnn, gnn_sha256) = self.load_gnn(&dataset_sha256)?;
        let summary: ExplainSummary = read_versioned(&self.path(EXPLAIN_SUMMARY), ExplainSummary::KIND)?;
        if summary.dataset_sha256 != dataset_sha256 {
            return Err(mismatch(EXPLANATIONS, format!("extracted from a different {DATASET}")));
        }
        if let Some(s) = &summary.gnn_sha256 {
            if *s != gnn_sha256 {
                return Err(mismatch(EXPLANATIONS, format!("extracted with a different {GNN_CKPT}")));
            }
        }
        let path = self.path(EXPLANATIONS);
        let explanations_sha256 = fsio::file_sha256(&path)?;
        if explanations_sha256 != summary.explanations_sha256 {
            return Err(mismatch(EXPLANATIONS, format!("does not match {EXPLAIN_SUMMARY}")));
        }
        let explanations = read_explanations(&path, &dataset)?;
        let predictions = pipeline::predict_all(&gnn, &dataset)?;
        let targets: Vec<u8> = predictions.iter().map(|p| p.class).collect();
        let samples = pipeline::build_samples(&dataset, &targets, &explanations)?;
        Ok(Inputs {
            dataset,
            dataset_sha256,
            gnn,
            gnn_sha256,
            predictions,
            explanations,
            explanations_sha256,
            samples,
        })
    }

    pub fn train_glg(&self) -> Result<()> {
        let inp = self.inputs()?;
        let runs = pipeline::train_glg_runs(&inp.samples, &self.cfg.glg, self.cfg.metrics.glg_runs)?;
        let summaries: Vec<RunSummary> = runs.iter().map(|(_, s)| s.clone()).collect();
        let best = pipeline::best_run(&summaries);
        let (trained, _) = &runs[best];
        let ck = GlgCheckpoint::new(
            &trained.model,
            trained.config,
            trained.steps,
            trained.best_epoch,
            trained.best_val_fidelity,
            inp.explanations_sha256.clone(),
        );
        fsio::write_json(&self.path(GLG_CKPT), &ck)?;
        let file = GlgRuns {
            format_version: FORMAT_VERSION,
            kind: GlgRuns::KIND.into(),
            explanations_sha256: inp.explanations_sha256,
            gnn_sha256: inp.gnn_sha256,
            best,
            runs: summaries,
        };
        fsio::write_json(&self.path(GLG_RUNS), &file)?;
        self.write_text(GLG_LOG, &plot::plot_csv(&trained.log))?;
        if self.cfg.metrics.svg {
            let svg = plot::line_chart_svg(
                "explainer training",
                "value",
                &[
                    ("fidelity".into(), plot::series_of(&trained.log, |e| e.train_fidelity)),
                    ("formula accuracy".into(), plot::series_of(&trained.log, |e| e.formula_accuracy)),
                    ("entropy".into(), plot::series_of(&trained.log, |e| e.entropy)),
                ],
            );
            self.write_text("glg_log.svg", &svg)?;
        }
        for s in &file.runs {
            self.log(format!(
                "seed {}: best epoch {:?}, val fidelity {:.3}, test fidelity {:.3}",
                s.seed, s.best_epoch, s.val_fidelity, s.test_fidelity
            ));
        }
        Ok(())
    }

    fn load_glg(&self, inp: &Inputs) -> Result<(GlgModel, GlgCheckpoint)> {
        let ck = read_glg(&self.path(GLG_CKPT))?;
        if ck.explanations_sha256 != inp.explanations_sha256 {
            return Err(mismatch(GLG_CKPT, format!("trained on a different {EXPLANATIONS}")));
        }
        Ok((ck.model()?, ck))
    }

    pub fn extract_formulas(&self) -> Result<()> {
        let inp = self.inputs()?;
        let (model, ck) = self.load_glg(&inp)?;
        let eval = evaluate_glg(&model, &ck.config, &inp.samples, self.cfg.metrics.purity_split)?;
        let test: Vec<&GlgSample> = inp.samples.iter().filter(|s| s.split == Split::Test).collect();
        let outputs = model.evaluate(&test, ck.config.discretize, ck.config.elen_threshold)?;
        let records = eval
            .simplified
            .iter()
            .map(|f| {
                let hits = test
                    .iter()
                    .zip(&outputs)
                    .filter(|(s, o)| o.bits.as_ref().is_some_and(|b| f.evaluate(b)) == (s.label == f.class))
                    .count();
                FormulaRecord::new(f, hits as f64 / test.len().max(1) as f64)
            })
            .collect();
        let accuracy = eval.split(Split::Test).map_or(0.0, |s| s.formula_accuracy);
        let file = FormulasFile::new(model.arch.concepts, eval.table_rows, accuracy, records);
        fsio::write_json(&self.path(FORMULAS), &file)?;
        for f in &file.formulas {
            self.log(format!("class {}: {}", f.class, f.display_raw));
        }
        Ok(())
    }

    pub fn evaluate(&self) -> Result<()> {
        let inp = self.inputs()?;
        let (model, ck) = self.load_glg(&inp)?;
        let runs: GlgRuns = read_versioned(&self.path(GLG_RUNS), GlgRuns::KIND)?;
        if runs.explanations_sha256 != inp.explanations_sha256 {
            return Err(mismatch(GLG_RUNS, format!("trained on a different {EXPLANATIONS}")));
        }
        let summary: ExplainSummary = read_versioned(&self.path(EXPLAIN_SUMMARY), ExplainSummary::KIND)?;
        let purity_split = self.cfg.metrics.purity_split;
        let eval = evaluate_glg(&model, &ck.config, &inp.samples, purity_split)?;

        let preds: Vec<u8> = inp.predictions.iter().map(|p| p.class).collect();
        let mut accuracy = BTreeMap::new();
        let mut per_motif = Some(BTreeMap::new());
        let tagged = inp.dataset.iter().all(|g| Composition::from_tags(&g.motif_tags).is_some());
        for split in Split::ALL {
            let idx: Vec<usize> = (0..inp.dataset.len()).filter(|&i| inp.dataset[i].split == split).collect();
            if idx.is_empty() {
                continue;
            }
            let ok = idx.iter().filter(|&&i| preds[i] == inp.dataset[i].label).count();
            accuracy.insert(split, ok as f64 / idx.len() as f64);
            if tagged {
                let p: Vec<u8> = idx.iter().map(|&i| preds[i]).collect();
                let r: Vec<&LabeledGraph> = idx.iter().map(|&i| &inp.dataset[i]).collect();
                if let Some(m) = per_motif.as_mut() {
                    m.insert(split, per_motif_accuracy(&p, &r)?);
                }
            }
        }
        if !tagged {
            per_motif = None;
        }

        let concepts = self.concepts(&model, &inp, purity_split)?;
        fsio::write_json(&self.path(CONCEPTS), &concepts)?;

        let report = EvalReport {
            format_version: FORMAT_VERSION,
            kind: EvalReport::KIND.into(),
            run: RunMeta {
                tool_version: version_string(),
                seed: self.cfg.seed,
                m: model.arch.concepts,
                config_sha256: self.cfg.hash(),
                dataset_sha256: inp.dataset_sha256.clone(),
                explanations_sha256: inp.explanations_sha256.clone(),
            },
            gnn: GnnSection { accuracy, per_motif },
            explanations: ExplanationSection {
                method: format!("{:?}", summary.method),
                threshold: summary.threshold,
                total: inp.explanations.len(),
                graphs_without_explanations: summary.graphs_without_explanations,
                annotations: pipeline::annotation_counts(&inp.explanations),
            },
            glg: GlgSection {
                seed: ck.rng_seed,
                best_epoch: ck.best_epoch,
                table_rows: eval.table_rows,
                splits: eval.splits.clone(),
                formulas: eval
                    .simplified
                    .iter()
                    .map(|f| FormulaText {
                        class: f.class,
                        raw: f.display_raw(),
                        positive_only: f.display_positive().text,
                    })
                    .collect(),
                purity_split,
                purity: eval.purity.clone(),
                entropy: eval.entropy,
            },
            seeds: SeedAggregate::new(runs.runs),
        };
        fsio::write_json(&self.path(REPORT), &report)?;
        self.write_text(REPORT_CSV, &flatten_csv(&report))?;
        if let Some(rows) = &report.gnn.per_motif {
            self.write_text(PER_MOTIF_CSV, &per_motif_csv(rows))?;
        }
        if let Some(t) = eval.split(Split::Test) {
            self.log(format!(
                "test fidelity {:.3}, formula accuracy {:.3}, purity {:.3} ± {:.3}",
                t.fidelity, t.formula_accuracy, eval.purity.mean, eval.purity.std
            ));
        }
        Ok(())
    }

    fn concepts(&self, model: &GlgModel, inp: &Inputs, split: Split) -> Result<ConceptsFile> {
        let picked: Vec<usize> = (0..inp.explanations.len())
            .filter(|&k| inp.dataset[inp.explanations[k].source_graph_id].split == split)
            .collect();
        let items: Vec<_> = picked
            .iter()
            .map(|&k| (&inp.explanations[k].subgraph.graph, inp.explanations[k].annotation))
            .collect();
        let entries: Vec<ConceptEntry> = if items.is_empty() {
            Vec::new()
        } else {
            concept_report(model, &items, self.cfg.metrics.top_k)?
        };
        let concepts = entries
            .into_iter()
            .map(|e| {
                let nearest: Vec<usize> = e.nearest.iter().map(|&i| picked[i]).collect();
                ConceptRecord {
                    prototype: e.prototype,
                    nearest_explanation: nearest.first().copied(),
                    nearest_source_graphs: nearest.iter().map(|&k| inp.explanations[k].source_graph_id).collect(),
                    nearest,
                    members: e.members,
                    label_counts: e.label_counts,
                    purity: e.purity,
                }
            })
            .collect();
        Ok(ConceptsFile {
            format_version: FORMAT_VERSION,
            kind: "concepts".into(),
            split,
            concepts,
        })
    }

    pub fn sweep_prototypes(&self) -> Result<()> {
        let inp = self.inputs()?;
        let rows = pipeline::parallel_sweep(&inp.samples, &self.cfg.glg, &self.cfg.metrics.sweep_concepts)?;
        let mut csv = String::from("concepts,val_fidelity,val_formula_fidelity,purity_mean,purity_std,best_epoch,epochs_run\n");
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.concepts,
                r.val_fidelity,
                r.val_formula_fidelity,
                r.purity_mean,
                r.purity_std,
                r.best_epoch.map(|e| e.to_string()).unwrap_or_default(),
                r.epochs_run
            ));
            self.log(format!("m = {}: val fidelity {:.3}, purity {:.3}", r.concepts, r.val_fidelity, r.purity_mean));
        }
        let file = SweepFile {
            format_version: FORMAT_VERSION,
            kind: "sweep".into(),
            split: Split::Val,
            rows,
        };
        fsio::write_json(&self.path(SWEEP), &file)?;
        self.write_text(SWEEP_CSV, &csv)
    }

    pub fn ablate(&self) -> Result<()> {
        let inp = self.inputs()?;
        let runs = ablate_discretization(&inp.samples, &self.cfg.glg)?;
        let summaries: Vec<AblationSummary> = runs.iter().map(ablation_summary).collect();
        let on = runs.iter().find(|r| r.discretize).map(|r| r.test_fidelity);
        let off = runs.iter().find(|r| !r.discretize).map(|r| r.test_fidelity);
        let file = AblationFile {
            format_version: FORMAT_VERSION,
            kind: "ablation".into(),
            runs: summaries,
            fidelity_ratio: match (on, off) {
                (Some(a), Some(b)) if b > 0.0 => Some(a / b),
                _ => None,
            },
        };
        fsio::write_json(&self.path(ABLATION), &file)?;
        let series: Vec<(&str, &[glogex_core::glg::EpochLog])> = runs
            .iter()
            .map(|r| (if r.discretize { "discretized" } else { "continuous" }, r.log.as_slice()))
            .collect();
        self.write_text(ABLATION_CSV, &plot::plot_csv_series(&series))?;
        if self.cfg.metrics.svg {
            for (name, f) in [
                ("entropy", (|e: &glogex_core::glg::EpochLog| e.entropy) as fn(&glogex_core::glg::EpochLog) -> f64),
                ("fidelity", |e| e.train_fidelity),
                ("formula_accuracy", |e| e.formula_accuracy),
            ] {
                let lines: Vec<(String, Vec<(f64, f64)>)> =
                    series.iter().map(|(n, log)| ((*n).to_string(), plot::series_of(log, f))).collect();
                let svg = plot::line_chart_svg(&format!("discretization ablation: {name}"), name, &lines);
                self.write_text(&format!("ablation_{name}.svg"), &svg)?;
            }
        }
        for s in &file.runs {
            self.log(format!(
                "discretize={}: test fidelity {:.3}, initial entropy {:.4}",
                s.discretize, s.test_fidelity, s.initial_entropy
            ));
        }
        Ok(())
    }
}

fn ablation_summary(r: &glogex_core::metrics::AblationRun) -> AblationSummary {
    AblationSummary {
        discretize: r.discretize,
        epochs_run: r.log.len(),
        test_fidelity: r.test_fidelity,
        initial_entropy: r.log.first().map_or(0.0, |e| e.entropy),
        max_entropy: r.log.iter().map(|e| e.entropy).fold(0.0, f64::max),
        formula_fidelity_mismatches: r.log.iter().filter(|e| e.formula_accuracy != e.train_fidelity).count(),
    }
}

/// Whether `dir` holds every file `run-all` promises.
pub fn run_all_outputs(dir: &Path) -> Vec<&'static str> {
    [RUN_CONFIG, DATASET, GNN_CKPT, EXPLANATIONS, GLG_CKPT, FORMULAS, REPORT]
        .into_iter()
        .filter(|n| !dir.join(n).exists())
        .collect()
}
