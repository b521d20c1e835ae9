//! The single JSON document that drives a run.

use std::path::{Path, PathBuf};

use glogex_core::datasets::GeneratorConfig;
use glogex_core::explain::{ExplainMethod, ExplainerConfig};
use glogex_core::glg::GlgTrainConfig;
use glogex_core::gnn::GnnTrainConfig;
use glogex_core::Split;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio;

/// Metric and harness options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricOptions {
    /// Independent explainer trainings with seeds `seed, seed + 1, …`;
    /// fidelity and accuracy are reported as mean ± std over them and
    /// the best run (validation fidelity) is kept as `glg.ckpt`.
    pub glg_runs: usize,
    /// Split whose explanations are clustered for concept purity.
    pub purity_split: Split,
    /// Nearest explanations listed per prototype in `concepts.json`.
    pub top_k: usize,
    /// Prototype counts tried by `sweep-prototypes`.
    pub sweep_concepts: Vec<usize>,
    /// Also write SVG line charts next to plot CSVs.
    pub svg: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            glg_runs: 5,
            purity_split: Split::Test,
            top_k: 5,
            sweep_concepts: vec![2, 4, 6, 8],
            svg: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; copied into every stage's own seed on resolution.
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// External dataset in the graph JSONL format; when set, `gen-data`
    /// validates and copies it instead of generating BAMultiShapes.
    pub dataset_path: Option<PathBuf>,
    /// Edge-weights JSONL used when `explainer.method` is `precomputed`.
    pub precomputed_weights: Option<PathBuf>,
    pub generator: GeneratorConfig,
    pub gnn: GnnTrainConfig,
    pub explainer: ExplainerConfig,
    pub glg: GlgTrainConfig,
    pub metrics: MetricOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: None,
            dataset_path: None,
            precomputed_weights: None,
            generator: GeneratorConfig::default(),
            gnn: GnnTrainConfig::default(),
            explainer: ExplainerConfig::default(),
            glg: GlgTrainConfig::default(),
            metrics: MetricOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format(path, Some(e.line()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fsio::read_string(path)?, path)
    }

    /// Applies the master seed to every stage and validates the result.
    pub fn resolve(mut self, seed_override: Option<u64>, out_override: Option<PathBuf>) -> Result<Self> {
        if let Some(s) = seed_override {
            self.seed = s;
        }
        if out_override.is_some() {
            self.out = out_override;
        }
        self.generator.seed = self.seed;
        self.gnn.seed = self.seed;
        self.explainer.edge_mask.seed = self.seed;
        self.glg.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset_path.is_none() {
            self.generator.validate()?;
        }
        self.explainer.validate()?;
        self.glg.validate()?;
        if self.gnn.batch_size == 0 || self.gnn.hidden == 0 || self.gnn.layers == 0 {
            return Err(Error::Config("gnn hidden, layers and batch_size must be positive".into()));
        }
        if !(self.gnn.learning_rate > 0.0) {
            return Err(Error::Config("gnn learning_rate must be positive".into()));
        }
        if self.explainer.method == ExplainMethod::Precomputed && self.precomputed_weights.is_none() {
            return Err(Error::Config("method \"precomputed\" needs precomputed_weights".into()));
        }
        if self.metrics.glg_runs == 0 {
            return Err(Error::Config("metrics.glg_runs must be at least 1".into()));
        }
        if self.metrics.sweep_concepts.iter().any(|&m| m < 2) {
            return Err(Error::Config("sweep_concepts entries must be at least 2".into()));
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("glogex-out"))
    }

    /// SHA-256 of the canonical JSON form, leaving out the output
    /// directory.
    pub fn hash(&self) -> String {
        let cfg = RunConfig { out: None, ..self.clone() };
        fsio::sha256_hex(&serde_json::to_vec(&cfg).expect("serializable"))
    }
}

/// `run_config.json`: the resolved configuration and the tool version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub config: RunConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_partial_documents_fill_in() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text, Path::new("c")).unwrap(), cfg);
        let partial = RunConfig::from_json(r#"{"seed": 4, "glg": {"concepts": 3}}"#, Path::new("c")).unwrap();
        assert_eq!(partial.glg.concepts, 3);
        assert_eq!(partial.glg.batch_size, 128);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"sed": 4}"#, Path::new("c")).is_err());
        assert!(RunConfig::from_json(r#"{"glg": {"concept": 3}}"#, Path::new("c")).is_err());
        assert!(RunConfig::from_json(r#"{"generator": {"nodes": 3}}"#, Path::new("c")).is_err());
    }

    #[test]
    fn seed_propagates() {
        let cfg = RunConfig::default().resolve(Some(7), None).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.generator.seed, 7);
        assert_eq!(cfg.gnn.seed, 7);
        assert_eq!(cfg.explainer.edge_mask.seed, 7);
        assert_eq!(cfg.glg.seed, 7);
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = RunConfig::default();
        let b = RunConfig { out: Some(PathBuf::from("elsewhere")), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig { seed: 1, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn validation_failures() {
        let mut cfg = RunConfig::default();
        cfg.explainer.method = ExplainMethod::Precomputed;
        assert!(cfg.clone().resolve(None, None).is_err());
        cfg.precomputed_weights = Some("w.jsonl".into());
        assert!(cfg.resolve(None, None).is_ok());
        let mut cfg = RunConfig::default();
        cfg.glg.concepts = 1;
        assert!(cfg.resolve(None, None).is_err());
    }
}
