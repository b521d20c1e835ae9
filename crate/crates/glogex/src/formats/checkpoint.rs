//! Parameter checkpoints (`gnn.ckpt`, `glg.ckpt`): JSON documents holding
//! a format version, the architecture, every named parameter array with
//! its shape, the seed and the optimizer step count. Numbers are written
//! in shortest round-trip form, so loading restores bit-identical values.

use std::path::Path;

use glogex_core::autodiff::{Matrix, ParamStore};
use glogex_core::glg::{GlgArch, GlgModel, GlgTrainConfig};
use glogex_core::gnn::{ClassifierArch, GnnClassifier};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::FORMAT_VERSION;
use crate::error::{Error, Result};
use crate::fsio;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedArray {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

pub fn store_to_arrays(store: &ParamStore) -> Vec<NamedArray> {
    store
        .iter()
        .map(|(_, t)| NamedArray {
            name: t.name.clone(),
            shape: [t.value.rows(), t.value.cols()],
            data: t.value.data().to_vec(),
        })
        .collect()
}

pub fn arrays_to_store(arrays: &[NamedArray]) -> glogex_core::Result<ParamStore> {
    let mut store = ParamStore::new();
    for a in arrays {
        let m = Matrix::from_vec(a.shape[0], a.shape[1], a.data.clone())?;
        if store.find(&a.name).is_some() {
            return Err(glogex_core::Error::Config(format!("duplicate parameter {}", a.name)));
        }
        store.add(a.name.clone(), m);
    }
    Ok(store)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnnCheckpoint {
    pub format_version: u32,
    pub kind: String,
    pub tool_version: String,
    pub arch: ClassifierArch,
    pub rng_seed: u64,
    pub step_count: u64,
    pub best_epoch: Option<usize>,
    pub dataset_sha256: String,
    pub params: Vec<NamedArray>,
}

impl GnnCheckpoint {
    pub const KIND: &'static str = "gnn";

    pub fn new(model: &GnnClassifier, rng_seed: u64, step_count: u64, best_epoch: Option<usize>, dataset_sha256: String) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind: Self::KIND.into(),
            tool_version: crate::version_string(),
            arch: model.arch,
            rng_seed,
            step_count,
            best_epoch,
            dataset_sha256,
            params: store_to_arrays(&model.store),
        }
    }

    pub fn model(&self) -> glogex_core::Result<GnnClassifier> {
        GnnClassifier::from_params(self.arch, arrays_to_store(&self.params)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlgCheckpoint {
    pub format_version: u32,
    pub kind: String,
    pub tool_version: String,
    pub arch: GlgArch,
    /// Number of prototypes.
    pub m: usize,
    /// Prototype dimensionality.
    pub d: usize,
    pub projection_eps: f64,
    pub prototypes: Vec<Vec<f64>>,
    pub rng_seed: u64,
    pub step_count: u64,
    pub best_epoch: Option<usize>,
    pub best_val_fidelity: f64,
    pub config: GlgTrainConfig,
    pub explanations_sha256: String,
    pub params: Vec<NamedArray>,
}

impl GlgCheckpoint {
    pub const KIND: &'static str = "glg";

    pub fn new(
        model: &GlgModel,
        config: GlgTrainConfig,
        step_count: u64,
        best_epoch: Option<usize>,
        best_val_fidelity: f64,
        explanations_sha256: String,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind: Self::KIND.into(),
            tool_version: crate::version_string(),
            arch: model.arch,
            m: model.arch.concepts,
            d: model.arch.embed_dim,
            projection_eps: model.arch.projection_eps,
            prototypes: model.prototype_matrix().to_rows(),
            rng_seed: config.seed,
            step_count,
            best_epoch,
            best_val_fidelity,
            config,
            explanations_sha256,
            params: store_to_arrays(&model.store),
        }
    }

    pub fn model(&self) -> glogex_core::Result<GlgModel> {
        let model = GlgModel::from_params(self.arch, arrays_to_store(&self.params)?)?;
        if self.m != self.arch.concepts || self.d != self.arch.embed_dim || self.projection_eps != self.arch.projection_eps {
            return Err(glogex_core::Error::Config("checkpoint header disagrees with its architecture".into()));
        }
        if model.prototype_matrix().to_rows() != self.prototypes {
            return Err(glogex_core::Error::Config("prototype matrix disagrees with parameters".into()));
        }
        Ok(model)
    }
}

#[derive(Deserialize)]
struct Header {
    format_version: u32,
    kind: String,
}

/// Loads a versioned JSON artifact, rejecting other format versions and
/// kinds before the strict parse.
pub fn read_versioned<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let text = fsio::read_artifact(path)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let header: Header = serde_json::from_str(&text).map_err(|e| Error::format(path, Some(e.line()), e))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::StageMismatch {
            artifact: name,
            msg: format!("format version {} (expected {FORMAT_VERSION})", header.format_version),
        });
    }
    if header.kind != kind {
        return Err(Error::StageMismatch {
            artifact: name,
            msg: format!("kind {:?} (expected {kind:?})", header.kind),
        });
    }
    serde_json::from_str(&text).map_err(|e| Error::format(path, Some(e.line()), e))
}

pub fn read_gnn(path: &Path) -> Result<GnnCheckpoint> {
    read_versioned(path, GnnCheckpoint::KIND)
}

pub fn read_glg(path: &Path) -> Result<GlgCheckpoint> {
    read_versioned(path, GlgCheckpoint::KIND)
}
