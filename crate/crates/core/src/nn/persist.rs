//! Model document:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "config": {"data_dim": 2, "hidden": 256, "n_blocks": 4, "time_embed_dim": 64},
//!   "seed": 0,
//!   "normalization": {"mean": [..], "std": [..]},
//!   "params": {"input.weight": {"shape": [66, 256], "data": [..]}, ..},
//!   "training_meta": {"epochs": 300, "final_loss": 1.23}
//! }
//! ```
//!
//! Arrays are row-major. Floats are written in shortest round-trip form, so a
//! save/load cycle reproduces every bit.

use std::collections::BTreeMap;
use std::path::Path;

use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{MlpConfig, MlpParams, Tensor};
use crate::data::Normalization;
use crate::error::{io_err, Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub config: MlpConfig,
    pub seed: u64,
    pub normalization: Normalization,
    #[serde(serialize_with = "write_params", deserialize_with = "read_params")]
    pub params: Vec<Tensor>,
    pub training_meta: TrainingMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayDoc {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn write_params<S: Serializer>(tensors: &[Tensor], s: S) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(tensors.len()))?;
    for t in tensors {
        map.serialize_entry(&t.name, &ArrayDocRef { shape: &t.shape, data: &t.data })?;
    }
    map.end()
}

#[derive(Serialize)]
struct ArrayDocRef<'a> {
    shape: &'a [usize],
    data: &'a [f64],
}

fn read_params<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Tensor>, D::Error> {
    let raw: BTreeMap<String, ArrayDoc> = BTreeMap::deserialize(d)?;
    Ok(raw
        .into_iter()
        .map(|(name, a)| Tensor { name, shape: a.shape, data: a.data })
        .collect())
}

impl ModelFile {
    pub fn new(
        params: &MlpParams,
        seed: u64,
        normalization: Normalization,
        training_meta: TrainingMeta,
    ) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            config: params.config,
            seed,
            normalization,
            params: params.tensors.clone(),
            training_meta,
        }
    }

    /// Parameters in canonical order, with layout checked against the config.
    pub fn to_params(&self) -> Result<MlpParams> {
        self.config.validate()?;
        let mut canonical = MlpParams::zeros(self.config);
        for t in &mut canonical.tensors {
            let src = self
                .params
                .iter()
                .find(|s| s.name == t.name)
                .ok_or_else(|| Error::Config(format!("missing tensor `{}`", t.name)))?;
            if src.shape != t.shape || src.data.len() != t.data.len() {
                return Err(Error::Config(format!(
                    "tensor `{}` has shape {:?}, expected {:?}",
                    t.name, src.shape, t.shape
                )));
            }
            t.data.copy_from_slice(&src.data);
        }
        if self.params.len() != canonical.tensors.len() {
            return Err(Error::Config(format!(
                "model has {} tensors, expected {}",
                self.params.len(),
                canonical.tensors.len()
            )));
        }
        if self.normalization.mean.len() != self.config.data_dim
            || self.normalization.std.len() != self.config.data_dim
        {
            return Err(Error::Config("normalization length does not match data_dim".into()));
        }
        canonical.check_finite()?;
        Ok(canonical)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut m: ModelFile = serde_json::from_str(s)?;
        let order: Vec<String> =
            MlpParams::zeros(m.config).tensors.into_iter().map(|t| t.name).collect();
        m.params.sort_by_key(|t| order.iter().position(|n| *n == t.name).unwrap_or(usize::MAX));
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format_version {} (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&s).map_err(|e| e.context(format!("loading {}", path.display())))
    }
}
