use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{param_shapes, Model, ModelConfig, ModelError};
use crate::nn::{ParamStore, Tensor};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    /// Row-major values.
    pub values: Vec<f64>,
}

/// Versioned JSON form of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: ModelConfig,
    pub params: Vec<ParamRecord>,
    /// Free-form run information (target transform, epoch, ...).
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn from_model(model: &Model) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            config: model.config().clone(),
            params: model
                .params()
                .slots()
                .iter()
                .map(|s| ParamRecord {
                    name: s.name.clone(),
                    shape: s.value.shape().to_vec(),
                    values: s.value.data().to_vec(),
                })
                .collect(),
            metadata: BTreeMap::new(),
        }
    }

    /// Rebuild the model, checking names and shapes against the config.
    pub fn to_model(&self) -> Result<Model, ModelError> {
        if self.version != CHECKPOINT_VERSION {
            return Err(ModelError::Checkpoint(format!("unsupported version {}", self.version)));
        }
        let expected = param_shapes(&self.config)?;
        if expected.len() != self.params.len() {
            return Err(ModelError::Checkpoint(format!(
                "config expects {} parameters, checkpoint has {}",
                expected.len(),
                self.params.len()
            )));
        }
        let mut store = ParamStore::new();
        for ((name, shape), rec) in expected.iter().zip(&self.params) {
            if *name != rec.name || *shape != rec.shape {
                return Err(ModelError::Checkpoint(format!(
                    "parameter `{}` {:?} does not match expected `{name}` {shape:?}",
                    rec.name, rec.shape
                )));
            }
            let t = Tensor::new(rec.shape.clone(), rec.values.clone())
                .map_err(|e| ModelError::Checkpoint(format!("parameter `{name}`: {e}")))?;
            t.check_finite(name)?;
            store.insert(name, t)?;
        }
        Ok(Model::from_parts(self.config.clone(), store))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        serde_json::from_str(s).map_err(|e| ModelError::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json()).map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let raw =
            std::fs::read_to_string(path).map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&raw)
    }
}
