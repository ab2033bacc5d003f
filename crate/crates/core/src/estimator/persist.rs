//! Versioned JSON model documents.
//!
//! ```text
//! {
//!   "model_version": 1,
//!   "kind": "global" | "retrospective" | "local",
//!   "covariates": [...], "time_scale": ..., "grids": {...}, "encoders": {...},
//!   "options": {...}, "learner": {...},
//!   "learners": { "pi": ..., "f1": ..., "f0": ..., "g1": ..., "g0": ... },
//!   "tau": ...            (retrospective only)
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GlobalStackFit, LocalStackFit, RetrospectiveFit};
use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelDocument {
    Global(GlobalStackFit),
    Retrospective(RetrospectiveFit),
    Local(LocalStackFit),
}

#[derive(Serialize)]
struct Versioned<'a> {
    model_version: u32,
    #[serde(flatten)]
    model: &'a ModelDocument,
}

impl ModelDocument {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Versioned {
            model_version: MODEL_VERSION,
            model: self,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::InvalidArgument("model document must be a JSON object".into()))?;
        let version = obj
            .remove("model_version")
            .ok_or_else(|| Error::InvalidArgument("model document lacks `model_version`".into()))?;
        let version = version
            .as_u64()
            .ok_or_else(|| Error::InvalidArgument("`model_version` must be an integer".into()))?;
        if version != u64::from(MODEL_VERSION) {
            return Err(Error::ModelVersion(u32::try_from(version).unwrap_or(u32::MAX)));
        }
        Ok(serde_json::from_value(value)?)
    }
}

pub fn save_model(model: &ModelDocument, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_json()? + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelDocument> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ModelDocument::from_json(&text)
}
