use bookrating_core::classifier::Classifier;
use bookrating_core::features::LabelMode;
use bookrating_core::recommender::FactorModel;
use bookrating_core::Error;
use serde::{Deserialize, Serialize};

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

/// Contents of `model.json` in a training output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    Classifier { label_mode: LabelMode, classifier: Classifier },
    Factor { factor: FactorModel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub model: ModelBody,
}

impl ModelArtifact {
    pub fn new(model: ModelBody) -> Self {
        ModelArtifact {
            format_version: ARTIFACT_FORMAT_VERSION,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String, Error> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, Error> {
        let value: serde_json::Value = serde_json::from_str(s).map_err(|e| Error::CorruptArtifact(format!("model: {e}")))?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::CorruptArtifact("model: missing format_version".into()))?;
        if found != ARTIFACT_FORMAT_VERSION as u64 {
            return Err(Error::VersionMismatch {
                found: found as u32,
                expected: ARTIFACT_FORMAT_VERSION,
            });
        }
        let artifact: ModelArtifact = serde_json::from_value(value).map_err(|e| Error::CorruptArtifact(format!("model: {e}")))?;
        if let ModelBody::Factor { factor } = &artifact.model {
            // re-run the factor model's own consistency checks
            FactorModel::from_json(&factor.to_json()?)?;
        }
        Ok(artifact)
    }
}
