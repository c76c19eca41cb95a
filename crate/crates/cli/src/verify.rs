use std::path::Path;

use bookrating_core::features::PipelineModel;
use bookrating_core::recommender::recommend_top_n;
use bookrating_core::recommender::InteractionSet;
use bookrating_core::table::load_table;
use bookrating_core::FeatureVector;
use serde::{Deserialize, Serialize};

use crate::artifact::{ModelArtifact, ModelBody};
use crate::error::CliError;
use crate::output::require_complete;
use crate::train::{ProbeOutputs, ProbeRecommendations, FEATURES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub kind: String,
    pub probes: usize,
}

/// Bitwise equality, so that `-0.0` and `0.0` or distinct NaNs differ.
pub fn bitwise_equal(a: &FeatureVector, b: &FeatureVector) -> bool {
    match (a, b) {
        (FeatureVector::Dense { values: x }, FeatureVector::Dense { values: y }) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
        }
        (
            FeatureVector::Sparse { dim: d1, indices: i1, values: v1 },
            FeatureVector::Sparse { dim: d2, indices: i2, values: v2 },
        ) => d1 == d2 && i1 == i2 && v1.len() == v2.len() && v1.iter().zip(v2).all(|(p, q)| p.to_bits() == q.to_bits()),
        _ => false,
    }
}

fn read(dir: &Path, name: &str) -> Result<String, CliError> {
    Ok(std::fs::read_to_string(dir.join(name))?)
}

fn round_trip(artifact: &ModelArtifact) -> Result<ModelArtifact, CliError> {
    let again = ModelArtifact::from_json(&artifact.to_json()?)?;
    if &again != artifact {
        return Err(CliError::Verify("model changed across a second serialize/deserialize".into()));
    }
    Ok(again)
}

/// Reloads a training output directory and replays its stored probes.
pub fn cmd_verify(dir: &Path) -> Result<VerifyReport, CliError> {
    require_complete(dir, "model directory")?;
    let artifact = ModelArtifact::from_json(&read(dir, "model.json")?)?;
    let artifact = round_trip(&artifact)?;
    match artifact.model {
        ModelBody::Classifier { classifier, .. } => {
            let pipeline = PipelineModel::from_json(&read(dir, "pipeline.json")?)?;
            if PipelineModel::from_json(&pipeline.to_json()?)? != pipeline {
                return Err(CliError::Verify("pipeline changed across a second serialize/deserialize".into()));
            }
            let probes = load_table(dir.join("probes"))?;
            let stored: ProbeOutputs = serde_json::from_str(&read(dir, "probe_outputs.json")?)?;
            let transformed = pipeline.transform(&probes)?;
            let features = transformed.vectors(FEATURES)?;
            if features.len() != stored.features.len() || stored.predictions.len() != stored.features.len() {
                return Err(CliError::Verify("probe count differs from stored outputs".into()));
            }
            for (row, (got, want)) in features.iter().zip(&stored.features).enumerate() {
                let got = got.as_ref().ok_or_else(|| CliError::Verify(format!("probe {row}: null features")))?;
                if !bitwise_equal(got, want) {
                    return Err(CliError::Verify(format!("probe {row}: features differ after reload")));
                }
                let pred = classifier.predict(got)?;
                if pred != stored.predictions[row] {
                    return Err(CliError::Verify(format!(
                        "probe {row}: prediction {pred} != stored {}",
                        stored.predictions[row]
                    )));
                }
            }
            Ok(VerifyReport {
                kind: "classifier".into(),
                probes: features.len(),
            })
        }
        ModelBody::Factor { factor } => {
            let stored: ProbeRecommendations = serde_json::from_str(&read(dir, "probe_recommendations.json")?)?;
            // exclusion is off for probes, so no interaction data is needed
            let empty = InteractionSet::from_indexed(0, 0, &[])?;
            for (u, want) in stored.users.iter().zip(&stored.items) {
                let got = recommend_top_n(&factor, Some(*u), stored.n, false, &empty)?.items;
                let same = got.len() == want.len()
                    && got.iter().zip(want).all(|(a, b)| a.0 == b.0 && a.1.to_bits() == b.1.to_bits());
                if !same {
                    return Err(CliError::Verify(format!("user {u}: top-{} list differs after reload", stored.n)));
                }
            }
            Ok(VerifyReport {
                kind: "factor".into(),
                probes: stored.users.len(),
            })
        }
    }
}
