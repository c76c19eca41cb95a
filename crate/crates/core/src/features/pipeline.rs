//! Fit/transform stages composed into a pipeline.
//!
//! Every stage reads existing columns and appends one output column. The
//! fitted [`PipelineModel`] is pure: the same input table always yields the
//! same output table.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assemble::{assemble_checked, BlockMap, Part};
use super::label::{binarize_label, multiclass_label};
use super::scale::{fit_minmax, MinMaxState};
use super::text::{default_stopwords, fit_count_vectorizer, idf_weight, remove_stopwords, tokenize, transform_counts, transform_tfidf, Vocabulary};
use crate::error::{Error, Result};
use crate::table::{ColumnData, DType, Field, Table};
use crate::vector::FeatureVector;

pub const PIPELINE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Five classes, rating `r` → class `r - 1`.
    Multiclass,
    /// Ratings 1–3 → 0, 4–5 → 1.
    Binary,
}

impl LabelMode {
    pub fn num_classes(self) -> usize {
        match self {
            LabelMode::Multiclass => 5,
            LabelMode::Binary => 2,
        }
    }
}

/// Unfitted stage description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum StageSpec {
    Tokenize {
        input: String,
        output: String,
    },
    StopWords {
        input: String,
        output: String,
        /// `None` selects the shipped English list.
        #[serde(default)]
        stopwords: Option<Vec<String>>,
    },
    CountVectorizer {
        input: String,
        output: String,
        vocab_size: usize,
        min_df: u64,
    },
    Idf {
        input: String,
        output: String,
    },
    MinMax {
        input: String,
        output: String,
    },
    Assemble {
        inputs: Vec<String>,
        output: String,
    },
    Label {
        input: String,
        output: String,
        mode: LabelMode,
    },
}

/// A fitted stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum FittedStage {
    Tokenize {
        input: String,
        output: String,
    },
    StopWords {
        input: String,
        output: String,
        stopwords: Vec<String>,
    },
    CountVectorizer {
        input: String,
        output: String,
        vocabulary: Vocabulary,
    },
    Idf {
        input: String,
        output: String,
        corpus_size: u64,
        doc_freq: Vec<u64>,
        weights: Vec<f64>,
    },
    MinMax {
        input: String,
        output: String,
        state: MinMaxState,
    },
    Assemble {
        inputs: Vec<String>,
        output: String,
        layout: BlockMap,
    },
    Label {
        input: String,
        output: String,
        mode: LabelMode,
    },
}

impl StageSpec {
    fn fit(&self, t: &Table) -> Result<FittedStage> {
        Ok(match self {
            StageSpec::Tokenize { input, output } => FittedStage::Tokenize {
                input: input.clone(),
                output: output.clone(),
            },
            StageSpec::StopWords {
                input,
                output,
                stopwords,
            } => {
                let mut words: Vec<String> = match stopwords {
                    Some(w) => w.iter().map(|s| s.to_lowercase()).collect(),
                    None => default_stopwords().into_iter().collect(),
                };
                words.sort();
                words.dedup();
                FittedStage::StopWords {
                    input: input.clone(),
                    output: output.clone(),
                    stopwords: words,
                }
            }
            StageSpec::CountVectorizer {
                input,
                output,
                vocab_size,
                min_df,
            } => {
                let docs: Vec<&[String]> = t
                    .tokens(input)?
                    .iter()
                    .map(|d| d.as_deref().unwrap_or(&[]))
                    .collect();
                FittedStage::CountVectorizer {
                    input: input.clone(),
                    output: output.clone(),
                    vocabulary: fit_count_vectorizer(&docs, *vocab_size, *min_df)?,
                }
            }
            StageSpec::Idf { input, output } => {
                let col = t.vectors(input)?;
                let dim = col
                    .iter()
                    .flatten()
                    .map(FeatureVector::dim)
                    .next()
                    .ok_or_else(|| Error::data("cannot fit IDF on a column without vectors"))?;
                let mut doc_freq = vec![0u64; dim];
                let mut corpus_size = 0u64;
                for v in col.iter().flatten() {
                    if v.dim() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            actual: v.dim(),
                        });
                    }
                    corpus_size += 1;
                    for (i, _) in v.iter_nonzero() {
                        doc_freq[i] += 1;
                    }
                }
                let weights = doc_freq.iter().map(|df| idf_weight(corpus_size, *df)).collect();
                FittedStage::Idf {
                    input: input.clone(),
                    output: output.clone(),
                    corpus_size,
                    doc_freq,
                    weights,
                }
            }
            StageSpec::MinMax { input, output } => FittedStage::MinMax {
                input: input.clone(),
                output: output.clone(),
                state: fit_minmax(t, input)?,
            },
            StageSpec::Assemble { inputs, output } => {
                if t.row_count() == 0 {
                    return Err(Error::data("cannot fit an assembler on an empty table"));
                }
                let mut named = Vec::with_capacity(inputs.len());
                for name in inputs {
                    let dim = match t.column(name)? {
                        ColumnData::Vector(v) => v[0]
                            .as_ref()
                            .map(FeatureVector::dim)
                            .ok_or_else(|| Error::data(format!("null vector in column {name:?}")))?,
                        c if c.dtype().is_numeric() => 1,
                        c => {
                            return Err(Error::ColumnType {
                                column: name.clone(),
                                expected: "numeric or vector".into(),
                                actual: c.dtype().to_string(),
                            })
                        }
                    };
                    named.push((name.as_str(), dim));
                }
                FittedStage::Assemble {
                    inputs: inputs.clone(),
                    output: output.clone(),
                    layout: BlockMap::from_dims(&named),
                }
            }
            StageSpec::Label { input, output, mode } => FittedStage::Label {
                input: input.clone(),
                output: output.clone(),
                mode: *mode,
            },
        })
    }
}

impl FittedStage {
    pub fn output(&self) -> &str {
        match self {
            FittedStage::Tokenize { output, .. }
            | FittedStage::StopWords { output, .. }
            | FittedStage::CountVectorizer { output, .. }
            | FittedStage::Idf { output, .. }
            | FittedStage::MinMax { output, .. }
            | FittedStage::Assemble { output, .. }
            | FittedStage::Label { output, .. } => output,
        }
    }

    pub fn transform(&self, t: &Table) -> Result<Table> {
        match self {
            FittedStage::Tokenize { input, output } => {
                let col = t.text(input)?;
                let toks = col.par_iter().map(|s| Some(tokenize(s.as_deref()))).collect();
                t.with_column(Field::new(output, DType::Tokens, false), ColumnData::Tokens(toks))
            }
            FittedStage::StopWords {
                input,
                output,
                stopwords,
            } => {
                let stop: HashSet<String> = stopwords.iter().cloned().collect();
                let col = t.tokens(input)?;
                let out = col
                    .par_iter()
                    .map(|d| Some(remove_stopwords(d.as_deref().unwrap_or(&[]), &stop)))
                    .collect();
                t.with_column(Field::new(output, DType::Tokens, false), ColumnData::Tokens(out))
            }
            FittedStage::CountVectorizer {
                input,
                output,
                vocabulary,
            } => {
                let col = t.tokens(input)?;
                let out = col
                    .par_iter()
                    .map(|d| Some(transform_counts(vocabulary, d.as_deref().unwrap_or(&[]))))
                    .collect();
                t.with_column(Field::new(output, DType::Vector, false), ColumnData::Vector(out))
            }
            FittedStage::Idf {
                input,
                output,
                weights,
                ..
            } => {
                let col = t.vectors(input)?;
                let out = col
                    .par_iter()
                    .map(|v| v.as_ref().map(|v| transform_tfidf(v, weights)).transpose())
                    .collect::<Result<Vec<_>>>()?;
                t.with_column(Field::new(output, DType::Vector, true), ColumnData::Vector(out))
            }
            FittedStage::MinMax {
                input,
                output,
                state,
            } => {
                let col = t.column(input)?;
                if !col.dtype().is_numeric() {
                    return Err(Error::ColumnType {
                        column: input.clone(),
                        expected: "numeric".into(),
                        actual: col.dtype().to_string(),
                    });
                }
                let out = (0..col.len()).map(|r| col.numeric(r).map(|x| state.transform(x))).collect();
                t.with_column(Field::new(output, DType::Float64, true), ColumnData::Float64(out))
            }
            FittedStage::Assemble {
                inputs,
                output,
                layout,
            } => {
                let cols = inputs.iter().map(|n| t.column(n)).collect::<Result<Vec<_>>>()?;
                let out = (0..t.row_count())
                    .into_par_iter()
                    .map(|r| {
                        let parts = cols
                            .iter()
                            .zip(inputs)
                            .map(|(c, name)| match c {
                                ColumnData::Vector(v) => v[r]
                                    .as_ref()
                                    .map(Part::Vector)
                                    .ok_or_else(|| Error::data(format!("null vector in column {name:?}"))),
                                c if c.dtype().is_numeric() => Ok(Part::Scalar(c.numeric(r))),
                                c => Err(Error::ColumnType {
                                    column: name.clone(),
                                    expected: "numeric or vector".into(),
                                    actual: c.dtype().to_string(),
                                }),
                            })
                            .collect::<Result<Vec<_>>>()?;
                        assemble_checked(&parts, layout).map(Some)
                    })
                    .collect::<Result<Vec<_>>>()?;
                t.with_column(Field::new(output, DType::Vector, false), ColumnData::Vector(out))
            }
            FittedStage::Label { input, output, mode } => {
                let col = t.int64(input)?;
                let out = col
                    .iter()
                    .map(|s| {
                        let s = s.ok_or_else(|| Error::data(format!("null rating in column {input:?}")))?;
                        let label = match mode {
                            LabelMode::Binary => binarize_label(s)?,
                            LabelMode::Multiclass => multiclass_label(s)?,
                        };
                        Ok(Some(label as i64))
                    })
                    .collect::<Result<Vec<_>>>()?;
                t.with_column(Field::new(output, DType::Int64, false), ColumnData::Int64(out))
            }
        }
    }
}

/// Ordered sequence of fitted stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineModel {
    pub format_version: u32,
    pub stages: Vec<FittedStage>,
}

impl Default for PipelineModel {
    fn default() -> Self {
        PipelineModel {
            format_version: PIPELINE_FORMAT_VERSION,
            stages: Vec::new(),
        }
    }
}

impl PipelineModel {
    pub fn transform(&self, t: &Table) -> Result<Table> {
        let mut cur = t.clone();
        for (index, stage) in self.stages.iter().enumerate() {
            cur = stage.transform(&cur).map_err(|e| Error::Stage {
                index,
                source: Box::new(e),
            })?;
        }
        Ok(cur)
    }

    /// Layout of the last assembler stage, if any.
    pub fn block_map(&self) -> Option<&BlockMap> {
        self.stages.iter().rev().find_map(|s| match s {
            FittedStage::Assemble { layout, .. } => Some(layout),
            _ => None,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::CorruptArtifact(format!("pipeline: {e}")))?;
        let found = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::CorruptArtifact("pipeline: missing format_version".into()))?;
        if found != PIPELINE_FORMAT_VERSION as u64 {
            return Err(Error::VersionMismatch {
                found: found as u32,
                expected: PIPELINE_FORMAT_VERSION,
            });
        }
        serde_json::from_value(value).map_err(|e| Error::CorruptArtifact(format!("pipeline: {e}")))
    }
}

/// Fits each stage on the training table as transformed by the stages
/// before it. Returns the fitted model and the fully transformed table.
pub fn pipeline_fit_transform(stages: &[StageSpec], train: &Table) -> Result<(PipelineModel, Table)> {
    let mut model = PipelineModel::default();
    let mut cur = train.clone();
    for (index, spec) in stages.iter().enumerate() {
        let wrap = |e| Error::Stage {
            index,
            source: Box::new(e),
        };
        let fitted = spec.fit(&cur).map_err(wrap)?;
        cur = fitted.transform(&cur).map_err(wrap)?;
        model.stages.push(fitted);
    }
    Ok((model, cur))
}
