//! Feature engineering stages.

mod assemble;
mod label;
mod pipeline;
mod scale;
mod text;

pub use self::assemble::{assemble, assemble_checked, Block, BlockMap, Part};
pub use self::label::{binarize_label, multiclass_label};
pub use self::pipeline::{pipeline_fit_transform, FittedStage, LabelMode, PipelineModel, StageSpec, PIPELINE_FORMAT_VERSION};
pub use self::scale::{fit_minmax, transform_minmax, MinMaxState};
pub use self::text::{
    default_stopwords, fit_count_vectorizer, idf_weight, idf_weights, remove_stopwords, tokenize, transform_counts,
    transform_tfidf, Vocabulary,
};
