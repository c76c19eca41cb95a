use bookrating_core::recommender::{evaluate_holdout, recommend_top_n, FactorModel, HoldoutReport};
use bookrating_core::selection::report::{render_regression_table, render_table};
use serde::{Deserialize, Serialize};

use crate::artifact::{ModelArtifact, ModelBody};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::require_complete;
use crate::prepare::load_prepared;
use crate::train::{als_display, interactions_from, R2_NOTE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub rank: usize,
    pub title: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendOutput {
    pub user_id: String,
    pub cold_start: bool,
    pub items: Vec<Recommendation>,
    pub evaluation: Option<HoldoutReport>,
}

pub fn load_factor_model(cfg: &RunConfig) -> Result<FactorModel, CliError> {
    let dir = cfg.train_dir();
    require_complete(&dir, "trained recommender")?;
    let text = std::fs::read_to_string(dir.join("model.json"))?;
    match ModelArtifact::from_json(&text)?.model {
        ModelBody::Factor { factor } => Ok(factor),
        ModelBody::Classifier { .. } => Err(CliError::Config(format!("{} does not hold a recommender", dir.display()))),
    }
}

/// Top-`n` titles for a user; unknown users get the most-rated titles.
pub fn cmd_recommend(cfg: &RunConfig, user_id: &str, n: usize, include_seen: bool, evaluate: bool) -> Result<RecommendOutput, CliError> {
    cfg.validate()?;
    if cfg.model.classifier().is_some() {
        return Err(CliError::Config("recommend needs --model als or --model als_implicit".into()));
    }
    if n == 0 {
        return Err(CliError::Config("n must be at least 1".into()));
    }
    let model = load_factor_model(cfg)?;
    let prepared = load_prepared(cfg)?;
    let (data, _) = interactions_from(&prepared)?;
    if data.item_ids != model.item_ids || data.user_ids != model.user_ids {
        return Err(bookrating_core::Error::data("prepared data no longer matches the trained model; retrain").into());
    }
    let recs = recommend_top_n(&model, data.user(user_id), n, !include_seen, &data)?;
    let items = recs
        .items
        .iter()
        .enumerate()
        .map(|(k, (item, score))| Recommendation {
            rank: k + 1,
            title: model.item_ids[*item].clone(),
            score: *score,
        })
        .collect();
    let evaluation = if evaluate {
        Some(evaluate_holdout(&data, &cfg.als_config(), cfg.seed)?.1)
    } else {
        None
    };
    Ok(RecommendOutput {
        user_id: user_id.to_string(),
        cold_start: recs.cold_start,
        items,
        evaluation,
    })
}

pub fn render_recommendations(cfg: &RunConfig, r: &RecommendOutput) -> String {
    let mut s = if r.cold_start {
        format!("user {} is unknown: cold start, most-rated titles (score = rating count)\n", r.user_id)
    } else {
        format!("top {} titles for user {}\n", r.items.len(), r.user_id)
    };
    let rows: Vec<Vec<String>> = r
        .items
        .iter()
        .map(|i| vec![i.rank.to_string(), i.title.clone(), format!("{:.4}", i.score)])
        .collect();
    s.push_str(&render_table(&["Rank", "Title", "Score"], &rows));
    if let Some(e) = &r.evaluation {
        s.push('\n');
        s.push_str(&render_regression_table(&[(als_display(cfg.model).to_string(), &e.metrics)]));
        s.push_str(R2_NOTE);
        s.push('\n');
    }
    s
}
