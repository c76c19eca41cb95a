use std::collections::BTreeMap;

use bookrating_core::rng;
use bookrating_core::table::{
    books_schema, join_inner, load_table, parse_csv, ratings_schema, save_table, ColumnData, DType, Field, IngestOptions, ParseReport,
    Schema, Table,
};
use bookrating_core::Error;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{require_complete, OutputDir};

/// Columns of the prepared table.
pub const PREPARED_COLUMNS: [&str; 9] = ["title", "user_id", "price", "r_score", "r_time", "r_summary", "r_review", "authors", "categories"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub records: usize,
    pub malformed: usize,
    pub nulled_cells: usize,
}

impl From<&ParseReport> for IngestSummary {
    fn from(r: &ParseReport) -> Self {
        IngestSummary {
            records: r.records,
            malformed: r.malformed,
            nulled_cells: r.nulled_cells,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareSummary {
    pub config: RunConfig,
    pub ratings: IngestSummary,
    pub books: IngestSummary,
    /// Rows produced by the title join; every one is either kept or dropped.
    pub rows_in: usize,
    pub rows_kept: usize,
    pub drops: BTreeMap<String, usize>,
    /// Rows written after optional sampling.
    pub rows_out: usize,
    /// Rows per star rating, 1 through 5, after sampling.
    pub score_counts: [usize; 5],
}

fn drop_reason(price: Option<&str>, score: Option<i64>, summary: Option<&str>, time: Option<i64>) -> Result<f64, &'static str> {
    let price = match price.map(str::trim) {
        None | Some("") => return Err("missing_price"),
        Some(p) => match p.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => v,
            _ => return Err("unparsable_price"),
        },
    };
    match score {
        None => return Err("missing_score"),
        Some(s) if !(1..=5).contains(&s) => return Err("invalid_score"),
        _ => {}
    }
    if summary.map_or(true, |s| s.trim().is_empty()) {
        return Err("missing_summary");
    }
    if time.is_none() {
        return Err("missing_time");
    }
    Ok(price)
}

/// Joins, cleans and optionally samples the two raw files.
pub fn prepare_table(ratings: &Table, books: &Table, sample_rows: Option<usize>, seed: u64) -> Result<(Table, BTreeMap<String, usize>, usize), CliError> {
    let joined = join_inner(ratings, books, "title", "title")?.table;
    if joined.row_count() == 0 {
        return Err(Error::data("joining ratings and books on title produced no rows").into());
    }
    let price = joined.text("price")?;
    let score = joined.int64("r_score")?;
    let summary = joined.text("r_summary")?;
    let time = joined.int64("r_time")?;

    let mut drops: BTreeMap<String, usize> = ["missing_price", "unparsable_price", "missing_score", "invalid_score", "missing_summary", "missing_time"]
        .iter()
        .map(|k| (k.to_string(), 0))
        .collect();
    let mut keep = Vec::new();
    let mut prices = Vec::new();
    for row in 0..joined.row_count() {
        match drop_reason(price[row].as_deref(), score[row], summary[row].as_deref(), time[row]) {
            Ok(p) => {
                keep.push(row);
                prices.push(Some(p));
            }
            Err(reason) => *drops.get_mut(reason).expect("known reason") += 1,
        }
    }
    if keep.is_empty() {
        return Err(Error::data("every joined row was dropped during cleaning").into());
    }
    let rows_kept = keep.len();

    let mut positions: Vec<usize> = (0..keep.len()).collect();
    if let Some(n) = sample_rows {
        if n < keep.len() {
            positions = sample(&mut rng::seeded(seed), keep.len(), n).into_vec();
            positions.sort_unstable();
        }
    }
    let rows: Vec<usize> = positions.iter().map(|p| keep[*p]).collect();
    let prices: Vec<Option<f64>> = positions.iter().map(|p| prices[*p]).collect();

    let base = joined.take(&rows);
    let mut fields = Vec::new();
    let mut columns = Vec::new();
    for name in PREPARED_COLUMNS {
        if name == "price" {
            fields.push(Field::new("price", DType::Float64, false));
            columns.push(ColumnData::Float64(prices.clone()));
        } else {
            let field = base.schema().field(name).ok_or_else(|| Error::MissingColumn(name.into()))?;
            fields.push(Field::new(name, field.dtype, field.nullable));
            columns.push(base.column(name)?.clone());
        }
    }
    let table = Table::new(Schema::new(fields)?, columns)?;
    Ok((table, drops, rows_kept))
}

pub fn score_counts(t: &Table) -> Result<[usize; 5], CliError> {
    let mut counts = [0usize; 5];
    for s in t.int64("r_score")?.iter().flatten() {
        if (1..=5).contains(s) {
            counts[*s as usize - 1] += 1;
        }
    }
    Ok(counts)
}

pub fn cmd_prepare(cfg: &RunConfig) -> Result<PrepareSummary, CliError> {
    let ratings_path = cfg
        .ratings_path
        .as_ref()
        .ok_or_else(|| CliError::Config("ratings_path is required for prepare".into()))?;
    let books_path = cfg
        .books_path
        .as_ref()
        .ok_or_else(|| CliError::Config("books_path is required for prepare".into()))?;
    let opts = IngestOptions::default();
    let ratings = parse_csv(ratings_path, &ratings_schema(), &opts)?;
    let books = parse_csv(books_path, &books_schema(), &opts)?;

    let (table, drops, rows_kept) = prepare_table(&ratings.table, &books.table, cfg.sample_rows, cfg.seed)?;
    let rows_in = rows_kept + drops.values().sum::<usize>();

    let out = OutputDir::begin(cfg.prepared_dir())?;
    save_table(&table, out.file("table"))?;
    let summary = PrepareSummary {
        config: cfg.clone(),
        ratings: (&ratings).into(),
        books: (&books).into(),
        rows_in,
        rows_kept,
        drops,
        rows_out: table.row_count(),
        score_counts: score_counts(&table)?,
    };
    out.write_json("summary.json", &summary)?;
    out.write_text("summary.txt", &render_summary(&summary))?;
    out.finish()?;
    Ok(summary)
}

fn render_summary(s: &PrepareSummary) -> String {
    let mut t = String::new();
    t.push_str(&format!(
        "ratings records: {} ({} malformed, {} cells nulled)\n",
        s.ratings.records, s.ratings.malformed, s.ratings.nulled_cells
    ));
    t.push_str(&format!(
        "books records:   {} ({} malformed, {} cells nulled)\n",
        s.books.records, s.books.malformed, s.books.nulled_cells
    ));
    t.push_str(&format!("joined rows:     {}\n", s.rows_in));
    for (reason, n) in &s.drops {
        t.push_str(&format!("  dropped {reason}: {n}\n"));
    }
    t.push_str(&format!("kept rows:       {}\n", s.rows_kept));
    t.push_str(&format!("written rows:    {}\n", s.rows_out));
    t.push_str("score counts (1..5): ");
    t.push_str(&s.score_counts.iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
    t.push('\n');
    t
}

/// Loads the prepared table written by `prepare`.
pub fn load_prepared(cfg: &RunConfig) -> Result<Table, CliError> {
    let dir = cfg.prepared_dir();
    require_complete(&dir, "prepared data")?;
    Ok(load_table(dir.join("table"))?)
}
