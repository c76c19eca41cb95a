//! Seeded synthetic review data in the layout of the public Kaggle files.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use bookrating_core::rng;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ScoreProfile {
    /// Roughly 60/20/8/5/7 percent for 5..1 stars.
    Skewed,
    /// Every review is five stars.
    AllFive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub rows: usize,
    pub books: Option<usize>,
    pub users: Option<usize>,
    /// Probability that a summary is drawn from the score's word list.
    pub correlation: f64,
    pub profile: ScoreProfile,
    pub missing_price_fraction: f64,
    /// Share of extra records with a wrong field count.
    pub malformed_fraction: f64,
    pub seed: u64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            rows: 20_000,
            books: None,
            users: None,
            correlation: 0.6,
            profile: ScoreProfile::Skewed,
            missing_price_fraction: 0.03,
            malformed_fraction: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub ratings_rows: usize,
    pub books_rows: usize,
    pub malformed_rows: usize,
    /// Well-formed ratings per score, 1 through 5.
    pub score_counts: [usize; 5],
    pub missing_price: usize,
}

const STRONG_POS: &[&str] = &["amazing", "masterpiece", "brilliant", "unforgettable", "perfect", "stunning"];
const POS: &[&str] = &["great", "good", "enjoyable", "loved", "wonderful", "recommended", "favorite", "excellent", "fun", "charming"];
const MIXED: &[&str] = &["okay", "average", "decent", "uneven", "fine", "mediocre", "predictable"];
const NEG: &[&str] = &["disappointing", "boring", "dull", "weak", "tedious", "slow"];
const STRONG_NEG: &[&str] = &["terrible", "awful", "waste", "worst", "unreadable", "dreadful"];
const NEUTRAL: &[&str] = &["book", "story", "read", "novel", "author", "chapter", "edition", "series", "characters", "plot", "pages", "writing"];
const FILLER: &[&str] = &["the", "a", "this", "is", "of", "and", "it", "very", "was"];
const CATEGORIES: &[&str] = &["['Fiction']", "['History']", "['Biography & Autobiography']", "['Religion']", "['Juvenile Fiction']", "['Science']"];

fn pick<'a>(r: &mut impl Rng, words: &[&'a str]) -> &'a str {
    words.choose(r).copied().unwrap_or("")
}

fn draw_score(r: &mut impl Rng, profile: ScoreProfile) -> i64 {
    if profile == ScoreProfile::AllFive {
        return 5;
    }
    match r.gen_range(0..100) {
        0..=59 => 5,
        60..=79 => 4,
        80..=87 => 3,
        88..=92 => 2,
        _ => 1,
    }
}

fn summary(r: &mut impl Rng, score: i64, correlation: f64) -> String {
    let mut words: Vec<&str> = Vec::new();
    if r.gen_bool(correlation.clamp(0.0, 1.0)) {
        for _ in 0..2 {
            let list = match score {
                5 if r.gen_bool(0.3) => STRONG_POS,
                5 => POS,
                4 if r.gen_bool(0.15) => MIXED,
                4 => POS,
                3 if r.gen_bool(0.75) => MIXED,
                3 if r.gen_bool(0.5) => POS,
                3 => NEG,
                2 if r.gen_bool(0.75) => NEG,
                2 => MIXED,
                _ if r.gen_bool(0.5) => STRONG_NEG,
                _ => NEG,
            };
            words.push(pick(r, list));
        }
        words.push(pick(r, NEUTRAL));
    } else {
        for _ in 0..r.gen_range(2..=3) {
            words.push(pick(r, NEUTRAL));
        }
    }
    for _ in 0..r.gen_range(1..=2) {
        words.push(pick(r, FILLER));
    }
    words.shuffle(r);
    let mut s = words.join(" ");
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s
}

fn title(k: usize) -> String {
    match k % 7 {
        0 => format!("Collected Essays, Volume {k}"),
        3 => format!("The \"Quiet\" Reader {k}"),
        _ => format!("Book Title {k}"),
    }
}

fn skewed_index(r: &mut impl Rng, n: usize) -> usize {
    let u: f64 = r.gen();
    ((u * u) * n as f64) as usize % n.max(1)
}

/// Writes `books_data.csv`-style and `Books_rating.csv`-style files.
pub fn generate(cfg: &GenerateConfig, ratings_path: &Path, books_path: &Path) -> Result<GenerateSummary, CliError> {
    if cfg.rows == 0 {
        return Err(CliError::Config("rows must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.correlation) || !(0.0..1.0).contains(&cfg.malformed_fraction) {
        return Err(CliError::Config("correlation must lie in [0, 1] and malformed_fraction in [0, 1)".into()));
    }
    let mut r = rng::seeded(cfg.seed);
    let n_books = cfg.books.unwrap_or((cfg.rows / 25).max(20));
    let n_users = cfg.users.unwrap_or((cfg.rows / 6).max(10));

    let mut books = csv::Writer::from_writer(BufWriter::new(File::create(books_path)?));
    books.write_record([
        "Title", "description", "authors", "image", "previewLink", "publisher", "publishedDate", "infoLink", "categories", "ratingsCount",
    ])
    .map_err(csv_err)?;
    for k in 0..n_books {
        let year = r.gen_range(1950..2013).to_string();
        let ratings_count = if r.gen_bool(0.8) { r.gen_range(1..500).to_string() } else { String::new() };
        books
            .write_record([
                title(k).as_str(),
                &format!("A {} about {}, told in {} parts.", pick(&mut r, NEUTRAL), pick(&mut r, NEUTRAL), r.gen_range(2..9)),
                &format!("['Author {}']", k % 97),
                &format!("http://books.example/{k}.jpg"),
                &format!("http://books.example/preview/{k}"),
                &format!("Publisher {}", k % 13),
                &year,
                &format!("http://books.example/info/{k}"),
                pick(&mut r, CATEGORIES),
                &ratings_count,
            ])
            .map_err(csv_err)?;
    }
    books.flush()?;

    let malformed_rows = (cfg.rows as f64 * cfg.malformed_fraction).round() as usize;
    let mut bad_at: Vec<usize> = (0..cfg.rows + malformed_rows).collect();
    bad_at.shuffle(&mut r);
    let mut is_bad = vec![false; cfg.rows + malformed_rows];
    for &k in &bad_at[..malformed_rows] {
        is_bad[k] = true;
    }

    let mut out = csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(BufWriter::new(File::create(ratings_path)?));
    out.write_record([
        "Id", "Title", "Price", "User_id", "profileName", "review/helpfulness", "review/score", "review/time", "review/summary", "review/text",
    ])
    .map_err(csv_err)?;
    let mut score_counts = [0usize; 5];
    let mut missing_price = 0;
    for bad in is_bad {
        if bad {
            out.write_record(["broken", "record, with too few", "fields"]).map_err(csv_err)?;
            continue;
        }
        let book = skewed_index(&mut r, n_books);
        let user = skewed_index(&mut r, n_users);
        let score = draw_score(&mut r, cfg.profile);
        score_counts[score as usize - 1] += 1;
        let price = if r.gen_bool(cfg.missing_price_fraction) {
            missing_price += 1;
            String::new()
        } else {
            format!("{:.2}", r.gen_range(4.99..39.99))
        };
        let time = 946_684_800i64 + r.gen_range(0..410_000_000i64);
        let helpful_total = r.gen_range(0..20);
        let text = if r.gen_bool(0.1) {
            format!("{}\nSecond paragraph, with \"quotes\".", summary(&mut r, score, cfg.correlation))
        } else {
            format!("{}. {}", summary(&mut r, score, cfg.correlation), pick(&mut r, NEUTRAL))
        };
        out.write_record([
            format!("{:010}", 1_000_000 + book),
            title(book),
            price,
            format!("U{user:07}"),
            format!("Reader {user}"),
            format!("{}/{}", r.gen_range(0..=helpful_total), helpful_total),
            format!("{score}.0"),
            time.to_string(),
            summary(&mut r, score, cfg.correlation),
            text,
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;

    Ok(GenerateSummary {
        ratings_rows: cfg.rows,
        books_rows: n_books,
        malformed_rows,
        score_counts,
        missing_price,
    })
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Core(bookrating_core::Error::Csv(e))
}

