//! Text featurization: tokenizer, stop-word filter, count vectorizer, IDF.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::FeatureVector;

static ENGLISH_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// The shipped English stop-word list (181 lowercase words, version 1).
pub fn default_stopwords() -> HashSet<String> {
    ENGLISH_STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Lowercases and splits on whitespace runs. Punctuation stays inside
/// tokens. Null text gives no tokens.
pub fn tokenize(text: Option<&str>) -> Vec<String> {
    match text {
        Some(t) => t.split_whitespace().map(str::to_lowercase).collect(),
        None => Vec::new(),
    }
}

pub fn remove_stopwords(tokens: &[String], stoplist: &HashSet<String>) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !stoplist.contains(t.as_str()))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    doc_freq: Vec<u64>,
    corpus_size: u64,
}

/// A fitted term vocabulary with document frequencies.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u64>,
    corpus_size: u64,
    index: HashMap<String, usize>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
            && self.doc_freq == other.doc_freq
            && self.corpus_size == other.corpus_size
    }
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = Error;

    fn try_from(r: VocabularyRepr) -> Result<Self> {
        Vocabulary::new(r.terms, r.doc_freq, r.corpus_size)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            terms: v.terms,
            doc_freq: v.doc_freq,
            corpus_size: v.corpus_size,
        }
    }
}

impl Vocabulary {
    pub fn new(terms: Vec<String>, doc_freq: Vec<u64>, corpus_size: u64) -> Result<Self> {
        if terms.len() != doc_freq.len() {
            return Err(Error::invalid("terms and doc_freq differ in length"));
        }
        if let Some(df) = doc_freq.iter().find(|df| **df < 1 || **df > corpus_size) {
            return Err(Error::invalid(format!(
                "document frequency {df} outside [1, {corpus_size}]"
            )));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary term {t:?}")));
            }
        }
        Ok(Vocabulary {
            terms,
            doc_freq,
            corpus_size,
            index,
        })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self) -> &[u64] {
        &self.doc_freq
    }

    pub fn corpus_size(&self) -> u64 {
        self.corpus_size
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

/// Keeps the `vocab_size` most frequent terms (by total count) among those
/// appearing in at least `min_df` documents. Equal counts are ordered
/// lexicographically.
pub fn fit_count_vectorizer<D: AsRef<[String]>>(docs: &[D], vocab_size: usize, min_df: u64) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::invalid("cannot fit a vocabulary on an empty corpus"));
    }
    if vocab_size == 0 || min_df == 0 {
        return Err(Error::invalid("vocab_size and min_df must be positive"));
    }
    let mut counts: HashMap<&str, (u64, u64)> = HashMap::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for doc in docs {
        seen.clear();
        for tok in doc.as_ref() {
            let entry = counts.entry(tok.as_str()).or_insert((0, 0));
            entry.0 += 1;
            if seen.insert(tok.as_str()) {
                entry.1 += 1;
            }
        }
    }
    let mut kept: Vec<(&str, u64, u64)> = counts
        .into_iter()
        .filter(|(_, (_, df))| *df >= min_df)
        .map(|(t, (tf, df))| (t, tf, df))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    kept.truncate(vocab_size);
    Vocabulary::new(
        kept.iter().map(|k| k.0.to_string()).collect(),
        kept.iter().map(|k| k.2).collect(),
        docs.len() as u64,
    )
}

/// Raw term counts over the vocabulary. Unknown tokens are ignored.
pub fn transform_counts(vocab: &Vocabulary, tokens: &[String]) -> FeatureVector {
    let pairs: Vec<(u32, f64)> = tokens
        .iter()
        .filter_map(|t| vocab.index_of(t))
        .map(|i| (i as u32, 1.0))
        .collect();
    FeatureVector::sparse(vocab.len(), pairs).expect("vocabulary indices are in range")
}

/// Smoothed inverse document frequency `ln((N + 1) / (df + 1))`.
pub fn idf_weight(corpus_size: u64, doc_freq: u64) -> f64 {
    ((corpus_size as f64 + 1.0) / (doc_freq as f64 + 1.0)).ln()
}

pub fn idf_weights(vocab: &Vocabulary) -> Vec<f64> {
    vocab
        .doc_freq
        .iter()
        .map(|df| idf_weight(vocab.corpus_size, *df))
        .collect()
}

/// Elementwise `tf * idf`. Entries whose weight is zero are dropped.
pub fn transform_tfidf(counts: &FeatureVector, weights: &[f64]) -> Result<FeatureVector> {
    if counts.dim() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            actual: counts.dim(),
        });
    }
    let pairs = counts
        .iter_nonzero()
        .map(|(i, v)| (i as u32, v * weights[i]))
        .collect();
    FeatureVector::sparse(weights.len(), pairs)
}
