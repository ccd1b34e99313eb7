//! Documents, tokenization and the shared vocabulary.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

pub const DEFAULT_MIN_DF: usize = 2;
pub const DEFAULT_MAX_DF_RATIO: f64 = 0.95;

/// A tokenized document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>, config: &TokenizerConfig) -> Self {
        let raw_text = raw_text.into();
        let tokens = tokenize(&raw_text, config);
        Document { id: id.into(), raw_text, tokens }
    }

    /// A document whose tokens were produced elsewhere.
    pub fn from_tokens(id: impl Into<String>, tokens: Vec<String>) -> Self {
        let raw_text = tokens.join(" ");
        Document { id: id.into(), raw_text, tokens }
    }
}

/// Returns the first id that appears twice, if any.
pub fn find_duplicate_id(docs: &[Document]) -> Option<&str> {
    let mut seen = BTreeSet::new();
    docs.iter().map(|d| d.id.as_str()).find(|id| !seen.insert(*id))
}

type LemmaFn = Arc<dyn Fn(&str) -> String + Send + Sync>;

/// Term → term hook applied as the final tokenization step.
#[derive(Clone, Default)]
pub struct Lemmatizer(Option<LemmaFn>);

impl Lemmatizer {
    pub fn identity() -> Self {
        Lemmatizer(None)
    }

    pub fn new(f: impl Fn(&str) -> String + Send + Sync + 'static) -> Self {
        Lemmatizer(Some(Arc::new(f)))
    }

    pub fn apply(&self, term: String) -> String {
        match &self.0 {
            Some(f) => f(&term),
            None => term,
        }
    }
}

impl fmt::Debug for Lemmatizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.0.is_some() { "Lemmatizer(custom)" } else { "Lemmatizer(identity)" })
    }
}

/// Non-ASCII punctuation removed alongside ASCII punctuation by default.
/// Covers the Bengali danda marks and common typographic quotes and dashes.
pub const DEFAULT_EXTRA_PUNCTUATION: &[char] = &[
    '\u{0964}', '\u{0965}', '‘', '’', '‚', '“', '”', '„', '«', '»', '‹', '›', '–', '—', '―', '‐',
    '‑', '‒', '…', '·', '•', '¡', '¿', '§', '¶', '′', '″', '、', '。', '，', '！', '？', '；', '：',
    '（', '）', '【', '】', '《', '》', '「', '」',
];

#[derive(Debug, Clone)]
pub struct TokenizerConfig {
    pub stopwords: BTreeSet<String>,
    pub min_token_length: usize,
    pub strip_punctuation: bool,
    pub strip_numerics: bool,
    /// Punctuation beyond the ASCII class.
    pub extra_punctuation: BTreeSet<char>,
    pub lemmatizer: Lemmatizer,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            stopwords: BTreeSet::new(),
            min_token_length: 1,
            strip_punctuation: true,
            strip_numerics: true,
            extra_punctuation: DEFAULT_EXTRA_PUNCTUATION.iter().copied().collect(),
            lemmatizer: Lemmatizer::identity(),
        }
    }
}

impl TokenizerConfig {
    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopwords = words.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_min_token_length(mut self, n: usize) -> Self {
        self.min_token_length = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_token_length == 0 {
            return Err(Error::Parameter("min_token_length must be at least 1".into()));
        }
        Ok(())
    }

    fn is_punctuation(&self, c: char) -> bool {
        c.is_ascii_punctuation() || self.extra_punctuation.contains(&c)
    }
}

/// Splits on Unicode whitespace, strips punctuation and numeric characters
/// per the config, lowercases, drops short terms and stopwords, then runs
/// the lemmatizer.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let min_len = config.min_token_length.max(1);
    text.split_whitespace()
        .filter_map(|raw| {
            let kept: String = raw
                .chars()
                .filter(|&c| {
                    !(config.strip_punctuation && config.is_punctuation(c))
                        && !(config.strip_numerics && c.is_numeric())
                })
                .collect();
            let term = kept.to_lowercase();
            if term.chars().count() < min_len || config.stopwords.contains(&term) {
                return None;
            }
            let term = config.lemmatizer.apply(term);
            (!term.is_empty()).then_some(term)
        })
        .collect()
}

/// Term ↔ index bijection with document frequencies. Indices follow
/// lexicographic term order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    term_to_index: BTreeMap<String, usize>,
    index_to_term: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.index_to_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_term.is_empty()
    }

    pub fn index(&self, term: &str) -> Option<usize> {
        self.term_to_index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.index_to_term[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.index_to_term
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    pub fn doc_freqs(&self) -> &[usize] {
        &self.doc_freq
    }

    /// Number of documents the vocabulary was built from.
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }
}

/// Keeps terms with `min_df ≤ df ≤ max_df_ratio·N`.
pub fn build_vocabulary(docs: &[Document], min_df: usize, max_df_ratio: f64) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Parameter("cannot build a vocabulary from zero documents".into()));
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(Error::Parameter(alloc::format!("max_df_ratio {max_df_ratio} outside (0, 1]")));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let distinct: BTreeSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let max_df = max_df_ratio * docs.len() as f64;
    let mut term_to_index = BTreeMap::new();
    let mut index_to_term = Vec::new();
    let mut doc_freq = Vec::new();
    for (term, count) in df {
        if count >= min_df && count as f64 <= max_df {
            term_to_index.insert(String::from(term), index_to_term.len());
            index_to_term.push(String::from(term));
            doc_freq.push(count);
        }
    }
    if index_to_term.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Ok(Vocabulary { term_to_index, index_to_term, doc_freq, n_docs: docs.len() })
}
