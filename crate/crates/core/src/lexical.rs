//! Frequency-based validation of theme vocabularies.
//!
//! Covers tokenization with a bundled stopword list, dictionary
//! lemmatization, bag-of-words counts, Zipf rank profiles with a Pareto
//! cutoff, standard TF-IDF, and class-based TF-IDF with square-root term
//! frequency.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

const STOPWORDS: &str = include_str!("../assets/lexicon/stopwords.txt");
const LEMMAS: &str = include_str!("../assets/lexicon/lemmas.tsv");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LexicalError {
    #[error("no documents supplied")]
    EmptyInput,
    #[error("term {0:?} does not occur in the corpus")]
    UnknownTerm(String),
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("class {0:?} has no documents")]
    EmptyClass(String),
    #[error("invalid lexical options: {0}")]
    InvalidOptions(String),
    #[error("document index {0} out of range")]
    UnknownDocument(usize),
    #[error("write failed: {0}")]
    Io(String),
}

pub type Result<T, E = LexicalError> = std::result::Result<T, E>;

/// Which population document frequencies are counted over in c-TF-IDF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DfScope {
    #[default]
    Documents,
    Classes,
}

/// The bundled stopword list.
pub fn default_stopwords() -> BTreeSet<String> {
    STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LexicalOptions {
    pub stopwords: BTreeSet<String>,
    pub keep_bigrams: bool,
    pub lemmatize: bool,
    pub strip_numeric: bool,
    pub min_doc_freq: usize,
    pub max_doc_fraction: f64,
    pub df_scope: DfScope,
}

impl Default for LexicalOptions {
    fn default() -> Self {
        Self::bow()
    }
}

impl LexicalOptions {
    /// Lemmatized unigrams with numeric tokens removed.
    pub fn bow() -> Self {
        Self {
            stopwords: default_stopwords(),
            keep_bigrams: false,
            lemmatize: true,
            strip_numeric: true,
            min_doc_freq: 5,
            max_doc_fraction: 0.80,
            df_scope: DfScope::Documents,
        }
    }

    /// Surface-form unigrams and bigrams, document-frequency filtered.
    pub fn ctfidf() -> Self {
        Self {
            keep_bigrams: true,
            lemmatize: false,
            strip_numeric: false,
            ..Self::bow()
        }
    }

    pub fn without_stopwords(mut self) -> Self {
        self.stopwords.clear();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_doc_fraction > 0.0 && self.max_doc_fraction <= 1.0) {
            return Err(LexicalError::InvalidOptions(format!(
                "max_doc_fraction must lie in (0, 1], got {}",
                self.max_doc_fraction
            )));
        }
        if self.min_doc_freq == 0 {
            return Err(LexicalError::InvalidOptions("min_doc_freq must be at least 1".into()));
        }
        Ok(())
    }
}

fn lemma_table() -> &'static HashMap<&'static str, &'static str> {
    static TABLE: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    TABLE.get_or_init(|| {
        LEMMAS
            .lines()
            .filter(|l| !l.starts_with('#'))
            .filter_map(|l| l.split_once('\t'))
            .collect()
    })
}

/// Every (inflected form, lemma) pair in the bundled table.
pub fn lemma_entries() -> impl Iterator<Item = (&'static str, &'static str)> {
    lemma_table().iter().map(|(k, v)| (*k, *v))
}

/// Dictionary form of a lowercase token. Unknown tokens are returned as is.
pub fn lemmatize(token: &str) -> &str {
    lemma_table().get(token).copied().unwrap_or(token)
}

fn is_numeric(token: &str) -> bool {
    !token.chars().any(char::is_alphabetic)
}

/// Lowercased tokens of `text` after edge-punctuation stripping, stopword and
/// numeric filtering. Bigrams over the filtered stream follow the unigrams
/// when `keep_bigrams` is set.
pub fn tokenize(text: &str, options: &LexicalOptions) -> Vec<String> {
    let mut unigrams = Vec::new();
    for raw in text.split_whitespace() {
        let lowered = raw.to_lowercase();
        let token = lowered.trim_matches(|c: char| !c.is_alphanumeric());
        if token.is_empty() || options.stopwords.contains(token) {
            continue;
        }
        if options.strip_numeric && is_numeric(token) {
            continue;
        }
        let token = if options.lemmatize { lemmatize(token) } else { token };
        unigrams.push(token.to_string());
    }
    if options.keep_bigrams && unigrams.len() > 1 {
        let bigrams: Vec<String> = unigrams.windows(2).map(|w| format!("{} {}", w[0], w[1])).collect();
        unigrams.extend(bigrams);
    }
    unigrams
}

/// Raw term counts over a document set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermFrequencyTable {
    pub counts: BTreeMap<String, usize>,
    pub total_tokens: usize,
}

impl TermFrequencyTable {
    pub fn vocabulary_size(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, term: &str) -> usize {
        self.counts.get(term).copied().unwrap_or(0)
    }
}

/// Bag-of-words counts over lemmatized unigrams.
pub fn bow<S: AsRef<str>>(documents: &[S], options: &LexicalOptions) -> Result<TermFrequencyTable> {
    if documents.is_empty() {
        return Err(LexicalError::EmptyInput);
    }
    let options = LexicalOptions {
        keep_bigrams: false,
        ..options.clone()
    };
    let mut table = TermFrequencyTable::default();
    for doc in documents {
        for token in tokenize(doc.as_ref(), &options) {
            *table.counts.entry(token).or_default() += 1;
            table.total_tokens += 1;
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTerm {
    pub rank: usize,
    pub term: String,
    pub frequency: usize,
    /// Frequency relative to the top-ranked term.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZipfProfile {
    pub ranked: Vec<RankedTerm>,
    pub total_tokens: usize,
    /// Smallest rank whose cumulative frequency reaches 80% of all tokens.
    pub pareto_cutoff_rank: usize,
    pub pareto_fraction: f64,
}

impl ZipfProfile {
    pub fn cumulative(&self, rank: usize) -> usize {
        self.ranked.iter().take(rank).map(|t| t.frequency).sum()
    }
}

pub fn zipf_profile(table: &TermFrequencyTable) -> Result<ZipfProfile> {
    if table.counts.is_empty() {
        return Err(LexicalError::EmptyInput);
    }
    let mut terms: Vec<(&String, usize)> = table.counts.iter().map(|(t, &f)| (t, f)).collect();
    terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let total: usize = terms.iter().map(|t| t.1).sum();
    let f_max = terms[0].1 as f64;

    let mut cumulative = 0;
    let mut cutoff = terms.len();
    for (i, (_, f)) in terms.iter().enumerate() {
        cumulative += f;
        if 5 * cumulative >= 4 * total {
            cutoff = i + 1;
            break;
        }
    }
    let ranked = terms
        .into_iter()
        .enumerate()
        .map(|(i, (term, frequency))| RankedTerm {
            rank: i + 1,
            term: term.clone(),
            frequency,
            normalized: frequency as f64 / f_max,
        })
        .collect::<Vec<_>>();
    Ok(ZipfProfile {
        pareto_fraction: cutoff as f64 / ranked.len() as f64,
        pareto_cutoff_rank: cutoff,
        total_tokens: total,
        ranked,
    })
}

/// Per-document term counts supporting `tf(x,d) * ln(N / df(x))`.
#[derive(Debug, Clone)]
pub struct TfidfIndex {
    docs: Vec<HashMap<String, usize>>,
    df: HashMap<String, usize>,
}

impl TfidfIndex {
    pub fn new<S: AsRef<str>>(documents: &[S], options: &LexicalOptions) -> Result<Self> {
        if documents.is_empty() {
            return Err(LexicalError::EmptyInput);
        }
        let mut docs = Vec::with_capacity(documents.len());
        let mut df: HashMap<String, usize> = HashMap::new();
        for doc in documents {
            let mut counts: HashMap<String, usize> = HashMap::new();
            for token in tokenize(doc.as_ref(), options) {
                *counts.entry(token).or_default() += 1;
            }
            for term in counts.keys() {
                *df.entry(term.clone()).or_default() += 1;
            }
            docs.push(counts);
        }
        Ok(Self { docs, df })
    }

    pub fn n_documents(&self) -> usize {
        self.docs.len()
    }

    pub fn tfidf(&self, term: &str, doc: usize) -> Result<f64> {
        let df = *self
            .df
            .get(term)
            .ok_or_else(|| LexicalError::UnknownTerm(term.to_string()))?;
        let counts = self.docs.get(doc).ok_or(LexicalError::UnknownDocument(doc))?;
        let tf = counts.get(term).copied().unwrap_or(0) as f64;
        Ok(tf * (self.docs.len() as f64 / df as f64).ln())
    }
}

/// Class-based TF-IDF scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtfidfTable<T = f64> {
    /// class → term → score
    pub scores: BTreeMap<String, BTreeMap<String, T>>,
    /// Average retained tokens per class.
    pub average_tokens: T,
    /// Document frequency of every retained term.
    pub df: BTreeMap<String, usize>,
    /// Size of the population df is counted over.
    pub n_documents: usize,
}

impl<T: Scalar> CtfidfTable<T> {
    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.scores.keys().map(String::as_str)
    }

    pub fn score(&self, class: &str, term: &str) -> Option<T> {
        self.scores.get(class)?.get(term).copied()
    }
}

/// Scores every retained term of every class as
/// `sqrt(tf(x,c)) * ln(1 + A / df(x))`.
pub fn ctfidf<T: Scalar>(
    class_documents: &BTreeMap<String, Vec<String>>,
    options: &LexicalOptions,
) -> Result<CtfidfTable<T>> {
    options.validate()?;
    if class_documents.is_empty() {
        return Err(LexicalError::EmptyInput);
    }
    if let Some((class, _)) = class_documents.iter().find(|(_, docs)| docs.is_empty()) {
        return Err(LexicalError::EmptyClass(class.clone()));
    }

    let mut class_tf: BTreeMap<&str, HashMap<String, usize>> = BTreeMap::new();
    let mut df: HashMap<String, usize> = HashMap::new();
    let mut n_documents = 0;
    for (class, docs) in class_documents {
        let tf = class_tf.entry(class).or_default();
        let mut class_terms: HashSet<String> = HashSet::new();
        for doc in docs {
            let tokens = tokenize(doc, options);
            let distinct: HashSet<&String> = tokens.iter().collect();
            match options.df_scope {
                DfScope::Documents => {
                    n_documents += 1;
                    for term in distinct {
                        *df.entry(term.clone()).or_default() += 1;
                    }
                }
                DfScope::Classes => class_terms.extend(distinct.into_iter().cloned()),
            }
            for token in tokens {
                *tf.entry(token).or_default() += 1;
            }
        }
        if options.df_scope == DfScope::Classes {
            n_documents += 1;
            for term in class_terms {
                *df.entry(term).or_default() += 1;
            }
        }
    }

    let ceiling = options.max_doc_fraction * n_documents as f64;
    let retained: BTreeMap<String, usize> = df
        .into_iter()
        .filter(|(_, d)| *d >= options.min_doc_freq && (*d as f64) <= ceiling)
        .collect();

    let retained_tokens: usize = class_tf
        .values()
        .flat_map(|tf| tf.iter())
        .filter(|(term, _)| retained.contains_key(*term))
        .map(|(_, count)| count)
        .sum();
    let average_tokens = T::of_count(retained_tokens) / T::of_count(class_documents.len());

    let scores = class_tf
        .into_iter()
        .map(|(class, tf)| {
            let terms = tf
                .into_iter()
                .filter_map(|(term, count)| {
                    let d = *retained.get(&term)?;
                    let idf = (T::one() + average_tokens / T::of_count(d)).ln();
                    Some((term, T::of_count(count).sqrt() * idf))
                })
                .collect();
            (class.to_string(), terms)
        })
        .collect();

    Ok(CtfidfTable {
        scores,
        average_tokens,
        df: retained,
        n_documents,
    })
}

/// The `n` best-scoring terms of `class`, ties broken lexicographically.
pub fn top_terms<T: Scalar>(table: &CtfidfTable<T>, class: &str, n: usize) -> Result<Vec<(String, T)>> {
    let terms = table
        .scores
        .get(class)
        .ok_or_else(|| LexicalError::UnknownClass(class.to_string()))?;
    let mut ranked: Vec<(String, T)> = terms.iter().map(|(t, s)| (t.clone(), *s)).collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(n);
    Ok(ranked)
}

/// Half-open publication-year range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearBucket {
    pub start: i32,
    pub end: i32,
}

impl fmt::Display for YearBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end - 1)
    }
}

pub const YEAR_BUCKETS: [YearBucket; 4] = [
    YearBucket { start: 2005, end: 2010 },
    YearBucket { start: 2010, end: 2015 },
    YearBucket { start: 2015, end: 2020 },
    YearBucket { start: 2020, end: 2025 },
];

pub fn year_bucket(year: i32) -> Option<YearBucket> {
    YEAR_BUCKETS.iter().copied().find(|b| b.start <= year && year < b.end)
}

fn io_err(e: impl fmt::Display) -> LexicalError {
    LexicalError::Io(e.to_string())
}

pub fn write_zipf_csv<W: Write>(profile: &ZipfProfile, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "term", "frequency", "normalized", "cumulative_fraction", "in_pareto"])
        .map_err(io_err)?;
    let mut cumulative = 0;
    for t in &profile.ranked {
        cumulative += t.frequency;
        w.write_record([
            t.rank.to_string(),
            t.term.clone(),
            t.frequency.to_string(),
            format!("{:.6}", t.normalized),
            format!("{:.6}", cumulative as f64 / profile.total_tokens as f64),
            (t.rank <= profile.pareto_cutoff_rank).to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Top `n` terms per class as `class,rank,term,score`.
pub fn write_ctfidf_csv<T: Scalar, W: Write>(table: &CtfidfTable<T>, n: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "rank", "term", "score"]).map_err(io_err)?;
    for class in table.classes() {
        for (i, (term, score)) in top_terms(table, class, n)?.into_iter().enumerate() {
            w.write_record([class.to_string(), (i + 1).to_string(), term, format!("{score:.6}")])
                .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}
