//! Planted-topic corpora for demos and end-to-end tests.
//!
//! Every theme owns a small vocabulary of invented words; documents mix
//! words of their planted theme with a shared filler vocabulary. Full texts
//! are paragraphs that mostly follow the document's theme, sometimes borrow
//! another theme, and occasionally carry filler only.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ze", "pa", "qui", "dro", "fen", "gal", "bor", "tas",
];
const CATEGORIES: [&str; 4] = ["Engineering", "Biology", "Physics", "Chemistry"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedConfig {
    pub n_docs: usize,
    pub n_themes: usize,
    pub words_per_theme: usize,
    pub filler_words: usize,
    pub abstract_words: usize,
    /// Share of abstract words drawn from the planted theme.
    pub theme_fraction: f64,
    pub paragraphs: (usize, usize),
    pub paragraph_words: usize,
    /// Chance a paragraph follows a different theme.
    pub borrow_rate: f64,
    /// Chance a paragraph is filler only.
    pub filler_paragraph_rate: f64,
    pub commentary_rate: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            n_docs: 300,
            n_themes: 4,
            words_per_theme: 12,
            filler_words: 40,
            abstract_words: 30,
            theme_fraction: 0.6,
            paragraphs: (2, 5),
            paragraph_words: 60,
            borrow_rate: 0.25,
            filler_paragraph_rate: 0.1,
            commentary_rate: 0.02,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub corpus: Corpus,
    /// Planted theme of every document.
    pub truth: BTreeMap<String, usize>,
    pub vocabularies: Vec<Vec<String>>,
    pub filler: Vec<String>,
}

fn invent_words(rng: &mut ChaCha8Rng, count: usize, taken: &mut BTreeSet<String>) -> Vec<String> {
    let mut words = Vec::with_capacity(count);
    while words.len() < count {
        let n = rng.random_range(2..=3);
        let w: String = (0..n).map(|_| *SYLLABLES.choose(rng).expect("non-empty")).collect();
        if taken.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

fn sentence_text(words: Vec<&str>) -> String {
    let mut out = String::new();
    for (i, chunk) in words.chunks(12).enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let mut s = chunk.join(" ");
        if let Some(first) = s.get(..1) {
            s.replace_range(..1, &first.to_uppercase());
        }
        out.push_str(&s);
        out.push('.');
    }
    out
}

fn mixed(rng: &mut ChaCha8Rng, theme: Option<&[String]>, filler: &[String], n: usize, fraction: f64) -> String {
    let words = (0..n)
        .map(|_| match theme {
            Some(vocab) if rng.random::<f64>() < fraction => vocab.choose(rng).expect("vocab").as_str(),
            _ => filler.choose(rng).expect("filler").as_str(),
        })
        .collect();
    sentence_text(words)
}

pub fn planted_corpus(config: &PlantedConfig) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut taken = BTreeSet::new();
    let vocabularies: Vec<Vec<String>> = (0..config.n_themes)
        .map(|_| invent_words(&mut rng, config.words_per_theme, &mut taken))
        .collect();
    let filler = invent_words(&mut rng, config.filler_words, &mut taken);

    let mut docs = Vec::with_capacity(config.n_docs);
    let mut truth = BTreeMap::new();
    for i in 0..config.n_docs {
        let theme = i % config.n_themes;
        let id = format!("doc{i:04}");
        let abstract_text = mixed(&mut rng, Some(&vocabularies[theme]), &filler, config.abstract_words, config.theme_fraction);

        let n_par = rng.random_range(config.paragraphs.0..=config.paragraphs.1);
        let paragraphs: Vec<String> = (0..n_par)
            .map(|_| {
                let roll: f64 = rng.random();
                if roll < config.filler_paragraph_rate {
                    mixed(&mut rng, None, &filler, config.paragraph_words, 0.0)
                } else {
                    let t = if roll < config.filler_paragraph_rate + config.borrow_rate {
                        rng.random_range(0..config.n_themes)
                    } else {
                        theme
                    };
                    mixed(&mut rng, Some(&vocabularies[t]), &filler, config.paragraph_words, config.theme_fraction)
                }
            })
            .collect();

        // Dual labeling is more common for low-numbered themes.
        let dual_rate = 0.8 - 0.7 * theme as f64 / config.n_themes.max(1) as f64;
        let first = CATEGORIES[theme % CATEGORIES.len()];
        let mut labels = vec![first.to_string()];
        if rng.random::<f64>() < dual_rate {
            labels.push(CATEGORIES[(theme + 1) % CATEGORIES.len()].to_string());
        }
        if rng.random::<f64>() < config.commentary_rate {
            labels.truncate(1);
            labels.push("kind:commentary".to_string());
        }
        let doc = Document::new(id.clone(), abstract_text)
            .with_fulltext(paragraphs.join("\n\n"))
            .with_labels(labels)
            .with_year(rng.random_range(2005..2025));
        truth.insert(id, theme);
        docs.push(doc);
    }
    PlantedCorpus {
        corpus: Corpus::new(docs, format!("planted seed={}", config.seed)).expect("generated corpus is valid"),
        truth,
        vocabularies,
        filler,
    }
}
