//! Offline chat provider that answers the three pipeline prompts from their
//! content.
//!
//! Summaries take the most frequent content words of the quoted texts; class
//! descriptions restate the supplied keywords; classification picks the class
//! whose title and description share the most words with each text. With a
//! consistency below 1, each classification is replaced by a uniformly drawn
//! different theme with probability `1 - consistency`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::json::id_string;
use super::{ChatProvider, ProviderError, Result};
use crate::lexical::{tokenize, LexicalOptions};
use crate::synthesis::{OTHER_TITLE, REPRESENTATIVE_DELIMITER};

const SUMMARIZE_LEAD: &str = "Quotes: ";
const SUMMARIZE_TRAIL: &str = "\n\nTake these and distill";
const CLASSES_LEAD: &str = "Titles and Keywords: ";
const CLASSES_TRAIL: &str = "\n\nEach class should have";
const CATEGORIES_LEAD: &str = "Categories: ";
const TEXT_LEAD: &str = "Provided Text: ";

pub struct LexicalResponder {
    consistency: f64,
    keywords: usize,
    rng: Mutex<ChaCha8Rng>,
    options: LexicalOptions,
}

impl LexicalResponder {
    pub fn new(seed: u64) -> Self {
        Self {
            consistency: 1.0,
            keywords: 5,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            options: LexicalOptions::bow(),
        }
    }

    /// Probability that a classification answer is the lexically best class.
    pub fn with_consistency(mut self, consistency: f64) -> Self {
        self.consistency = consistency.clamp(0.0, 1.0);
        self
    }

    fn summarize(&self, quotes: &str) -> String {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for text in quotes.split(REPRESENTATIVE_DELIMITER) {
            for token in tokenize(text, &self.options) {
                *counts.entry(token).or_default() += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut keywords: Vec<String> = ranked.into_iter().take(self.keywords).map(|(t, _)| t).collect();
        let mut filler = 1;
        while keywords.len() < 3 {
            keywords.push(format!("topic{filler}"));
            filler += 1;
        }
        let title = keywords
            .iter()
            .take(2)
            .map(|k| capitalize(k))
            .collect::<Vec<_>>()
            .join(" ");
        json!({
            "summary": format!("Studies concerning {}.", keywords.join(", ")),
            "title": title,
            "keywords": keywords,
        })
        .to_string()
    }

    fn classes(&self, entries: &str) -> Result<String> {
        let mut classes = Vec::new();
        for line in entries.lines().filter(|l| !l.trim().is_empty()) {
            let entry: Value = serde_json::from_str(line)
                .map_err(|e| ProviderError::Transport(format!("responder: bad entry: {e}")))?;
            let id = entry.get("class").and_then(id_string).unwrap_or_default();
            let title: String = entry["title"]
                .as_str()
                .unwrap_or("Untitled")
                .split_whitespace()
                .take(3)
                .collect::<Vec<_>>()
                .join(" ");
            let keywords: Vec<&str> = entry["keywords"]
                .as_array()
                .map(|ks| ks.iter().filter_map(Value::as_str).collect())
                .unwrap_or_default();
            classes.push(json!({
                "class": id,
                "title": title,
                "desc": format!("Research on {}.", keywords.join(", ")),
            }));
        }
        Ok(json!({ "classes": classes }).to_string())
    }

    fn classify(&self, categories: &Value, chunks: &Value) -> Result<String> {
        let classes = categories["classes"]
            .as_array()
            .ok_or_else(|| ProviderError::Transport("responder: no categories".into()))?;
        let mut themes: Vec<(String, BTreeSet<String>)> = Vec::new();
        let mut other_id = None;
        for class in classes {
            let id = class.get("class").and_then(id_string).unwrap_or_default();
            let title = class["title"].as_str().unwrap_or_default();
            if title == OTHER_TITLE {
                other_id = Some(id);
                continue;
            }
            let text = format!("{title} {}", class["desc"].as_str().unwrap_or_default());
            themes.push((id, tokenize(&text, &self.options).into_iter().collect()));
        }
        let other_id = other_id.unwrap_or_else(|| themes.len().to_string());

        let mut out = Vec::new();
        let mut rng = self.rng.lock().expect("responder rng");
        for chunk in chunks["chunks"].as_array().into_iter().flatten() {
            let id = chunk.get("id").and_then(id_string).unwrap_or_default();
            let words: BTreeSet<String> =
                tokenize(chunk["text"].as_str().unwrap_or_default(), &self.options)
                    .into_iter()
                    .collect();
            let mut best: Option<(usize, usize)> = None;
            for (i, (_, vocab)) in themes.iter().enumerate() {
                let score = vocab.intersection(&words).count();
                if score > 0 && best.is_none_or(|(_, s)| score > s) {
                    best = Some((i, score));
                }
            }
            let mut answer = best.map(|(i, _)| themes[i].0.clone()).unwrap_or_else(|| other_id.clone());
            if self.consistency < 1.0 && themes.len() > 1 && rng.random::<f64>() >= self.consistency {
                let alternatives: Vec<&String> =
                    themes.iter().map(|(id, _)| id).filter(|t| **t != answer).collect();
                answer = alternatives[rng.random_range(0..alternatives.len())].clone();
            }
            out.push(json!({"id": id, "class": answer}));
        }
        Ok(json!({ "chunks": out }).to_string())
    }
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn between<'a>(prompt: &'a str, lead: &str, trail: &str) -> Option<&'a str> {
    let start = prompt.find(lead)? + lead.len();
    let end = prompt[start..].find(trail)? + start;
    Some(&prompt[start..end])
}

fn json_after(prompt: &str, lead: &str) -> Option<Value> {
    let start = prompt.find(lead)? + lead.len();
    serde_json::Deserializer::from_str(&prompt[start..])
        .into_iter::<Value>()
        .next()?
        .ok()
}

impl ChatProvider for LexicalResponder {
    fn complete(&self, prompt: &str) -> Result<String> {
        if let Some(quotes) = between(prompt, SUMMARIZE_LEAD, SUMMARIZE_TRAIL) {
            return Ok(self.summarize(quotes));
        }
        if let Some(entries) = between(prompt, CLASSES_LEAD, CLASSES_TRAIL) {
            return self.classes(entries);
        }
        if let (Some(categories), Some(chunks)) =
            (json_after(prompt, CATEGORIES_LEAD), json_after(prompt, TEXT_LEAD))
        {
            return self.classify(&categories, &chunks);
        }
        Err(ProviderError::Transport("responder: unrecognized prompt".into()))
    }
}
