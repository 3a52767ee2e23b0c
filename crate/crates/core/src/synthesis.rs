//! Theme synthesis: prompt construction from cluster representatives and
//! parsing of the generated titles and descriptions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::provider::json::id_string;
use crate::provider::{chat_complete_structured, ChatProvider, ProviderConfig, ProviderError, SchemaHint};

pub const SUMMARIZE_TEMPLATE: &str = include_str!("../assets/prompts/summarize_topics.txt");
pub const GENERATE_CLASSES_TEMPLATE: &str = include_str!("../assets/prompts/generate_classes.txt");
pub const CLASSIFY_TEMPLATE: &str = include_str!("../assets/prompts/classify_json.txt");

/// Separates representative abstracts inside the summarize prompt.
pub const REPRESENTATIVE_DELIMITER: &str = "\n---\n";

pub const OTHER_TITLE: &str = "Other";
pub const OTHER_DESCRIPTION: &str = "None of the other categories fit this text.";

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("no input for prompt")]
    EmptyInput,
    #[error("cluster {0} has no representatives")]
    NoRepresentatives(usize),
    #[error("cluster ids must be 0..n without gaps, got {0:?}")]
    NonContiguousClusters(Vec<usize>),
    #[error("classes reply covers {got:?}, expected ids 0..{expected}")]
    ClusterCountMismatch { expected: usize, got: Vec<String> },
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

pub type Result<T, E = SynthesisError> = std::result::Result<T, E>;

/// A generated theme label and description for cluster `local_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theme {
    pub local_id: usize,
    pub title: String,
    pub description: String,
    pub keywords: Vec<String>,
    /// Stage-one summary, kept for provenance only.
    #[serde(default)]
    pub summary: String,
    pub born_iteration: usize,
}

/// A classification label relative to a [`ThemeSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Theme(usize),
    Other,
}

/// Themes of one iteration, indexed `0..n`, plus the reserved `Other` class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeSet {
    themes: Vec<Theme>,
    pub includes_other: bool,
}

impl ThemeSet {
    /// Builds a set whose themes carry local ids `0..n` in order. The `Other`
    /// class is always offered and takes id `n`.
    pub fn new(mut themes: Vec<Theme>) -> Result<Self> {
        themes.sort_by_key(|t| t.local_id);
        let ids: Vec<usize> = themes.iter().map(|t| t.local_id).collect();
        if ids.iter().enumerate().any(|(i, &id)| i != id) {
            return Err(SynthesisError::NonContiguousClusters(ids));
        }
        Ok(Self {
            themes,
            includes_other: true,
        })
    }

    pub fn themes(&self) -> &[Theme] {
        &self.themes
    }

    pub fn len(&self) -> usize {
        self.themes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.themes.is_empty()
    }

    pub fn get(&self, local_id: usize) -> Option<&Theme> {
        self.themes.get(local_id)
    }

    /// Class id used for `Other` in prompts and replies.
    pub fn other_class_id(&self) -> usize {
        self.themes.len()
    }

    /// Interprets a class id from a reply. Unknown ids yield `None`.
    pub fn label_for(&self, class_id: &str) -> Option<Label> {
        let trimmed = class_id.trim();
        if trimmed.eq_ignore_ascii_case(OTHER_TITLE) {
            return Some(Label::Other);
        }
        let id: usize = trimmed.parse().ok()?;
        if id < self.themes.len() {
            Some(Label::Theme(id))
        } else if id == self.other_class_id() {
            Some(Label::Other)
        } else {
            None
        }
    }

    /// The `{classes}` payload for the classification prompt.
    pub fn classes_payload(&self) -> String {
        let mut classes: Vec<Value> = self
            .themes
            .iter()
            .map(|t| json!({"class": t.local_id.to_string(), "title": t.title, "desc": t.description}))
            .collect();
        if self.includes_other {
            classes.push(json!({
                "class": self.other_class_id().to_string(),
                "title": OTHER_TITLE,
                "desc": OTHER_DESCRIPTION,
            }));
        }
        json!({ "classes": classes }).to_string()
    }
}

/// Replaces `{name}` placeholders in one pass; braces that do not form a known
/// placeholder are copied through, and substituted values are never rescanned.
pub fn render_template(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let hit = values.iter().find(|(name, _)| {
            tail.len() > name.len() + 1
                && tail[1..].starts_with(name)
                && tail[1 + name.len()..].starts_with('}')
        });
        match hit {
            Some((name, value)) => {
                out.push_str(value);
                rest = &tail[name.len() + 2..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn build_summarize_prompt(representative_texts: &[String]) -> Result<String> {
    if representative_texts.is_empty() {
        return Err(SynthesisError::EmptyInput);
    }
    let joined = representative_texts.join(REPRESENTATIVE_DELIMITER);
    Ok(render_template(SUMMARIZE_TEMPLATE, &[("text", &joined)]))
}

/// Builds the classes prompt. Entry `i` is offered as class `"i"`.
pub fn build_generate_classes_prompt(titles_and_keywords: &[(String, Vec<String>)]) -> Result<String> {
    if titles_and_keywords.is_empty() {
        return Err(SynthesisError::EmptyInput);
    }
    let lines: Vec<String> = titles_and_keywords
        .iter()
        .enumerate()
        .map(|(i, (title, keywords))| {
            json!({"class": i.to_string(), "title": title, "keywords": keywords}).to_string()
        })
        .collect();
    let text = format!("\n{}", lines.join("\n"));
    Ok(render_template(GENERATE_CLASSES_TEMPLATE, &[("text", &text)]))
}

/// Builds the classification prompt for `(id, text)` items.
pub fn build_classify_prompt(themes: &ThemeSet, items: &[(String, String)]) -> String {
    let chunks: Vec<Value> = items
        .iter()
        .map(|(id, text)| json!({"id": id, "text": text}))
        .collect();
    let text = json!({ "chunks": chunks }).to_string();
    let classes = themes.classes_payload();
    render_template(
        CLASSIFY_TEMPLATE,
        &[("classes", &classes), ("text", &text), ("id", "id"), ("class", "class")],
    )
}

/// Stage-one output for one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    pub summary: String,
    pub title: String,
    pub keywords: Vec<String>,
}

pub fn parse_summary(payload: &Value) -> ClusterSummary {
    let text = |key: &str| {
        payload
            .get(key)
            .and_then(Value::as_str)
            .unwrap_or_default()
            .trim()
            .to_string()
    };
    ClusterSummary {
        summary: text("summary"),
        title: text("title"),
        keywords: payload
            .get("keywords")
            .and_then(Value::as_array)
            .map(|ks| {
                ks.iter()
                    .filter_map(Value::as_str)
                    .map(|s| s.trim().to_string())
                    .collect()
            })
            .unwrap_or_default(),
    }
}

/// Two-stage theme generation: one summarize call per cluster, then a single
/// classes call over the resulting titles and keywords only.
///
/// `clusters` pairs each cluster id with its representative texts; ids must
/// be `0..n`. The returned themes keep those ids.
pub fn synthesize_themes(
    clusters: &[(usize, Vec<String>)],
    provider: &dyn ChatProvider,
    config: &ProviderConfig,
    born_iteration: usize,
) -> Result<ThemeSet> {
    if clusters.is_empty() {
        return Err(SynthesisError::EmptyInput);
    }
    let mut ordered: Vec<&(usize, Vec<String>)> = clusters.iter().collect();
    ordered.sort_by_key(|(id, _)| *id);
    let ids: Vec<usize> = ordered.iter().map(|(id, _)| *id).collect();
    if ids.iter().enumerate().any(|(i, &id)| i != id) {
        return Err(SynthesisError::NonContiguousClusters(ids));
    }

    let mut summaries = Vec::with_capacity(ordered.len());
    for (cluster_id, reps) in &ordered {
        if reps.is_empty() {
            return Err(SynthesisError::NoRepresentatives(*cluster_id));
        }
        let prompt = build_summarize_prompt(reps)?;
        let exchange = chat_complete_structured(&prompt, config, SchemaHint::Themes, provider)?;
        summaries.push(parse_summary(&exchange.parsed_payload));
    }

    let entries: Vec<(String, Vec<String>)> = summaries
        .iter()
        .map(|s| (s.title.clone(), s.keywords.clone()))
        .collect();
    let prompt = build_generate_classes_prompt(&entries)?;
    let exchange = chat_complete_structured(&prompt, config, SchemaHint::Classes, provider)?;
    let classes = exchange.parsed_payload["classes"]
        .as_array()
        .expect("validated classes payload");

    let mut by_id: BTreeMap<String, (String, String)> = BTreeMap::new();
    let mut seen = Vec::new();
    for class in classes {
        let id = class.get("class").and_then(id_string).unwrap_or_default();
        let title = class["title"].as_str().unwrap_or_default().trim().to_string();
        let desc = class["desc"].as_str().unwrap_or_default().trim().to_string();
        seen.push(id.clone());
        by_id.insert(id, (title, desc));
    }
    let expected: Vec<String> = (0..ordered.len()).map(|i| i.to_string()).collect();
    if seen.len() != expected.len() || !expected.iter().all(|id| by_id.contains_key(id)) {
        return Err(SynthesisError::ClusterCountMismatch {
            expected: expected.len(),
            got: seen,
        });
    }

    let themes = summaries
        .into_iter()
        .enumerate()
        .map(|(i, summary)| {
            let (title, description) = by_id.remove(&i.to_string()).expect("checked above");
            Theme {
                local_id: ordered[i].0,
                title,
                description,
                keywords: summary.keywords,
                summary: summary.summary,
                born_iteration,
            }
        })
        .collect();
    ThemeSet::new(themes)
}
