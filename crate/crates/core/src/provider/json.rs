//! Tolerant recovery of JSON payloads from chat replies.

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Payload shape a structured chat call must produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaHint {
    /// `{"summary", "title", "keywords": [..]}` from the summarize prompt.
    Themes,
    /// `{"classes": [{"class", "title", "desc"}, ..]}` from the classes prompt.
    Classes,
    /// `{"chunks": [{"id", "class"}, ..]}` from the classification prompt.
    Classifications,
}

/// Accepted keyword counts for a summarize reply.
pub const KEYWORD_RANGE: std::ops::RangeInclusive<usize> = 3..=10;

/// Extracts the first plausible JSON object from `raw`: code fences are
/// stripped, then the outermost `{ .. }` span is parsed.
pub fn recover_json(raw: &str) -> Result<Value, String> {
    let body = strip_fences(raw);
    let candidates = [outer_braces(body), outer_braces(raw), Some(body.trim())];
    let mut last_err = String::from("no JSON object found");
    for candidate in candidates.into_iter().flatten() {
        match serde_json::from_str::<Value>(candidate) {
            Ok(v) if v.is_object() => return Ok(v),
            Ok(_) => last_err = "top-level JSON value is not an object".into(),
            Err(e) => last_err = e.to_string(),
        }
    }
    Err(last_err)
}

fn strip_fences(raw: &str) -> &str {
    let Some(open) = raw.find("```") else {
        return raw;
    };
    let after = &raw[open + 3..];
    // Skip an info string such as `json`.
    let content_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
    let content = &after[content_start..];
    match content.find("```") {
        Some(close) => &content[..close],
        None => content,
    }
}

fn outer_braces(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    (end > start).then(|| &text[start..=end])
}

/// Reads an id-like field that may be a string or a number.
pub fn id_string(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn non_empty_str(obj: &Value, key: &str) -> Result<(), String> {
    match obj.get(key).and_then(Value::as_str) {
        Some(s) if !s.trim().is_empty() => Ok(()),
        _ => Err(format!("missing or empty `{key}`")),
    }
}

impl SchemaHint {
    pub fn validate(&self, value: &Value) -> Result<(), String> {
        match self {
            SchemaHint::Themes => {
                non_empty_str(value, "title")?;
                if !value.get("summary").is_some_and(Value::is_string) {
                    return Err("missing `summary`".into());
                }
                let keywords = value
                    .get("keywords")
                    .and_then(Value::as_array)
                    .ok_or("missing `keywords` list")?;
                if !keywords.iter().all(|k| k.as_str().is_some_and(|s| !s.trim().is_empty())) {
                    return Err("keywords must be non-empty strings".into());
                }
                if !KEYWORD_RANGE.contains(&keywords.len()) {
                    return Err(format!("{} keywords outside accepted range", keywords.len()));
                }
                Ok(())
            }
            SchemaHint::Classes => {
                let classes = value
                    .get("classes")
                    .and_then(Value::as_array)
                    .ok_or("missing `classes` list")?;
                if classes.is_empty() {
                    return Err("empty `classes` list".into());
                }
                for class in classes {
                    class.get("class").and_then(id_string).ok_or("class without id")?;
                    non_empty_str(class, "title")?;
                    non_empty_str(class, "desc")?;
                }
                Ok(())
            }
            SchemaHint::Classifications => {
                let chunks = value
                    .get("chunks")
                    .and_then(Value::as_array)
                    .ok_or("missing `chunks` list")?;
                for chunk in chunks {
                    chunk.get("id").and_then(id_string).ok_or("chunk without id")?;
                    chunk.get("class").and_then(id_string).ok_or("chunk without class")?;
                }
                Ok(())
            }
        }
    }
}
