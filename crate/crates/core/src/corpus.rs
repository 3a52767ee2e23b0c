//! Documents, segments and corpora: ingestion from JSON-lines or CSV files and
//! paragraph-first segmentation of full texts.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Editorial labels with this prefix describe the article kind rather than a
/// subject category, e.g. `kind:commentary`.
pub const KIND_LABEL_PREFIX: &str = "kind:";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus file {path}: {detail}")]
    FileUnreadable { path: PathBuf, detail: String },
    #[error("row {row}: invalid field `{field}`: {detail}")]
    SchemaViolation {
        row: usize,
        field: String,
        detail: String,
    },
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("corpus contains no documents")]
    EmptyCorpus,
    #[error("document `{0}` has no full text")]
    NoFulltext(String),
    #[error("full text of document `{0}` is blank")]
    DegenerateText(String),
    #[error("invalid segmentation policy: {0}")]
    InvalidPolicy(String),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" | "json" => Some(Self::Jsonl),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

/// An abstract-bearing record, optionally with its extracted full text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fulltext: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default)]
    pub editorial_labels: Vec<String>,
    #[serde(default, rename = "keywords")]
    pub author_keywords: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, abstract_text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            title: String::new(),
            abstract_text: abstract_text.into(),
            fulltext: None,
            year: None,
            editorial_labels: Vec::new(),
            author_keywords: Vec::new(),
        }
    }

    pub fn with_fulltext(mut self, fulltext: impl Into<String>) -> Self {
        self.fulltext = Some(fulltext.into());
        self
    }

    pub fn with_labels<I, S>(mut self, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.editorial_labels = labels.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_year(mut self, year: i32) -> Self {
        self.year = Some(year);
        self
    }

    /// Subject categories, i.e. editorial labels that are not kind markers.
    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.editorial_labels
            .iter()
            .map(String::as_str)
            .filter(|l| !l.starts_with(KIND_LABEL_PREFIX))
    }

    /// True when the journal assigned two subject categories.
    pub fn is_dual(&self) -> bool {
        self.categories().count() == 2
    }

    /// Commentary and perspective pieces carry no dual-label semantics.
    pub fn is_commentary(&self) -> bool {
        self.editorial_labels.iter().any(|l| {
            l.strip_prefix(KIND_LABEL_PREFIX)
                .map(|kind| {
                    let kind = kind.trim().to_ascii_lowercase();
                    kind == "commentary" || kind == "perspective"
                })
                .unwrap_or(false)
        })
    }

    pub fn has_fulltext(&self) -> bool {
        self.fulltext
            .as_deref()
            .is_some_and(|t| !t.trim().is_empty())
    }
}

/// A contiguous chunk of a document's full text.
///
/// `start..end` is the byte range of `text` inside the full text; the bytes
/// between consecutive segments are whitespace only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub doc_id: String,
    pub index_in_doc: usize,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    documents: Vec<Document>,
    pub provenance: String,
}

impl Corpus {
    /// Builds a corpus, validating document invariants.
    pub fn new(documents: Vec<Document>, provenance: impl Into<String>) -> Result<Self> {
        if documents.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut seen = HashSet::new();
        for (i, doc) in documents.iter().enumerate() {
            validate_document(doc, i + 1)?;
            if !seen.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId(doc.id.clone()));
            }
        }
        Ok(Self {
            documents,
            provenance: provenance.into(),
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    /// Fraction of documents with non-blank full text.
    pub fn fulltext_coverage(&self) -> f64 {
        let with = self.documents.iter().filter(|d| d.has_fulltext()).count();
        with as f64 / self.documents.len() as f64
    }

    /// Writes the corpus as JSON lines, one document per line.
    pub fn write_jsonl(&self, path: &Path) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        for doc in &self.documents {
            serde_json::to_writer(&mut out, doc)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

fn validate_document(doc: &Document, row: usize) -> Result<()> {
    let violation = |field: &str, detail: &str| CorpusError::SchemaViolation {
        row,
        field: field.to_string(),
        detail: detail.to_string(),
    };
    if doc.id.trim().is_empty() {
        return Err(violation("id", "empty id"));
    }
    if doc.abstract_text.trim().is_empty() {
        return Err(violation("abstract", "empty abstract"));
    }
    if doc.editorial_labels.len() > 2 {
        return Err(violation("editorial_labels", "more than two labels"));
    }
    Ok(())
}

/// Reads a corpus file, preserving record order.
pub fn ingest_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let raw = fs::read_to_string(path).map_err(|e| CorpusError::FileUnreadable {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let documents = match format {
        CorpusFormat::Jsonl => parse_jsonl(&raw)?,
        CorpusFormat::Csv => parse_csv(&raw)?,
    };
    Corpus::new(documents, format!("ingested from {}", path.display()))
}

fn parse_jsonl(raw: &str) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        let row = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(line).map_err(|e| CorpusError::SchemaViolation {
                row,
                field: "<record>".into(),
                detail: e.to_string(),
            })?;
        let obj = value.as_object().ok_or_else(|| CorpusError::SchemaViolation {
            row,
            field: "<record>".into(),
            detail: "not a JSON object".into(),
        })?;
        let field = |name: &str| Field {
            row,
            name: name.to_string(),
        };
        let doc = Document {
            id: field("id").required_string(obj.get("id"))?,
            title: field("title")
                .optional_string(obj.get("title"))?
                .unwrap_or_default(),
            abstract_text: field("abstract").required_string(obj.get("abstract"))?,
            fulltext: field("fulltext").optional_string(obj.get("fulltext"))?,
            year: field("year").optional_year(obj.get("year"))?,
            editorial_labels: field("editorial_labels").string_list(obj.get("editorial_labels"))?,
            author_keywords: field("keywords").string_list(obj.get("keywords"))?,
        };
        validate_document(&doc, row)?;
        docs.push(doc);
    }
    Ok(docs)
}

struct Field {
    row: usize,
    name: String,
}

impl Field {
    fn err(&self, detail: impl Into<String>) -> CorpusError {
        CorpusError::SchemaViolation {
            row: self.row,
            field: self.name.clone(),
            detail: detail.into(),
        }
    }

    fn required_string(&self, v: Option<&Value>) -> Result<String> {
        match self.optional_string(v)? {
            Some(s) if !s.trim().is_empty() => Ok(s),
            Some(_) => Err(self.err("empty value")),
            None => Err(self.err("missing required field")),
        }
    }

    fn optional_string(&self, v: Option<&Value>) -> Result<Option<String>> {
        match v {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Number(n)) => Ok(Some(n.to_string())),
            Some(other) => Err(self.err(format!("expected string, got {other}"))),
        }
    }

    fn optional_year(&self, v: Option<&Value>) -> Result<Option<i32>> {
        match v {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Number(n)) => n
                .as_i64()
                .and_then(|y| i32::try_from(y).ok())
                .map(Some)
                .ok_or_else(|| self.err("year is not an integer")),
            Some(Value::String(s)) if s.trim().is_empty() => Ok(None),
            Some(Value::String(s)) => s
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| self.err(format!("year `{s}` is not an integer"))),
            Some(other) => Err(self.err(format!("expected year, got {other}"))),
        }
    }

    fn string_list(&self, v: Option<&Value>) -> Result<Vec<String>> {
        match v {
            None | Some(Value::Null) => Ok(Vec::new()),
            Some(Value::String(s)) => Ok(split_list_cell(s)),
            Some(Value::Array(items)) => items
                .iter()
                .map(|item| {
                    item.as_str()
                        .map(|s| s.trim().to_string())
                        .ok_or_else(|| self.err("list entries must be strings"))
                })
                .filter(|r| r.as_ref().map(|s| !s.is_empty()).unwrap_or(true))
                .collect(),
            Some(other) => Err(self.err(format!("expected list, got {other}"))),
        }
    }
}

/// Splits a flat-file list cell on semicolons.
fn split_list_cell(cell: &str) -> Vec<String> {
    cell.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_csv(raw: &str) -> Result<Vec<Document>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(raw.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::SchemaViolation {
            row: 0,
            field: "<header>".into(),
            detail: e.to_string(),
        })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = column("id").ok_or_else(|| CorpusError::SchemaViolation {
        row: 0,
        field: "id".into(),
        detail: "missing required column".into(),
    })?;
    let abstract_col = column("abstract").ok_or_else(|| CorpusError::SchemaViolation {
        row: 0,
        field: "abstract".into(),
        detail: "missing required column".into(),
    })?;
    let title_col = column("title");
    let fulltext_col = column("fulltext");
    let year_col = column("year");
    let labels_col = column("editorial_labels");
    let keywords_col = column("keywords");

    let mut docs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CorpusError::SchemaViolation {
            row,
            field: "<record>".into(),
            detail: e.to_string(),
        })?;
        let cell = |col: Option<usize>| {
            col.and_then(|c| record.get(c))
                .map(str::trim)
                .filter(|s| !s.is_empty())
        };
        let year = match cell(year_col) {
            None => None,
            Some(y) => Some(y.parse().map_err(|_| CorpusError::SchemaViolation {
                row,
                field: "year".into(),
                detail: format!("year `{y}` is not an integer"),
            })?),
        };
        let doc = Document {
            id: cell(Some(id_col)).unwrap_or_default().to_string(),
            title: cell(title_col).unwrap_or_default().to_string(),
            abstract_text: cell(Some(abstract_col)).unwrap_or_default().to_string(),
            fulltext: fulltext_col
                .and_then(|c| record.get(c))
                .filter(|s| !s.trim().is_empty())
                .map(str::to_string),
            year,
            editorial_labels: cell(labels_col).map(split_list_cell).unwrap_or_default(),
            author_keywords: cell(keywords_col).map(split_list_cell).unwrap_or_default(),
        };
        validate_document(&doc, row)?;
        docs.push(doc);
    }
    Ok(docs)
}

/// Delimiters tried, coarsest first, when a span exceeds the character budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMarker {
    /// One or more empty lines.
    BlankLine,
    /// A single line break.
    LineBreak,
    /// Whitespace following `.`, `!` or `?`.
    SentenceBoundary,
    /// Whitespace following a literal string.
    After(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationPolicy {
    pub max_chars_per_segment: usize,
    pub min_chars_per_segment: usize,
    pub split_markers: Vec<SplitMarker>,
}

impl Default for SegmentationPolicy {
    fn default() -> Self {
        Self {
            max_chars_per_segment: 2400,
            min_chars_per_segment: 200,
            split_markers: vec![SplitMarker::BlankLine, SplitMarker::SentenceBoundary],
        }
    }
}

impl SegmentationPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.min_chars_per_segment == 0 {
            return Err(CorpusError::InvalidPolicy("min_chars must be positive".into()));
        }
        if self.min_chars_per_segment >= self.max_chars_per_segment {
            return Err(CorpusError::InvalidPolicy(format!(
                "min_chars ({}) must be below max_chars ({})",
                self.min_chars_per_segment, self.max_chars_per_segment
            )));
        }
        if self.split_markers.is_empty() {
            return Err(CorpusError::InvalidPolicy("no split markers".into()));
        }
        Ok(())
    }
}

/// Byte span of trimmed text inside the full text.
#[derive(Debug, Clone, Copy)]
struct Span {
    start: usize,
    end: usize,
}

/// Splits a document's full text into segments.
///
/// Blank-line paragraphs are the primary unit. Spans over the budget are split
/// with the next marker and the pieces packed greedily back up to the budget;
/// when markers run out the span is cut at the last whitespace inside the
/// budget (or mid-word if there is none). A segment shorter than the minimum
/// is merged into its predecessor when the merged span still fits.
pub fn segment_fulltext(doc: &Document, policy: &SegmentationPolicy) -> Result<Vec<Segment>> {
    policy.validate()?;
    let text = doc
        .fulltext
        .as_deref()
        .filter(|t| !t.is_empty())
        .ok_or_else(|| CorpusError::NoFulltext(doc.id.clone()))?;
    let whole = match trim_span(text, 0, text.len()) {
        Some(span) => span,
        None => return Err(CorpusError::DegenerateText(doc.id.clone())),
    };

    let (top, finer) = policy
        .split_markers
        .split_first()
        .expect("validated policy has markers");
    let mut spans = Vec::new();
    for unit in split_by_marker(text, whole, top) {
        if char_len(text, unit) <= policy.max_chars_per_segment {
            spans.push(unit);
        } else {
            refine(text, unit, finer, policy.max_chars_per_segment, &mut spans);
        }
    }
    let spans = merge_short(text, spans, policy);

    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(i, s)| Segment {
            doc_id: doc.id.clone(),
            index_in_doc: i,
            text: text[s.start..s.end].to_string(),
            start: s.start,
            end: s.end,
        })
        .collect())
}

fn char_len(text: &str, span: Span) -> usize {
    text[span.start..span.end].chars().count()
}

fn trim_span(text: &str, start: usize, end: usize) -> Option<Span> {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if trimmed.is_empty() {
        None
    } else {
        Some(Span {
            start: start + lead,
            end: start + lead + trimmed.len(),
        })
    }
}

/// Splits an over-budget span with the remaining markers and packs the
/// pieces greedily back up to the budget.
fn refine(text: &str, span: Span, markers: &[SplitMarker], max: usize, out: &mut Vec<Span>) {
    let Some((marker, rest)) = markers.split_first() else {
        hard_split(text, span, max, out);
        return;
    };
    let pieces = split_by_marker(text, span, marker);
    if pieces.len() <= 1 {
        refine(text, span, rest, max, out);
        return;
    }
    let mut refined = Vec::new();
    for piece in pieces {
        if char_len(text, piece) > max {
            refine(text, piece, rest, max, &mut refined);
        } else {
            refined.push(piece);
        }
    }
    pack_greedy(text, refined, max, out);
}

fn pack_greedy(text: &str, pieces: Vec<Span>, max: usize, out: &mut Vec<Span>) {
    let mut current: Option<Span> = None;
    for piece in pieces {
        current = match current {
            None => Some(piece),
            Some(cur) => {
                let joined = Span {
                    start: cur.start,
                    end: piece.end,
                };
                if char_len(text, joined) <= max {
                    Some(joined)
                } else {
                    out.push(cur);
                    Some(piece)
                }
            }
        };
    }
    out.extend(current);
}

fn hard_split(text: &str, span: Span, max: usize, out: &mut Vec<Span>) {
    let mut start = span.start;
    while start < span.end {
        let rest = &text[start..span.end];
        if rest.chars().count() <= max {
            out.push(Span {
                start,
                end: span.end,
            });
            return;
        }
        let window_end = rest
            .char_indices()
            .nth(max)
            .map(|(i, _)| start + i)
            .unwrap_or(span.end);
        let window = &text[start..window_end];
        // Prefer cutting at whitespace; the whitespace becomes the gap.
        let cut = window
            .char_indices()
            .filter(|(_, c)| c.is_whitespace())
            .map(|(i, _)| start + i)
            .filter(|&i| i > start)
            .last();
        let (piece_end, next_start) = match cut {
            Some(c) => (c, c),
            None => (window_end, window_end),
        };
        if let Some(piece) = trim_span(text, start, piece_end) {
            out.push(piece);
        }
        match trim_span(text, next_start, span.end) {
            Some(next) => start = next.start,
            None => return,
        }
    }
}

fn split_by_marker(text: &str, span: Span, marker: &SplitMarker) -> Vec<Span> {
    let slice = &text[span.start..span.end];
    let mut cuts: Vec<(usize, usize)> = Vec::new();
    match marker {
        SplitMarker::BlankLine => {
            let bytes = slice.as_bytes();
            let mut i = 0;
            while i < bytes.len() {
                if bytes[i] == b'\n' {
                    let mut j = i + 1;
                    let mut newlines = 1;
                    while j < bytes.len() && (bytes[j] as char).is_ascii_whitespace() {
                        if bytes[j] == b'\n' {
                            newlines += 1;
                        }
                        j += 1;
                    }
                    if newlines >= 2 {
                        cuts.push((i, j));
                    }
                    i = j;
                } else {
                    i += 1;
                }
            }
        }
        SplitMarker::LineBreak => {
            for (i, c) in slice.char_indices() {
                if c == '\n' {
                    cuts.push((i, i + 1));
                }
            }
        }
        SplitMarker::SentenceBoundary => {
            let mut prev: Option<char> = None;
            for (i, c) in slice.char_indices() {
                if c.is_whitespace() && matches!(prev, Some('.' | '!' | '?')) {
                    cuts.push((i, i + c.len_utf8()));
                }
                prev = Some(c);
            }
        }
        SplitMarker::After(literal) if !literal.is_empty() => {
            for (i, _) in slice.match_indices(literal.as_str()) {
                let after = i + literal.len();
                if let Some(c) = slice[after..].chars().next() {
                    if c.is_whitespace() {
                        cuts.push((after, after + c.len_utf8()));
                    }
                }
            }
        }
        SplitMarker::After(_) => {}
    }
    let mut pieces = Vec::new();
    let mut start = 0;
    for (cut_start, cut_end) in cuts {
        if cut_start < start {
            continue;
        }
        pieces.extend(trim_span(text, span.start + start, span.start + cut_start));
        start = cut_end;
    }
    pieces.extend(trim_span(text, span.start + start, span.end));
    pieces
}

fn merge_short(text: &str, spans: Vec<Span>, policy: &SegmentationPolicy) -> Vec<Span> {
    let mut merged: Vec<Span> = Vec::with_capacity(spans.len());
    for span in spans {
        if let Some(prev) = merged.last_mut() {
            if char_len(text, span) < policy.min_chars_per_segment {
                let joined = Span {
                    start: prev.start,
                    end: span.end,
                };
                if char_len(text, joined) <= policy.max_chars_per_segment {
                    *prev = joined;
                    continue;
                }
            }
        }
        merged.push(span);
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc_with(text: &str) -> Document {
        Document::new("d1", "abstract").with_fulltext(text)
    }

    fn policy(min: usize, max: usize) -> SegmentationPolicy {
        SegmentationPolicy {
            max_chars_per_segment: max,
            min_chars_per_segment: min,
            ..Default::default()
        }
    }

    fn assert_reassembles(text: &str, segments: &[Segment]) {
        let mut cursor = 0;
        for seg in segments {
            assert!(text[cursor..seg.start].trim().is_empty(), "non-whitespace gap");
            assert_eq!(&text[seg.start..seg.end], seg.text);
            cursor = seg.end;
        }
        assert!(text[cursor..].trim().is_empty());
    }

    #[test]
    fn two_short_paragraphs_stay_separate() {
        let a = "a".repeat(300);
        let b = "b".repeat(300);
        let text = format!("{a}\n\n{b}\n");
        let segs = segment_fulltext(&doc_with(&text), &policy(200, 2400)).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].text, a);
        assert_eq!(segs[1].text, b);
        assert_eq!(segs[1].index_in_doc, 1);
    }

    #[test]
    fn short_text_is_one_segment() {
        let segs = segment_fulltext(&doc_with("tiny text."), &policy(200, 2400)).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].text, "tiny text.");
    }

    #[test]
    fn short_paragraph_merges_into_predecessor() {
        let a = "a".repeat(300);
        let text = format!("{a}\n\nshort tail.");
        let segs = segment_fulltext(&doc_with(&text), &policy(200, 2400)).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].text, text);
    }

    #[test]
    fn long_text_respects_budget() {
        let sentence = "The quick brown fox jumps over the lazy dog again. ";
        let mut text = String::new();
        while text.len() < 10_000 {
            text.push_str(sentence);
            if text.len() % 7 == 0 {
                text.push_str("\n\n");
            }
        }
        let segs = segment_fulltext(&doc_with(&text), &policy(200, 2400)).unwrap();
        assert!(segs.len() >= 5);
        for s in &segs {
            assert!(s.text.chars().count() <= 2400);
        }
        assert_reassembles(&text, &segs);
    }

    #[test]
    fn unbroken_text_is_hard_split() {
        let text = "x".repeat(5000);
        let segs = segment_fulltext(&doc_with(&text), &policy(10, 2000)).unwrap();
        assert_eq!(segs.len(), 3);
        assert_reassembles(&text, &segs);
    }

    #[test]
    fn missing_and_blank_fulltext_are_errors() {
        let doc = Document::new("d9", "abs");
        assert!(matches!(
            segment_fulltext(&doc, &SegmentationPolicy::default()),
            Err(CorpusError::NoFulltext(id)) if id == "d9"
        ));
        let blank = doc_with("  \n\t ");
        assert!(matches!(
            segment_fulltext(&blank, &SegmentationPolicy::default()),
            Err(CorpusError::DegenerateText(_))
        ));
    }

    #[test]
    fn invalid_policy_rejected() {
        let p = policy(500, 400);
        assert!(matches!(
            segment_fulltext(&doc_with("text"), &p),
            Err(CorpusError::InvalidPolicy(_))
        ));
    }

    #[test]
    fn commentary_and_dual_flags() {
        let d = Document::new("a", "x").with_labels(["Engineering", "Biophysics"]);
        assert!(d.is_dual());
        assert!(!d.is_commentary());
        let c = Document::new("b", "x").with_labels(["kind:commentary", "Engineering"]);
        assert!(c.is_commentary());
        assert!(!c.is_dual());
    }

    #[test]
    fn duplicate_ids_rejected_in_constructor() {
        let docs = vec![Document::new("a1", "x"), Document::new("a1", "y")];
        assert!(matches!(Corpus::new(docs, ""), Err(CorpusError::DuplicateId(id)) if id == "a1"));
    }
}
