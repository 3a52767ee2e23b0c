//! Multi-label classification of full-text segments against the stable
//! theme registry.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Segment;
use crate::primary::{classify_batch, classify_with_consensus, LoopConfig, PrimaryError, ThemeRegistry};
use crate::provider::{ChatProvider, ProviderConfig};
use crate::synthesis::{Label, ThemeSet};

#[derive(Debug, Error)]
pub enum SecondaryError {
    #[error("registry has no stable themes")]
    EmptyRegistry,
    #[error(transparent)]
    Classification(#[from] PrimaryError),
    #[error("write failed: {0}")]
    Io(String),
}

pub type Result<T, E = SecondaryError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentCase {
    SingleSpecific,
    IndefiniteOther,
    MultiTopic,
}

impl SegmentCase {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentCase::SingleSpecific => "single_specific",
            SegmentCase::IndefiniteOther => "indefinite_other",
            SegmentCase::MultiTopic => "multi_topic",
        }
    }
}

/// Global theme ids assigned to one segment. `Other` only ever appears alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentLabelSet {
    pub doc_id: String,
    pub segment_index: usize,
    pub labels: BTreeSet<usize>,
    pub case: SegmentCase,
    /// More labels than the configured ambiguity limit.
    pub flagged: bool,
}

impl SegmentLabelSet {
    /// Builds a set from the specific themes found; an empty set becomes
    /// `{other_id}`.
    pub fn from_specific(
        doc_id: impl Into<String>,
        segment_index: usize,
        specific: BTreeSet<usize>,
        other_id: usize,
        flag_above: usize,
    ) -> Self {
        let specific: BTreeSet<usize> = specific.into_iter().filter(|&g| g != other_id).collect();
        let (labels, case) = match specific.len() {
            0 => (BTreeSet::from([other_id]), SegmentCase::IndefiniteOther),
            1 => (specific, SegmentCase::SingleSpecific),
            _ => (specific, SegmentCase::MultiTopic),
        };
        Self {
            doc_id: doc_id.into(),
            segment_index,
            flagged: labels.len() > flag_above,
            labels,
            case,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    /// One prompt per group of themes born in the same iteration.
    #[default]
    ByIteration,
    /// All themes in a single prompt.
    SingleShot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SecondaryConfig {
    pub mode: PartitionMode,
    /// Classify each segment `runs` times per partition and keep the
    /// consensus answer.
    pub consensus: bool,
    pub runs: usize,
    pub consensus_min: usize,
    pub batch_size: usize,
    /// Segments with more labels than this are flagged.
    pub flag_above: usize,
}

impl Default for SecondaryConfig {
    fn default() -> Self {
        Self {
            mode: PartitionMode::ByIteration,
            consensus: false,
            runs: 5,
            consensus_min: 3,
            batch_size: 20,
            flag_above: 4,
        }
    }
}

/// Global theme ids grouped as they are presented to the classifier.
pub fn theme_partitions(registry: &ThemeRegistry, mode: PartitionMode) -> Vec<Vec<usize>> {
    match mode {
        PartitionMode::SingleShot => vec![registry.entries.iter().map(|e| e.global_id).collect()],
        PartitionMode::ByIteration => {
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for e in &registry.entries {
                groups.entry(e.born_iteration).or_default().push(e.global_id);
            }
            groups.into_values().collect()
        }
    }
}

fn segment_key(s: &Segment) -> String {
    format!("{}#{}", s.doc_id, s.index_in_doc)
}

fn label_partition<R: Rng + ?Sized>(
    items: &[(String, String)],
    themes: &ThemeSet,
    provider: &dyn ChatProvider,
    provider_config: &ProviderConfig,
    config: &SecondaryConfig,
    rng: &mut R,
) -> Result<BTreeMap<String, Label>> {
    if config.consensus {
        let loop_config = LoopConfig {
            runs: config.runs,
            consensus_min: config.consensus_min,
            batch_size: config.batch_size,
            ..LoopConfig::default()
        };
        let records = classify_with_consensus(items, themes, provider, provider_config, &loop_config, rng)?;
        return Ok(records
            .into_iter()
            .map(|r| (r.doc_id, r.final_label.unwrap_or(Label::Other)))
            .collect());
    }
    let mut out = BTreeMap::new();
    for batch in items.chunks(config.batch_size.max(1)) {
        match classify_batch(batch, themes, provider, provider_config, rng) {
            Ok(labels) => out.extend(labels),
            Err(e) if batch.len() > 1 => {
                log::warn!("batch of {} segments failed ({e}); retrying one by one", batch.len());
                for item in batch {
                    out.extend(classify_batch(std::slice::from_ref(item), themes, provider, provider_config, rng)?);
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

/// Labels every segment with the union of the specific themes it receives
/// across theme partitions. Output is ordered by `(doc_id, segment_index)`.
pub fn classify_segments_multilabel<R: Rng + ?Sized>(
    segments: &[Segment],
    registry: &ThemeRegistry,
    provider: &dyn ChatProvider,
    provider_config: &ProviderConfig,
    config: &SecondaryConfig,
    rng: &mut R,
) -> Result<Vec<SegmentLabelSet>> {
    if registry.n_themes() == 0 {
        return Err(SecondaryError::EmptyRegistry);
    }
    let items: Vec<(String, String)> = segments.iter().map(|s| (segment_key(s), s.text.clone())).collect();
    let mut found: BTreeMap<String, BTreeSet<usize>> = items.iter().map(|(k, _)| (k.clone(), BTreeSet::new())).collect();

    for partition in theme_partitions(registry, config.mode) {
        let themes = registry
            .theme_subset(&partition)
            .expect("partition ids come from the registry");
        let labels = label_partition(&items, &themes, provider, provider_config, config, rng)?;
        for (key, label) in labels {
            if let (Label::Theme(local), Some(set)) = (label, found.get_mut(&key)) {
                set.insert(partition[local]);
            }
        }
    }

    let mut out: Vec<SegmentLabelSet> = segments
        .iter()
        .map(|s| {
            let specific = found.remove(&segment_key(s)).unwrap_or_default();
            SegmentLabelSet::from_specific(s.doc_id.clone(), s.index_in_doc, specific, registry.other_id, config.flag_above)
        })
        .collect();
    out.sort_by(|a, b| a.doc_id.cmp(&b.doc_id).then(a.segment_index.cmp(&b.segment_index)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub single_specific: usize,
    pub indefinite_other: usize,
    pub multi_topic: usize,
    /// Mean labels per multi-topic segment.
    pub multi_mean: f64,
    /// Population standard deviation of labels per multi-topic segment.
    pub multi_std: f64,
    pub flagged: usize,
    pub total_labels: usize,
}

impl CaseSummary {
    pub fn total(&self) -> usize {
        self.single_specific + self.indefinite_other + self.multi_topic
    }

    pub fn fractions(&self) -> [f64; 3] {
        let n = self.total().max(1) as f64;
        [
            self.single_specific as f64 / n,
            self.indefinite_other as f64 / n,
            self.multi_topic as f64 / n,
        ]
    }
}

pub fn case_partition(sets: &[SegmentLabelSet]) -> CaseSummary {
    let mut summary = CaseSummary {
        single_specific: 0,
        indefinite_other: 0,
        multi_topic: 0,
        multi_mean: 0.0,
        multi_std: 0.0,
        flagged: 0,
        total_labels: 0,
    };
    let mut sizes = Vec::new();
    for s in sets {
        summary.total_labels += s.labels.len();
        summary.flagged += usize::from(s.flagged);
        match s.case {
            SegmentCase::SingleSpecific => summary.single_specific += 1,
            SegmentCase::IndefiniteOther => summary.indefinite_other += 1,
            SegmentCase::MultiTopic => {
                summary.multi_topic += 1;
                sizes.push(s.labels.len() as f64);
            }
        }
    }
    if !sizes.is_empty() {
        let n = sizes.len() as f64;
        let mean = sizes.iter().sum::<f64>() / n;
        summary.multi_mean = mean;
        summary.multi_std = (sizes.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    }
    summary
}

/// `doc_id,segment_index,labels,case` with labels joined by `|`.
pub fn write_segment_labels_csv<W: Write>(sets: &[SegmentLabelSet], out: W) -> Result<()> {
    let io = |e: csv::Error| SecondaryError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["doc_id", "segment_index", "labels", "case"]).map_err(io)?;
    for s in sets {
        let labels = s.labels.iter().map(|g| g.to_string()).collect::<Vec<_>>().join("|");
        w.write_record([s.doc_id.as_str(), &s.segment_index.to_string(), &labels, s.case.as_str()])
            .map_err(io)?;
    }
    w.flush().map_err(|e| SecondaryError::Io(e.to_string()))
}

/// Reads the table written by [`write_segment_labels_csv`].
pub fn read_segment_labels_csv<R: std::io::Read>(input: R, other_id: usize, flag_above: usize) -> Result<Vec<SegmentLabelSet>> {
    let io = |e: String| SecondaryError::Io(e);
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| io(e.to_string()))?;
        let index: usize = row[1].parse().map_err(|e| io(format!("segment_index: {e}")))?;
        let labels = row[2]
            .split('|')
            .map(|g| g.parse::<usize>().map_err(|e| io(format!("labels: {e}"))))
            .collect::<Result<BTreeSet<usize>>>()?;
        out.push(SegmentLabelSet::from_specific(&row[0], index, labels, other_id, flag_above));
    }
    Ok(out)
}
