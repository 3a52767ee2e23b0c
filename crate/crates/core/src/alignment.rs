//! Precision, recall and lift of themes against editorial dual labels.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::primary::ThemeRegistry;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlignmentError {
    #[error("no documents to compare")]
    EmptyCorpus,
    #[error("theme {0} has no documents")]
    EmptyTheme(usize),
    #[error("unknown theme {0}")]
    UnknownTheme(usize),
    #[error("write failed: {0}")]
    Io(String),
}

pub type Result<T, E = AlignmentError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThemeCounts {
    pub theme: usize,
    pub n_class: usize,
    pub n_dual: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentCounts {
    pub themes: Vec<ThemeCounts>,
    pub total_docs: usize,
    pub total_dual: usize,
}

impl AlignmentCounts {
    /// Counts per global theme over every non-commentary document that has
    /// an assignment.
    pub fn from_registry(registry: &ThemeRegistry, corpus: &Corpus) -> Self {
        let mut per: BTreeMap<usize, ThemeCounts> = registry
            .all_ids()
            .into_iter()
            .map(|g| (g, ThemeCounts { theme: g, n_class: 0, n_dual: 0 }))
            .collect();
        let (mut total_docs, mut total_dual) = (0, 0);
        for doc in corpus.documents().iter().filter(|d| !d.is_commentary()) {
            let Some(g) = registry.assignment(&doc.id) else { continue };
            let Some(c) = per.get_mut(&g) else { continue };
            let dual = doc.is_dual();
            c.n_class += 1;
            c.n_dual += usize::from(dual);
            total_docs += 1;
            total_dual += usize::from(dual);
        }
        Self {
            themes: per.into_values().collect(),
            total_docs,
            total_dual,
        }
    }

    /// Counts from `(theme, n_class, n_dual)` rows; totals are their sums.
    pub fn from_rows(rows: &[(usize, usize, usize)]) -> Self {
        Self {
            themes: rows
                .iter()
                .map(|&(theme, n_class, n_dual)| ThemeCounts { theme, n_class, n_dual })
                .collect(),
            total_docs: rows.iter().map(|r| r.1).sum(),
            total_dual: rows.iter().map(|r| r.2).sum(),
        }
    }

    pub fn get(&self, theme: usize) -> Option<&ThemeCounts> {
        self.themes.iter().find(|t| t.theme == theme)
    }
}

pub fn baseline_rate<T: Scalar>(counts: &AlignmentCounts) -> Result<T> {
    if counts.total_docs == 0 {
        return Err(AlignmentError::EmptyCorpus);
    }
    Ok(T::of_count(counts.total_dual) / T::of_count(counts.total_docs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThemeMetrics<T = f64> {
    pub precision: T,
    pub recall: T,
    /// Absent when the baseline rate is zero.
    pub lift: Option<T>,
}

pub fn theme_metrics<T: Scalar>(counts: &AlignmentCounts, theme: usize) -> Result<ThemeMetrics<T>> {
    let c = counts.get(theme).ok_or(AlignmentError::UnknownTheme(theme))?;
    if c.n_class == 0 {
        return Err(AlignmentError::EmptyTheme(theme));
    }
    let baseline: T = baseline_rate(counts)?;
    let precision = T::of_count(c.n_dual) / T::of_count(c.n_class);
    let recall = if counts.total_dual == 0 {
        T::zero()
    } else {
        T::of_count(c.n_dual) / T::of_count(counts.total_dual)
    };
    let lift = (baseline > T::zero()).then(|| precision / baseline);
    Ok(ThemeMetrics { precision, recall, lift })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DualityTier {
    VeryLow,
    Low,
    High,
    VeryHigh,
}

impl DualityTier {
    pub fn as_str(self) -> &'static str {
        match self {
            DualityTier::VeryHigh => "Very High",
            DualityTier::High => "High",
            DualityTier::Low => "Low",
            DualityTier::VeryLow => "Very Low",
        }
    }
}

/// Lower lift bounds of the three upper tiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TierThresholds {
    pub very_high: f64,
    pub high: f64,
    pub low: f64,
}

impl Default for TierThresholds {
    fn default() -> Self {
        Self {
            very_high: 1.5,
            high: 1.0,
            low: 0.5,
        }
    }
}

pub fn duality_tier(lift: f64, thresholds: &TierThresholds) -> DualityTier {
    if lift >= thresholds.very_high {
        DualityTier::VeryHigh
    } else if lift >= thresholds.high {
        DualityTier::High
    } else if lift >= thresholds.low {
        DualityTier::Low
    } else {
        DualityTier::VeryLow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRow<T = f64> {
    pub theme: usize,
    pub n_class: usize,
    pub n_dual: usize,
    pub metrics: ThemeMetrics<T>,
    pub tier: Option<DualityTier>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport<T = f64> {
    pub baseline_rate: T,
    pub total_docs: usize,
    pub total_dual: usize,
    /// Themes with at least one document, in theme order.
    pub rows: Vec<AlignmentRow<T>>,
}

pub fn alignment_report<T: Scalar>(counts: &AlignmentCounts, thresholds: &TierThresholds) -> Result<AlignmentReport<T>> {
    let baseline_rate = baseline_rate(counts)?;
    let mut rows = Vec::new();
    for c in counts.themes.iter().filter(|c| c.n_class > 0) {
        let metrics: ThemeMetrics<T> = theme_metrics(counts, c.theme)?;
        let tier = metrics
            .lift
            .map(|l| duality_tier(l.to_f64().unwrap_or(0.0), thresholds));
        rows.push(AlignmentRow {
            theme: c.theme,
            n_class: c.n_class,
            n_dual: c.n_dual,
            metrics,
            tier,
        });
    }
    Ok(AlignmentReport {
        baseline_rate,
        total_docs: counts.total_docs,
        total_dual: counts.total_dual,
        rows,
    })
}

/// One row per theme followed by a `baseline` row.
pub fn write_alignment_csv<T: Scalar, W: Write>(
    report: &AlignmentReport<T>,
    titles: &dyn Fn(usize) -> String,
    out: W,
) -> Result<()> {
    let io = |e: csv::Error| AlignmentError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theme", "title", "n_abstracts", "n_dual", "precision", "recall", "lift", "tier"])
        .map_err(io)?;
    for r in &report.rows {
        w.write_record([
            r.theme.to_string(),
            titles(r.theme),
            r.n_class.to_string(),
            r.n_dual.to_string(),
            format!("{:.6}", r.metrics.precision),
            format!("{:.6}", r.metrics.recall),
            r.metrics.lift.map(|l| format!("{l:.6}")).unwrap_or_default(),
            r.tier.map(|t| t.as_str().to_string()).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.write_record([
        "baseline".to_string(),
        String::new(),
        report.total_docs.to_string(),
        report.total_dual.to_string(),
        format!("{:.6}", report.baseline_rate),
        String::new(),
        String::new(),
        String::new(),
    ])
    .map_err(io)?;
    w.flush().map_err(|e| AlignmentError::Io(e.to_string()))
}
