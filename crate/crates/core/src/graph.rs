//! Abstract-to-segment theme graph and its adjacency matrix.
//!
//! Each labeled segment contributes one edge per label, from the primary
//! theme of its document to the label. Counting edges by (primary, label)
//! gives the adjacency matrix; rows are indexed by primary theme and columns
//! by segment label, both in global-id order with `Other` last.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primary::ThemeRegistry;
use crate::secondary::SegmentLabelSet;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("document {0} has no primary assignment")]
    UnassignedDocument(String),
    #[error("label {label} outside 1..={dim}")]
    LabelOutOfRange { label: usize, dim: usize },
    #[error("matrix rows must all have length {0}")]
    Ragged(usize),
    #[error("write failed: {0}")]
    Io(String),
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub doc_id: String,
    pub segment_index: usize,
    pub primary: usize,
    pub secondary: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteGraph {
    /// Number of global ids, `Other` included.
    pub dim: usize,
    pub edges: Vec<Edge>,
}

impl BipartiteGraph {
    pub fn self_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.primary == e.secondary).count()
    }
}

pub fn build_bipartite(registry: &ThemeRegistry, label_sets: &[SegmentLabelSet]) -> Result<BipartiteGraph> {
    let dim = registry.other_id;
    let check = |g: usize| {
        if (1..=dim).contains(&g) {
            Ok(g)
        } else {
            Err(GraphError::LabelOutOfRange { label: g, dim })
        }
    };
    let mut edges = Vec::new();
    for set in label_sets {
        let primary = registry
            .assignment(&set.doc_id)
            .ok_or_else(|| GraphError::UnassignedDocument(set.doc_id.clone()))?;
        let primary = check(primary)?;
        for &label in &set.labels {
            edges.push(Edge {
                doc_id: set.doc_id.clone(),
                segment_index: set.segment_index,
                primary,
                secondary: check(label)?,
            });
        }
    }
    edges.sort();
    Ok(BipartiteGraph { dim, edges })
}

/// Edge counts `cells[r][c]` from primary theme `r + 1` to label `c + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyMatrix {
    pub dim: usize,
    pub cells: Vec<Vec<u64>>,
}

impl AdjacencyMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            cells: vec![vec![0; dim]; dim],
        }
    }

    pub fn from_rows(cells: Vec<Vec<u64>>) -> Result<Self> {
        let dim = cells.len();
        if cells.iter().any(|r| r.len() != dim) {
            return Err(GraphError::Ragged(dim));
        }
        Ok(Self { dim, cells })
    }

    /// Cell for 1-based global ids.
    pub fn get(&self, primary: usize, secondary: usize) -> u64 {
        self.cells[primary - 1][secondary - 1]
    }

    pub fn row_sum(&self, primary: usize) -> u64 {
        self.cells[primary - 1].iter().sum()
    }

    pub fn col_sum(&self, secondary: usize) -> u64 {
        self.cells.iter().map(|r| r[secondary - 1]).sum()
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }
}

pub fn adjacency_matrix(graph: &BipartiteGraph) -> AdjacencyMatrix {
    let mut m = AdjacencyMatrix::zeros(graph.dim);
    for e in &graph.edges {
        m.cells[e.primary - 1][e.secondary - 1] += 1;
    }
    m
}

/// Row shares of an adjacency matrix. Nonzero shares below `floor` are
/// listed in `blanked` and hidden by [`NormalizedMatrix::visible`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMatrix<T = f64> {
    pub dim: usize,
    pub shares: Vec<Vec<T>>,
    pub floor: T,
    /// 1-based `(primary, secondary)` cells hidden by the floor.
    pub blanked: BTreeSet<(usize, usize)>,
    /// 1-based rows that had no edges and were left at zero.
    pub zero_rows: Vec<usize>,
}

impl<T: Scalar> NormalizedMatrix<T> {
    pub fn share(&self, primary: usize, secondary: usize) -> T {
        self.shares[primary - 1][secondary - 1]
    }

    /// The share if it is nonzero and not blanked.
    pub fn visible(&self, primary: usize, secondary: usize) -> Option<T> {
        let v = self.share(primary, secondary);
        (v > T::zero() && !self.blanked.contains(&(primary, secondary))).then_some(v)
    }
}

pub fn normalize_rows<T: Scalar>(m: &AdjacencyMatrix, floor: T) -> NormalizedMatrix<T> {
    let mut shares = vec![vec![T::zero(); m.dim]; m.dim];
    let mut blanked = BTreeSet::new();
    let mut zero_rows = Vec::new();
    for (r, row) in m.cells.iter().enumerate() {
        let sum: u64 = row.iter().sum();
        if sum == 0 {
            zero_rows.push(r + 1);
            continue;
        }
        let total = T::of(sum as f64);
        for (c, &count) in row.iter().enumerate() {
            let v = T::of(count as f64) / total;
            shares[r][c] = v;
            if count > 0 && v < floor {
                blanked.insert((r + 1, c + 1));
            }
        }
    }
    NormalizedMatrix {
        dim: m.dim,
        shares,
        floor,
        blanked,
        zero_rows,
    }
}

/// Per-theme in- and outflow of segment classifications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub theme: usize,
    /// All classifications of segments whose document has this primary theme.
    pub n_class: u64,
    pub same: u64,
    pub to_other: u64,
    pub gained: u64,
    /// `(same + gained) / total`.
    pub corpus_share: f64,
}

pub fn flow_summary(m: &AdjacencyMatrix) -> Vec<FlowRow> {
    let total = m.total();
    (1..=m.dim)
        .map(|j| {
            let same = m.get(j, j);
            let n_class = m.row_sum(j);
            let col = m.col_sum(j);
            FlowRow {
                theme: j,
                n_class,
                same,
                to_other: n_class - same,
                gained: col - same,
                corpus_share: if total == 0 { 0.0 } else { col as f64 / total as f64 },
            }
        })
        .collect()
}

/// Documents and segments per primary theme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub theme: usize,
    pub n_abstracts: usize,
    pub n_segments: usize,
    /// Segments labeled with their document's primary theme and nothing else.
    pub exclusive: usize,
}

pub fn theme_distribution(registry: &ThemeRegistry, label_sets: &[SegmentLabelSet]) -> Vec<DistributionRow> {
    let mut rows: BTreeMap<usize, DistributionRow> = registry
        .all_ids()
        .into_iter()
        .map(|g| {
            (
                g,
                DistributionRow {
                    theme: g,
                    n_abstracts: 0,
                    n_segments: 0,
                    exclusive: 0,
                },
            )
        })
        .collect();
    for g in registry.assignments.values() {
        if let Some(r) = rows.get_mut(g) {
            r.n_abstracts += 1;
        }
    }
    for set in label_sets {
        let Some(g) = registry.assignment(&set.doc_id) else { continue };
        if let Some(r) = rows.get_mut(&g) {
            r.n_segments += 1;
            if set.labels.len() == 1 && set.labels.contains(&g) {
                r.exclusive += 1;
            }
        }
    }
    rows.into_values().collect()
}

fn io_err(e: impl std::fmt::Display) -> GraphError {
    GraphError::Io(e.to_string())
}

fn header(dim: usize) -> Vec<String> {
    std::iter::once("primary".to_string()).chain((1..=dim).map(|g| g.to_string())).collect()
}

pub fn write_matrix_csv<W: Write>(m: &AdjacencyMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(m.dim)).map_err(io_err)?;
    for (r, row) in m.cells.iter().enumerate() {
        let record = std::iter::once((r + 1).to_string()).chain(row.iter().map(|c| c.to_string()));
        w.write_record(record).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Visible shares with six decimals; blanked and zero cells are empty.
pub fn write_normalized_csv<T: Scalar, W: Write>(m: &NormalizedMatrix<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(m.dim)).map_err(io_err)?;
    for r in 1..=m.dim {
        let record = std::iter::once(r.to_string()).chain(
            (1..=m.dim).map(|c| m.visible(r, c).map(|v| format!("{v:.6}")).unwrap_or_default()),
        );
        w.write_record(record).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_flow_csv<W: Write>(rows: &[FlowRow], titles: &dyn Fn(usize) -> String, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theme", "title", "n_class", "same", "to_other", "gained", "corpus_share"])
        .map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.theme.to_string(),
            titles(r.theme),
            r.n_class.to_string(),
            r.same.to_string(),
            r.to_other.to_string(),
            r.gained.to_string(),
            format!("{:.6}", r.corpus_share),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_distribution_csv<W: Write>(rows: &[DistributionRow], titles: &dyn Fn(usize) -> String, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theme", "title", "n_abstracts", "n_segments", "exclusive"])
        .map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.theme.to_string(),
            titles(r.theme),
            r.n_abstracts.to_string(),
            r.n_segments.to_string(),
            r.exclusive.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secondary::SegmentLabelSet;

    fn registry(assign: &[(&str, usize)], n: usize) -> ThemeRegistry {
        ThemeRegistry {
            entries: vec![],
            other_id: n + 1,
            assignments: assign.iter().map(|(d, g)| (d.to_string(), *g)).collect(),
        }
    }

    fn set(doc: &str, i: usize, labels: &[usize], other: usize) -> SegmentLabelSet {
        SegmentLabelSet::from_specific(doc, i, labels.iter().copied().collect(), other, 4)
    }

    #[test]
    fn toy_graph_counts() {
        let reg = registry(&[("d", 1)], 2);
        let g = build_bipartite(&reg, &[set("d", 0, &[1], 3)]).unwrap();
        assert_eq!(g.edges.len(), 1);
        let g = build_bipartite(&reg, &[set("d", 0, &[1], 3), set("d", 1, &[1, 2], 3)]).unwrap();
        assert_eq!((g.edges.len(), g.self_edges()), (3, 2));
        let m = adjacency_matrix(&g);
        assert_eq!((m.get(1, 1), m.get(1, 2), m.total()), (2, 1, 3));
    }

    #[test]
    fn unassigned_document_rejected() {
        let reg = registry(&[], 2);
        assert_eq!(
            build_bipartite(&reg, &[set("x", 0, &[1], 3)]).unwrap_err(),
            GraphError::UnassignedDocument("x".into())
        );
    }

    #[test]
    fn empty_graph_zero_matrix() {
        let m = adjacency_matrix(&BipartiteGraph { dim: 3, edges: vec![] });
        assert_eq!(m.total(), 0);
        let n: NormalizedMatrix = normalize_rows(&m, 0.01);
        assert_eq!(n.zero_rows, vec![1, 2, 3]);
    }

    #[test]
    fn normalization_and_floor() {
        let m = AdjacencyMatrix::from_rows(vec![vec![2, 1, 1], vec![199, 1, 0], vec![0, 0, 0]]).unwrap();
        let n: NormalizedMatrix = normalize_rows(&m, 0.01);
        assert_eq!(n.shares[0], vec![0.5, 0.25, 0.25]);
        assert_eq!(n.blanked, BTreeSet::from([(2, 2)]));
        assert_eq!(n.visible(2, 2), None);
        assert_eq!(n.visible(2, 3), None);
        assert_eq!(n.zero_rows, vec![3]);
    }

    #[test]
    fn identity_has_no_flow() {
        let m = AdjacencyMatrix::from_rows(vec![vec![3, 0], vec![0, 5]]).unwrap();
        for row in flow_summary(&m) {
            assert_eq!((row.to_other, row.gained), (0, 0));
        }
        let shares: f64 = flow_summary(&m).iter().map(|r| r.corpus_share).sum();
        assert!((shares - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distribution_counts_exclusive_segments() {
        let reg = registry(&[("a", 1), ("b", 2)], 2);
        let sets = vec![set("a", 0, &[1], 3), set("a", 1, &[1, 2], 3), set("b", 0, &[], 3)];
        let d = theme_distribution(&reg, &sets);
        assert_eq!(d[0], DistributionRow { theme: 1, n_abstracts: 1, n_segments: 2, exclusive: 1 });
        assert_eq!(d[1].n_segments, 1);
        assert_eq!(d[2].n_abstracts, 0);
    }

    #[test]
    fn csv_layout() {
        let m = AdjacencyMatrix::from_rows(vec![vec![2, 1], vec![0, 4]]).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "primary,1,2\n1,2,1\n2,0,4\n");
        let mut buf = Vec::new();
        write_normalized_csv(&normalize_rows::<f64>(&m, 0.01), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "primary,1,2\n1,0.666667,0.333333\n2,,1.000000\n");
    }
}
