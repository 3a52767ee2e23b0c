//! Recursive primary classification of abstracts.
//!
//! Each iteration clusters the working set, synthesizes one theme per
//! cluster, classifies every working document several times in shuffled
//! batches, and keeps the clusters whose members mostly agree with their own
//! theme. Documents whose consensus label is a stable theme are assigned to
//! it; the rest are carried into the next iteration. Stable themes are
//! finally renumbered into a dense global registry with `Other` last.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::provider::json::id_string;
use crate::provider::{
    chat_complete_structured, embed_texts, ChatProvider, EmbeddingCache, EmbeddingProvider,
    ProviderConfig, ProviderError, SchemaHint,
};
use crate::synthesis::{build_classify_prompt, synthesize_themes, Label, SynthesisError, Theme, ThemeSet};
use crate::vector::{kmeans_with, top_representatives, KMeansOptions, VectorError};
use crate::{Clustering, Embedding};

#[derive(Debug, Error)]
pub enum PrimaryError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("reply omitted ids after a corrective re-ask: {0:?}")]
    MissingIds(Vec<String>),
    #[error("no consensus record for document {0}")]
    MissingConsensus(String),
    #[error("corpus has {n} documents, fewer than k = {k}")]
    TooFewDocuments { k: usize, n: usize },
    #[error("invalid loop configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = PrimaryError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    /// Clusters per iteration.
    pub k: usize,
    /// Agreement a cluster needs to be kept.
    pub tau: f64,
    /// Stop once fewer than `delta * |X^1|` documents remain.
    pub delta: f64,
    pub runs: usize,
    pub consensus_min: usize,
    pub max_iterations: usize,
    pub rng_seed: u64,
    /// Texts per classification prompt.
    pub batch_size: usize,
    /// Representatives per cluster sent to the summarize prompt; `k` when unset.
    pub representatives: Option<usize>,
    pub kmeans: KMeansOptions,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            k: 7,
            tau: 0.60,
            delta: 0.10,
            runs: 5,
            consensus_min: 3,
            max_iterations: 25,
            rng_seed: 0,
            batch_size: 20,
            representatives: None,
            kmeans: KMeansOptions::default(),
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(PrimaryError::InvalidConfig(m.to_string()));
        if self.k < 1 {
            return fail("k must be positive");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail("tau must lie in (0, 1]");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail("delta must lie in (0, 1)");
        }
        if self.runs == 0 || self.consensus_min == 0 || self.consensus_min > self.runs {
            return fail("consensus_min must lie in 1..=runs");
        }
        if 2 * self.consensus_min <= self.runs {
            return fail("consensus_min must be a strict majority of runs");
        }
        if self.max_iterations == 0 || self.batch_size == 0 {
            return fail("max_iterations and batch_size must be positive");
        }
        Ok(())
    }

    pub fn representatives(&self) -> usize {
        self.representatives.unwrap_or(self.k).max(1)
    }
}

/// Labels from repeated classification of one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusRecord {
    pub doc_id: String,
    pub run_labels: Vec<Label>,
    /// `None` when no label reached the consensus minimum.
    pub final_label: Option<Label>,
    /// Multiplicity of the most frequent run label.
    pub agree_count: usize,
}

impl ConsensusRecord {
    pub fn from_runs(doc_id: impl Into<String>, run_labels: Vec<Label>, consensus_min: usize) -> Self {
        let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
        for &l in &run_labels {
            *counts.entry(l).or_default() += 1;
        }
        let (best, agree_count) = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(l, c)| (*l, *c))
            .unwrap_or((Label::Other, 0));
        Self {
            doc_id: doc_id.into(),
            final_label: (agree_count >= consensus_min).then_some(best),
            run_labels,
            agree_count,
        }
    }

    pub fn is_resolved(&self) -> bool {
        self.final_label.is_some()
    }
}

/// Classifies one batch in a single prompt after shuffling it. Ids missing
/// from the reply are asked for once more in a follow-up prompt.
pub fn classify_batch<R: Rng + ?Sized>(
    texts: &[(String, String)],
    themes: &ThemeSet,
    provider: &dyn ChatProvider,
    config: &ProviderConfig,
    rng: &mut R,
) -> Result<BTreeMap<String, Label>> {
    if themes.is_empty() {
        return Err(SynthesisError::EmptyInput.into());
    }
    let mut order: Vec<(String, String)> = texts.to_vec();
    order.shuffle(rng);

    let mut labels = BTreeMap::new();
    request_labels(&order, themes, provider, config, &mut labels)?;
    let missing: Vec<(String, String)> = order
        .iter()
        .filter(|(id, _)| !labels.contains_key(id))
        .cloned()
        .collect();
    if !missing.is_empty() {
        log::warn!("classification reply omitted {} ids; re-asking", missing.len());
        request_labels(&missing, themes, provider, config, &mut labels)?;
        let still: Vec<String> = missing
            .into_iter()
            .map(|(id, _)| id)
            .filter(|id| !labels.contains_key(id))
            .collect();
        if !still.is_empty() {
            return Err(PrimaryError::MissingIds(still));
        }
    }
    Ok(labels)
}

fn request_labels(
    items: &[(String, String)],
    themes: &ThemeSet,
    provider: &dyn ChatProvider,
    config: &ProviderConfig,
    labels: &mut BTreeMap<String, Label>,
) -> Result<()> {
    let wanted: HashSet<&str> = items.iter().map(|(id, _)| id.as_str()).collect();
    let prompt = build_classify_prompt(themes, items);
    let exchange = chat_complete_structured(&prompt, config, SchemaHint::Classifications, provider)?;
    for chunk in exchange.parsed_payload["chunks"].as_array().into_iter().flatten() {
        let (Some(id), Some(class)) = (
            chunk.get("id").and_then(id_string),
            chunk.get("class").and_then(id_string),
        ) else {
            continue;
        };
        if !wanted.contains(id.as_str()) {
            log::warn!("reply mentions unrequested id {id}");
            continue;
        }
        let label = themes.label_for(&class).unwrap_or_else(|| {
            log::warn!("unknown class {class:?} for {id}; treating as Other");
            Label::Other
        });
        labels.insert(id, label);
    }
    Ok(())
}

/// Runs `config.runs` independent classifications of one document.
pub fn consensus_label<R: Rng + ?Sized>(
    doc_id: &str,
    text: &str,
    themes: &ThemeSet,
    provider: &dyn ChatProvider,
    provider_config: &ProviderConfig,
    config: &LoopConfig,
    rng: &mut R,
) -> Result<ConsensusRecord> {
    let item = [(doc_id.to_string(), text.to_string())];
    let mut runs = Vec::with_capacity(config.runs);
    for _ in 0..config.runs {
        let labels = classify_batch(&item, themes, provider, provider_config, rng)?;
        runs.push(labels[doc_id]);
    }
    Ok(ConsensusRecord::from_runs(doc_id, runs, config.consensus_min))
}

/// Classifies every document `config.runs` times. Each run reshuffles the
/// whole set before cutting it into prompt batches, so a document meets
/// different neighbours in every run. Records follow input order.
pub fn classify_with_consensus<R: Rng + ?Sized>(
    docs: &[(String, String)],
    themes: &ThemeSet,
    provider: &dyn ChatProvider,
    provider_config: &ProviderConfig,
    config: &LoopConfig,
    rng: &mut R,
) -> Result<Vec<ConsensusRecord>> {
    let mut runs: HashMap<&str, Vec<Label>> = docs.iter().map(|(id, _)| (id.as_str(), Vec::new())).collect();
    for _ in 0..config.runs {
        let mut order: Vec<(String, String)> = docs.to_vec();
        order.shuffle(rng);
        for batch in order.chunks(config.batch_size) {
            for (id, label) in classify_batch(batch, themes, provider, provider_config, rng)? {
                if let Some(v) = runs.get_mut(id.as_str()) {
                    v.push(label);
                }
            }
        }
    }
    Ok(docs
        .iter()
        .map(|(id, _)| ConsensusRecord::from_runs(id.clone(), runs.remove(id.as_str()).unwrap_or_default(), config.consensus_min))
        .collect())
}

/// Fraction of each cluster's members whose consensus label is the
/// cluster's own theme. Unresolved documents count as disagreeing.
pub fn agreement_scores(
    doc_ids: &[String],
    assignment: &Clustering,
    consensus: &[ConsensusRecord],
) -> Result<BTreeMap<usize, f64>> {
    let by_id: HashMap<&str, &ConsensusRecord> = consensus.iter().map(|r| (r.doc_id.as_str(), r)).collect();
    let mut hits = vec![0usize; assignment.k];
    let mut sizes = vec![0usize; assignment.k];
    for (id, &cluster) in doc_ids.iter().zip(&assignment.labels) {
        let record = by_id
            .get(id.as_str())
            .ok_or_else(|| PrimaryError::MissingConsensus(id.clone()))?;
        sizes[cluster] += 1;
        if record.final_label == Some(Label::Theme(cluster)) {
            hits[cluster] += 1;
        }
    }
    Ok((0..assignment.k)
        .map(|j| {
            let a = if sizes[j] == 0 { 0.0 } else { hits[j] as f64 / sizes[j] as f64 };
            (j, a)
        })
        .collect())
}

/// Splits clusters into those with agreement at least `tau` and the rest.
pub fn partition_stable(agreement: &BTreeMap<usize, f64>, tau: f64) -> (Vec<usize>, Vec<usize>) {
    agreement.iter().fold((Vec::new(), Vec::new()), |(mut s, mut u), (&j, &a)| {
        if a >= tau {
            s.push(j);
        } else {
            u.push(j);
        }
        (s, u)
    })
}

/// Everything recorded about one pass of the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationState {
    pub t: usize,
    pub working_ids: Vec<String>,
    pub assignment: Clustering,
    pub themes: ThemeSet,
    pub consensus: Vec<ConsensusRecord>,
    pub agreement: BTreeMap<usize, f64>,
    pub stable_ids: Vec<usize>,
    pub unstable_ids: Vec<usize>,
    /// Documents handed to the next iteration.
    pub carried_ids: Vec<String>,
}

impl IterationState {
    pub fn resolution_rate(&self) -> f64 {
        if self.consensus.is_empty() {
            return 0.0;
        }
        self.consensus.iter().filter(|r| r.is_resolved()).count() as f64 / self.consensus.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub global_id: usize,
    pub theme: Theme,
    pub born_iteration: usize,
    pub source_cluster: usize,
    pub agreement: f64,
}

/// Stable themes with dense global ids `1..=n`, `Other` at `n + 1`, and the
/// final assignment of every document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeRegistry {
    pub entries: Vec<RegistryEntry>,
    pub other_id: usize,
    pub assignments: BTreeMap<String, usize>,
}

impl ThemeRegistry {
    /// Orders stable themes by `(born_iteration, source_cluster)` and
    /// renumbers them from 1. `assigned` maps documents to those same keys;
    /// documents absent from it go to `Other`.
    pub fn build(
        mut stable: Vec<(Theme, usize, usize, f64)>,
        assigned: &BTreeMap<String, (usize, usize)>,
        all_ids: &[String],
    ) -> Self {
        stable.sort_by_key(|(_, t, j, _)| (*t, *j));
        let mut index = HashMap::new();
        let entries: Vec<RegistryEntry> = stable
            .into_iter()
            .enumerate()
            .map(|(i, (theme, t, j, a))| {
                index.insert((t, j), i + 1);
                RegistryEntry {
                    global_id: i + 1,
                    theme,
                    born_iteration: t,
                    source_cluster: j,
                    agreement: a,
                }
            })
            .collect();
        let other_id = entries.len() + 1;
        let assignments = all_ids
            .iter()
            .map(|id| {
                let g = assigned.get(id).and_then(|key| index.get(key)).copied().unwrap_or(other_id);
                (id.clone(), g)
            })
            .collect();
        Self {
            entries,
            other_id,
            assignments,
        }
    }

    pub fn n_themes(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, global_id: usize) -> Option<&RegistryEntry> {
        global_id.checked_sub(1).and_then(|i| self.entries.get(i))
    }

    pub fn title(&self, global_id: usize) -> &str {
        if global_id == self.other_id {
            return crate::synthesis::OTHER_TITLE;
        }
        self.entry(global_id).map(|e| e.theme.title.as_str()).unwrap_or("?")
    }

    /// Global ids `1..=n+1`, `Other` last.
    pub fn all_ids(&self) -> Vec<usize> {
        (1..=self.other_id).collect()
    }

    pub fn assignment(&self, doc_id: &str) -> Option<usize> {
        self.assignments.get(doc_id).copied()
    }

    /// Documents per global id, `Other` included.
    pub fn distribution(&self) -> BTreeMap<usize, usize> {
        let mut d: BTreeMap<usize, usize> = self.all_ids().into_iter().map(|g| (g, 0)).collect();
        for g in self.assignments.values() {
            *d.entry(*g).or_default() += 1;
        }
        d
    }

    /// The themes whose global ids are in `ids`, renumbered `0..` in the given
    /// order, for use in classification prompts.
    pub fn theme_subset(&self, ids: &[usize]) -> Option<ThemeSet> {
        let themes = ids
            .iter()
            .enumerate()
            .map(|(local, &g)| {
                self.entry(g).map(|e| Theme {
                    local_id: local,
                    ..e.theme.clone()
                })
            })
            .collect::<Option<Vec<_>>>()?;
        ThemeSet::new(themes).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The remainder fell below `delta * |X^1|`.
    BelowDelta,
    /// The remainder is too small to form `k` clusters.
    BelowK,
    /// The iteration bound was reached first.
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimaryOutcome {
    pub registry: ThemeRegistry,
    pub iterations: Vec<IterationState>,
    pub termination: Termination,
}

impl PrimaryOutcome {
    pub fn converged(&self) -> bool {
        self.termination != Termination::MaxIterations
    }

    pub fn working_sizes(&self) -> Vec<usize> {
        self.iterations.iter().map(|s| s.working_ids.len()).collect()
    }
}

/// Providers and settings shared by every iteration.
pub struct PrimaryContext<'a> {
    pub embedder: &'a dyn EmbeddingProvider,
    pub chat: &'a dyn ChatProvider,
    pub cache: &'a EmbeddingCache,
    pub provider_config: &'a ProviderConfig,
}

/// Runs the loop over every abstract in `corpus`.
///
/// Reaching `max_iterations` is not an error: the partial registry is
/// returned with [`Termination::MaxIterations`] and every leftover document
/// assigned to `Other`.
pub fn run_primary_pipeline(corpus: &Corpus, config: &LoopConfig, ctx: &PrimaryContext<'_>) -> Result<PrimaryOutcome> {
    config.validate()?;
    let docs = corpus.documents();
    if docs.len() < config.k {
        return Err(PrimaryError::TooFewDocuments {
            k: config.k,
            n: docs.len(),
        });
    }
    let abstracts: Vec<String> = docs.iter().map(|d| d.abstract_text.clone()).collect();
    let embeddings = embed_texts(&abstracts, ctx.provider_config, ctx.cache, ctx.embedder)?;
    let items: Vec<(String, String, Embedding)> = docs
        .iter()
        .zip(embeddings)
        .map(|(d, e)| (d.id.clone(), d.abstract_text.clone(), e))
        .collect();
    run_on_embeddings(&items, config, ctx.chat, ctx.provider_config)
}

/// The loop over pre-computed `(id, text, embedding)` triples.
pub fn run_on_embeddings(
    items: &[(String, String, Embedding)],
    config: &LoopConfig,
    chat: &dyn ChatProvider,
    provider_config: &ProviderConfig,
) -> Result<PrimaryOutcome> {
    config.validate()?;
    let n = items.len();
    if n < config.k {
        return Err(PrimaryError::TooFewDocuments { k: config.k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut working: Vec<usize> = (0..n).collect();
    let mut assigned: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut stable_themes = Vec::new();
    let mut iterations = Vec::new();

    let termination = loop {
        let t = iterations.len() + 1;
        let vectors: Vec<Embedding> = working.iter().map(|&i| items[i].2.clone()).collect();
        let assignment = kmeans_with(&vectors, config.k, rng.next_u64(), &config.kmeans)?;

        let mut clusters = Vec::with_capacity(config.k);
        for j in 0..config.k {
            let member_idx = assignment.members(j);
            let members: Vec<(String, Embedding)> = member_idx
                .iter()
                .map(|&m| (items[working[m]].0.clone(), vectors[m].clone()))
                .collect();
            let text_of: HashMap<&str, &str> = member_idx
                .iter()
                .map(|&m| (items[working[m]].0.as_str(), items[working[m]].1.as_str()))
                .collect();
            let reps = top_representatives(&members, &assignment.centroids[j], config.representatives())?;
            clusters.push((j, reps.iter().map(|id| text_of[id.as_str()].to_string()).collect()));
        }
        let themes = synthesize_themes(&clusters, chat, provider_config, t)?;

        let docs: Vec<(String, String)> = working.iter().map(|&i| (items[i].0.clone(), items[i].1.clone())).collect();
        let consensus = classify_with_consensus(&docs, &themes, chat, provider_config, config, &mut rng)?;
        let working_ids: Vec<String> = docs.into_iter().map(|(id, _)| id).collect();
        let agreement = agreement_scores(&working_ids, &assignment, &consensus)?;
        let (stable_ids, unstable_ids) = partition_stable(&agreement, config.tau);

        let mut next = Vec::new();
        let mut carried_ids = Vec::new();
        for (&i, record) in working.iter().zip(&consensus) {
            match record.final_label {
                Some(Label::Theme(j)) if stable_ids.contains(&j) => {
                    assigned.insert(record.doc_id.clone(), (t, j));
                }
                _ => {
                    next.push(i);
                    carried_ids.push(record.doc_id.clone());
                }
            }
        }
        for &j in &stable_ids {
            let theme = themes.get(j).expect("one theme per cluster").clone();
            stable_themes.push((theme, t, j, agreement[&j]));
        }
        log::info!(
            "iteration {t}: {} docs, {} stable of {}, {} carried",
            working.len(),
            stable_ids.len(),
            config.k,
            next.len()
        );
        iterations.push(IterationState {
            t,
            working_ids,
            assignment,
            themes,
            consensus,
            agreement,
            stable_ids,
            unstable_ids,
            carried_ids,
        });
        working = next;

        if (working.len() as f64) < config.delta * n as f64 {
            break Termination::BelowDelta;
        }
        if working.len() < config.k {
            break Termination::BelowK;
        }
        if t >= config.max_iterations {
            log::warn!("no convergence after {t} iterations; {} docs left in Other", working.len());
            break Termination::MaxIterations;
        }
    };

    let all_ids: Vec<String> = items.iter().map(|(id, _, _)| id.clone()).collect();
    Ok(PrimaryOutcome {
        registry: ThemeRegistry::build(stable_themes, &assigned, &all_ids),
        iterations,
        termination,
    })
}

/// Per-iteration summary suitable for a JSON trace file.
pub fn trace_json(outcome: &PrimaryOutcome) -> Value {
    let iterations: Vec<Value> = outcome
        .iterations
        .iter()
        .map(|s| {
            json!({
                "t": s.t,
                "working_size": s.working_ids.len(),
                "cluster_sizes": s.assignment.sizes(),
                "kmeans_seed": s.assignment.seed,
                "agreement": s.agreement.values().collect::<Vec<_>>(),
                "stable": s.stable_ids,
                "unstable": s.unstable_ids,
                "resolution_rate": s.resolution_rate(),
                "carried": s.carried_ids.len(),
                "themes": s.themes.themes().iter().map(|th| json!({
                    "cluster": th.local_id,
                    "title": th.title,
                    "description": th.description,
                    "keywords": th.keywords,
                    "summary": th.summary,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "termination": outcome.termination,
        "converged": outcome.converged(),
        "n_themes": outcome.registry.n_themes(),
        "other_id": outcome.registry.other_id,
        "iterations": iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::ScriptedChat;

    fn theme(id: usize, title: &str) -> Theme {
        Theme {
            local_id: id,
            title: title.into(),
            description: format!("about {title}"),
            keywords: vec![],
            summary: String::new(),
            born_iteration: 1,
        }
    }

    fn two_themes() -> ThemeSet {
        ThemeSet::new(vec![theme(0, "Alpha"), theme(1, "Beta")]).unwrap()
    }

    #[test]
    fn consensus_majority_and_unresolved() {
        let t = Label::Theme;
        let r = ConsensusRecord::from_runs("d", vec![t(2), t(2), t(2), t(5), t(1)], 3);
        assert_eq!((r.final_label, r.agree_count), (Some(t(2)), 3));
        let r = ConsensusRecord::from_runs("d", vec![t(1), t(2), t(3), t(4), t(5)], 3);
        assert_eq!((r.final_label, r.agree_count), (None, 1));
        let r = ConsensusRecord::from_runs("d", vec![Label::Other; 5], 3);
        assert_eq!(r.final_label, Some(Label::Other));
    }

    #[test]
    fn single_text_batch() {
        let chat = ScriptedChat::new([r#"{"chunks":[{"id":"a","class":"0"}]}"#]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let map = classify_batch(&[("a".into(), "x".into())], &two_themes(), &chat, &ProviderConfig::default(), &mut rng).unwrap();
        assert_eq!(map["a"], Label::Theme(0));
    }

    #[test]
    fn missing_id_is_reasked_once() {
        let chat = ScriptedChat::new([
            r#"{"chunks":[{"id":"a","class":"0"},{"id":"b","class":"1"}]}"#,
            r#"{"chunks":[{"id":"c","class":"7"}]}"#,
        ]);
        let items: Vec<(String, String)> = ["a", "b", "c"].iter().map(|s| (s.to_string(), "t".into())).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let map = classify_batch(&items, &two_themes(), &chat, &ProviderConfig::default(), &mut rng).unwrap();
        assert_eq!(map.len(), 3);
        assert_eq!(map["c"], Label::Other);
        assert!(chat.prompts()[1].contains("\"c\"") && !chat.prompts()[1].contains("\"a\""));
    }

    #[test]
    fn persistently_missing_ids_fail() {
        let chat = ScriptedChat::new([
            r#"{"chunks":[{"id":"a","class":"0"}]}"#,
            r#"{"chunks":[]}"#,
        ]);
        let items = vec![("a".to_string(), "t".to_string()), ("b".into(), "t".into())];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = classify_batch(&items, &two_themes(), &chat, &ProviderConfig::default(), &mut rng).unwrap_err();
        assert!(matches!(err, PrimaryError::MissingIds(ids) if ids == vec!["b".to_string()]));
    }

    fn clustering(labels: Vec<usize>, k: usize) -> Clustering {
        Clustering {
            labels,
            centroids: vec![],
            k,
            seed: 0,
            iterations_run: 0,
            objective_history: vec![],
        }
    }

    #[test]
    fn agreement_counts_matches_only() {
        let ids: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let t = Label::Theme;
        let records = vec![
            ConsensusRecord::from_runs("0", vec![t(0); 5], 3),
            ConsensusRecord::from_runs("1", vec![t(0); 5], 3),
            ConsensusRecord::from_runs("2", vec![t(0); 5], 3),
            ConsensusRecord::from_runs("3", vec![Label::Other; 5], 3),
        ];
        let a = agreement_scores(&ids, &clustering(vec![0; 4], 1), &records).unwrap();
        assert_eq!(a[&0], 0.75);
        let err = agreement_scores(&ids, &clustering(vec![0; 4], 1), &records[..3]).unwrap_err();
        assert!(matches!(err, PrimaryError::MissingConsensus(id) if id == "3"));
    }

    #[test]
    fn boundary_is_stable() {
        let (s, u) = partition_stable(&BTreeMap::from([(0, 0.60), (1, 0.599)]), 0.60);
        assert_eq!((s, u), (vec![0], vec![1]));
        let a = BTreeMap::from([(0, 0.803), (1, 0.615), (2, 0.635)]);
        assert_eq!(partition_stable(&a, 0.60).0.len(), 3);
    }

    #[test]
    fn registry_is_dense_in_birth_order() {
        let stable = vec![
            (theme(4, "Late"), 2, 4, 0.7),
            (theme(1, "EarlyB"), 1, 1, 0.8),
            (theme(0, "EarlyA"), 1, 0, 0.9),
        ];
        let assigned = BTreeMap::from([("x".to_string(), (2, 4)), ("y".to_string(), (1, 0))]);
        let ids: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let r = ThemeRegistry::build(stable, &assigned, &ids);
        let titles: Vec<&str> = r.entries.iter().map(|e| e.theme.title.as_str()).collect();
        assert_eq!(titles, ["EarlyA", "EarlyB", "Late"]);
        assert_eq!(r.other_id, 4);
        assert_eq!(r.assignment("x"), Some(3));
        assert_eq!(r.assignment("y"), Some(1));
        assert_eq!(r.assignment("z"), Some(4));
        assert_eq!(r.title(4), "Other");
        let subset = r.theme_subset(&[3, 1]).unwrap();
        assert_eq!(subset.get(0).unwrap().title, "Late");
    }

    #[test]
    fn invalid_configs_rejected() {
        for bad in [
            LoopConfig { tau: 0.0, ..Default::default() },
            LoopConfig { delta: 1.0, ..Default::default() },
            LoopConfig { consensus_min: 6, ..Default::default() },
            LoopConfig { consensus_min: 2, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert!(LoopConfig::default().validate().is_ok());
    }
}
