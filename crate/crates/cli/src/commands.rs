//! Pipeline stages. Each stage reads the previous stages' files from the
//! output directory, writes its own, and updates the manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use thememap::alignment::{alignment_report, write_alignment_csv, AlignmentCounts};
use thememap::corpus::{ingest_corpus, segment_fulltext, Corpus, CorpusFormat, Segment};
use thememap::graph::{
    adjacency_matrix, build_bipartite, flow_summary, normalize_rows, theme_distribution, write_distribution_csv,
    write_flow_csv, write_matrix_csv, write_normalized_csv,
};
use thememap::lexical::{bow, ctfidf, top_terms, write_ctfidf_csv, write_zipf_csv, year_bucket, zipf_profile, YEAR_BUCKETS};
use thememap::primary::{run_primary_pipeline, trace_json, PrimaryContext, ThemeRegistry};
use thememap::provider::{
    ChatProvider, EmbeddingCache, EmbeddingProvider, LexicalResponder, OpenAiCompatible, StubEmbedder, StubEmbeddingMode,
};
use thememap::secondary::{case_partition, classify_segments_multilabel, read_segment_labels_csv, write_segment_labels_csv};
use thememap::svg::{heatmap_svg, term_grid_svg};
use thememap::{Alignment, Ctfidf, NormalizedAdjacency};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::record_stage;

pub const CORPUS_SNAPSHOT: &str = "corpus.jsonl";
pub const INGEST_STATS: &str = "ingest_stats.json";
pub const EMBEDDING_CACHE: &str = "embeddings.jsonl";
pub const REGISTRY: &str = "registry.json";
pub const PRIMARY_TRACE: &str = "primary_trace.json";
pub const PRIMARY_DISTRIBUTION: &str = "primary_distribution.csv";
pub const PRIMARY_ASSIGNMENTS: &str = "primary_assignments.csv";
pub const AGREEMENT_TRACE: &str = "agreement_by_iteration.csv";
pub const SEGMENTS: &str = "segments.jsonl";
pub const SEGMENT_LABELS: &str = "segment_labels.csv";
pub const CASE_SUMMARY: &str = "case_summary.json";
pub const ADJACENCY: &str = "adjacency.csv";
pub const ADJACENCY_NORMALIZED: &str = "adjacency_normalized.csv";
pub const HEATMAP: &str = "heatmap.svg";
pub const FLOW_SUMMARY: &str = "flow_summary.csv";
pub const THEME_DISTRIBUTION: &str = "theme_distribution.csv";
pub const ZIPF: &str = "zipf.csv";
pub const CTFIDF_THEMES: &str = "ctfidf_themes.csv";
pub const CTFIDF_TIME: &str = "ctfidf_time.csv";
pub const TERM_GRID: &str = "term_grid.svg";
pub const ALIGNMENT: &str = "alignment.csv";

/// What a stage did, for printing.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: &'static str,
    pub lines: Vec<String>,
    pub files: Vec<&'static str>,
}

impl std::fmt::Display for StageReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "[{}]", self.stage)?;
        for l in &self.lines {
            writeln!(f, "  {l}")?;
        }
        write!(f, "  wrote {}", self.files.join(", "))
    }
}

fn out_path(config: &RunConfig, name: &str) -> PathBuf {
    config.output_dir.join(name)
}

fn require(config: &RunConfig, name: &str, stage: &'static str) -> Result<PathBuf, CliError> {
    let p = out_path(config, name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(CliError::MissingPrerequisite { path: p, stage })
    }
}

fn create(config: &RunConfig, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(out_path(config, name))?))
}

fn write_json(config: &RunConfig, name: &str, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut w = create(config, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn stage_err(e: impl std::fmt::Display) -> CliError {
    CliError::Stage(e.to_string())
}

fn load_snapshot(config: &RunConfig) -> Result<Corpus, CliError> {
    let path = require(config, CORPUS_SNAPSHOT, "ingest")?;
    Ok(ingest_corpus(&path, CorpusFormat::Jsonl)?)
}

fn load_registry(config: &RunConfig) -> Result<ThemeRegistry, CliError> {
    let path = require(config, REGISTRY, "classify-primary")?;
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn model_names(config: &RunConfig) -> (String, String) {
    if config.stub_mode {
        let embedder = StubEmbedder::with_mode(config.stub.embed_dim, config.stage_seed("embed"), StubEmbeddingMode::BagOfWords);
        (embedder.model_name().to_string(), "lexical-responder".to_string())
    } else {
        (config.provider.embed_model_name.clone(), config.provider.chat_model_name.clone())
    }
}

fn finish(config: &RunConfig, report: StageReport) -> Result<StageReport, CliError> {
    let (embed, chat) = model_names(config);
    log::info!("stage {} finished, {} files", report.stage, report.files.len());
    record_stage(config, &embed, &chat, report.stage, &report.files)?;
    Ok(report)
}

fn embedder(config: &RunConfig) -> Result<Box<dyn EmbeddingProvider>, CliError> {
    if config.stub_mode {
        Ok(Box::new(StubEmbedder::with_mode(
            config.stub.embed_dim,
            config.stage_seed("embed"),
            StubEmbeddingMode::BagOfWords,
        )))
    } else {
        Ok(Box::new(OpenAiCompatible::from_env(config.provider.clone())?))
    }
}

fn chat(config: &RunConfig, stage: &str) -> Result<Box<dyn ChatProvider>, CliError> {
    if config.stub_mode {
        Ok(Box::new(
            LexicalResponder::new(config.stage_seed(stage)).with_consistency(config.stub.consistency),
        ))
    } else {
        Ok(Box::new(OpenAiCompatible::from_env(config.provider.clone())?))
    }
}

/// Reads and validates the corpus and stores a normalized snapshot.
pub fn cmd_ingest(config: &RunConfig) -> Result<StageReport, CliError> {
    config.validate()?;
    let format = config
        .corpus
        .format
        .or_else(|| CorpusFormat::from_path(&config.corpus.path))
        .ok_or_else(|| CliError::Config(format!("cannot tell the format of {}", config.corpus.path.display())))?;
    let corpus = ingest_corpus(&config.corpus.path, format)?;
    fs::create_dir_all(&config.output_dir)?;
    corpus.write_jsonl(&out_path(config, CORPUS_SNAPSHOT))?;

    let docs = corpus.documents();
    let with_fulltext = docs.iter().filter(|d| d.has_fulltext()).count();
    let commentary = docs.iter().filter(|d| d.is_commentary()).count();
    let dual = docs.iter().filter(|d| !d.is_commentary() && d.is_dual()).count();
    write_json(
        config,
        INGEST_STATS,
        &json!({
            "source": config.corpus.path,
            "documents": docs.len(),
            "with_fulltext": with_fulltext,
            "fulltext_coverage": corpus.fulltext_coverage(),
            "commentary": commentary,
            "dual_labeled": dual,
        }),
    )?;
    finish(
        config,
        StageReport {
            stage: "ingest",
            lines: vec![
                format!("{} documents", docs.len()),
                format!(
                    "full text for {with_fulltext} ({:.1}%)",
                    corpus.fulltext_coverage() * 100.0
                ),
                format!("{dual} dual-labeled, {commentary} commentary"),
            ],
            files: vec![CORPUS_SNAPSHOT, INGEST_STATS],
        },
    )
}

/// Runs the recursive primary loop and stores the registry and trace.
/// Non-convergence still writes every output before reporting the error.
pub fn cmd_classify_primary(config: &RunConfig) -> Result<StageReport, CliError> {
    config.validate()?;
    let corpus = load_snapshot(config)?;
    let provider_config = config.effective_provider();
    let embedder = embedder(config)?;
    let chat = chat(config, "primary-chat")?;
    let cache = EmbeddingCache::open(&out_path(config, EMBEDDING_CACHE))?;
    let mut loop_config = config.primary.clone();
    loop_config.rng_seed = config.stage_seed("primary");
    let ctx = PrimaryContext {
        embedder: embedder.as_ref(),
        chat: chat.as_ref(),
        cache: &cache,
        provider_config: &provider_config,
    };
    let outcome = run_primary_pipeline(&corpus, &loop_config, &ctx)?;
    let registry = &outcome.registry;

    write_json(config, REGISTRY, registry)?;
    let mut trace = trace_json(&outcome);
    trace["seed"] = json!(loop_config.rng_seed);
    write_json(config, PRIMARY_TRACE, &trace)?;

    let distribution = registry.distribution();
    let mut w = csv::Writer::from_writer(create(config, PRIMARY_DISTRIBUTION)?);
    w.write_record(["theme", "title", "born_iteration", "source_cluster", "agreement", "n_abstracts"])
        .map_err(stage_err)?;
    for g in registry.all_ids() {
        let (born, cluster, agreement) = registry
            .entry(g)
            .map(|e| (e.born_iteration.to_string(), e.source_cluster.to_string(), format!("{:.6}", e.agreement)))
            .unwrap_or_default();
        w.write_record([g.to_string(), registry.title(g).to_string(), born, cluster, agreement, distribution[&g].to_string()])
            .map_err(stage_err)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(config, PRIMARY_ASSIGNMENTS)?);
    w.write_record(["doc_id", "theme"]).map_err(stage_err)?;
    for (doc, g) in &registry.assignments {
        w.write_record([doc.as_str(), &g.to_string()]).map_err(stage_err)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(config, AGREEMENT_TRACE)?);
    w.write_record(["iteration", "cluster", "size", "agreement", "stable", "title"]).map_err(stage_err)?;
    for s in &outcome.iterations {
        let sizes = s.assignment.sizes();
        for (&j, &a) in &s.agreement {
            w.write_record([
                s.t.to_string(),
                j.to_string(),
                sizes[j].to_string(),
                format!("{a:.6}"),
                s.stable_ids.contains(&j).to_string(),
                s.themes.get(j).map(|t| t.title.clone()).unwrap_or_default(),
            ])
            .map_err(stage_err)?;
        }
    }
    w.flush()?;

    let other = distribution[&registry.other_id];
    let report = finish(
        config,
        StageReport {
            stage: "classify-primary",
            lines: vec![
                format!(
                    "{} stable themes after {} iteration(s), termination {:?}",
                    registry.n_themes(),
                    outcome.iterations.len(),
                    outcome.termination
                ),
                format!(
                    "Other holds {other} of {} abstracts ({:.1}%)",
                    corpus.len(),
                    100.0 * other as f64 / corpus.len() as f64
                ),
            ],
            files: vec![EMBEDDING_CACHE, REGISTRY, PRIMARY_TRACE, PRIMARY_DISTRIBUTION, PRIMARY_ASSIGNMENTS, AGREEMENT_TRACE],
        },
    )?;
    if !outcome.converged() {
        return Err(CliError::NonConvergence {
            iterations: outcome.iterations.len(),
        });
    }
    Ok(report)
}

/// Segments full texts and labels every segment against the registry.
pub fn cmd_classify_secondary(config: &RunConfig) -> Result<StageReport, CliError> {
    config.validate()?;
    let corpus = load_snapshot(config)?;
    let registry = load_registry(config)?;
    let mut segments: Vec<Segment> = Vec::new();
    for doc in corpus.documents() {
        if doc.has_fulltext() && registry.assignment(&doc.id).is_some() {
            segments.extend(segment_fulltext(doc, &config.segmentation)?);
        }
    }
    let mut w = create(config, SEGMENTS)?;
    for s in &segments {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;

    let chat = chat(config, "secondary-chat")?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.stage_seed("secondary"));
    let sets = if segments.is_empty() {
        Vec::new()
    } else {
        classify_segments_multilabel(
            &segments,
            &registry,
            chat.as_ref(),
            &config.effective_provider(),
            &config.secondary,
            &mut rng,
        )?
    };
    write_segment_labels_csv(&sets, create(config, SEGMENT_LABELS)?)?;
    let summary = case_partition(&sets);
    write_json(config, CASE_SUMMARY, &summary)?;
    let [single, other, multi] = summary.fractions();
    finish(
        config,
        StageReport {
            stage: "classify-secondary",
            lines: vec![
                format!("{} segments, {} labels", summary.total(), summary.total_labels),
                format!(
                    "single {:.1}%, indefinite {:.1}%, multi-topic {:.1}% ({:.1} ± {:.1} labels), {} flagged",
                    single * 100.0,
                    other * 100.0,
                    multi * 100.0,
                    summary.multi_mean,
                    summary.multi_std,
                    summary.flagged
                ),
            ],
            files: vec![SEGMENTS, SEGMENT_LABELS, CASE_SUMMARY],
        },
    )
}

fn theme_key(g: usize) -> String {
    format!("{g:02}")
}

/// Builds every report from stored outputs. Makes no provider calls.
pub fn cmd_analyze(config: &RunConfig) -> Result<StageReport, CliError> {
    config.validate()?;
    let corpus = load_snapshot(config)?;
    let registry = load_registry(config)?;
    let labels_path = require(config, SEGMENT_LABELS, "classify-secondary")?;
    let sets = read_segment_labels_csv(File::open(labels_path)?, registry.other_id, config.secondary.flag_above)?;
    let titles = |g: usize| registry.title(g).to_string();
    let mut lines = Vec::new();

    let graph = build_bipartite(&registry, &sets).map_err(stage_err)?;
    let matrix = adjacency_matrix(&graph);
    write_matrix_csv(&matrix, create(config, ADJACENCY)?).map_err(stage_err)?;
    let normalized: NormalizedAdjacency = normalize_rows(&matrix, config.analysis.normalize_floor);
    write_normalized_csv(&normalized, create(config, ADJACENCY_NORMALIZED)?).map_err(stage_err)?;
    let labels: Vec<String> = registry.all_ids().into_iter().map(titles).collect();
    let svg = heatmap_svg(&normalized, &labels, config.analysis.heatmap_order.as_deref());
    fs::write(out_path(config, HEATMAP), svg)?;
    write_flow_csv(&flow_summary(&matrix), &titles, create(config, FLOW_SUMMARY)?).map_err(stage_err)?;
    write_distribution_csv(&theme_distribution(&registry, &sets), &titles, create(config, THEME_DISTRIBUTION)?)
        .map_err(stage_err)?;
    lines.push(format!(
        "{} edges over {} themes, {} cells below the {:.0}% floor",
        graph.edges.len(),
        registry.other_id,
        normalized.blanked.len(),
        config.analysis.normalize_floor * 100.0
    ));

    let abstracts: Vec<&str> = corpus.documents().iter().map(|d| d.abstract_text.as_str()).collect();
    let table = bow(&abstracts, &config.lexical.bow).map_err(stage_err)?;
    let profile = zipf_profile(&table).map_err(stage_err)?;
    write_zipf_csv(&profile, create(config, ZIPF)?).map_err(stage_err)?;
    lines.push(format!(
        "{} tokens, {} terms; top {} terms ({:.1}%) cover 80% of tokens",
        table.total_tokens,
        table.vocabulary_size(),
        profile.pareto_cutoff_rank,
        profile.pareto_fraction * 100.0
    ));

    let mut by_theme: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut by_bucket: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for doc in corpus.documents() {
        let Some(g) = registry.assignment(&doc.id) else { continue };
        by_theme.entry(theme_key(g)).or_default().push(doc.abstract_text.clone());
        if let Some(b) = doc.year.and_then(year_bucket) {
            by_bucket
                .entry(format!("{}@{b}", theme_key(g)))
                .or_default()
                .push(doc.abstract_text.clone());
        }
    }
    let theme_table: Ctfidf = ctfidf(&by_theme, &config.lexical.ctfidf).map_err(stage_err)?;
    write_ctfidf_csv(&theme_table, config.lexical.top_terms, create(config, CTFIDF_THEMES)?).map_err(stage_err)?;
    let time_file = create(config, CTFIDF_TIME)?;
    let mut grid = Vec::new();
    if by_bucket.is_empty() {
        let mut w = csv::Writer::from_writer(time_file);
        w.write_record(["class", "rank", "term", "score"]).map_err(stage_err)?;
        w.flush()?;
    } else {
        let time_table: Ctfidf = ctfidf(&by_bucket, &config.lexical.ctfidf).map_err(stage_err)?;
        write_ctfidf_csv(&time_table, config.lexical.top_terms, time_file).map_err(stage_err)?;
        for g in registry.all_ids() {
            let cols = YEAR_BUCKETS
                .iter()
                .map(|b| {
                    let key = format!("{}@{b}", theme_key(g));
                    let terms = top_terms(&time_table, &key, config.lexical.grid_terms).unwrap_or_default();
                    (b.to_string(), terms)
                })
                .collect();
            grid.push((format!("{} {}", theme_key(g), titles(g)), cols));
        }
    }
    fs::write(out_path(config, TERM_GRID), term_grid_svg(&grid))?;
    lines.push(format!(
        "c-TF-IDF over {} theme classes and {} theme-period classes",
        by_theme.len(),
        by_bucket.len()
    ));

    let counts = AlignmentCounts::from_registry(&registry, &corpus);
    match alignment_report(&counts, &config.analysis.tiers) {
        Ok(report) => {
            let report: Alignment = report;
            write_alignment_csv(&report, &titles, create(config, ALIGNMENT)?).map_err(stage_err)?;
            lines.push(format!(
                "baseline dual rate {:.1}% over {} abstracts",
                report.baseline_rate * 100.0,
                report.total_docs
            ));
        }
        Err(e) => return Err(stage_err(e)),
    }

    finish(
        config,
        StageReport {
            stage: "analyze",
            lines,
            files: vec![
                ADJACENCY,
                ADJACENCY_NORMALIZED,
                HEATMAP,
                FLOW_SUMMARY,
                THEME_DISTRIBUTION,
                ZIPF,
                CTFIDF_THEMES,
                CTFIDF_TIME,
                TERM_GRID,
                ALIGNMENT,
            ],
        },
    )
}

/// All four stages in order. A non-converged primary stage does not stop
/// the run; its error is returned after the remaining stages finish.
pub fn cmd_report(config: &RunConfig) -> Result<Vec<StageReport>, CliError> {
    let mut reports = vec![cmd_ingest(config)?];
    let mut deferred = None;
    match cmd_classify_primary(config) {
        Ok(r) => reports.push(r),
        Err(e @ CliError::NonConvergence { .. }) => deferred = Some(e),
        Err(e) => return Err(e),
    }
    reports.push(cmd_classify_secondary(config)?);
    reports.push(cmd_analyze(config)?);
    match deferred {
        Some(e) => Err(e),
        None => Ok(reports),
    }
}

/// Writes a planted-topic corpus for trying the pipeline offline.
pub fn write_demo_corpus(path: &Path, docs: usize, seed: u64) -> Result<(), CliError> {
    let planted = thememap::synthetic::planted_corpus(&thememap::synthetic::PlantedConfig {
        n_docs: docs,
        seed,
        ..Default::default()
    });
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    planted.corpus.write_jsonl(path)?;
    Ok(())
}
