//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::time::{Duration, Instant};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use thememap::alignment::{alignment_report, AlignmentCounts, DualityTier, TierThresholds};
use thememap::graph::{adjacency_matrix, build_bipartite, flow_summary, normalize_rows, AdjacencyMatrix, BipartiteGraph};
use thememap::lexical::{bow, ctfidf, zipf_profile, CtfidfTable, LexicalOptions};
use thememap::primary::{run_on_embeddings, run_primary_pipeline, LoopConfig, PrimaryContext, ThemeRegistry};
use thememap::provider::{EmbeddingCache, LexicalResponder, ProviderConfig, StubEmbedder, StubEmbeddingMode};
use thememap::secondary::SegmentLabelSet;
use thememap::synthetic::{planted_corpus, PlantedConfig};
use thememap::Embedding;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// Printed integers of the 17-row alignment table: (theme, # Abs, # Dual,
// precision %, recall %, lift, tier).
const ALIGNMENT_ROWS: [(usize, usize, usize, f64, f64, f64, DualityTier); 17] = [
    (8, 28, 24, 85.7, 3.6, 1.94, DualityTier::VeryHigh),
    (5, 202, 162, 80.2, 24.5, 1.81, DualityTier::VeryHigh),
    (2, 144, 110, 76.4, 16.6, 1.73, DualityTier::VeryHigh),
    (1, 253, 189, 74.7, 28.6, 1.69, DualityTier::VeryHigh),
    (15, 21, 14, 66.7, 2.1, 1.51, DualityTier::VeryHigh),
    (9, 44, 27, 61.4, 4.1, 1.39, DualityTier::High),
    (16, 10, 4, 40.0, 0.6, 0.90, DualityTier::Low),
    (17, 146, 55, 37.7, 8.3, 0.85, DualityTier::Low),
    (7, 58, 21, 36.2, 3.2, 0.82, DualityTier::Low),
    (13, 25, 7, 28.0, 1.1, 0.63, DualityTier::Low),
    (14, 25, 3, 12.0, 0.5, 0.27, DualityTier::VeryLow),
    (4, 108, 12, 11.1, 1.8, 0.25, DualityTier::VeryLow),
    (12, 36, 4, 11.1, 0.6, 0.25, DualityTier::VeryLow),
    (6, 201, 17, 8.5, 2.6, 0.19, DualityTier::VeryLow),
    (3, 122, 10, 8.2, 1.5, 0.19, DualityTier::VeryLow),
    (10, 43, 2, 4.7, 0.3, 0.11, DualityTier::VeryLow),
    (11, 27, 0, 0.0, 0.0, 0.00, DualityTier::VeryLow),
];

// Theme-to-theme segment classification counts, rows = abstract theme.
const FLOW_COUNTS: [[u64; 17]; 17] = [
    [1907, 168, 1, 143, 1820, 1061, 1870, 499, 69, 552, 366, 250, 340, 11, 1776, 262, 59],
    [104, 1332, 16, 170, 1501, 219, 771, 673, 23, 107, 115, 80, 156, 9, 928, 220, 41],
    [11, 45, 931, 497, 34, 528, 70, 78, 19, 15, 72, 150, 49, 126, 227, 29, 37],
    [36, 75, 64, 841, 34, 195, 179, 17, 63, 98, 277, 100, 107, 3, 209, 155, 41],
    [267, 372, 10, 214, 2131, 152, 1173, 597, 21, 122, 54, 245, 560, 33, 895, 533, 73],
    [172, 42, 84, 141, 11, 1817, 183, 66, 81, 241, 575, 521, 122, 11, 274, 81, 73],
    [121, 60, 19, 274, 330, 73, 559, 30, 40, 186, 124, 13, 44, 5, 441, 19, 31],
    [19, 16, 6, 58, 76, 51, 8, 241, 14, 22, 26, 16, 7, 2, 123, 2, 13],
    [21, 2, 11, 141, 6, 145, 75, 12, 353, 184, 171, 150, 31, 9, 132, 9, 41],
    [44, 8, 3, 274, 19, 134, 222, 4, 210, 368, 395, 143, 77, 1, 266, 1, 14],
    [17, 0, 8, 109, 0, 120, 60, 3, 43, 125, 201, 86, 43, 11, 86, 3, 5],
    [17, 2, 8, 37, 5, 161, 12, 2, 12, 25, 35, 291, 83, 3, 15, 13, 11],
    [18, 7, 8, 91, 37, 103, 94, 12, 15, 47, 76, 180, 186, 12, 83, 11, 10],
    [11, 32, 40, 37, 64, 139, 26, 22, 7, 9, 26, 59, 10, 191, 95, 17, 13],
    [26, 0, 5, 64, 96, 48, 69, 65, 32, 29, 28, 26, 24, 5, 151, 9, 40],
    [4, 1, 0, 47, 32, 12, 19, 11, 0, 2, 3, 3, 7, 0, 1, 105, 17],
    [74, 34, 47, 368, 279, 420, 180, 121, 122, 122, 201, 393, 318, 30, 255, 93, 438],
];

// Per-theme (No. Class, Same, To Other, No. Gained, % Corpus).
const FLOW_ROWS: [(u64, u64, u64, u64, f64); 17] = [
    (11154, 1907, 9247, 962, 5.78),
    (6465, 1332, 5133, 864, 4.42),
    (2918, 931, 1987, 330, 2.54),
    (2494, 841, 1653, 2665, 7.06),
    (7452, 2131, 5321, 4344, 13.0),
    (4495, 1817, 2678, 3561, 10.8),
    (2369, 559, 1810, 5011, 11.2),
    (700, 241, 459, 2212, 4.94),
    (1493, 353, 1140, 771, 2.26),
    (2183, 368, 1815, 1886, 4.54),
    (920, 201, 719, 2544, 5.53),
    (732, 291, 441, 2415, 5.45),
    (990, 186, 804, 1978, 4.36),
    (798, 191, 607, 271, 0.93),
    (717, 151, 566, 5806, 12.0),
    (264, 105, 159, 1457, 3.15),
    (3495, 438, 3057, 519, 1.93),
];

fn criterion_1() -> Check {
    let rows: Vec<(usize, usize, usize)> = ALIGNMENT_ROWS.iter().map(|r| (r.0, r.1, r.2)).collect();
    let counts = AlignmentCounts::from_rows(&rows);
    ensure(counts.total_docs == 1493 && counts.total_dual == 661, || {
        format!("totals {} / {}", counts.total_docs, counts.total_dual)
    })?;
    let report = alignment_report::<f64>(&counts, &TierThresholds::default()).map_err(|e| e.to_string())?;
    let mut worst = (0.0f64, 0.0f64);
    for &(theme, _, _, p, r, lift, tier) in &ALIGNMENT_ROWS {
        let row = report.rows.iter().find(|x| x.theme == theme).ok_or(format!("theme {theme} missing"))?;
        let dp = (row.metrics.precision * 100.0 - p).abs();
        let dr = (row.metrics.recall * 100.0 - r).abs();
        let dl = (row.metrics.lift.unwrap() - lift).abs();
        worst = (worst.0.max(dp).max(dr), worst.1.max(dl));
        ensure(dp <= 0.05 && dr <= 0.05 && dl <= 0.005, || {
            format!("theme {theme}: dP {dp:.4}pp dR {dr:.4}pp dLift {dl:.4}")
        })?;
        ensure(row.tier == Some(tier), || format!("theme {theme}: tier {:?} vs {tier:?}", row.tier))?;
    }
    Ok(format!(
        "17 rows, baseline {:.4}, max |dP|,|dR| {:.3}pp, max |dLift| {:.4}",
        report.baseline_rate, worst.0, worst.1
    ))
}

fn criterion_2() -> Check {
    let m = AdjacencyMatrix::from_rows(FLOW_COUNTS.iter().map(|r| r.to_vec()).collect()).map_err(|e| e.to_string())?;
    ensure(m.total() == 49_639, || format!("grand total {}", m.total()))?;
    ensure(m.col_sum(1) == 2869, || format!("column 01 sum {}", m.col_sum(1)))?;
    let flows = flow_summary(&m);
    let mut worst_share = 0.0f64;
    for (row, &(n_class, same, to_other, gained, share)) in flows.iter().zip(&FLOW_ROWS) {
        ensure(
            (row.n_class, row.same, row.to_other, row.gained) == (n_class, same, to_other, gained),
            || format!("theme {}: {:?} vs {:?}", row.theme, (row.n_class, row.same, row.to_other, row.gained), (n_class, same, to_other, gained)),
        )?;
        let d = (row.corpus_share * 100.0 - share).abs();
        worst_share = worst_share.max(d);
        ensure(d <= 0.05, || format!("theme {} share {:.3}% vs {share}%", row.theme, row.corpus_share * 100.0))?;
    }
    let n = normalize_rows::<f64>(&m, 0.01);
    let forward = n.share(3, 6) * 100.0;
    let reverse = n.share(6, 3) * 100.0;
    ensure((forward - 18.1).abs() <= 0.1 && (reverse - 1.9).abs() <= 0.1, || {
        format!("asymmetry {forward:.2}% / {reverse:.2}%")
    })?;
    Ok(format!(
        "17 themes, total 49639, max |dShare| {worst_share:.3}pp, 03->06 {forward:.2}% vs 06->03 {reverse:.2}%"
    ))
}

fn brute_ctfidf(classes: &BTreeMap<String, Vec<String>>, min_df: usize, max_frac: f64) -> BTreeMap<(String, String), f64> {
    let tokens = |doc: &str| -> Vec<String> {
        let words: Vec<&str> = doc.split(' ').filter(|w| !w.is_empty()).collect();
        let mut t: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        for i in 1..words.len() {
            t.push(format!("{} {}", words[i - 1], words[i]));
        }
        t
    };
    let all_docs: Vec<Vec<String>> = classes.values().flatten().map(|d| tokens(d)).collect();
    let n = all_docs.len() as f64;
    let mut df: HashMap<String, usize> = HashMap::new();
    for d in &all_docs {
        for t in d.iter().collect::<HashSet<_>>() {
            *df.entry(t.clone()).or_insert(0) += 1;
        }
    }
    let keep = |t: &str| df.get(t).is_some_and(|&d| d >= min_df && d as f64 <= max_frac * n);
    let mut tf: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (c, docs) in classes {
        for d in docs {
            for t in tokens(d) {
                if keep(&t) {
                    *tf.entry((c.clone(), t)).or_insert(0) += 1;
                }
            }
        }
    }
    let a = tf.values().sum::<usize>() as f64 / classes.len() as f64;
    tf.into_iter()
        .map(|((c, t), f)| {
            let s = (f as f64).sqrt() * (1.0 + a / df[&t] as f64).ln();
            ((c, t), s)
        })
        .collect()
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let vocab: Vec<String> = (0..30).map(|i| format!("t{i}")).collect();
    let mut worst = 0.0f64;
    let mut scored = 0;
    for corpus in 0..50 {
        let n_classes = rng.random_range(1..=5);
        let mut classes = BTreeMap::new();
        let mut budget = 200;
        for c in 0..n_classes {
            let n_docs = rng.random_range(1..=(budget - (n_classes - c - 1)).min(40));
            budget -= n_docs;
            let docs = (0..n_docs)
                .map(|_| {
                    let len = rng.random_range(0..15);
                    (0..len).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect::<Vec<_>>().join(" ")
                })
                .collect();
            classes.insert(format!("c{c}"), docs);
        }
        let min_df = rng.random_range(1..=3);
        let max_frac = *[0.5, 0.8, 1.0].choose(&mut rng).unwrap();
        let options = LexicalOptions {
            min_doc_freq: min_df,
            max_doc_fraction: max_frac,
            ..LexicalOptions::ctfidf().without_stopwords()
        };
        let table: CtfidfTable = ctfidf(&classes, &options).map_err(|e| e.to_string())?;
        let oracle = brute_ctfidf(&classes, min_df, max_frac);
        let mine: BTreeMap<(String, String), f64> = table
            .scores
            .iter()
            .flat_map(|(c, terms)| terms.iter().map(move |(t, s)| ((c.clone(), t.clone()), *s)))
            .collect();
        ensure(mine.len() == oracle.len(), || {
            format!("corpus {corpus}: {} scored terms vs oracle {}", mine.len(), oracle.len())
        })?;
        for (key, expect) in &oracle {
            let got = *mine.get(key).ok_or(format!("corpus {corpus}: missing {key:?}"))?;
            let rel = if *expect == 0.0 { got.abs() } else { ((got - expect) / expect).abs() };
            worst = worst.max(rel);
            ensure(rel <= 1e-9, || format!("corpus {corpus} {key:?}: {got} vs {expect}"))?;
        }
        scored += oracle.len();
    }
    Ok(format!("50 corpora, {scored} scores, max relative error {worst:.2e}"))
}

fn criterion_4() -> Check {
    let n_vocab = 1000;
    let zipf = Zipf::new(n_vocab as f64, 1.0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let docs: Vec<String> = (0..500)
        .map(|_| {
            (0..100)
                .map(|_| format!("w{}", zipf.sample(&mut rng) as usize))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let table = bow(&docs, &LexicalOptions::bow().without_stopwords()).map_err(|e| e.to_string())?;
    ensure(table.total_tokens == 50_000, || format!("{} tokens", table.total_tokens))?;
    let profile = zipf_profile(&table).map_err(|e| e.to_string())?;
    let harmonic: f64 = (1..=n_vocab).map(|r| 1.0 / r as f64).sum();
    let mut worst = 0.0f64;
    for t in profile.ranked.iter().take(20) {
        let expected = (1.0 / t.rank as f64) / harmonic;
        let observed = t.frequency as f64 / table.total_tokens as f64;
        let rel = (observed - expected).abs() / expected;
        worst = worst.max(rel);
        ensure(rel <= 0.10, || format!("rank {}: {observed:.5} vs {expected:.5}", t.rank))?;
    }
    let total = profile.total_tokens;
    let r = profile.pareto_cutoff_rank;
    ensure(5 * profile.cumulative(r) >= 4 * total && 5 * profile.cumulative(r - 1) < 4 * total, || {
        format!("cutoff {r} not minimal")
    })?;
    Ok(format!(
        "{} tokens, top-20 max relative deviation {:.1}%, Pareto cutoff {r}/{} ({:.1}%)",
        total,
        worst * 100.0,
        profile.ranked.len(),
        profile.pareto_fraction * 100.0
    ))
}

fn binomial_majority(p: f64) -> f64 {
    let choose = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
    (3..=5).map(|j| choose[j] * p.powi(j as i32) * (1.0 - p).powi(5 - j as i32)).sum()
}

fn criterion_5() -> Check {
    let planted = planted_corpus(&PlantedConfig::default());
    let embedder = StubEmbedder::with_mode(64, 7, StubEmbeddingMode::BagOfWords);
    let chat = LexicalResponder::new(11).with_consistency(0.9);
    let provider_config = ProviderConfig {
        embed_dim: 64,
        ..Default::default()
    };
    let cache = EmbeddingCache::in_memory();
    let ctx = PrimaryContext {
        embedder: &embedder,
        chat: &chat,
        cache: &cache,
        provider_config: &provider_config,
    };
    let config = LoopConfig {
        k: 4,
        rng_seed: 5,
        ..Default::default()
    };
    let outcome = run_primary_pipeline(&planted.corpus, &config, &ctx).map_err(|e| e.to_string())?;
    let reg = &outcome.registry;
    ensure(reg.n_themes() == 4, || format!("{} stable themes", reg.n_themes()))?;

    let mut votes: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (doc, &g) in &reg.assignments {
        *votes.entry(g).or_default().entry(planted.truth[doc]).or_default() += 1;
    }
    let mapping: BTreeMap<usize, usize> = (1..=4)
        .map(|g| {
            let best = votes.get(&g).and_then(|v| v.iter().max_by_key(|(_, c)| **c)).map(|(t, _)| *t);
            (g, best.unwrap_or(usize::MAX))
        })
        .collect();
    let distinct: BTreeSet<usize> = mapping.values().copied().collect();
    ensure(distinct.len() == 4, || format!("themes map onto planted topics {mapping:?}"))?;
    let n = planted.corpus.len() as f64;
    let correct = reg
        .assignments
        .iter()
        .filter(|(doc, g)| mapping.get(g) == Some(&planted.truth[*doc]))
        .count() as f64
        / n;
    let other = reg.assignments.values().filter(|&&g| g == reg.other_id).count() as f64 / n;
    ensure(correct >= 0.85, || format!("only {:.1}% on planted theme", correct * 100.0))?;
    ensure(other < config.delta && outcome.converged(), || format!("Other mass {:.1}%", other * 100.0))?;
    let resolved = outcome.iterations[0].resolution_rate();
    let oracle = binomial_majority(0.9);
    ensure((resolved - oracle).abs() <= 0.03, || {
        format!("resolution {:.3} vs binomial {:.3}", resolved, oracle)
    })?;
    Ok(format!(
        "4 stable themes in {} iteration(s), {:.1}% on planted theme, Other {:.1}%, resolution {:.3} vs binomial {:.3}",
        outcome.iterations.len(),
        correct * 100.0,
        other * 100.0,
        resolved,
        oracle
    ))
}

fn check_loop_contract(outcome: &thememap::primary::PrimaryOutcome, ids: &[String], tau: f64, boundary_hits: &mut usize) -> Result<(), String> {
    for (pos, s) in outcome.iterations.iter().enumerate() {
        for (&j, &a) in &s.agreement {
            ensure((0.0..=1.0).contains(&a), || format!("A_{j} = {a}"))?;
            let stable = s.stable_ids.contains(&j);
            ensure(stable == (a >= tau), || format!("cluster {j}: A {a} tau {tau} stable {stable}"))?;
            if a == tau {
                *boundary_hits += 1;
            }
        }
        let covered: BTreeSet<usize> = s.stable_ids.iter().chain(&s.unstable_ids).copied().collect();
        ensure(covered.len() == s.assignment.k && s.stable_ids.iter().all(|j| !s.unstable_ids.contains(j)), || {
            "stable/unstable not a partition".to_string()
        })?;
        if !s.stable_ids.is_empty() {
            ensure(s.carried_ids.len() < s.working_ids.len(), || format!("iteration {} did not shrink", s.t))?;
        }
        if let Some(next) = outcome.iterations.get(pos + 1) {
            ensure(next.working_ids == s.carried_ids, || "carry-forward mismatch".to_string())?;
        }
        for r in &s.consensus {
            let max = r.run_labels.iter().map(|l| r.run_labels.iter().filter(|x| *x == l).count()).max().unwrap_or(0);
            ensure(r.agree_count == max, || format!("{}: agree_count", r.doc_id))?;
            if let Some(l) = r.final_label {
                ensure(r.run_labels.iter().filter(|x| **x == l).count() >= 3, || format!("{}: unsound", r.doc_id))?;
            }
        }
    }
    ensure(outcome.iterations[0].working_ids.len() == ids.len(), || "X^1 must be the whole corpus".into())?;
    let reg = &outcome.registry;
    let n_stable: usize = outcome.iterations.iter().map(|s| s.stable_ids.len()).sum();
    ensure(reg.n_themes() == n_stable && reg.other_id == n_stable + 1, || "registry size".into())?;
    ensure(reg.entries.iter().enumerate().all(|(i, e)| e.global_id == i + 1), || "ids not dense".into())?;
    let keys: Vec<&String> = reg.assignments.keys().collect();
    let mut sorted: Vec<&String> = ids.iter().collect();
    sorted.sort();
    ensure(keys == sorted, || "assignments do not cover every document once".into())?;
    let other = reg.assignments.values().filter(|&&g| g == reg.other_id).count();
    let stable = reg.assignments.values().filter(|&&g| g <= n_stable).count();
    let last = outcome.iterations.last().unwrap();
    ensure(stable + other == ids.len() && other == last.carried_ids.len(), || {
        format!("conservation: {stable} + {other} vs {}", ids.len())
    })?;
    Ok(())
}

fn criterion_6() -> Check {
    let taus = [0.5, 0.6, 3.0 / 5.0, 2.0 / 3.0, 0.75];
    let mut boundary_hits = 0;
    let mut iterations = 0;
    let mut non_converged = 0;
    for instance in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(instance);
        let k = rng.random_range(2..=4);
        let planted = planted_corpus(&PlantedConfig {
            n_docs: rng.random_range(k.max(8)..=36),
            n_themes: rng.random_range(2..=4),
            words_per_theme: 6,
            filler_words: 12,
            abstract_words: 12,
            paragraphs: (1, 1),
            paragraph_words: 5,
            seed: instance,
            ..Default::default()
        });
        let embedder = StubEmbedder::with_mode(16, instance, StubEmbeddingMode::BagOfWords);
        let items: Vec<(String, String, Embedding)> = planted
            .corpus
            .documents()
            .iter()
            .map(|d| (d.id.clone(), d.abstract_text.clone(), embedder.embed_one(&d.abstract_text)))
            .collect();
        let chat = LexicalResponder::new(instance).with_consistency(rng.random_range(0.4..=1.0));
        let tau = *taus.choose(&mut rng).unwrap();
        let config = LoopConfig {
            k,
            tau,
            delta: *[0.1, 0.2, 0.3].choose(&mut rng).unwrap(),
            max_iterations: 6,
            batch_size: rng.random_range(3..=10),
            rng_seed: instance,
            ..Default::default()
        };
        let outcome = run_on_embeddings(&items, &config, &chat, &ProviderConfig::default())
            .map_err(|e| format!("instance {instance}: {e}"))?;
        let ids: Vec<String> = items.iter().map(|i| i.0.clone()).collect();
        check_loop_contract(&outcome, &ids, tau, &mut boundary_hits).map_err(|e| format!("instance {instance}: {e}"))?;
        iterations += outcome.iterations.len();
        non_converged += usize::from(!outcome.converged());
    }
    ensure(boundary_hits > 0, || "no instance exercised A = tau".into())?;
    Ok(format!(
        "1000 instances, {iterations} iterations, {boundary_hits} clusters exactly at tau (all stable), {non_converged} hit max_iterations"
    ))
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut edges_seen = 0;
    for case in 0..1000 {
        let dim = rng.random_range(2..=18);
        let other = dim;
        let n_docs = rng.random_range(1..=30);
        let assignments: BTreeMap<String, usize> =
            (0..n_docs).map(|d| (format!("d{d}"), rng.random_range(1..=dim))).collect();
        let registry = ThemeRegistry {
            entries: vec![],
            other_id: other,
            assignments,
        };
        let mut sets = Vec::new();
        for d in 0..n_docs {
            for s in 0..rng.random_range(0..6) {
                let n_labels = rng.random_range(0..=4.min(dim - 1));
                let labels: BTreeSet<usize> = (0..n_labels).map(|_| rng.random_range(1..dim)).collect();
                sets.push(SegmentLabelSet::from_specific(format!("d{d}"), s, labels, other, 4));
            }
        }
        let graph = build_bipartite(&registry, &sets).map_err(|e| e.to_string())?;
        let m = adjacency_matrix(&graph);
        let label_total: usize = sets.iter().map(|s| s.labels.len()).sum();
        ensure(m.total() as usize == graph.edges.len() && graph.edges.len() == label_total, || {
            format!("case {case}: total {} edges {} labels {label_total}", m.total(), graph.edges.len())
        })?;
        let mut shuffled = graph.edges.clone();
        shuffled.shuffle(&mut rng);
        ensure(adjacency_matrix(&BipartiteGraph { dim: graph.dim, edges: shuffled }) == m, || {
            format!("case {case}: order-dependent matrix")
        })?;
        let n = normalize_rows::<f64>(&m, 0.01);
        for r in 1..=dim {
            if m.row_sum(r) > 0 {
                let s: f64 = n.shares[r - 1].iter().sum();
                ensure((s - 1.0).abs() <= 1e-12, || format!("case {case}: row {r} sums to {s}"))?;
            }
        }
        if m.total() > 0 {
            let shares: f64 = flow_summary(&m).iter().map(|f| f.corpus_share).sum();
            ensure((shares - 1.0).abs() <= 1e-12, || format!("case {case}: shares sum {shares}"))?;
        }
        edges_seen += graph.edges.len();
    }
    Ok(format!("1000 collections, {edges_seen} edges"))
}

fn criterion_8() -> Check {
    use thememap_cli::config::RunConfig;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let planted = planted_corpus(&PlantedConfig {
        n_docs: 120,
        ..Default::default()
    });
    let corpus_path = dir.path().join("corpus.jsonl");
    planted.corpus.write_jsonl(&corpus_path).map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<BTreeMap<String, Vec<u8>>, String> {
        let mut config = RunConfig::stub_defaults(&corpus_path, &dir.path().join(name));
        config.seed = 42;
        config.primary.k = 4;
        thememap_cli::commands::cmd_report(&config).map_err(|e| e.to_string())?;
        let mut files = BTreeMap::new();
        for entry in fs::read_dir(dir.path().join(name)).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.extension().is_some_and(|e| e == "csv") {
                let name = path.file_name().unwrap().to_string_lossy().to_string();
                files.insert(name, fs::read(&path).map_err(|e| e.to_string())?);
            }
        }
        Ok(files)
    };
    let first = run("run1")?;
    let second = run("run2")?;
    ensure(!first.is_empty(), || "no CSV outputs".into())?;
    ensure(first.keys().eq(second.keys()), || "different CSV file sets".into())?;
    for (name, bytes) in &first {
        ensure(second[name] == *bytes, || format!("{name} differs between runs"))?;
    }
    let bytes: usize = first.values().map(Vec::len).sum();
    Ok(format!("{} CSV files ({bytes} bytes) byte-identical across two seeded runs", first.len()))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 8] = [
        ("alignment table reproduction", Duration::from_secs(1), criterion_1),
        ("flow summary vs adjacency matrix", Duration::from_secs(1), criterion_2),
        ("c-TF-IDF oracle equivalence", Duration::from_secs(10), criterion_3),
        ("Zipf/Pareto profile", Duration::from_secs(5), criterion_4),
        ("planted-topic convergence", Duration::from_secs(30), criterion_5),
        ("loop contract on 1000 mini-instances", Duration::from_secs(10), criterion_6),
        ("graph conservation fuzz", Duration::from_secs(5), criterion_7),
        ("offline pipeline determinism", Duration::from_secs(60), criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &n.to_string()) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (status, detail) = match result {
            Ok(d) if elapsed <= *limit => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over time limit {limit:?}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("acceptance {n} {status} [{name}] {detail} ({:.2}s)", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
