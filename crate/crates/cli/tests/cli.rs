use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use thememap_cli::commands::{self, cmd_analyze, cmd_classify_primary, cmd_classify_secondary, cmd_ingest};
use thememap_cli::config::RunConfig;
use thememap_cli::error::CliError;
use thememap_cli::manifest::{read_manifest, MANIFEST_FILE};

use thememap::corpus::{Corpus, Document};

fn thememap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thememap"))
        .args(args)
        .env_remove("OPENAI_API_KEY")
        .output()
        .expect("binary runs")
}

fn demo(dir: &Path, docs: usize) -> String {
    let corpus = dir.join("demo.jsonl");
    let out = thememap(&["demo-corpus", corpus.to_str().unwrap(), "--docs", &docs.to_string()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    corpus.to_str().unwrap().to_string()
}

#[test]
fn stub_report_exits_zero_and_lists_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = demo(dir.path(), 120);
    let out_dir = dir.path().join("out");
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!("seed = 9\nstub_mode = true\noutput_dir = \"out\"\n[corpus]\npath = \"{corpus}\"\n[primary]\nk = 4\n"),
    )
    .unwrap();
    let out = thememap(&["report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[analyze]"));

    let manifest = read_manifest(&out_dir).expect("manifest written");
    assert_eq!(manifest.seed, 9);
    assert!(manifest.stub_mode);
    assert_eq!(manifest.stages.len(), 4);
    let on_disk: Vec<String> = {
        let mut v: Vec<String> = fs::read_dir(&out_dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().to_string())
            .filter(|n| n != MANIFEST_FILE)
            .collect();
        v.sort();
        v
    };
    let listed: Vec<String> = manifest.files.iter().map(|f| f.name.clone()).collect();
    assert_eq!(listed, on_disk);
    for stage in manifest.stages.values() {
        for f in &stage.files {
            assert!(out_dir.join(f).is_file(), "{f} missing");
        }
    }
    let alignment = fs::read_to_string(out_dir.join(commands::ALIGNMENT)).unwrap();
    assert!(alignment.lines().last().unwrap().starts_with("baseline,"));
}

#[test]
fn analyze_without_prerequisites_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("empty");
    fs::create_dir_all(&out_dir).unwrap();
    let out = thememap(&["analyze", "--stub", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("corpus.jsonl") && err.contains("ingest"), "{err}");
}

#[test]
fn missing_corpus_and_bad_config_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = thememap(&[
        "ingest",
        "--stub",
        "--corpus",
        dir.path().join("nope.jsonl").to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[primary]\ntau = 2.0\n").unwrap();
    let out = thememap(&["ingest", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_api_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = demo(dir.path(), 40);
    let out_dir = dir.path().join("out");
    let args = ["--corpus", corpus.as_str(), "--out", out_dir.to_str().unwrap()];
    let out = thememap(&[&["ingest"], &args[..]].concat());
    assert_eq!(out.status.code(), Some(0));
    let out = thememap(&[&["classify-primary"], &args[..]].concat());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn non_convergence_exits_three_with_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = demo(dir.path(), 80);
    let cfg = dir.path().join("strict.toml");
    fs::write(
        &cfg,
        format!(
            "stub_mode = true\noutput_dir = \"out\"\n[corpus]\npath = \"{corpus}\"\n\
             [primary]\nk = 4\ntau = 1.0\nmax_iterations = 1\n[stub]\nconsistency = 0.3\n"
        ),
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(thememap(&["ingest", "--config", c]).status.code(), Some(0));
    let out = thememap(&["classify-primary", "--config", c]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let out_dir = dir.path().join("out");
    assert!(out_dir.join(commands::REGISTRY).is_file());
    let trace: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join(commands::PRIMARY_TRACE)).unwrap()).unwrap();
    assert_eq!(trace["termination"], "max_iterations");
}

#[test]
fn stages_run_in_isolation_from_stored_files() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = dir.path().join("c.jsonl");
    commands::write_demo_corpus(&corpus_path, 100, 3).unwrap();
    let mut config = RunConfig::stub_defaults(&corpus_path, &dir.path().join("out"));
    config.primary.k = 4;

    assert!(matches!(cmd_classify_secondary(&config), Err(CliError::MissingPrerequisite { .. })));
    cmd_ingest(&config).unwrap();
    // The original corpus is no longer needed once the snapshot exists.
    fs::remove_file(&corpus_path).unwrap();
    cmd_classify_primary(&config).unwrap();
    assert!(matches!(cmd_analyze(&config), Err(CliError::MissingPrerequisite { stage: "classify-secondary", .. })));
    cmd_classify_secondary(&config).unwrap();

    let labels = config.output_dir.join(commands::SEGMENT_LABELS);
    let before = fs::read(&labels).unwrap();
    let report = cmd_analyze(&config).unwrap();
    let first: Vec<Vec<u8>> = report.files.iter().map(|f| fs::read(config.output_dir.join(f)).unwrap()).collect();
    for f in &report.files {
        fs::remove_file(config.output_dir.join(f)).unwrap();
    }
    cmd_analyze(&config).unwrap();
    let second: Vec<Vec<u8>> = report.files.iter().map(|f| fs::read(config.output_dir.join(f)).unwrap()).collect();
    assert_eq!(first, second, "regenerated analysis differs");
    assert_eq!(fs::read(&labels).unwrap(), before, "analyze must not touch classification outputs");

    let manifest = read_manifest(&config.output_dir).unwrap();
    assert_eq!(
        manifest.stages.keys().cloned().collect::<Vec<_>>(),
        ["analyze", "classify-primary", "classify-secondary", "ingest"]
    );
}

#[test]
fn ingest_reports_fulltext_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let docs: Vec<Document> = (0..1519)
        .map(|i| {
            let d = Document::new(format!("a{i}"), "an abstract about things");
            if i < 1490 {
                d.with_fulltext("Body text of the article.")
            } else {
                d
            }
        })
        .collect();
    let corpus_path = dir.path().join("fixture.jsonl");
    Corpus::new(docs, "fixture").unwrap().write_jsonl(&corpus_path).unwrap();
    let config = RunConfig::stub_defaults(&corpus_path, &dir.path().join("out"));
    let report = cmd_ingest(&config).unwrap();
    assert!(report.lines.iter().any(|l| l.contains("full text for 1490 (98.1%)")), "{:?}", report.lines);
    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(config.output_dir.join(commands::INGEST_STATS)).unwrap()).unwrap();
    assert_eq!(stats["documents"], 1519);
}
