use std::path::Path;
use std::process::{Command, Output};

use hintbandit::analysis::Corpus;
use hintbandit::session::Source;
use hintbandit::Condition;

fn hintbandit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hintbandit"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_then_analyze_every_metric() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("mock.jsonl");
    let world = dir.path().join("world");
    let out = hintbandit(&[
        "simulate", "--mode", "mock", "--concept", "penguin", "--condition", "both", "-n", "4",
        "--seed", "3", "--out", s(&corpus), "--world-dir", s(&world),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("median features"), "{stderr}");

    let records = Corpus::load_jsonl(&corpus).unwrap();
    assert_eq!(records.len(), 8);
    assert!(records
        .all()
        .iter()
        .all(|r| r.source == Source::Mock && r.config.participant_id.starts_with("sim-penguin-")));
    let hinted = records.all().iter().filter(|r| r.config.condition == Condition::Hinted).count();
    assert_eq!(hinted, 4);

    let embeddings = world.join("embeddings.txt");
    assert!(world.join("frequencies.tsv").is_file());
    for metric in ["counts", "types", "density", "curve", "arms", "corr"] {
        let csv = dir.path().join(format!("{metric}.csv"));
        let out = hintbandit(&[
            "analyze", s(&corpus), "--embeddings", s(&embeddings), "--metric", metric,
            "--concept", "penguin", "--out", s(&csv),
        ]);
        assert_eq!(out.status.code(), Some(0), "{metric}: {}", String::from_utf8_lossy(&out.stderr));
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.lines().count() >= 2, "{metric}: {text}");
    }
}

#[test]
fn same_seed_gives_the_same_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for (path, jobs) in [(&a, "1"), (&b, "3")] {
        let out = hintbandit(&[
            "simulate", "--mode", "mock", "--concept", "desk", "--condition", "hinted", "-n", "3",
            "--seed", "10", "--jobs", jobs, "--out", s(path),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn analyze_counts_to_stdout_with_outlier_filter() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures");
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("e.txt");
    std::fs::write(&emb, "cat 1 0\ndog 0 1\n").unwrap();
    let out = hintbandit(&[
        "analyze", s(&fixtures.join("analysis_corpus.jsonl")), "--embeddings", s(&emb),
        "--metric", "counts", "--filter-outliers",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("participant_id,concept,condition,feature_count\n"), "{stdout}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("outlier"));
}

#[test]
fn schema_errors_exit_2_other_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("e.txt");
    std::fs::write(&emb, "cat 1 0\ndog 0 1\n").unwrap();

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"schema_version\": 1, \"config\": 7}\n").unwrap();
    let out = hintbandit(&["analyze", s(&bad), "--embeddings", s(&emb), "--metric", "counts"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let not_json = dir.path().join("text.jsonl");
    std::fs::write(&not_json, "hello\n").unwrap();
    let out = hintbandit(&["analyze", s(&not_json), "--embeddings", s(&emb), "--metric", "counts"]);
    assert_eq!(out.status.code(), Some(2));

    let missing = dir.path().join("missing.jsonl");
    let out = hintbandit(&["analyze", s(&missing), "--embeddings", s(&emb), "--metric", "counts"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn llm_mode_requires_its_inputs() {
    let out = hintbandit(&["simulate", "--mode", "llm", "--out", "x.jsonl"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--embeddings"), "{stderr}");
}

#[test]
fn serve_fails_fast_on_unreadable_paths() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("service.toml");
    std::fs::write(
        &config,
        format!(
            "embeddings = \"{}\"\nfrequencies = \"{}\"\ncorpus_dir = \"{}\"\n",
            dir.path().join("nope.txt").display(),
            dir.path().join("nope.tsv").display(),
            dir.path().join("corpus").display(),
        ),
    )
    .unwrap();
    let out = hintbandit(&["serve", "--config", s(&config)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("embeddings file"));
}
