use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use longif::taskgen::TemplateSet;
use longif::TaskId;

const SMALL_PLAN: &str = "intervals = [\"4k\"]\nexpressions = 1\nvariables = 1\n";

fn longif(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longif"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn generate_small(dir: &Path, seed: &str, out: &str) {
    std::fs::write(dir.join("plan.toml"), SMALL_PLAN).unwrap();
    ok(&longif(dir, &["generate", "--plan", "plan.toml", "--seed", seed, "--out", out]));
}

#[test]
fn gold_pipeline_reports_full_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate_small(dir, "5", "ds");
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("ds/dataset.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["summary"]["items"], 11);
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["corpus"].as_array().unwrap().len(), 3);

    ok(&longif(dir, &["run", "--dataset", "ds/dataset.jsonl", "--model", "mock:gold", "--out", "gold.jsonl", "--parallel", "3"]));
    ok(&longif(dir, &["score", "--dataset", "ds/dataset.jsonl", "--responses", "gold.jsonl", "--out", "scores.jsonl"]));
    ok(&longif(dir, &["report", "--scores", "scores.jsonl", "--out", "report"]));

    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report/report.json")).unwrap()).unwrap();
    let model = &report["models"][0];
    assert_eq!(model["model"], "mock-gold");
    assert_eq!(model["overall_ars"], 1.0);
    assert_eq!(model["tasks"].as_object().unwrap().len(), 11);
    let ars = std::fs::read_to_string(dir.join("report/ars.csv")).unwrap();
    for t in TaskId::ALL {
        assert!(ars.lines().any(|l| l.starts_with(&format!("mock-gold,{t},"))), "{t} missing from ars.csv");
    }
    for f in ["ifp.csv", "ifs.csv", "ifs_summary.csv", "groups.csv", "summary.md"] {
        assert!(dir.join("report").join(f).exists(), "{f}");
    }
}

#[test]
fn score_rejects_unknown_item_ids_with_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate_small(dir, "5", "ds");
    ok(&longif(dir, &["run", "--dataset", "ds/dataset.jsonl", "--model", "mock:empty", "--out", "r.jsonl"]));
    let raw = std::fs::read_to_string(dir.join("r.jsonl")).unwrap();
    let mut lines: Vec<String> = raw.lines().map(str::to_string).collect();
    let mut stray: Value = serde_json::from_str(&lines[2]).unwrap();
    stray["item_id"] = Value::from("no-such-item");
    lines[2] = stray.to_string();
    std::fs::write(dir.join("bad.jsonl"), lines.join("\n") + "\n").unwrap();

    let out = longif(dir, &["score", "--dataset", "ds/dataset.jsonl", "--responses", "bad.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("bad.jsonl:3:") && err.contains("no-such-item"), "{err}");

    // a line that is not a response record at all
    lines[1] = "{\"hello\": 1}".into();
    std::fs::write(dir.join("bad.jsonl"), lines.join("\n") + "\n").unwrap();
    let out = longif(dir, &["score", "--dataset", "ds/dataset.jsonl", "--responses", "bad.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.jsonl:2:"), "{}", stderr(&out));
}

#[test]
fn report_refuses_mixed_datasets_unless_forced() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate_small(dir, "5", "a");
    generate_small(dir, "6", "b");
    for d in ["a", "b"] {
        let ds = format!("{d}/dataset.jsonl");
        let resp = format!("{d}/r.jsonl");
        let scores = format!("{d}/s.jsonl");
        ok(&longif(dir, &["run", "--dataset", &ds, "--model", "mock:gold", "--out", &resp]));
        ok(&longif(dir, &["score", "--dataset", &ds, "--responses", &resp, "--out", &scores]));
    }
    let out = longif(dir, &["report", "--scores", "a/s.jsonl", "b/s.jsonl", "--out", "rep"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--force"));
    ok(&longif(dir, &["report", "--scores", "a/s.jsonl", "b/s.jsonl", "--out", "rep", "--force"]));

    // responses from one dataset cannot be scored against another
    let out = longif(dir, &["score", "--dataset", "b/dataset.jsonl", "--responses", "a/r.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn build_corpus_is_reproducible_and_names_missing_sources() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&longif(dir, &["build-corpus", "--seed", "9", "--out", "c1"]));
    ok(&longif(dir, &["build-corpus", "--seed", "9", "--out", "c2"]));
    let mut files: Vec<_> = std::fs::read_dir(dir.join("c1")).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert!(files.iter().filter(|f| f.to_string_lossy().ends_with(".manifest.json")).count() >= 3);
    for f in &files {
        assert_eq!(std::fs::read(dir.join("c1").join(f)).unwrap(), std::fs::read(dir.join("c2").join(f)).unwrap(), "{f:?}");
    }

    // generation from the saved pools works
    std::fs::write(dir.join("plan.toml"), SMALL_PLAN).unwrap();
    ok(&longif(dir, &["generate", "--plan", "plan.toml", "--corpus", "c1", "--seed", "9", "--out", "ds"]));

    std::fs::write(dir.join("bad.toml"), "[corpus]\nlist_text_files = [\"texts/missing.txt\"]\n").unwrap();
    let out = longif(dir, &["--config", "bad.toml", "build-corpus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("texts/missing.txt"), "{}", stderr(&out));
}

#[test]
fn unreachable_endpoint_exits_with_upstream_code() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate_small(dir, "5", "ds");
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let cfg = format!(
        "[run]\nparallel = 2\nretry = {{ max_attempts = 1, initial_backoff_ms = 1, max_backoff_ms = 1 }}\n\n\
         [[models]]\nname = \"down\"\nbackend = {{ type = \"http\", base_url = \"http://127.0.0.1:{port}\", model = \"m\", timeout_secs = 5 }}\n"
    );
    std::fs::write(dir.join("cfg.toml"), cfg).unwrap();
    let out = longif(dir, &["--config", "cfg.toml", "run", "--dataset", "ds/dataset.jsonl", "--model", "down", "--out", "r.jsonl"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    let records = std::fs::read_to_string(dir.join("r.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 11);

    // failed responses still score, as empty answers
    ok(&longif(dir, &["score", "--dataset", "ds/dataset.jsonl", "--responses", "r.jsonl", "--out", "s.jsonl"]));
    let scores = std::fs::read_to_string(dir.join("s.jsonl")).unwrap();
    assert!(scores.lines().all(|l| l.contains("\"response_error\":true")));
}

#[test]
fn error_categories_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("c.toml"), "seed = 1\n[run]\nparalel = 2\n").unwrap();
    let out = longif(dir, &["--config", "c.toml", "build-corpus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("c.toml:3:"), "{}", stderr(&out));

    let out = longif(dir, &["run", "--dataset", "missing.jsonl", "--model", "mock:gold"]);
    assert_eq!(out.status.code(), Some(3));
    let out = longif(dir, &["run", "--dataset", "missing.jsonl", "--model", "nobody"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn expand_selects_templates_from_fixture_rewrites() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let seeds = TemplateSet::builtin();
    let lsi = seeds.for_task(TaskId::LSI);

    let mut rewrites = String::new();
    let mut texts: Vec<String> = lsi.iter().map(|t| t.text.clone()).collect();
    for t in lsi {
        for (j, text) in [
            format!("Variant A{}: report the entry at position {{pos}} in double quotes.", t.expression_index),
            format!("Variant B{}: quote the {{pos}} entry of the list and nothing else.", t.expression_index),
            // loses its placeholder, so it must be dropped
            format!("Variant C{}: quote the first entry.", t.expression_index),
        ]
        .into_iter()
        .enumerate()
        {
            rewrites.push_str(&serde_json::json!({"task_id": "LSI", "expression_index": t.expression_index, "text": text}).to_string());
            rewrites.push('\n');
            if j < 2 {
                texts.push(text);
            }
        }
    }
    std::fs::write(dir.join("rewrites.jsonl"), rewrites).unwrap();
    let embeddings: String = texts
        .iter()
        .enumerate()
        .map(|(i, t)| serde_json::json!({"text": t, "vector": [(i % 3) as f64 * 10.0, (i % 5) as f64 * 0.1]}).to_string() + "\n")
        .collect();
    std::fs::write(dir.join("embeddings.jsonl"), embeddings).unwrap();
    std::fs::write(
        dir.join("cfg.toml"),
        "[expansion]\nrewrites_file = \"rewrites.jsonl\"\nembeddings_file = \"embeddings.jsonl\"\ncandidates = 3\n\n\
         [generation.plan]\ntasks = [\"LSI\"]\nexpressions = 3\n",
    )
    .unwrap();

    ok(&longif(dir, &["--config", "cfg.toml", "expand", "--out", "templates.jsonl"]));
    let out = TemplateSet::load(&dir.join("templates.jsonl")).unwrap();
    let picked = out.for_task(TaskId::LSI);
    assert_eq!(picked.len(), 3);
    assert!(picked.iter().all(|t| !t.text.contains("Variant C")));

    // identical inputs select identically
    ok(&longif(dir, &["--config", "cfg.toml", "expand", "--out", "again.jsonl"]));
    assert_eq!(
        std::fs::read(dir.join("templates.jsonl")).unwrap(),
        std::fs::read(dir.join("again.jsonl")).unwrap()
    );
}
