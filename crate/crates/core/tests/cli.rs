use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn grouprec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grouprec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn setup() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mini.jsonl");
    fs::write(&data, grouprec::MINI_CORPUS).unwrap();
    (dir, data)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_bad_flags() {
    assert_eq!(grouprec(&["--help"]).status.code(), Some(0));
    assert_eq!(grouprec(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(grouprec(&[]).status.code(), Some(1));
}

#[test]
fn zero_budget_is_a_usage_error() {
    let (dir, data) = setup();
    let out = dir.path().join("o");
    let r = grouprec(&["run", "--dataset", s(&data), "--budget", "0", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("budget"));
}

#[test]
fn missing_dataset_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let r = grouprec(&["run", "--dataset", s(&dir.path().join("nope.jsonl")), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let status = fs::read_to_string(out.join("status.json")).unwrap();
    assert!(status.contains("\"error\""), "{status}");
    assert!(!status.contains("\"ok\""), "{status}");
}

#[test]
fn malformed_line_reports_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.jsonl");
    let mut text: String = grouprec::MINI_CORPUS.lines().take(3).map(|l| format!("{l}\n")).collect();
    text.push_str("{not json\n");
    fs::write(&data, text).unwrap();
    let r = grouprec(&["ingest", "--dataset", s(&data), "--out", s(&dir.path().join("o"))]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains(":4:"));
}

#[test]
fn ingest_embed_cluster_chain() {
    let (dir, data) = setup();
    let out = dir.path().join("o");
    let r = grouprec(&["ingest", "--dataset", s(&data), "--out", s(&out)]);
    assert!(r.status.success());
    assert!(String::from_utf8_lossy(&r.stdout).contains("30 records, 10 users"));
    assert_eq!(fs::read_to_string(out.join("records.jsonl")).unwrap().lines().count(), 30);

    assert!(grouprec(&["embed", "--dataset", s(&data), "--out", s(&out)]).status.success());
    let vectors = out.join("vectors.jsonl");
    assert_eq!(fs::read_to_string(&vectors).unwrap().lines().count(), 30);

    // clustering from the written vectors agrees with clustering from text
    let via_text = dir.path().join("t");
    let via_vectors = dir.path().join("v");
    assert!(grouprec(&["cluster", "--dataset", s(&data), "--k-range", "2-4", "--out", s(&via_text)])
        .status
        .success());
    assert!(grouprec(&[
        "cluster", "--dataset", s(&data), "--k-range", "2-4", "--vectors", s(&vectors), "--out", s(&via_vectors)
    ])
    .status
    .success());
    let users = fs::read_to_string(via_text.join("users.csv")).unwrap();
    assert_eq!(users, fs::read_to_string(via_vectors.join("users.csv")).unwrap());
    assert_eq!(users.lines().count(), 11);
}

#[test]
fn vectors_with_foreign_ids_fail() {
    let (dir, data) = setup();
    let vectors = dir.path().join("v.jsonl");
    fs::write(&vectors, "{\"id\": 100, \"vector\": [1.0, 0.0]}\n{\"id\": 101, \"vector\": [0.0, 1.0]}\n").unwrap();
    let r = grouprec(&["cluster", "--dataset", s(&data), "--vectors", s(&vectors), "--out", s(&dir.path().join("o"))]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("id-mismatch"));
}

#[test]
fn recommend_from_user_table() {
    let (dir, data) = setup();
    let users = dir.path().join("users.csv");
    let table: String = std::iter::once("user_id,cluster\n".to_string())
        .chain((1..=10).map(|u| format!("u{u:02},{}\n", usize::from(u > 5))))
        .collect();
    fs::write(&users, table).unwrap();
    let out = dir.path().join("o");
    let r = grouprec(&[
        "recommend", "--dataset", s(&data), "--users", s(&users), "--budget", "3", "--methods", "ham,gram", "--out",
        s(&out),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let recs: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("recommendations.json")).unwrap()).unwrap();
    let recs = recs.as_array().unwrap();
    assert_eq!(recs.len(), 4);
    for rec in recs {
        assert_eq!(rec["items"].as_array().unwrap().len(), 3);
        let score = rec["group_score"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&score));
    }
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("method,k,m,group_score\n"));
}

#[test]
fn baseline_and_compare() {
    let (dir, data) = setup();
    let out = dir.path().join("o");
    assert!(grouprec(&["baseline", "--dataset", s(&data), "--out", s(&out)]).status.success());
    let base = out.join("predict_and_cluster_users.csv");
    assert!(out.join("baseline_sweep.csv").exists());

    let metrics = dir.path().join("m.json");
    let r = grouprec(&["compare", s(&base), s(&base), "--out", s(&metrics)]);
    assert!(r.status.success());
    let m: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(m["ari"], 1.0);
    assert_eq!(fs::read(&metrics).unwrap(), r.stdout);
}

#[test]
fn validate_against_planted_labels() {
    let (dir, data) = setup();
    let out = dir.path().join("o");
    assert!(grouprec(&["cluster", "--dataset", s(&data), "--k-range", "2-4", "--out", s(&out)]).status.success());
    let truth = dir.path().join("truth.csv");
    fs::write(&truth, grouprec::MINI_CORPUS_LABELS).unwrap();
    let r = grouprec(&["validate", "--labels", s(&out.join("clusters.csv")), "--truth", s(&truth)]);
    assert!(r.status.success());
    let m: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(m["ari"], 1.0);
    assert_eq!(m["tp"].as_u64().unwrap() + m["tn"].as_u64().unwrap(), 435);
}

#[test]
fn config_file_with_flag_override() {
    let (dir, data) = setup();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("o");
    fs::write(
        &cfg,
        format!("dataset = {:?}\nk_range = \"2-4\"\nbudget = 2\nbaseline = false\nout = {:?}\n", s(&data), s(&out)),
    )
    .unwrap();
    let r = grouprec(&["run", "--config", s(&cfg), "--budget", "4"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let recs = fs::read_to_string(out.join("recommendations.json")).unwrap();
    assert!(recs.contains("\"k\": 4"));
    assert!(!out.join("metrics.json").exists());

    fs::write(&cfg, "budget = \"many\"\n").unwrap();
    assert_eq!(grouprec(&["run", "--config", s(&cfg)]).status.code(), Some(1));
}
