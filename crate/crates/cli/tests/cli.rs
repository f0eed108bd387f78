use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn recog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recog")).args(args).output().expect("spawn recog")
}

fn ok(args: &[&str]) -> Output {
    let out = recog(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn error_line(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {line}"))
}

const SMALL: &[&str] = &["--n-playlists", "60", "--n-songs", "120", "--n-categories", "3", "--seed", "11"];

fn pipeline(dir: &Path) {
    let d = dir.to_str().unwrap();
    let with = |cmd: &str, extra: &[&str]| {
        let mut args = vec![cmd, "--out-dir", d];
        args.extend_from_slice(SMALL);
        args.extend_from_slice(extra);
        ok(&args);
    };
    with("synth", &[]);
    with("build-graphs", &[]);
    with("train", &["--rank", "5", "--outer-iters", "4"]);
    with("evaluate", &["--queries", "sampled", "--num", "40", "--s", "3", "--k", "10"]);
}

#[test]
fn pipeline_reports_are_byte_identical() {
    let (x, y) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(x.path());
    pipeline(y.path());
    for f in ["report.json", "report.csv", "model.bin", "playlist_graph.csv", "manifests/evaluate.json"] {
        let a = std::fs::read(x.path().join(f)).unwrap();
        let b = std::fs::read(y.path().join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
    }
    let report: Value = serde_json::from_slice(&std::fs::read(x.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["records"].as_array().unwrap().len(), 40);
    let upstream = report["metadata"]["upstream"].as_object().unwrap();
    assert!(upstream.values().all(|v| v.is_string()), "{upstream:?}");
}

#[test]
fn recommend_is_deterministic_and_excludes_seeds() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path());
    let model = dir.path().join("model.bin");
    let model = model.to_str().unwrap();
    let args = ["recommend", "--model", model, "--songs", "s00000,s00001,s00002", "--k", "7"];
    let a = ok(&args).stdout;
    assert_eq!(a, ok(&args).stdout);
    let v: Value = serde_json::from_slice(&a).unwrap();
    let recs = v["recommendations"].as_array().unwrap();
    assert_eq!(recs.len(), 7);
    for r in recs {
        assert!(!["s00000", "s00001", "s00002"].contains(&r["song_id"].as_str().unwrap()));
    }

    let csv = ok(&["recommend", "--model", model, "--songs", "s00000", "--k", "2", "--format", "csv"]).stdout;
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 3);
}

#[test]
fn exit_codes_follow_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();

    let out = recog(&["train", "--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "config");

    let out = recog(&["build-graphs", "--out-dir", d]);
    assert_eq!(out.status.code(), Some(2), "missing inputs are config errors");

    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "rank = 4\nunknown-key = 1\n").unwrap();
    let out = recog(&["synth", "--config", cfg.to_str().unwrap(), "--out-dir", d]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out)["message"].as_str().unwrap().contains("unknown-key"));

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{not json\n").unwrap();
    let out = recog(&["ingest", "--playlists", bad.to_str().unwrap(), "--out-dir", &format!("{d}/ingested")]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_line(&out)["error"], "data");

    pipeline(dir.path());
    let model = format!("{d}/model.bin");
    let out = recog(&["recommend", "--model", &model, "--songs", "s00000,no-such-song"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(error_line(&out)["message"].as_str().unwrap().contains("no-such-song"));

    let out = recog(&["train", "--out-dir", d, "--rank", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "n-playlists = 30\nn-songs = 80\nn-categories = 2\nseed = 4\n").unwrap();
    let out = ok(&["synth", "--config", cfg.to_str().unwrap(), "--out-dir", d, "--n-playlists", "40"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["playlists"], 40);
    assert_eq!(v["songs"], 80);
    let manifest: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifests/synth.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 4);
    assert_eq!(manifest["settings"]["n-playlists"], 40);
}

#[test]
fn ingest_round_trips_a_synthetic_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let mut args = vec!["synth", "--out-dir", d];
    args.extend_from_slice(SMALL);
    ok(&args);
    let out_dir = format!("{d}/clean");
    let out = ok(&[
        "ingest",
        "--playlists",
        &format!("{d}/corpus.jsonl"),
        "--features",
        &format!("{d}/features.csv"),
        "--out-dir",
        &out_dir,
    ]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["playlists"], 60);
    assert_eq!(
        std::fs::read(format!("{d}/corpus.jsonl")).unwrap(),
        std::fs::read(format!("{out_dir}/corpus.jsonl")).unwrap()
    );
    let manifest: Value =
        serde_json::from_slice(&std::fs::read(format!("{out_dir}/manifests/ingest.json")).unwrap()).unwrap();
    assert!(manifest["inputs"][0]["upstream_config_hash"].is_string());
}

#[test]
fn baselines_evaluate_without_a_model() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path());
    let d = dir.path().to_str().unwrap();
    for b in ["cosine", "random"] {
        let report = format!("{d}/{b}.json");
        ok(&["evaluate", "--out-dir", d, "--baseline", b, "--num", "30", "--report", &report, "--queries", "test"]);
        let v: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
        assert_eq!(v["model"], b);
    }
    let out = recog(&["evaluate", "--out-dir", d, "--baseline", "popularity"]);
    assert_eq!(out.status.code(), Some(2));
}
