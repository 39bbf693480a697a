use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sembed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sembed"))
        .args(args)
        .env_remove("SEMBED_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = sembed(args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Desk preset shrunk until the whole chain runs in seconds.
fn tiny_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("cfg.json");
    ok(&["config", "--desk", "--out", p(&path)]);
    let mut c: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    c["corpus"]["num_sentences"] = 40.into();
    c["corpus"]["max_words"] = 2.into();
    c["emotion_corpus"]["num_sentences"] = 56.into();
    c["emotion_corpus"]["num_speakers"] = 4.into();
    c["model"]["tcn"]["channels"] = 8.into();
    c["model"]["tcn"]["embedding_dim"] = 12.into();
    c["model"]["tcn"]["dilations"] = serde_json::json!([1, 2]);
    c["model"]["rnn"]["hidden"] = 8.into();
    c["model"]["dan"]["hidden"] = 8.into();
    c["model"]["decoder"]["acoustic_hidden"] = 16.into();
    c["model"]["decoder"]["linguistic_hidden"] = 16.into();
    c["train"]["steps"] = 10.into();
    c["train"]["log_every"] = 5.into();
    c["segments"]["steps"] = 5.into();
    c["segments"]["dim"] = 8.into();
    c["asr"]["steps"] = 10.into();
    c["asr"]["hidden"] = 16.into();
    c["asr"]["bootstrap_resamples"] = 50.into();
    c["emotion"]["svm"]["epochs"] = 5.into();
    c["tsne"]["iterations"] = 100.into();
    c["tsne"]["perplexity"] = 10.0.into();
    fs::write(&path, serde_json::to_string_pretty(&c).unwrap()).unwrap();
    path
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = sembed(&["gen-data", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(sembed(&[]).status.code(), Some(2));
    assert_eq!(sembed(&["train", "--model", "cnn"]).status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = sembed(&[
        "eval-asr",
        "--embeddings",
        p(&dir.path().join("absent.jsonl")),
        "--corpus",
        p(dir.path()),
        "--out-dir",
        p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sembed"))
        .args(["gen-data", "--desk", "--sentences", "2", "--out", p(dir.path())])
        .env("SEMBED_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_data_writes_requested_sentence_count() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    ok(&["gen-data", "--desk", "--seed", "7", "--out", p(&corpus), "--sentences", "25"]);
    let manifest = fs::read_to_string(corpus.join("manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 25);
    assert_eq!(fs::read_dir(corpus.join("wav")).unwrap().count(), 25);

    let again = dir.path().join("again");
    ok(&["gen-data", "--desk", "--seed", "7", "--out", p(&again), "--sentences", "25"]);
    assert_eq!(manifest, fs::read_to_string(again.join("manifest.jsonl")).unwrap());
}

#[test]
fn full_chain_produces_every_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = tiny_config(d);
    let cfg = p(&cfg);
    let (corpus, emo, out) = (d.join("corpus"), d.join("emo"), d.join("reports"));
    ok(&["gen-data", "--config", cfg, "--out", p(&corpus)]);
    ok(&["gen-data", "--config", cfg, "--emotion", "--out", p(&emo)]);

    let seg = d.join("word.seg");
    let table = d.join("word.table");
    ok(&[
        "train-segments", "--config", cfg, "--level", "word", "--corpus", p(&corpus), "--out", p(&seg), "--table",
        p(&table),
    ]);
    assert!(table.exists());

    // acoustic-only training: the linguistic term stays identically zero
    let tcn = d.join("tcn.ckpt");
    let log = d.join("tcn.log");
    ok(&[
        "train", "--config", cfg, "--model", "tcn", "--corpus", p(&corpus), "--out", p(&tcn), "--lambda-acoustic",
        "1", "--lambda-linguistic", "0", "--log", p(&log),
    ]);
    let lines: Vec<Value> = fs::read_to_string(&log)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    for l in &lines {
        assert_eq!(l["L_l"].as_f64().unwrap(), 0.0);
        assert_eq!(l["L_Total"].as_f64().unwrap(), l["L_a"].as_f64().unwrap());
    }

    let dan = d.join("dan.ckpt");
    ok(&["train", "--config", cfg, "--model", "dan-word", "--corpus", p(&corpus), "--out", p(&dan), "--segments", p(&seg)]);
    assert!(d.join("dan.ckpt.train.jsonl").exists());
    let wrong = sembed(&["train", "--config", cfg, "--model", "dan-phoneme", "--corpus", p(&corpus), "--out", p(&dan), "--segments", p(&seg)]);
    assert_eq!(wrong.status.code(), Some(1));

    for (name, extra) in [
        ("tcn", vec!["--fusion", "none", "--model", p(&tcn)]),
        ("dan", vec!["--fusion", "dan", "--model", p(&dan), "--segments", p(&seg)]),
        ("avg", vec!["--fusion", "average", "--segments", p(&seg)]),
    ] {
        let asr_emb = d.join(format!("{name}.jsonl"));
        let emo_emb = d.join(format!("{name}-emo.jsonl"));
        let mut args = vec!["embed", "--config", cfg, "--corpus", p(&corpus), "--out", p(&asr_emb)];
        args.extend(&extra);
        ok(&args);
        let mut args = vec!["embed", "--config", cfg, "--corpus", p(&emo), "--out", p(&emo_emb)];
        args.extend(&extra);
        ok(&args);
        assert_eq!(fs::read_to_string(&asr_emb).unwrap().lines().count(), 40);

        ok(&["eval-asr", "--config", cfg, "--embeddings", p(&asr_emb), "--corpus", p(&corpus), "--out-dir", p(&out), "--name", name]);
        let scores = out.join(format!("{name}.scores.jsonl"));
        ok(&["analyze-length", "--config", cfg, "--scores", p(&scores), "--out-dir", p(&out), "--buckets", "3"]);
        ok(&["eval-emotion", "--config", cfg, "--embeddings", p(&emo_emb), "--corpus", p(&emo), "--out-dir", p(&out), "--name", name]);
        ok(&[
            "project", "--config", cfg, "--embeddings", p(&emo_emb), "--corpus", p(&emo), "--out-dir", p(&out), "--name",
            name, "--method", "pca",
        ]);
        for suffix in ["asr.json", "asr.txt", "length.csv", "length.json", "emotion.json", "emotion.txt", "projection.csv", "projection.json"] {
            assert!(out.join(format!("{name}.{suffix}")).exists(), "{name}.{suffix} missing");
        }
    }

    let cfg_value: Value = serde_json::from_str(&ok(&["config", "--config", cfg])).unwrap();
    let seed = cfg_value["seed"].as_u64().unwrap();
    for f in ["tcn.asr.json", "dan.emotion.json", "avg.length.json", "tcn.projection.json"] {
        let v: Value = serde_json::from_str(&fs::read_to_string(out.join(f)).unwrap()).unwrap();
        assert_eq!(v["seed"].as_u64(), Some(seed), "{f}");
        assert_eq!(v["config_hash"].as_str().map(str::len), Some(64), "{f}");
    }
    let csv = fs::read_to_string(out.join("tcn.projection.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,label"));
    assert_eq!(csv.lines().count(), 57);
}
