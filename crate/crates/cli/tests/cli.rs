use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use webly_core::io::{
    parse_manifest, parse_relevance, write_feature_matrix, write_manifest, FeatureMatrix,
    SampleRecord, SampleSet, Source,
};

fn webly() -> Command {
    Command::new(env!("CARGO_BIN_EXE_webly"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Two classes of 500 images each; every 20th image sits far from its class.
fn corpus(dir: &Path) -> (PathBuf, PathBuf) {
    let dim = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut values = Vec::new();
    let mut records = Vec::new();
    for class in ["cat", "dog"] {
        let center: Vec<f32> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        for i in 0..500 {
            let spread = if i % 20 == 19 { 30.0 } else { 1.0 };
            let row = values.len() / dim;
            values.extend(center.iter().map(|c| c + rng.random_range(-spread..spread)));
            records.push(SampleRecord::new(format!("{class}{i:03}"), class, Source::GoogleImage, row));
        }
    }
    let manifest = dir.join("images.jsonl");
    let features = dir.join("features.bin");
    let n = values.len() / dim;
    fs::write(&features, write_feature_matrix(&FeatureMatrix::new(n, dim, values).unwrap())).unwrap();
    fs::write(&manifest, write_manifest(&SampleSet::new(records).unwrap())).unwrap();
    (manifest, features)
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = webly().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = webly().args(["split", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let out = webly().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("bench-noise"));
}

#[test]
fn invalid_input_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\": \"a\"}\n").unwrap();
    let out = webly()
        .args(["split", "--manifest", p(&bad)])
        .args(["--out-train", p(&dir.path().join("t.jsonl"))])
        .args(["--out-val", p(&dir.path().join("v.jsonl"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn filter_keeps_top_k_per_class_and_drops_outliers() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, features) = corpus(dir.path());
    let kept = dir.path().join("kept.jsonl");
    let rel = dir.path().join("rel.csv");
    let status = webly()
        .args(["filter", "--manifest", p(&manifest), "--features", p(&features)])
        .args(["--out-manifest", p(&kept), "--out-relevance", p(&rel)])
        .args(["--beta", "0.99", "--gamma", "0.01", "--top-k", "450"])
        .status()
        .unwrap();
    assert!(status.success());

    let set = parse_manifest(&fs::read_to_string(&kept).unwrap()).unwrap();
    assert_eq!(set.len(), 900);
    for class in ["cat", "dog"] {
        assert_eq!(set.iter().filter(|r| r.class_label == class).count(), 450);
    }
    let outliers_kept = set
        .iter()
        .filter(|r| r.id[3..].parse::<usize>().unwrap() % 20 == 19)
        .count();
    assert_eq!(outliers_kept, 0);

    let rows = parse_relevance(&fs::read_to_string(&rel).unwrap()).unwrap();
    assert_eq!(rows.len(), 1000);
    assert_eq!(rows.iter().filter(|r| r.kept).count(), 900);
    for class in ["cat", "dog"] {
        let total: f64 = rows.iter().filter(|r| r.class_label == class).map(|r| r.relevance).sum();
        assert!((total - 1.0).abs() < 1e-9, "{class}: relevance sums to {total}");
    }
}

#[test]
fn filter_threshold_is_relative_to_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, features) = corpus(dir.path());
    let kept = dir.path().join("kept.jsonl");
    let rel = dir.path().join("rel.csv");
    let code = webly_cli::run([
        "webly", "filter", "--manifest", p(&manifest), "--features", p(&features),
        "--out-manifest", p(&kept), "--out-relevance", p(&rel), "--threshold", "0.5",
    ]);
    assert_eq!(code, 0);
    let rows = parse_relevance(&fs::read_to_string(&rel).unwrap()).unwrap();
    for r in &rows {
        assert_eq!(r.kept, r.relative >= 0.5, "{}", r.id);
    }
}

#[test]
fn top_k_and_threshold_conflict() {
    let code = webly_cli::run([
        "webly", "filter", "--manifest", "m", "--features", "f", "--out-manifest", "o",
        "--out-relevance", "r", "--top-k", "3", "--threshold", "0.5",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn sidecar_records_the_effective_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = corpus(dir.path());
    let train = dir.path().join("train.jsonl");
    let code = webly_cli::run([
        "webly", "--threads", "2", "split", "--manifest", p(&manifest), "--seed", "17",
        "--out-train", p(&train), "--out-val", p(&dir.path().join("val.jsonl")),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.path().join("train.jsonl.config.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["tool"], "webly");
    assert_eq!(json["threads"], 2);
    assert_eq!(json["command"]["split"]["seed"], 17);
    assert_eq!(json["command"]["split"]["ratio"], 0.8);
}

#[test]
fn bench_sidecar_lands_in_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let code = webly_cli::run([
        "webly", "bench-noise", "--out-dir", p(&out), "--inliers", "60", "--pool", "20",
        "--levels", "0.1,0.2",
    ]);
    assert_eq!(code, 0);
    for name in ["config.json", "summary.csv", "noise_0.10.csv", "noise_0.20.csv"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
}

#[test]
fn environment_variables_supply_flags() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = corpus(dir.path());
    let train = dir.path().join("train.jsonl");
    let status = webly()
        .env("WEBLY_RATIO", "0.5")
        .args(["split", "--manifest", p(&manifest), "--out-train", p(&train)])
        .args(["--out-val", p(&dir.path().join("val.jsonl"))])
        .status()
        .unwrap();
    assert!(status.success());
    let set = parse_manifest(&fs::read_to_string(&train).unwrap()).unwrap();
    assert_eq!(set.len(), 500);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, features) = corpus(dir.path());
    let outputs: Vec<(Vec<u8>, Vec<u8>)> = ["1", "3"]
        .iter()
        .map(|threads| {
            let kept = dir.path().join(format!("kept{threads}.jsonl"));
            let rel = dir.path().join(format!("rel{threads}.csv"));
            let code = webly_cli::run([
                "webly", "--threads", threads, "filter", "--manifest", p(&manifest),
                "--features", p(&features), "--out-manifest", p(&kept), "--out-relevance", p(&rel),
            ]);
            assert_eq!(code, 0);
            (fs::read(&kept).unwrap(), fs::read(&rel).unwrap())
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn inputs_are_left_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, features) = corpus(dir.path());
    let before = (fs::read(&manifest).unwrap(), fs::read(&features).unwrap());
    let code = webly_cli::run([
        "webly", "filter", "--manifest", p(&manifest), "--features", p(&features),
        "--out-manifest", p(&dir.path().join("k.jsonl")), "--out-relevance",
        p(&dir.path().join("r.csv")), "--top-k", "10",
    ]);
    assert_eq!(code, 0);
    assert_eq!(before, (fs::read(&manifest).unwrap(), fs::read(&features).unwrap()));
}
