use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ghtm::formats::parse_key_values;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn ghtm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghtm")).args(args).output().expect("binary runs")
}

fn config() -> String {
    fixtures().join("config.toml").display().to_string()
}

fn metrics(path: &Path) -> Vec<(String, String)> {
    parse_key_values(&std::fs::read_to_string(path).unwrap())
}

fn value<'a>(kv: &'a [(String, String)], key: &str) -> &'a str {
    &kv.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no `{key}` in {kv:?}")).1
}

#[test]
fn run_on_fixture_writes_k_topics_and_all_metrics() {
    let out = tempfile::tempdir().unwrap();
    let o = ghtm(&["run", "--config", &config(), "--out-dir", out.path().to_str().unwrap(), "--topics", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let topics = std::fs::read_to_string(out.path().join("topics.txt")).unwrap();
    assert_eq!(topics.lines().count(), 3);
    let kv = metrics(&out.path().join("metrics.txt"));
    assert_eq!(value(&kv, "model"), "ghtm");
    for key in ["cv", "npmi", "td", "irbo", "runtime_seconds"] {
        let v: f64 = value(&kv, key).parse().unwrap_or_else(|_| panic!("{key} not numeric"));
        assert!(v.is_finite());
    }
    assert!(out.path().join("gcn.ckpt").is_file());
    assert!(out.path().join("timings.txt").is_file());
}

#[test]
fn changing_k_reuses_the_trained_gcn() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    let cfg_path = out.path().join("c.toml");
    let body = std::fs::read_to_string(fixtures().join("config.toml")).unwrap().replace("[gcn]", "[gcn]\nnum_clusters = 2");
    let body = body
        .replace("\"corpus.txt\"", &format!("{:?}", fixtures().join("corpus.txt")))
        .replace("\"stopwords.txt\"", &format!("{:?}", fixtures().join("stopwords.txt")))
        .replace("\"vectors.txt\"", &format!("{:?}", fixtures().join("vectors.txt")));
    std::fs::write(&cfg_path, body).unwrap();
    let cfg = cfg_path.to_str().unwrap();
    let first = ghtm(&["run", "--config", cfg, "--out-dir", dir, "--topics", "3"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(!String::from_utf8_lossy(&first.stdout).contains("gcn_cache = hit"));
    let second = ghtm(&["run", "--config", cfg, "--out-dir", dir, "--topics", "2"]);
    assert!(second.status.success());
    assert!(String::from_utf8_lossy(&second.stdout).contains("gcn_cache = hit"));
    let topics = std::fs::read_to_string(out.path().join("topics.txt")).unwrap();
    assert_eq!(topics.lines().count(), 2);
}

#[test]
fn missing_embedding_file_is_named_in_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        format!("[corpus]\npath = {:?}\n[embeddings]\npath = \"nowhere.vec\"\n", fixtures().join("corpus.txt")),
    )
    .unwrap();
    let o = ghtm(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.vec"));
    assert!(!dir.path().join("topics.txt").exists());
}

#[test]
fn exit_codes_separate_usage_from_stage_failures() {
    assert_eq!(ghtm(&["run", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(ghtm(&[]).status.code(), Some(1));
    assert_eq!(ghtm(&["--help"]).status.code(), Some(0));
    assert_eq!(ghtm(&["run", "--config", "/definitely/missing.toml"]).status.code(), Some(1));

    // A vector file with inconsistent widths fails inside the pipeline.
    let dir = tempfile::tempdir().unwrap();
    let vec = dir.path().join("bad.vec");
    std::fs::write(&vec, "match 1 2 3\nteam 1 2\n").unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        format!("[corpus]\npath = {:?}\n[embeddings]\npath = {:?}\n", fixtures().join("corpus.txt"), vec),
    )
    .unwrap();
    let o = ghtm(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("vectorize"));
}

#[test]
fn baseline_reports_its_model_name() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    let o = ghtm(&["baseline", "--config", &config(), "--out-dir", dir, "--topics", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let kv = metrics(&out.path().join("baseline_metrics.txt"));
    assert_eq!(value(&kv, "model"), "nmf-tfidf");
    assert_eq!(value(&kv, "td"), "1.000000");
    assert_eq!(value(&kv, "irbo"), "n/a");
}

#[test]
fn evaluate_scores_external_topics() {
    let dir = tempfile::tempdir().unwrap();
    let topics = dir.path().join("t.txt");
    std::fs::write(&topics, "0\tmatch\tteam\tgoal\n1\tplanet\torbit\trocket\n").unwrap();
    let corpus = fixtures().join("corpus.txt");
    let o = ghtm(&["evaluate", "--topics-file", topics.to_str().unwrap(), "--corpus", corpus.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let kv = parse_key_values(&String::from_utf8_lossy(&o.stdout));
    assert_eq!(value(&kv, "td"), "1.000000");
    assert_eq!(value(&kv, "irbo"), "1.000000");

    std::fs::write(&topics, "0\tmatch\tteam\n").unwrap();
    let o = ghtm(&["evaluate", "--topics-file", topics.to_str().unwrap(), "--corpus", corpus.to_str().unwrap()]);
    assert!(o.status.success());
    let kv = parse_key_values(&String::from_utf8_lossy(&o.stdout));
    assert_eq!(value(&kv, "irbo"), "n/a");
    assert_ne!(value(&kv, "npmi"), "n/a");

    std::fs::write(&topics, "0\tmatch\tteam\n1\tgoal\tgoal\n").unwrap();
    let o = ghtm(&["evaluate", "--topics-file", topics.to_str().unwrap(), "--corpus", corpus.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":2:"));
}

#[test]
fn reruns_are_byte_identical_in_deterministic_mode() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = ghtm(&["run", "--config", &config(), "--out-dir", d.path().to_str().unwrap(), "--deterministic-report"]);
        assert!(o.status.success());
    }
    for f in ["topics.txt", "metrics.txt", "gcn.ckpt"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
