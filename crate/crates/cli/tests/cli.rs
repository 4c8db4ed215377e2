use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn atlaslab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atlaslab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sample_qa_writes_columns_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = atlaslab(
        &["sample", "--law", "Qa", "--a", "1", "--gamma", "0.5", "--m", "5", "--n-draws", "1000", "--seed", "7"],
        &out,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("draws.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x1,x2,x3,x4,x5"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 1000);
    assert!(rows.iter().all(|r| r.len() == 5 && r.windows(2).all(|w| w[0] <= w[1])));

    let m = json(&out.join("manifest.json"));
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["command"], "sample");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["settings"]["gamma"], 0.5);
    assert!(m["started_unix"].as_f64().unwrap() <= m["finished_unix"].as_f64().unwrap());
}

#[test]
fn same_seed_gives_identical_bytes_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sample", "--law", "pi-a", "--gamma", "-0.25", "--a", "1", "--n-draws", "300", "--seed", "3"];
    let a = atlaslab(&args, &dir.path().join("a"));
    let mut with_threads = args.to_vec();
    with_threads.extend(["--threads", "3"]);
    let b = atlaslab(&with_threads, &dir.path().join("b"));
    assert_eq!((code(&a), code(&b)), (0, 0));
    let read = |d: &str| fs::read(dir.path().join(d).join("draws.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert!(String::from_utf8(read("a")).unwrap().starts_with("z1,z2,z3,z4,z5\n"));
}

#[test]
fn pi_with_zero_gamma_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = atlaslab(&["sample", "--law", "pi", "--gamma", "0"], &dir.path().join("x"));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("pi requires gamma > 0"));
}

#[test]
fn invalid_params_name_the_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let o = atlaslab(&["sample", "--law", "Qa", "--a", "0.4", "--gamma", "-0.25"], &dir.path().join("x"));
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
}

#[test]
fn refuses_to_overwrite_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let args = ["sample", "--n-draws", "10"];
    assert_eq!(code(&atlaslab(&args, &out)), 0);
    let before = fs::read(out.join("draws.csv")).unwrap();
    let o = atlaslab(&["sample", "--n-draws", "20"], &out);
    assert_eq!(code(&o), 2);
    assert_eq!(fs::read(out.join("draws.csv")).unwrap(), before);
    assert_eq!(code(&atlaslab(&["sample", "--n-draws", "20", "--force"], &out)), 0);
    assert_eq!(fs::read_to_string(out.join("draws.csv")).unwrap().lines().count(), 21);
}

#[test]
fn simulate_zero_steps_and_shift_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let o = atlaslab(&["simulate", "--n", "6", "--steps", "0"], &out);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,rank,position"));
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("0,")));
    let report = json(&out.join("report.json"));
    assert!(report["truncation"]["clean"].is_boolean());

    let out = dir.path().join("b");
    let o = atlaslab(&["simulate", "--n", "4", "--steps", "10", "--dt", "0.01", "--shift", "on", "--a", "2"], &out);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,rank,position,shift"));
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[1], 4.0);
    assert!((last[3] - last[0]).abs() < 1e-12); // a t / 2 with a = 2
}

#[test]
fn simulate_beta_validation() {
    let dir = tempfile::tempdir().unwrap();
    let ok = atlaslab(&["simulate", "--n", "5", "--steps", "20", "--scheme", "mollified", "--beta", "50"], &dir.path().join("a"));
    assert_eq!(code(&ok), 0);
    let bad = atlaslab(&["simulate", "--scheme", "mollified", "--beta", "-1"], &dir.path().join("b"));
    assert_eq!(code(&bad), 2);
}

#[test]
fn manifest_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let o = atlaslab(&["simulate", "--n", "8", "--steps", "50", "--seed", "11", "--law", "pi-a"], &a);
    assert_eq!(code(&o), 0);
    let b = dir.path().join("b");
    let manifest = a.join("manifest.json");
    let o = atlaslab(&["simulate", "--config", manifest.to_str().unwrap()], &b);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(a.join("trajectory.csv")).unwrap(),
        fs::read(b.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"n-draws": 7, "m": 2, "law": "pi", "gamma": 1.0}"#).unwrap();
    let out = dir.path().join("o");
    let o = atlaslab(&["sample", "--config", cfg.to_str().unwrap(), "--m", "3"], &out);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(out.join("draws.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("z1,z2,z3"));
    assert_eq!(csv.lines().count(), 8);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["settings"]["m"], 3);
    assert_eq!(m["settings"]["n-draws"], 7);

    fs::write(&cfg, r#"{"gama": 1.0}"#).unwrap();
    let o = atlaslab(&["sample", "--config", cfg.to_str().unwrap()], &dir.path().join("p"));
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_sampler_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = atlaslab(&["verify", "--suite", "sampler", "--seed", "1", "--n-draws", "20000"], &out);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    let r = json(&out.join("report.json"));
    assert_eq!(r["verdict"], "pass");
    let checks = r["outcomes"][0]["reports"].as_array().unwrap();
    assert!(checks.len() > 20);
    for c in checks {
        for key in ["name", "estimate", "target", "se", "statistic", "p", "verdict"] {
            assert!(c.get(key).is_some(), "{key} missing in {c}");
        }
    }
}

#[test]
fn verify_unknown_suite_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = atlaslab(&["verify", "--suite", "everything"], &dir.path().join("v"));
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_dirty_truncation_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = atlaslab(
        &["verify", "--suite", "stationarity", "--n", "3", "--m", "1", "--replicas", "200", "--dt", "0.01", "--steps", "100"],
        &out,
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(json(&out.join("manifest.json"))["verdict"], "inconclusive");
}

#[test]
fn bench_gate_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let o = atlaslab(&["bench", "--n-grid", "1000", "--steps", "20"], &out);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(out.join("bench.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    for col in ["n", "scheme", "kernel", "dt", "steps_per_second"] {
        assert!(header.contains(&col));
    }
    assert_eq!(csv.lines().count(), 1 + 3);
    assert_eq!(json(&out.join("manifest.json"))["checks"][0]["verdict"], "pass");
}
