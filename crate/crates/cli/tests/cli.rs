use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn harper(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harper"))
        .args(args)
        .arg("--output-dir")
        .arg(dir.join("out"))
        .env("HARPER_CACHE_DIR", dir.join("cache"))
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let o = harper(dir, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join("out").join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&read(dir, name)).unwrap()
}

fn without_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn ids_below_spectrum_is_zero() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["ids", "--n", "100", "--e-min", "-20", "--e-max", "-10", "--e-count", "11"]);
    let text = String::from_utf8(read(t.path(), "ids.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("E,ids"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r.ends_with(",0.0")), "{rows:?}");
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("bad.json");
    for (doc, key) in [
        (r#"{"schema": "v1", "bogus": 3}"#, "bogus"),
        (r#"{"schema": "v0"}"#, "schema"),
        (r#"{"coupling": [0, -2, 0]}"#, "coupling"),
        (r#"{"frequency": {"liouville": {"target_beta": 1.0, "depth": 20}}}"#, "frequency.liouville.depth"),
    ] {
        std::fs::write(&cfg, doc).unwrap();
        let o = harper(t.path(), &["ids", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{doc}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(key), "{doc}");
    }
    let o = harper(t.path(), &["spectrum", "--n", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = harper(t.path(), &["ids", "--alpha", "0.3", "--golden"]);
    assert_eq!(o.status.code(), Some(2));
    let o = harper(t.path(), &["not-a-command"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_guard_exits_3() {
    let t = TempDir::new().unwrap();
    // No dual Bloch wave exists at an energy in a gap.
    let o = harper(t.path(), &["reduce", "--energy", "1", "--m", "100", "--theta-grid", "512"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn flags_override_the_config_file() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("run.json");
    std::fs::write(&cfg, r#"{"schema": "v1", "n": 60, "phase_count": 3, "seed": 9, "frequency": {"cf_coeffs": [2, 2, 2, 2, 2, 2]}}"#).unwrap();
    ok(t.path(), &["ids", "--config", cfg.to_str().unwrap(), "--n", "80", "--e-count", "3"]);
    let run = json(t.path(), "run.json");
    assert_eq!(run["config"]["n"], 80);
    assert_eq!(run["config"]["phase_count"], 3);
    assert_eq!(run["config"]["seed"], 9);
    assert_eq!(run["frequency"]["cf_coeffs"], serde_json::json!([2, 2, 2, 2, 2, 2]));
    assert_eq!(run["schema"], "v1");
}

#[test]
fn cache_hit_equals_recompute() {
    let t = TempDir::new().unwrap();
    let args = ["spectrum", "--n", "500", "--phase-count", "4"];
    let first = ok(t.path(), &args);
    assert!(!String::from_utf8_lossy(&first.stderr).contains("cache hit"));
    let cold = (read(t.path(), "cloud.csv"), read(t.path(), "gaps.json"));

    let second = ok(t.path(), &args);
    assert!(String::from_utf8_lossy(&second.stderr).contains("cache hit"));
    assert_eq!((read(t.path(), "cloud.csv"), read(t.path(), "gaps.json")), cold);

    let fresh = TempDir::new().unwrap();
    ok(fresh.path(), &[&args[..], &["--cache", "false"]].concat());
    assert_eq!((read(fresh.path(), "cloud.csv"), read(fresh.path(), "gaps.json")), cold);
    assert!(!fresh.path().join("cache").exists());

    // A tampered entry fails its digest and is rebuilt.
    let entry = std::fs::read_dir(t.path().join("cache"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|x| x == "csv"))
        .unwrap();
    let mut bytes = std::fs::read(&entry).unwrap();
    let last = bytes.len() - 2;
    bytes[last] = if bytes[last] == b'1' { b'2' } else { b'1' };
    std::fs::write(&entry, bytes).unwrap();
    let third = ok(t.path(), &args);
    assert!(!String::from_utf8_lossy(&third.stderr).contains("cache hit"));
    assert_eq!((read(t.path(), "cloud.csv"), read(t.path(), "gaps.json")), cold);
}

#[test]
fn identical_runs_are_byte_identical() {
    let t = TempDir::new().unwrap();
    let args = ["homogeneity", "--n", "500", "--phase-count", "8", "--sigma", "1e-3,1e-2", "--samples", "7"];
    let seeded = |s: &'static str| [&args[..], &["--seed", s]].concat();
    ok(t.path(), &seeded("3"));
    let (out1, run1) = (read(t.path(), "homogeneity.json"), json(t.path(), "run.json"));
    ok(t.path(), &seeded("3"));
    assert_eq!(read(t.path(), "homogeneity.json"), out1);
    let run2 = json(t.path(), "run.json");
    assert_eq!(run1["content_hash"], run2["content_hash"]);
    assert_eq!(without_timestamp(run1.clone()), without_timestamp(run2));

    ok(t.path(), &seeded("4"));
    assert_ne!(read(t.path(), "homogeneity.json"), out1);
    assert_ne!(json(t.path(), "run.json")["content_hash"], run1["content_hash"]);
}

#[test]
fn duality_end_to_end() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["duality", "--n", "1000", "--phase-count", "32", "--doublings", "0"]);
    let d = json(t.path(), "duality.json");
    assert_eq!(d["schema"], "v1");
    let distance = d["distance"].as_f64().unwrap();
    assert!(distance <= 0.02, "{distance}");
}

#[test]
fn butterfly_is_long_form() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["butterfly", "--n", "10", "--phase-count", "2", "--alpha-min", "0.2", "--alpha-max", "0.4", "--alpha-count", "3"]);
    let text = String::from_utf8(read(t.path(), "butterfly.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,eigenvalue"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, e) = l.split_once(',').unwrap();
            (a.parse().unwrap(), e.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 3 * 2 * 10);
    for (i, a) in [0.2, 0.30000000000000004, 0.4].iter().enumerate() {
        let block = &rows[i * 20..(i + 1) * 20];
        assert!(block.iter().all(|r| r.0 == *a));
        assert!(block.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!(block.iter().all(|r| r.1.abs() <= 6.0));
    }
}

#[test]
fn negative_energy_lists_parse() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["ids", "--n", "50", "--energies", "-3.5,0,3.5"]);
    let text = String::from_utf8(read(t.path(), "ids.csv")).unwrap();
    let energies: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(energies, ["-3.5", "0.0", "3.5"]);
}
