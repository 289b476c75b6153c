use std::path::Path;
use std::process::{Command, Output};

fn anisobbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anisobbm")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn norms_table_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    std::fs::create_dir(&out).unwrap();
    let cfg = write_config(
        tmp.path(),
        "cube.json",
        r#"{"schema_version": 1, "body": {"shape": "cube", "dim": 2}, "p": 1, "vectors": [[3, 4], [1, 0], [[0, 1], 0]]}"#,
    );
    let o = anisobbm(&["norms", "--config", &cfg, "--out", out.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows[0]["gauge"].as_f64().unwrap(), 4.0);
    // 3 int_{[-1,1]^2} |x_1| dx = 6.
    assert!((rows[1]["moment_norm"].as_f64().unwrap() - 6.0).abs() < 1e-9);
    assert!(rows[2]["gauge"].is_null());
    assert!((rows[2]["moment_norm"].as_f64().unwrap() - 6.0).abs() < 1e-9);
    let csv = std::fs::read_to_string(out.join("norms.csv")).unwrap();
    assert!(csv.starts_with("vector,gauge,moment_norm,error\n"));

    let cfg = write_config(
        tmp.path(),
        "ball.json",
        r#"{"schema_version": 1, "body": {"shape": "ball", "dim": 2}, "p": 2, "vectors": [[1, 0]]}"#,
    );
    let o = anisobbm(&["norms", "--config", &cfg, "--json"]);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let want = (std::f64::consts::PI / 2.0).sqrt();
    assert!((rows[0]["moment_norm"].as_f64().unwrap() - want).abs() < 1e-9);
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    std::fs::create_dir(&out).unwrap();
    let cfg = write_config(tmp.path(), "bad.json", "{\n  \"schema_version\": 1,\n  \"body\": {\"shape\": \"cube\", \"dim\": 2}\n  \"p\": 1\n}");
    for cmd in ["norms", "check-id2", "limit-study", "perimeter"] {
        let o = anisobbm(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(stderr(&o).contains("line 4"), "{cmd}: {}", stderr(&o));
    }
    let typo = write_config(
        tmp.path(),
        "typo.json",
        r#"{"schema_version": 1, "body": {"shape": "cube", "dim": 2}, "p": 1, "vectors": [[1, 0]], "sead": 3}"#,
    );
    let o = anisobbm(&["norms", "--config", &typo, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sead"));
    assert!(files_in(&out).is_empty());
}

#[test]
fn missing_output_directory_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "zero.json",
        r#"{"schema_version": 1, "functional": {"kind": "gagliardo"}, "p": 2, "body": {"shape": "ball", "dim": 2},
            "field": {"family": "zero", "dim": 2}, "schedule": {"kind": "s_values", "values": [0.8, 0.9, 0.95, 0.99]},
            "tolerance": 0.01}"#,
    );
    let missing = tmp.path().join("nope");
    let o = anisobbm(&["limit-study", "--config", &cfg, "--out", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!missing.exists());
}

#[test]
fn zero_field_study_passes_and_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "zero.json",
        r#"{"schema_version": 1, "functional": {"kind": "gagliardo"}, "p": 2, "body": {"shape": "ball", "dim": 2},
            "field": {"family": "zero", "dim": 2}, "schedule": {"kind": "s_values", "values": [0.8, 0.9, 0.95, 0.99]},
            "tolerance": 0.01}"#,
    );
    let o = anisobbm(&["limit-study", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS"));
    let report = std::fs::read_to_string(tmp.path().join("report.json")).unwrap();
    let r = anisobbm::limit::ConvergenceReport::from_json(&report).unwrap();
    assert_eq!(r.extrapolation.limit, 0.0);
    let csv = std::fs::read_to_string(tmp.path().join("points.csv")).unwrap();
    assert!(csv.starts_with("parameter,value,error\n"));
    assert_eq!(csv.lines().count(), 5);
    let plot = std::fs::read_to_string(tmp.path().join("plot.dat")).unwrap();
    assert_eq!(plot.lines().next().unwrap(), "0.8 0");
}

#[test]
fn incompatible_study_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"schema_version": 1, "functional": {"kind": "nguyen"}, "p": 1, "body": {"shape": "ball", "dim": 2},
            "field": {"family": "indicator", "region": {"type": "box", "lo": [0, 0], "hi": [1, 1]}},
            "schedule": {"kind": "delta_values", "values": [0.1, 0.05, 0.02, 0.01]}, "tolerance": 0.01}"#,
    );
    let o = anisobbm(&["limit-study", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
    assert_eq!(files_in(tmp.path()), vec!["bad.json".to_string()]);
}

const MC_STUDY: &str = r#"{
  "schema_version": 1,
  "functional": {"kind": "bbm", "mollifier": "shrinking_uniform"},
  "p": 2,
  "body": {"shape": "ball", "dim": 1},
  "field": {"family": "gaussian", "dim": 1},
  "schedule": {"kind": "n_values", "values": [4, 8, 16, 32]},
  "budget": {"outer": {"scheme": "monte_carlo", "samples": 4000, "seed": 0}, "sphere_nodes": 64},
  "tolerance": 0.05,
  "seed": 11
}"#;

#[test]
fn seed_changes_digits_not_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "mc.json", MC_STUDY);
    let mut csvs = Vec::new();
    for seed in ["11", "12"] {
        let out = tmp.path().join(seed);
        std::fs::create_dir(&out).unwrap();
        let o = anisobbm(&["limit-study", "--config", &cfg, "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "seed {seed}: {}", stdout(&o));
        csvs.push(std::fs::read_to_string(out.join("points.csv")).unwrap());
    }
    assert_ne!(csvs[0], csvs[1]);
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "mc.json", MC_STUDY);
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = tmp.path().join(threads);
        std::fs::create_dir(&out).unwrap();
        let o = anisobbm(&["limit-study", "--config", &cfg, "--threads", threads, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push((
            std::fs::read(out.join("points.csv")).unwrap(),
            std::fs::read(out.join("report.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn check_id2_passes_fails_and_rejects() {
    let tmp = tempfile::tempdir().unwrap();
    let base = r#""bodies": [{"shape": "ball", "dim": 2}, {"shape": "cube", "dim": 2}, {"shape": "ellipse", "axes": [2, 1]}],
        "vectors": 10, "samples": 20000, "seed": 5"#;
    let good = write_config(tmp.path(), "good.json", &format!(r#"{{"schema_version": 1, {base}, "p_values": [1, 2]}}"#));
    let o = anisobbm(&["check-id2", "--config", &good, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(tmp.path().join("id2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2 * 10);

    let strict = write_config(
        tmp.path(),
        "strict.json",
        &format!(r#"{{"schema_version": 1, {base}, "p_values": [1, 2], "tolerance": 0}}"#),
    );
    assert_eq!(anisobbm(&["check-id2", "--config", &strict]).status.code(), Some(1));

    let bad_p = write_config(tmp.path(), "badp.json", &format!(r#"{{"schema_version": 1, {base}, "p_values": [0.5]}}"#));
    assert_eq!(anisobbm(&["check-id2", "--config", &bad_p]).status.code(), Some(2));
}

#[test]
fn perimeter_of_unit_square() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "per.json",
        r#"{"schema_version": 1, "region": {"type": "box", "lo": [0, 0], "hi": [1, 1]}, "body": {"shape": "ball", "dim": 2}, "mollify": [20]}"#,
    );
    let o = anisobbm(&["perimeter", "--config", &cfg, "--json", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((rows[0]["value"].as_f64().unwrap() - 16.0).abs() < 1e-9);
    assert!(rows[1]["relative_gap"].as_f64().unwrap() < 0.03);
    assert!(tmp.path().join("perimeter.csv").exists());
}

#[test]
fn acceptance_filters_and_json() {
    let o = anisobbm(&["acceptance", "--only", "euclidean", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 1);
    assert_eq!(v["checks"][0]["id"], 2);
    assert_eq!(v["pass"], true);
    assert_eq!(anisobbm(&["acceptance", "--only", "nonsense"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(anisobbm(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(anisobbm(&["norms"]).status.code(), Some(2));
    assert_eq!(anisobbm(&["norms", "--config", "/nonexistent/config.json"]).status.code(), Some(2));
}
