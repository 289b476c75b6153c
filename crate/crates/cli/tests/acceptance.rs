//! Acceptance suite. Criteria 1-9 run inside `anisobbm acceptance`; the
//! suite is run twice, on one and on three worker threads, and criterion 10
//! compares every CSV the two runs wrote.

use std::path::Path;
use std::process::Command;

use anisobbm_cli::acceptance::{name_of, DEFAULT_SEED};

fn run_suite(out: &Path, threads: &str) -> serde_json::Value {
    let o = Command::new(env!("CARGO_BIN_EXE_anisobbm"))
        .args(["acceptance", "--only", "1,2,3,4,5,6,7,8,9", "--json", "--threads", threads])
        .args(["--seed", &DEFAULT_SEED.to_string(), "--out", out.to_str().unwrap()])
        .output()
        .expect("binary runs");
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json summary")
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("threads1"), tmp.path().join("threads3"));
    std::fs::create_dir(&a).unwrap();
    std::fs::create_dir(&b).unwrap();
    let first = run_suite(&a, "1");
    let second = run_suite(&b, "3");

    let mut failed = Vec::new();
    for check in first["checks"].as_array().unwrap() {
        let id = check["id"].as_u64().unwrap();
        let pass = check["pass"].as_bool().unwrap();
        println!(
            "criterion {id:>2} {:<20} {} {}",
            check["name"].as_str().unwrap(),
            if pass { "PASS" } else { "FAIL" },
            check["summary"].as_str().unwrap()
        );
        if !pass {
            failed.push(id);
        }
    }
    assert_eq!(first["checks"].as_array().unwrap().len(), 9);

    let (fa, fb) = (csv_files(&a), csv_files(&b));
    let differing: Vec<&str> =
        fa.iter().zip(&fb).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    let identical = fa.len() == 10 && fa.len() == fb.len() && differing.is_empty() && first["pass"] == second["pass"];
    println!(
        "criterion 10 {:<20} {} {} CSV files from 1 and 3 threads{}",
        name_of(10),
        if identical { "PASS" } else { "FAIL" },
        fa.len(),
        if differing.is_empty() { " byte-identical".to_string() } else { format!(", differing: {differing:?}") }
    );
    if !identical {
        failed.push(10);
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
