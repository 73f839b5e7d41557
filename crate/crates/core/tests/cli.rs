mod common;

use std::path::Path;

use serde_json::Value;

use deliberate::cli::main_with;

use common::*;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(store: &Path, args: &[&str]) -> Run {
    let mut full = vec!["deliberate", "--store", store.to_str().unwrap(), "--timestamp", TIMESTAMP];
    full.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = main_with(full, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn json(r: &Run) -> Value {
    serde_json::from_str(&r.out).unwrap_or_else(|e| panic!("{e}: {}", r.out))
}

fn fx(name: &str) -> String {
    fixture(name).to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["frobnicate"]).code, 2);
    assert_eq!(run(dir.path(), &["report", "--by", "astrology"]).code, 2);
    assert_eq!(run(dir.path(), &["simulate", "--p", "0.5", "--k", "0"]).code, 2);
    let bad_ts = main_with(["deliberate", "--timestamp", "yesterday", "verify"], &mut Vec::new(), &mut Vec::new());
    assert_eq!(bad_ts, 2);
    let mut out = Vec::new();
    assert_eq!(main_with(["deliberate", "--help"], &mut out, &mut Vec::new()), 0);
    assert!(String::from_utf8(out).unwrap().contains("simulate"));
}

#[test]
fn ingest_reports_rows() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["ingest", "--input", &fx("empty.csv")]);
    assert_eq!(r.code, 1, "{}", r.err);

    let r = run(dir.path(), &["ingest", "--input", &fx("three_rows.csv"), "--format", "json"]);
    assert_eq!(r.code, 0);
    let report = json(&r);
    assert_eq!(report["profiles"].as_array().unwrap().len(), 2);
    assert_eq!(report["errors"].as_array().unwrap().len(), 1);
    assert_eq!(report["errors"][0]["id"], "r-2");
    assert!(r.err.contains("r-2"));

    let r = run(dir.path(), &["ingest", "--input", &fx("full_core.csv"), "--format", "json", "--no-impute"]);
    assert_eq!(json(&r)["profiles"][0]["feature_count"], 23);

    let r = run(dir.path(), &["ingest", "--input", &fx("profiles.jsonl")]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("ingested 3 profile(s)"));
    let r = run(dir.path(), &["ingest", "--input", &fx("missing.csv")]);
    assert_eq!(r.code, 1);
}

#[test]
fn assess_skips_minors() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["assess", "--input", &fx("mixed_ages.csv"), "--format", "json"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let s = json(&r);
    assert_eq!(s["assessed"], 3);
    assert_eq!(s["skipped_ineligible"], 2);
    assert_eq!(s["skipped_ids"], serde_json::json!(["m-10", "m-14"]));
    assert_eq!(s["convergence_rate"], 100.0);

    let r = run(dir.path(), &["assess"]);
    assert!(r.out.contains("assessed 0") || r.out.contains("skipped"), "{}", r.out);
    let r = run(dir.path(), &["verify"]);
    assert_eq!((r.code, json(&r)["valid"].as_bool()), (0, Some(true)));

    let empty = tempfile::tempdir().unwrap();
    assert_eq!(run(empty.path(), &["assess"]).code, 1, "no profiles");
    assert_eq!(run(empty.path(), &["assess", "--weights", "0.9,0.3,0.3"]).code, 2);
}

#[test]
fn simulate_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["simulate", "--n", "40", "--p", "1", "--persist", "--format", "json"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let sim = json(&r);
    assert_eq!(sim["simulation"]["summary"]["avg_iterations"], 1.0);

    let r = run(dir.path(), &["report", "--by", "validator_feedback", "--resamples", "50", "--format", "json"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let rows = &json(&r)["tables"]["validator_feedback"];
    assert_eq!(rows.as_array().unwrap().len(), 1);
    assert_eq!(rows[0]["category"], "No Issues");
    assert_eq!(rows[0]["convergence"], 100.0);
    for ext in ["txt", "csv", "json"] {
        assert!(dir.path().join(format!("reports/validator_feedback.{ext}")).is_file());
    }

    let r = run(dir.path(), &["report", "--by", "profile_complexity", "--resamples", "0", "--format", "json"]);
    let rows = json(&r)["tables"]["profile_complexity"].as_array().unwrap().clone();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|row| row["n"].as_u64().unwrap() > 0));
    assert_eq!(rows.iter().map(|row| row["n"].as_u64().unwrap()).sum::<u64>(), 40);

    let r = run(dir.path(), &["report", "--resamples", "0"]);
    assert!(r.out.contains("Validator Feedback") && r.out.contains("Bias Status"), "{}", r.out);
}

#[test]
fn simulate_never_passing() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["simulate", "--n", "30", "--p", "0", "--format", "json"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let s = &json(&r)["simulation"]["summary"];
    assert_eq!(s["convergence_rate"], 0.0);
    assert_eq!(s["avg_iterations"], 3.0);
    let r = run(dir.path(), &["simulate", "--n", "30", "--p", "0"]);
    assert!(r.out.contains("Iter"));
    assert!(r.out.contains("3.00"));
    assert_eq!(run(dir.path(), &["simulate", "--p", "1.5"]).code, 1);
}
