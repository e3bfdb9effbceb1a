mod common;

use std::path::Path;

use common::corpus_path;
use covloop::cli::{dispatch, EXIT_USAGE};
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("covloop").chain(args.iter().copied());
    let code = dispatch(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn statement_targets_of_listing_one() {
    let design = corpus_path("listing1");
    let (code, out, _) = run(&["targets", path(&design), "--kind", "statement"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|t| t["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["listing1.v:listing1:stmt@3.3-3.10", "listing1.v:listing1:stmt@5.3-5.10"]);
    let (_, all, _) = run(&["targets", path(&design)]);
    assert_eq!(serde_json::from_str::<Value>(&all).unwrap().as_array().unwrap().len(), 4);
}

#[test]
fn close_writes_two_properties_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_sva = dir.path().join("final_sva.sv");
    let manifest = dir.path().join("manifest.json");
    let design = corpus_path("listing1");
    let (code, _, err) = run(&[
        "close",
        path(&design),
        "--sva",
        path(&design.with_file_name("listing1_sva.sv")),
        "--out",
        path(&out_sva),
        "--manifest",
        path(&manifest),
    ]);
    assert_eq!(code, 0, "{err}");
    let sva = std::fs::read_to_string(&out_sva).unwrap();
    assert_eq!(covloop::sva::parse_sva(&sva).unwrap().properties.len(), 2);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["outcome"], "THRESHOLD_MET");
    assert_eq!(m["kpis"]["proven_pct"], 100.0);
}

#[test]
fn close_exit_codes_follow_the_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let design = corpus_path("deadcode");
    let base = [
        "close".to_string(),
        path(&design).to_string(),
        "--out".into(),
        path(&dir.path().join("o.sv")).to_string(),
        "--manifest".into(),
        path(&dir.path().join("m.json")).to_string(),
    ];
    let args: Vec<&str> = base.iter().map(String::as_str).collect();
    assert_eq!(run(&args).0, 3);
    let mut escalate = args.clone();
    escalate.push("--no-stall-detection");
    assert_eq!(run(&escalate).0, 2);
}

#[test]
fn analyze_on_a_closed_design_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let design = corpus_path("mux2");
    let closed = dir.path().join("mux2_sva.sv");
    let (code, _, err) = run(&[
        "close",
        path(&design),
        "--sva",
        path(&design.with_file_name("mux2_sva.sv")),
        "--out",
        path(&closed),
        "--manifest",
        path(&dir.path().join("m.json")),
    ]);
    assert_eq!(code, 0, "{err}");
    let (code, out, err) = run(&["analyze", path(&design), "--sva", path(&closed)]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap(), Value::Array(vec![]));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(run(&["bogus"]).0, EXIT_USAGE);
    assert_eq!(run(&["targets"]).0, EXIT_USAGE);
    let design = corpus_path("listing1");
    assert_eq!(run(&["targets", path(&design), "--kind", "toggle"]).0, EXIT_USAGE);
}

#[test]
fn pipeline_errors_exit_1_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.v");
    std::fs::write(&bad, "module m(input a; endmodule\n").unwrap();
    let (code, out, err) = run(&["parse", path(&bad)]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"], "rtl");
    assert!(v["message"].as_str().unwrap().contains("bad.v"));

    let (code, _, err) = run(&["parse", path(&dir.path().join("missing.v"))]);
    assert_eq!(code, 1);
    assert!(serde_json::from_str::<Value>(err.trim()).is_ok());
}

#[test]
fn prove_reports_status_per_property() {
    let design = corpus_path("counter3");
    let (code, out, err) = run(&["prove", path(&design), "--sva", path(&design.with_file_name("counter3_sva.sv"))]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["report"]["coverage_pct"].as_f64().unwrap() > 0.0);
    assert!(out.contains("p_reset_clears"));
}

#[test]
fn parse_prints_the_tree_as_json() {
    let design = corpus_path("alu");
    let (code, out, err) = run(&["parse", path(&design)]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v[0]["units"][0]["name"], "alu");
    assert!(out.contains("\"expr\": \"ident\""));
}
