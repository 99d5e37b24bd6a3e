use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;
use serde_json::Value;

fn tfun(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tfun"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn ok(args: &[&str]) -> Value {
    let (code, out, err) = tfun(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    serde_json::from_str(&out).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const A_COPIES_B: &str = "{0.0>++;0.1>-+;1.0>++;1.1>-+}";
const B_COPIES_A: &str = "{0.0>++;0.1>++;1.0>+-;1.1>+-}";

fn point_mass(tf: &str) -> String {
    format!(r#"{{"schema":"1","shape":"2x2:2x2","weights":[{{"tf":"{tf}","w":"1/1"}}]}}"#)
}

#[test]
fn bell_exact_thirds() {
    let (code, out, _) = tfun(&["bell", "--angles", "exact-thirds"]);
    assert_eq!(code, 0);
    assert!(out.contains(r#""violation":"-1/8""#));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], "1");
    assert_eq!(v["verdict"], "infeasible");
    assert!(v["certificate"]["violation"]
        .as_str()
        .unwrap()
        .starts_with('-'));
    assert_eq!(
        v["symmetric"]["P"],
        serde_json::json!(["3/16", "-1/16", "3/16", "3/16"])
    );
}

#[test]
fn bell_angle_list_snaps_to_thirds() {
    let v = ok(&[
        "bell",
        "--angles",
        "0,-1.0471975512,1.0471975512",
        "--exact-thirds",
    ]);
    assert_eq!(v["bell"]["violation"], "-1/8");
}

#[test]
fn enumerate_counts() {
    let v = ok(&["enumerate", "--shape", "2x2:2x2", "--count-only"]);
    assert_eq!(v["count"], 256);
    let v = ok(&["enumerate", "--shape", "2x2:2x2", "--census"]);
    assert_eq!(
        v["census"],
        serde_json::json!({"3a": 16, "3b": 48, "3c": 48, "3d": 144})
    );
    let v = ok(&["enumerate", "--shape", "2x2:2x2"]);
    assert_eq!(v["functions"].as_array().unwrap().len(), 256);
}

#[test]
fn enumerate_budget_is_a_domain_error() {
    let (code, out, _) = tfun(&[
        "enumerate",
        "--shape",
        "3x2:3x2",
        "--count-only",
        "--budget",
        "10",
    ]);
    assert_eq!(code, 2);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["error"]["module"], "tfcore");
}

#[test]
fn pigeonhole_quarter() {
    let v = ok(&["pigeonhole", "--p", "1/4"]);
    assert_eq!(v["N"], 2);
    assert_eq!(v["M"], 5);
    assert_eq!(v["union_bound"], "5/4");
    assert_eq!(v["infeasible"], true);
    assert_eq!(v["lp"]["verdict"], "infeasible");
    let v = ok(&["spacetime", "pigeonhole", "--p", "1/5", "--m", "5"]);
    assert_eq!(v["infeasible"], false);
    assert_eq!(v["lp"]["witness"].as_array().unwrap().len(), 5);
}

#[test]
fn classify_copier() {
    let v = ok(&["classify", "--shape", "2x2:2x2", "--tf", B_COPIES_A]);
    assert_eq!(v["class"], "3b");
    assert_eq!(v["signals"], serde_json::json!([[0, 1]]));
    assert_eq!(v["product_form"], false);
}

#[test]
fn lp_witness_feeds_mix() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(
        dir.path(),
        "d.json",
        r#"{"shape":"2x2:2x2","weights":[{"tf":"[+-,-+]","w":"1/3"},{"tf":"[++,+-]","w":"2/3"}]}"#,
    );
    let (_, behavior, _) = tfun(&["mix", "--dist", s(&d)]);
    let b = write(dir.path(), "b.json", &behavior);
    let (code, verdict, _) = tfun(&["lp", "--behavior", s(&b)]);
    assert_eq!(code, 0);
    let w = write(dir.path(), "w.json", &verdict);
    let (_, again, _) = tfun(&["mix", "--dist", s(&w)]);
    assert_eq!(again, behavior);
    let v = ok(&["check-ns", "--behavior", s(&b)]);
    assert_eq!(v["no_signalling"], true);
    let v = ok(&["bell", "--behavior", s(&b)]);
    assert_eq!(v["verdict"], "feasible");
}

#[test]
fn quantum_output_feeds_lp_and_bell() {
    let dir = tempfile::tempdir().unwrap();
    let (code, q, _) = tfun(&["quantum", "--angles", "0,-pi/3,pi/3", "--exact-thirds"]);
    assert_eq!(code, 0);
    let b = write(dir.path(), "q.json", &q);
    assert_eq!(ok(&["lp", "--behavior", s(&b)])["verdict"], "infeasible");
    assert_eq!(
        ok(&["bell", "--behavior", s(&b)])["bell"]["violation"],
        "-1/8"
    );
    assert_eq!(
        ok(&["check-ns", "--behavior", s(&b)])["no_signalling"],
        true
    );
}

#[test]
fn chain_copier_pair() {
    let dir = tempfile::tempdir().unwrap();
    let e1 = write(dir.path(), "e1.json", &point_mass(A_COPIES_B));
    let e2 = write(dir.path(), "e2.json", &point_mass(B_COPIES_A));
    let args = [
        "chain",
        "--exp1",
        s(&e1),
        "--exp2",
        s(&e2),
        "--monte-carlo",
        "50",
        "--seed",
        "3",
    ];
    let v = ok(&args);
    assert_eq!(v["probability"], "1/1");
    assert_eq!(v["witnesses"].as_array().unwrap().len(), 1);
    assert_eq!(
        v["witnesses"][0]["b2_outcomes"],
        serde_json::json!(["+", "-"])
    );
    assert_eq!(v["geometry"]["chain"], true);
    assert_eq!(v["monte_carlo"]["hits"], 50);
    let mut nested = vec!["scenario"];
    nested.extend_from_slice(&args);
    assert_eq!(ok(&nested), v);
}

#[test]
fn escape_output_is_a_joint_document() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        ok(&["escape", "--m", "5", "--p", "1/4"])["verdict"],
        "impossible"
    );
    let v = ok(&["escape", "--m", "3", "--p", "1/4"]);
    assert_eq!(v["verdict"], "possible");
    let j = write(dir.path(), "j.json", &v["joint"].to_string());
    let audit = ok(&["escape", "--m", "3", "--p", "1/4", "--joint", s(&j)]);
    assert_eq!(audit["verdict"], "achieved");
}

#[test]
fn spacetime_config_formats() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("events.csv");
    let v = ok(&[
        "spacetime",
        "config",
        "--n",
        "3",
        "--events-csv",
        s(&csv_path),
    ]);
    assert_eq!(v["events"].as_array().unwrap().len(), 28);
    let rel = v["relations"].as_array().unwrap();
    assert_eq!(rel.len(), 21);
    assert!(rel.iter().all(|r| r["ordered"] == true
        && r["a_preparations"] == "timelike-future"
        && r["b_preparations"] == "timelike-past"));
    let (code, csv, _) = tfun(&["spacetime", "config", "--n", "3", "--format", "csv"]);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_to_string(&csv_path).unwrap(), csv);
    assert_eq!(csv.lines().count(), 29);
}

#[test]
fn exit_codes() {
    let (code, out, err) = tfun(&["frobnicate"]);
    assert_eq!(code, 1);
    assert!(err.contains("Usage"));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["error"]["kind"], "Usage");

    assert_eq!(tfun(&["enumerate"]).0, 1);
    assert_eq!(tfun(&["--help"]).0, 0);

    let (code, out, err) = tfun(&["pigeonhole", "--p", "0/1"]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["error"]["module"], "spacetime");
    assert_eq!(v["error"]["kind"], "Undefined");

    let (code, out, _) = tfun(&["quantum", "--angles", "0,pi/6", "--exact-thirds"]);
    assert_eq!(code, 2);
    assert!(out.contains(r#""kind":"NotExact""#));

    let (code, out, _) = tfun(&["lp", "--behavior", "/nonexistent/b.json"]);
    assert_eq!(code, 2);
    assert!(out.contains(r#""kind":"Io""#));
}

#[test]
fn relay_with_missing_outcome_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let e1 = write(dir.path(), "e1.json", &point_mass(A_COPIES_B));
    let e2 = write(dir.path(), "e2.json", &point_mass(B_COPIES_A));
    let (code, out, _) = tfun(&[
        "chain",
        "--exp1",
        s(&e1),
        "--exp2",
        s(&e2),
        "--relay",
        "+:1",
    ]);
    assert_eq!(code, 2);
    assert!(out.contains(r#""module":"scenario""#));
    let (code, _, err) = tfun(&[
        "chain",
        "--exp1",
        s(&e1),
        "--exp2",
        s(&e2),
        "--relay",
        "+:0",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("OUTCOME:SETTING"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_are_byte_identical(seed in 0u64..1000, n in 1u64..200) {
        let dir = tempfile::tempdir().unwrap();
        let e1 = write(dir.path(), "e1.json", &point_mass(A_COPIES_B));
        let e2 = write(dir.path(), "e2.json", &point_mass(B_COPIES_A));
        let (seed, n) = (seed.to_string(), n.to_string());
        let args = ["chain", "--exp1", s(&e1), "--exp2", s(&e2), "--monte-carlo", &n, "--seed", &seed];
        prop_assert_eq!(tfun(&args), tfun(&args));
    }

    #[test]
    fn quantum_output_round_trips(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let angles = format!("{a},{b}");
        let out = tfun::app::run(["tfun", "quantum", "--angles", &angles]);
        prop_assert_eq!(out.code, 0);
        let doc: tfun::format::BehaviorJson = serde_json::from_str(&out.stdout).unwrap();
        let behavior = tfun::format::behavior_from_json(&doc).unwrap();
        let again = serde_json::to_string(&tfun::format::behavior_to_json(&behavior)).unwrap();
        prop_assert_eq!(again + "\n", out.stdout);
    }
}
