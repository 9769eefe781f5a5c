use std::path::PathBuf;
use std::process::Command;

use feyncat::cli::run;
use serde_json::{json, Value};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn call(args: &[&str]) -> (i32, Value) {
    let argv = std::iter::once("feyncat").chain(args.iter().copied());
    let (code, out) = run(argv);
    let v: Value = serde_json::from_str(&out).unwrap_or_else(|e| panic!("not one JSON document: {e}\n{out}"));
    assert_eq!(out.lines().count(), 1);
    (code, v)
}

fn status(v: &Value) -> &str {
    v["status"].as_str().unwrap()
}

#[test]
fn valid_corolla() {
    let (code, v) = call(&["validate", &fixture("corolla.json")]);
    assert_eq!(code, 0);
    assert_eq!(status(&v), "ok");
    assert_eq!(v["payload"]["kind"], "corolla");
    assert_eq!(v["payload"]["tails"], 3);
    assert_eq!(v["provenance"]["inputs"].as_array().unwrap().len(), 1);
}

#[test]
fn decoration_violation_exits_one() {
    let (code, v) = call(&["validate", "--profile", "operad", &fixture("two_roots.json")]);
    assert_eq!(code, 1);
    assert_eq!(status(&v), "violation");
    let (code, _) = call(&["validate", "--profile", "dioperad", &fixture("two_roots.json")]);
    assert_eq!(code, 0);
}

#[test]
fn malformed_json_reports_position() {
    let (code, v) = call(&["validate", &fixture("bad.json")]);
    assert_eq!(code, 2);
    assert_eq!(status(&v), "error");
    assert_eq!(v["payload"]["line"], 2);
    assert!(v["payload"]["column"].as_u64().unwrap() > 0);
}

#[test]
fn missing_file_and_unknown_option() {
    assert_eq!(call(&["validate", &fixture("absent.json")]).0, 2);
    assert_eq!(call(&["validate", "--frobnicate", &fixture("corolla.json")]).0, 2);
    assert_eq!(call(&["relations", "--profile", "nonsense", &fixture("corolla.json")]).0, 0);
    assert_eq!(call(&["coproduct", "--profile", "nonsense", &fixture("contraction.json")]).0, 2);
}

#[test]
fn ladder_coproduct_has_three_terms() {
    let (code, v) = call(&["coproduct", "--profile", "ck-planar", "--input", &fixture("ladder2.json")]);
    assert_eq!(code, 0);
    let terms = v["payload"]["coproduct"].as_array().unwrap();
    let got: Vec<(String, String, &str)> = terms
        .iter()
        .map(|t| (t["left"].to_string(), t["right"].to_string(), t["coeff"].as_str().unwrap()))
        .collect();
    let l2 = "[[[]]]".to_string();
    let dot = "[[]]".to_string();
    assert_eq!(
        got,
        vec![("[]".into(), l2.clone(), "1/1"), (dot.clone(), dot, "1/1"), (l2, "[]".into(), "1/1")]
    );
    for mode in ["oracle", "cooperad"] {
        let (code, w) = call(&["coproduct", "--profile", "ck-planar", "--mode", mode, &fixture("ladder2.json")]);
        assert_eq!(code, 0, "{w}");
        assert_eq!(w["payload"]["coproduct"], v["payload"]["coproduct"], "{mode}");
    }
}

#[test]
fn ladder_antipode() {
    let (code, v) = call(&["antipode", "--profile", "ck-planar", &fixture("ladder2.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["convolutionIdentity"], true);
    let s = v["payload"]["antipode"].as_array().unwrap();
    assert_eq!(s.len(), 2);
    assert!(s.iter().any(|t| t["forest"] == json!([[], []]) && t["coeff"] == "1/1"));
    assert!(s.iter().any(|t| t["forest"] == json!([[[]]]) && t["coeff"] == "-1/1"));
}

#[test]
fn morphism_verbs() {
    let m = fixture("contraction.json");
    let (code, v) = call(&["ghost", &m]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["degree"], 1);
    let (code, v) = call(&["decompose", &m]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["recomposes"], true);
    assert_eq!(v["payload"]["orderings"], 1);
    let (code, v) = call(&["factorize", &m]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["count"], 3);
    for (profile, terms) in [("modular", 2), ("graphs", 3)] {
        let (code, v) = call(&["coproduct", "--profile", profile, "--mode", "hopf", &m]);
        assert_eq!(code, 0);
        assert_eq!(v["payload"]["coproduct"].as_array().unwrap().len(), terms, "{profile}");
    }
    let (code, v) = call(&["antipode", "--profile", "modular", &m]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["antipode"][0]["coeff"], "-1/1");
    assert_eq!(call(&["compose", &m, &m]).0, 2);
}

#[test]
fn insertion() {
    let (code, v) = call(&["compose", &fixture("insert.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["graph"]["vertices"].as_array().unwrap().len(), 3);
}

#[test]
fn free_operad_verbs() {
    let sig = fixture("binary.json");
    for (mode, n, dim) in [("planar", "4", 5), ("symmetric", "3", 3)] {
        let (code, v) = call(&["free-basis", "--sig", &sig, "--arity", n, "--mode", mode]);
        assert_eq!(code, 0);
        assert_eq!(v["payload"]["dimension"], dim);
    }
    let (code, v) = call(&["free-basis", "--sig", &sig, &fixture("circ.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["result"][0]["tree"], "m(1,m(2,3))");
    let (code, v) = call(&["free-basis", "--sig", &sig, "--mode", "symmetric", &fixture("prelie.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["vanishes"], true);
    assert_eq!(call(&["free-basis", "--sig", &sig]).0, 2);
}

#[test]
fn odd_signs() {
    let (code, v) = call(&["dcheck", &fixture("path_oriented.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["normalized"]["sign"], 1);
    assert_eq!(v["payload"]["dSquaredVanishes"], true);
    let (code, v) = call(&["relations", &fixture("edge_pair.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["verdict"]["kind"], "commuting-edges");
    assert_eq!(v["payload"]["verdict"]["computedSign"], -1);
}

#[test]
fn relation_sweep() {
    let (code, v) = call(&["relations", "--sweep", "--max-vertices", "4"]);
    assert_eq!(code, 0);
    let rel = v["payload"]["relations"].as_object().unwrap();
    assert!(rel.len() >= 5);
    for r in rel.values() {
        assert!(r["instances"].as_u64().unwrap() > 0);
        assert_eq!(r["instances"], r["signsHold"]);
    }
}

#[test]
fn seeded_iso_spot_check() {
    let g = fixture("corolla.json");
    let (code, a) = call(&["iso", "--seed", "11", &g]);
    assert_eq!(code, 0);
    assert_eq!(a["payload"]["isomorphic"], true);
    assert_eq!(a["provenance"]["seed"], 11);
    let (_, b) = call(&["iso", &g, &fixture("two_roots.json")]);
    assert_eq!(b["payload"]["isomorphic"], false);
}

#[test]
fn reduced_sweep_notes_coverage() {
    let (code, v) = call(&["sweep", "--item", "4", "--max-edges", "3"]);
    assert_eq!(code, 0);
    let notes = v["payload"]["items"][0]["notes"].to_string();
    assert!(notes.contains("reduced coverage"));
    assert_eq!(call(&["sweep", "--item", "0"]).0, 2);
}

#[test]
fn reports_are_deterministic() {
    let runs: [&[&str]; 4] = [
        &["validate", &fixture("corolla.json")],
        &["coproduct", "--profile", "modular", "--mode", "iso", &fixture("contraction.json")],
        &["iso", "--seed", "3", &fixture("corolla.json")],
        &["sweep", "--item", "9"],
    ];
    for args in runs {
        let argv = || std::iter::once("feyncat").chain(args.iter().copied());
        assert_eq!(run(argv()), run(argv()), "{args:?}");
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_feyncat");
    let out = Command::new(bin).args(["validate", &fixture("corolla.json")]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("\"status\":\"ok\""));
    let out = Command::new(bin).args(["validate", &fixture("bad.json")]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(bin).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
