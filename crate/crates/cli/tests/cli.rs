use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tclab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn build_then_measure_round_trips() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "conj.json");
    let out = tclab(&["build", "conj", "--n", "8", "--e", "3", "--d", "3", "--out", &file]);
    assert_eq!(out.status.code(), Some(0));
    let built = json(&out);
    assert_eq!(built["bounds_ok"], true);
    let measured = json(&tclab(&["measure", "--circuit", &file]));
    for (a, b) in [("s", "size"), ("d", "depth"), ("e", "energy"), ("w", "weight")] {
        assert_eq!(built[a], measured[b], "{a}");
    }
    let hit = json(&tclab(&["eval", "--circuit", &file, "--a", "00000001", "--b", "00000001"]));
    assert_eq!(hit["output"], 1);
    let miss = json(&tclab(&["eval", "--circuit", &file, "--a", "10101010", "--b", "01010101"]));
    assert_eq!(miss["output"], 0);
}

#[test]
fn rank_of_named_functions() {
    let rank = |args: &[&str]| json(&tclab(args))["rank"].as_u64().unwrap();
    assert_eq!(rank(&["rank", "--function", "conj", "--n", "6"]), 63);
    assert_eq!(rank(&["rank", "--function", "and_or", "--n", "6"]), 64);
    assert_eq!(rank(&["rank", "--function", "eq", "--n", "5"]), 32);
    assert_eq!(rank(&["rank", "--function", "disj_k", "--n", "6", "--k", "2"]), 22);
}

#[test]
fn rank_of_a_circuit_file() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "eq.json");
    tclab(&["build", "eq", "--n", "4", "--e", "2", "--d", "3", "--out", &file]);
    assert_eq!(json(&tclab(&["rank", "--circuit", &file]))["rank"], 16);
}

#[test]
fn malformed_input_and_usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let file = path(&dir, "bad.json");
    std::fs::write(&file, "{not json").unwrap();
    assert_eq!(tclab(&["eval", "--circuit", &file, "--a", "1", "--b", "1"]).status.code(), Some(2));
    assert_eq!(tclab(&["build", "conj", "--n", "2"]).status.code(), Some(2));
    assert_eq!(tclab(&["build", "conj", "--n", "2", "--e", "4", "--d", "4"]).status.code(), Some(2));
    assert_eq!(tclab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn check_bound_and_decomposition() {
    let dir = TempDir::new().unwrap();
    let conj = path(&dir, "conj.json");
    let eq = path(&dir, "eq.json");
    tclab(&["build", "conj", "--n", "3", "--e", "2", "--d", "3", "--out", &conj]);
    tclab(&["build", "eq", "--n", "2", "--e", "2", "--d", "2", "--out", &eq]);
    let out = tclab(&["check-bound", "--circuit", &conj]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["holds"], true);
    assert_eq!(tclab(&["verify-decomposition", "--circuit", &conj]).status.code(), Some(0));
    // The e-1 family misses sets on EQ circuits; the e family does not.
    let strict = tclab(&["verify-decomposition", "--circuit", &eq]);
    assert_eq!(strict.status.code(), Some(1));
    assert_eq!(json(&strict)["claim2"], false);
    assert_eq!(tclab(&["verify-decomposition", "--circuit", &eq, "--family", "e"]).status.code(), Some(0));
}

fn write_discretized(dir: &Path) -> String {
    let text = r#"{
        "kind": "discretized",
        "activation": {"kind": "relu", "bitwidth": 2},
        "n": 2,
        "gates": [
            {"id": "h1", "x_weights": [1, 2], "y_weights": [1, 0], "gate_weights": {}, "threshold": 1},
            {"id": "h2", "x_weights": [0, -1], "y_weights": [3, 1], "gate_weights": {"h1": -2}, "threshold": 0}
        ],
        "scale": 4,
        "top": {"id": "top", "x_weights": [0, 0], "y_weights": [0, 0], "gate_weights": {"h1": 1, "h2": 1}, "threshold": 2},
        "output": "top"
    }"#;
    let file = dir.join("disc.json");
    std::fs::write(&file, text).unwrap();
    file.to_string_lossy().into_owned()
}

#[test]
fn compile_writes_an_equivalent_threshold_circuit() {
    let dir = TempDir::new().unwrap();
    let source = write_discretized(dir.path());
    let target = path(&dir, "compiled.json");
    let out = tclab(&["compile", "--circuit", &source, "--out", &target]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    for key in ["W", "size_in", "size_out", "depth_factor", "energy_factor", "verified"] {
        assert!(report.get(key).is_some(), "{key}");
    }
    assert_eq!(report["verified"], true);
    for a in ["00", "01", "10", "11"] {
        for b in ["00", "01", "10", "11"] {
            let src = json(&tclab(&["eval", "--circuit", &source, "--a", a, "--b", b]));
            let dst = json(&tclab(&["eval", "--circuit", &target, "--a", a, "--b", b]));
            assert_eq!(src["output"], dst["output"], "{a} {b}");
        }
    }
}

#[test]
fn corpus_is_byte_identical_across_runs() {
    let args = ["corpus", "--seed", "2024", "--count", "40", "--n", "3"];
    let first = tclab(&args);
    let second = tclab(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("n,s,d,e,w,rank,lhs,rhs,holds"));
    assert_eq!(text.lines().count(), 41);
    let threaded = tclab(&["--threads", "1", "corpus", "--seed", "2024", "--count", "40", "--n", "3"]);
    assert_eq!(threaded.stdout, second.stdout);
}

#[test]
fn tightness_record() {
    let out = tclab(&["tightness", "--n", "12", "--e", "3", "--d", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["check"]["within"], true);
    assert_eq!(r["degenerate"], false);
    assert_eq!(json(&tclab(&["tightness", "--n", "8", "--e", "2", "--d", "2"]))["degenerate"], true);
}
