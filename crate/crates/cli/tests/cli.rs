use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaugeforge"))
}

fn scratch(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(path: &PathBuf) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn build_writes_complex_and_manifest() {
    let d = scratch("build");
    let c = d.join("c.json");
    let out = run(&["build", "--family", "toric", "--L", "3", "--out", c.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&c);
    assert_eq!(v["family"], "toric");
    let m = json(&d.join("c.json.manifest.json"));
    assert_eq!(m["command_line"][1], "build");
    assert!(m["timestamp_unix_ms"].is_number());
}

#[test]
fn homology_of_toric_code() {
    let d = scratch("homology");
    let c = d.join("c.json");
    assert!(run(&["build", "--family", "toric", "--L", "2", "--out", c.to_str().unwrap()]).status.success());
    let out = run(&["homology", "--in", c.to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["homology"]["dims"], serde_json::json!([1, 2, 1]));
    // The manifest goes to stderr when there is no output file.
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("input_hashes"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["build", "--family", "toric"]).status.code(), Some(2));
    assert_eq!(run(&["homology", "--in", "/nonexistent/c.json"]).status.code(), Some(2));
    // Stochastic commands need a seed.
    assert_eq!(run(&["protocol", "measure-cz", "--family", "minimal-torus", "--input", "++"]).status.code(), Some(2));
}

#[test]
fn gauge_verify_and_tampering() {
    let d = scratch("verify");
    let (c, cup, g, bad) = (d.join("c.json"), d.join("cup.json"), d.join("g.json"), d.join("bad.json"));
    let s = |p: &PathBuf| p.to_str().unwrap().to_owned();
    assert!(run(&["build", "--family", "toric", "--L", "3", "--out", &s(&c), "--cup-out", &s(&cup)]).status.success());
    let out = run(&["cup-check", "--complex", &s(&c), "--cup", &s(&cup), "--trials", "50", "--seed", "7"]);
    assert!(out.status.success());
    let out = run(&["gauge", "--mode", "homological-cz", "--complex", &s(&c), "--cup", &s(&cup), "--class", "all", "--out", &s(&g)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["verify", "--gauged", &s(&g)]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ldpc"]["max_x_weight"], 4);
    assert_eq!(v["ldpc"]["max_cz_count"], 2);

    // Strip the CZ dressing from the first vertex term.
    let mut t = json(&g);
    t["x_type_stabilizers"][0]["cz"] = serde_json::json!([]);
    fs::write(&bad, serde_json::to_string(&t).unwrap()).unwrap();
    let out = run(&["verify", "--gauged", &s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("closure: generators (0,"), "{err}");
}

#[test]
fn graph_modes_and_preparation() {
    let d = scratch("graph");
    let s = |p: &PathBuf| p.to_str().unwrap().to_owned();
    let (c, g, anc) = (d.join("c.json"), d.join("g.json"), d.join("anc.json"));
    assert!(run(&["build", "--family", "toric", "--L", "3", "--out", &s(&c)]).status.success());
    let out = run(&["gauge", "--mode", "graph-swap", "--complex", &s(&c), "--auto-graph", "--out", &s(&g), "--ancilla-out", &s(&anc)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run(&["verify", "--gauged", &s(&g)]).status.success());

    let (a, ga, aa) = (d.join("a.json"), d.join("ga.json"), d.join("aa.json"));
    assert!(run(&["build", "--family", "alp", "--Lx", "3", "--Ly", "3", "--Lz", "3", "--out", &s(&a)]).status.success());
    let out = run(&["gauge", "--mode", "graph-cz", "--complex", &s(&a), "--out", &s(&ga), "--ancilla-out", &s(&aa)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run(&["verify", "--gauged", &s(&ga)]).status.success());
    let out = run(&["protocol", "prep", "--gauged", &s(&ga), "--ancilla", &s(&aa), "--trials", "50", "--seed", "3"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["corrected"], 50);
}

#[test]
fn logicals_check_clean() {
    let d = scratch("logicals");
    let c = d.join("c.json");
    assert!(run(&["build", "--family", "toric", "--L", "2", "--out", c.to_str().unwrap()]).status.success());
    for mode in ["homological-cz", "graph-swap"] {
        let out = run(&["logicals", "--mode", mode, "--complex", c.to_str().unwrap()]);
        assert!(out.status.success(), "{mode}: {}", String::from_utf8_lossy(&out.stderr));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(v["pairing_failures"].as_array().unwrap().is_empty());
    }
}

#[test]
fn measure_cz_is_seed_deterministic() {
    let d = scratch("measure");
    let (a, b) = (d.join("a.json"), d.join("b.json"));
    for p in [&a, &b] {
        let out = run(&[
            "protocol", "measure-cz", "--family", "minimal-torus", "--input", "++", "--shots", "2000", "--seed", "7", "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let v = json(&a);
    let p = v["p_plus"].as_f64().unwrap();
    assert!((p - 0.75).abs() <= 0.03, "{p}");
    assert!(v["min_fidelity"].as_f64().unwrap() > 1.0 - 1e-10);
}
