use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdqs-lab")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&v).expect("schema compiles")
}

fn assert_valid(schema: &jsonschema::JSONSchema, v: &Value) {
    if let Err(errors) = schema.validate(v) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("schema violations: {msgs:?}");
    }
}

/// Identity on a qubit as an unnormalized Choi matrix; `off` replaces the two coherences.
fn qubit_choi(off: f64) -> String {
    let mut s = String::from("CHOI in=Q:2,L:1 out=M0:2\n4 4\n");
    for i in 0..4 {
        for j in 0..4 {
            let v = match (i, j) {
                (0, 0) | (3, 3) => 1.0,
                (0, 3) | (3, 0) => off,
                _ => 0.0,
            };
            s.push_str(&format!("{v} 0\n"));
        }
    }
    s
}

/// A dictator-style CDQS where Alice always forwards the secret: leaky on every 0-input.
fn write_hand_protocol(dir: &Path, off: f64) -> String {
    fs::write(dir.join("r.resource"), "PURE 1 1\n1 1\n1 0\n").unwrap();
    fs::write(dir.join("a.choi"), qubit_choi(off)).unwrap();
    fs::write(dir.join("b.choi"), "CHOI in=R:1 out=M1:1\n1 1\n1 0\n").unwrap();
    let cfg = r#"{"kind": "cdqs", "name": "hand", "n": 1, "predicate": "X", "d_Q": 2,
        "resource": "r.resource", "alice": ["a.choi", "a.choi"], "bob": ["b.choi", "b.choi"]}"#;
    let path = dir.join("p.json");
    fs::write(&path, cfg).unwrap();
    path.display().to_string()
}

#[test]
fn verify_equality_n2() {
    let o = lab(&["verify", "--protocol", "eq", "--n", "2", "--deterministic"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_valid(&schema("report.schema.json"), &r);
    assert_eq!(r["seed"], 0);
    assert_eq!(r["wall_time_s"], 0.0);
    let res = &r["result"];
    assert_eq!(res["rows"].as_array().unwrap().len(), 16);
    assert!(res["eps_hat"].as_f64().unwrap() <= 1e-6);
    assert!(res["delta_hat"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn negate_then_verify_certifies_non_equality() {
    let dir = tempfile::tempdir().unwrap();
    let save = dir.path().display().to_string();
    let o = lab(&["transform", "negate", "--protocol", "eq", "--n", "2", "--save", &save, "--deterministic"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_valid(&schema("report.schema.json"), &r);
    assert_eq!(r["result"]["predicate"], "NEQ");
    let saved = r["result"]["saved"].as_str().unwrap().to_string();
    let cfg: Value = serde_json::from_str(&fs::read_to_string(&saved).unwrap()).unwrap();
    assert_valid(&schema("protocol.schema.json"), &cfg);

    let o = lab(&["verify", "--protocol", &saved, "--deterministic"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let res = &report(&o)["result"];
    assert_eq!(res["predicate"], "NEQ");
    assert_eq!(res["rows"].as_array().unwrap().len(), 16);
    assert!(res["eps_hat"].as_f64().unwrap() <= 1e-6);
    assert!(res["delta_hat"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn pp_report_halves_the_threshold() {
    let o = lab(&["reduce", "pp", "--protocol", "eq_pp", "--n", "1", "--deterministic"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_valid(&schema("report.schema.json"), &r);
    let res = &r["result"];
    let (s, s0) = (res["s"].as_f64().unwrap(), res["s0"].as_f64().unwrap());
    // Both values are rounded to 12 significant digits independently.
    assert!((s - s0 / 2.0).abs() <= 1e-11 * s0, "s = {s}, s0 = {s0}");
    assert_eq!(res["valid"], true);
}

#[test]
fn non_psd_choi_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_hand_protocol(dir.path(), 1.0);
    let o = lab(&["verify", "--protocol", &ok, "--deterministic"]);
    assert_eq!(code(&o), 2, "a leaky protocol with zero declared errors fails its assertions");
    let failing = String::from_utf8_lossy(&o.stderr);
    assert!(failing.contains("failing row x=0"), "{failing}");

    let bad = write_hand_protocol(dir.path(), 2.0);
    let o = lab(&["verify", "--protocol", &bad]);
    assert_eq!(code(&o), 1);
    let msg = String::from_utf8_lossy(&o.stderr).to_lowercase();
    assert!(msg.contains("positive") || msg.contains("psd"), "{msg}");
    assert!(o.stdout.is_empty());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let args = [
            "reduce",
            "oneway",
            "--protocol",
            "alice_bit",
            "--mode",
            "sampled",
            "--samples",
            "10",
            "--seed",
            "7",
            "--deterministic",
            "--out",
        ];
        let o = lab(&[&args[..], &[out.to_str().unwrap()]].concat());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    assert_eq!(a, b);
    let r: Value = serde_json::from_slice(&a).unwrap();
    assert_valid(&schema("report.schema.json"), &r);
    assert_eq!(r["seed"], 7);
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["verify", "--protocol", "eq", "--tol", "0.5"],
        vec!["verify", "--bogus"],
        vec!["verify"],
        vec!["verify", "--protocol", "no_such_protocol_or_file"],
        vec!["verify", "--protocol", "eq", "--n", "12"],
        vec!["transform", "and", "--protocol", "alice_bit"],
    ] {
        assert_eq!(code(&lab(&args)), 1, "{args:?}");
    }
}

#[test]
fn precondition_failures_exit_two() {
    let o = lab(&["transform", "amplify", "--noise-eps", "0.7"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("precondition"));
}

#[test]
fn capacity_errors_exit_three() {
    let o = lab(&["reduce", "qip", "--protocol", "eq_lift", "--ell", "30"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("capacity"));
}

#[test]
fn list_protocols_names_the_registry() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("list.json");
    assert_eq!(code(&lab(&["list-protocols", "--out", out.to_str().unwrap()])), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    let names: Vec<&str> = v["protocols"].as_array().unwrap().iter().filter_map(|p| p["name"].as_str()).collect();
    for expected in ["eq", "ip", "eq_lift", "neq", "route_y"] {
        assert!(names.contains(&expected), "{names:?}");
    }
}
