use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pqcausal(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqcausal"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const METRIC_22: &str = r#"{"version":1,"kind":"metric","payload":{"p":2,"q":2,"spatial_weights":[1,1],"temporal_weights":[1,1]}}"#;

#[test]
fn classify_lightlike() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "m.json", METRIC_22);
    let out = pqcausal(&["classify", "--metric", "m.json", "--vector", "1,0,1,0"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"], serde_json::json!({"class": "Lightlike"}));
}

#[test]
fn bare_payload_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "m.json", r#"{"p":1,"q":1,"spatial_weights":[1],"temporal_weights":[1]}"#);
    let out = pqcausal(&["classify", "--metric", "m.json", "--vector", "0,1"], dir.path());
    assert_eq!(report(&out)["result"]["class"], "Timelike");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pqcausal(&["plateau", "--problem", "missing.json"], dir.path()).status.code(), Some(65));
    assert_eq!(pqcausal(&["frobnicate"], dir.path()).status.code(), Some(64));
    write(dir.path(), "bad.json", "{ not json");
    assert_eq!(pqcausal(&["classify", "--metric", "bad.json", "--vector", "1,0"], dir.path()).status.code(), Some(65));
    write(dir.path(), "m.json", METRIC_22);
    // dimension mismatch is a precondition error
    assert_eq!(pqcausal(&["classify", "--metric", "m.json", "--vector", "1,0"], dir.path()).status.code(), Some(2));
    // samples whose constant exceeds the requested bound
    write(dir.path(), "s.json", r#"{"sources":[[0.0],[1.0]],"targets":[[0.0],[2.0]]}"#);
    let out = pqcausal(&["extend", "--samples", "s.json", "--query", "0.5", "--lipschitz", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn extend_and_intersect() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.json", r#"{"sources":[[0.0],[1.0]],"targets":[[0.0],[1.0]]}"#);
    let out = pqcausal(&["extend", "--samples", "s.json", "--query", "0.5;2.0"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let values = &report(&out)["result"]["values"];
    assert!((values[0][0].as_f64().unwrap() - 0.5).abs() < 1e-8);

    write(dir.path(), "f.json", r#"{"affine":{"matrix":[[1.0]],"offset":[0.0]}}"#);
    write(dir.path(), "w.json", r#"{"affine":{"matrix":[[0.5]],"offset":[0.0]}}"#);
    let out = pqcausal(&["intersect", "--causal", "f.json", "--surface", "w.json", "--start", "5"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(report(&out)["result"]["time"][0].as_f64().unwrap().abs() < 1e-9);

    write(dir.path(), "steep.json", r#"{"affine":{"matrix":[[1.0]],"offset":[0.0]}}"#);
    // a surface without strict contraction violates the precondition
    let out = pqcausal(&["intersect", "--causal", "f.json", "--surface", "steep.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diamond_outputs_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["diamond", "--p", "1", "--q", "1", "--out", "d.svg", "--csv", "d.csv", "--resolution", "21"];
    assert_eq!(pqcausal(&args, dir.path()).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("d.svg")).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert_eq!(pqcausal(&args, dir.path()).status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("d.svg")).unwrap());
    assert!(String::from_utf8(first).unwrap().contains("<polygon"));
    // the 1+1 slice is the square |x| + |y| < 1
    for row in csv.lines().skip(1) {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        let inside = cols[0].abs() + cols[1].abs() < 1.0;
        assert_eq!(inside, cols[2] == 1.0, "{row}");
    }
    let out = pqcausal(&["diamond", "--p", "2", "--q", "2", "--slice", "y2=0", "--point", "0.3,0,0.3,0"], dir.path());
    assert_eq!(report(&out)["result"]["point"]["oracle"], true);
}

#[test]
fn empty_diamond_slice_has_axes_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = pqcausal(&["diamond", "--p", "2", "--q", "1", "--slice", "x2=2", "--out", "e.svg"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let svg = std::fs::read_to_string(dir.path().join("e.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<line") && !svg.contains("<polygon"));
    assert_eq!(report(&out)["result"]["members"], 0);
}

#[test]
fn plateau_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "prob.json",
        r#"{"version":1,"kind":"problem","payload":{
            "base":{"shape":{"box":{"lo":[0,0],"hi":[1,1]}},"resolution":7},
            "metric":{"p":1,"q":2,"spatial_weights":[1],"temporal_weights":[1,1]},
            "boundary":{"affine":{"matrix":[[0.5,0.0]],"offset":[0.0]}},
            "solver":{"max_iter":2000}}}"#,
    );
    let out = pqcausal(&["plateau", "--problem", "prob.json", "--out", "sol.json", "--svg", "sol.svg"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let area = report(&out)["result"]["area"].as_f64().unwrap();
    assert!((area - 0.75f64.sqrt()).abs() < 1e-6);
    let sol: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("sol.json")).unwrap()).unwrap();
    assert_eq!(sol["nodes"].as_array().unwrap().len(), 49);
    assert!(std::fs::read_to_string(dir.path().join("sol.svg")).unwrap().contains("<rect"));
}

#[test]
fn split_point() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "fol.json", r#"{"shift":{"affine":{"matrix":[[0.5]],"offset":[0.0]}}}"#);
    write(dir.path(), "w.json", r#"{"affine":{"matrix":[[0.0]],"offset":[0.0]}}"#);
    let out = pqcausal(&["split", "--foliation", "fol.json", "--surface", "w.json", "--point", "1,2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["result"]["leaf_point"][0].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(r["result"]["time"][0], 2.0);
}

#[test]
fn verify_split_instances_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = pqcausal(&["verify-split", "--samples", "200", "--seed", "7", "--save-instances", "inst"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let again = pqcausal(
        &["verify-split", "--samples", "200", "--seed", "7", "--foliation", "inst/foliation.json", "--surface", "inst/surface.json"],
        dir.path(),
    );
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(report(&out)["result"], report(&again)["result"]);

    for name in ["foliation.json", "surface.json"] {
        let path = dir.path().join("inst").join(name);
        let parsed: pqcausal_cli::instance::InstanceFile =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let rewritten = dir.path().join("re.json");
        parsed.write(&rewritten).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&rewritten).unwrap());
    }
}

#[test]
fn verify_all_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = pqcausal(&["verify-all", "--seed", "0"], dir.path());
    let b = pqcausal(&["verify-all", "--seed", "0"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    let (mut ra, mut rb) = (report(&a), report(&b));
    ra["wall_time"] = Value::Null;
    rb["wall_time"] = Value::Null;
    assert_eq!(ra, rb);
    assert_eq!(ra["result"]["passed"], ra["result"]["total"]);
}
