use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cbr_core::specio::{self, fixtures};

fn cbr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbr"))
        .args(args)
        .env_remove("CBR_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn spec(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs").join(name).display().to_string()
}

#[test]
fn fixtures_table_lists_every_check() {
    let o = cbr(&["fixtures", "--name", "fig2_chain"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("fixture fig2_chain"));
    assert!(out.contains("r10:node.raw.max_entropy_bits"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn analyze_json_is_a_report() {
    let o = cbr(&["analyze", &spec("quantizer.json"), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["name"], "quantize_levels");
    assert_eq!(v["edges"][0]["metrics"]["benefit_bits"], 6.0);
    assert_eq!(v["overall"]["overall_cbr"], serde_json::json!([3.0, 3.0]));
}

#[test]
fn maximal_mode_override() {
    let o = cbr(&["analyze", &spec("quantizer.json"), "--mode", "maximal", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["entropy_mode"], "maximal");
}

#[test]
fn dot_and_csv_reports() {
    let dot = stdout(&cbr(&["report", &spec("two_peak.json"), "--format", "dot"]));
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("read_a"));

    let csv = stdout(&cbr(&["report", &spec("quantizer.json"), "--format", "csv"]));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("assignment,cost,benefit_lo,benefit_hi,cbr_mid"));
    assert!(lines.next().unwrap().contains("quantize.bins"));
}

#[test]
fn seed_from_environment_is_reported() {
    let run = |seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_cbr"))
            .args(["optimize", &spec("two_peak.json"), "--greedy", "--restarts", "3", "--json"])
            .env("CBR_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()
    };
    let a = run("42");
    assert_eq!(a["seed"], 42);
    assert_eq!(a["restarts"], 3);
    assert_eq!(a["certified"], false);
    assert_eq!(run("42"), a);
}

#[test]
fn errors_name_the_offending_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    let text = specio::emit_spec(&fixtures::two_peak_spec()).replace("\"to\": \"joined\"", "\"to\": \"nowhere\"");
    std::fs::write(&p, text).unwrap();
    let o = cbr(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("graph.edges[2].to"), "{err}");
    assert!(err.contains("nowhere"));
}

#[test]
fn emitted_fixtures_match_shipped() {
    let dir = tempfile::tempdir().unwrap();
    let o = cbr(&["fixtures", "--emit", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for name in fixtures::NAMES {
        let file = PathBuf::from(format!("{name}.json"));
        let a = std::fs::read_to_string(dir.path().join(&file)).unwrap();
        let b = std::fs::read_to_string(shipped.join(&file)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}
