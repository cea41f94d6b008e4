use std::path::Path;
use std::process::{Command, Output};

fn mcf_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcf-lab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const TINY: &str = r#"
name = "tiny"
roles = ["exact_sphere"]
[initial]
kind = "sphere"
radius = 2.0
subdivisions = 1
[time]
gauge = "physical"
start = -1.0
end = -0.9
"#;

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(mcf_lab(&[]).status.code(), Some(2));
    assert_eq!(mcf_lab(&["run", "/nonexistent/x.toml"]).status.code(), Some(2));
    assert_eq!(mcf_lab(&["report", d]).status.code(), Some(2), "empty directory");
    assert_eq!(mcf_lab(&["suite", d]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.toml", "name = \"x\"\nbogus = 1\n");
    let out = mcf_lab(&["run", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml:2"));
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "tiny.toml", TINY);
    let runs = dir.path().join("runs");
    let runs_s = runs.to_str().unwrap();
    let out = mcf_lab(&["run", &scenario, "--out", runs_s, "--seed", "3", "--record-every", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stored = std::fs::read_to_string(runs.join("tiny/config.toml")).unwrap();
    assert!(stored.contains("seed = 3") && stored.contains("record_every = 2"));
    let header = std::fs::read_to_string(runs.join("tiny/trace.csv")).unwrap();
    assert!(header.starts_with("time,"));

    // the exact-sphere run stops at t = -0.9, so that criterion fails
    let reports = dir.path().join("reports");
    let out = mcf_lab(&["report", runs_s, "--out", reports.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let md = String::from_utf8_lossy(&out.stdout);
    assert!(md.contains("| 2 | Exact shrinking sphere | fail"), "{md}");
    assert!(reports.join("report.json").is_file() && reports.join("report.md").is_file());

    // a missing trace is listed, not fatal
    std::fs::remove_file(runs.join("tiny/trace.csv")).unwrap();
    let out = mcf_lab(&["report", runs_s]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("trace.csv"));
}

#[test]
fn classify_a_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "tiny.toml", &TINY.replace("subdivisions = 1", "subdivisions = 3"));
    let runs = dir.path().join("runs");
    assert!(mcf_lab(&["run", &scenario, "--out", runs.to_str().unwrap()]).status.success());
    let obj = runs.join("tiny/snapshots/final.obj");
    let out = mcf_lab(&["classify", obj.to_str().unwrap(), "--time", "-0.9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"sphere\""), "{text}");
    assert_eq!(mcf_lab(&["classify", "/nonexistent.obj"]).status.code(), Some(2));
}
