//! The `ghzgrid` binary: formats, overrides, exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ghzgrid"))
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], config: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const FIG4: &str = r#"{
    "grid": 3,
    "consumers": [[0, 2], [1, 0]],
    "link_prob": [0.6, 0.75, 0.9],
    "fidelity": [0.9, 0.95, 1.0],
    "k": 2,
    "trials": 300,
    "seed": 11
}"#;

#[test]
fn simulate_writes_the_declared_header() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "run.json", FIG4);
    let o = run(&["simulate"], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("fidelity,link_prob,grid,region,k,mean_rate,std_err,abort_frac"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    for row in rows {
        assert_eq!(row.split(',').count(), 8);
    }
}

#[test]
fn sweep_has_one_row_per_point_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sweep.json", FIG4);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(out).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 1 + 9);
    // one envelope row per fidelity and link probability
    let flagged = text.lines().skip(1).filter(|l| l.ends_with(",1")).count();
    assert_eq!(flagged, 9);
}

#[test]
fn overrides_take_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "run.json", FIG4);
    let base = stdout(&run(&["simulate", "--trials", "50", "--seed", "3"], &cfg));
    let again = stdout(&run(&["simulate", "--trials", "50", "--seed", "3"], &cfg));
    let other = stdout(&run(&["simulate", "--trials", "50", "--seed", "4"], &cfg));
    assert_eq!(base, again);
    assert_ne!(base, other);
}

#[test]
fn json_mirror_parses() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "run.json", FIG4);
    let o = run(&["simulate", "--json", "--trials", "20"], &cfg);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 9);
    assert!(v[0]["mean_rate"].is_number());
}

#[test]
fn trace_logs_rounds() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "one.json", r#"{"grid": 3, "consumers": [[0,0],[2,2]], "link_prob": 1.0, "fidelity": 0.95, "trials": 5}"#);
    let o = run(&["simulate", "--trace"], &cfg);
    assert_eq!(o.status.code(), Some(0));
    let log = stderr(&o);
    assert!(log.lines().any(|l| l.starts_with("node=(") && l.contains(" action=") && l.contains(" state_qubits=")));
}

fn expect_config_error(body: &str, field: &str) {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.json", body);
    let o = run(&["simulate"], &cfg);
    assert_eq!(o.status.code(), Some(2), "{body}");
    assert!(stderr(&o).contains(&format!("`{field}`")), "{body}: {}", stderr(&o));
}

#[test]
fn configuration_errors_exit_2_and_name_the_field() {
    expect_config_error(r#"{"grid": 3, "consumers": [[0,2],[1,0]], "link_prob": 0.6, "fidelity": 0.9}"#, "trials");
    expect_config_error(r#"{"grid": 3, "consumers": [[0,2],[1,0]], "link_prob": 0.6, "fidelity": 0.2, "trials": 5}"#, "fidelity");
    expect_config_error(r#"{"grid": 3, "consumers": [[0,2],[1,0]], "link_prob": [], "fidelity": 0.9, "trials": 5}"#, "link_prob");
    expect_config_error(r#"{"grid": 3, "consumers": [[0,2],[1,0]], "link_prob": 0.6, "fidelity": 0.9, "trials": 5, "colour": 1}"#, "colour");
    expect_config_error(r#"{"grid": 3, "consumers": [[0,2],[3,0]], "link_prob": 0.6, "fidelity": 0.9, "trials": 5}"#, "consumers");
    expect_config_error(r#"{"grid": 3, "consumers": [[0,2],[1,0]], "link_prob": 0.6, "fidelity": 0.9, "trials": 5, "k": "two"}"#, "k");
    expect_config_error(r#"{"grid": 3, "consumers": [[0,2],[1,0]], "link_prob": 0.6, "fidelity": 0.9, "trials": 5, "scheduler": "random"}"#, "scheduler");
    expect_config_error(r#"{"grid": 3, "consumers": [[0,2],[1,0]], "link_prob": 0.6, "fidelity": 0.9, "trials": 5, "region": -1}"#, "region");
    expect_config_error(r#"{"grid": 3, "consumers": [[0,2],[1,0]], "link_prob": 0.6, "fidelity": 0.9, "trials": 0}"#, "trials");
    expect_config_error(r#"[1, 2]"#, "config");
}

#[test]
fn missing_config_file_is_a_configuration_error() {
    let o = bin().args(["simulate", "--config", "/nonexistent/run.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["simulate"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cycles_csv_and_deduplication() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cyc.json", r#"{"grid": 4, "link_prob": [1.0, 1.0, 0.5], "k": [1, 2], "trials": 1000, "seed": 2}"#);
    let o = run(&["cycles"], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning: duplicate value"));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,p,cycle_len,fraction_pre,fraction_post"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for r in rows.iter().filter(|r| r[1] == "1") {
        assert_eq!(r[4], "0");
    }
    let few = write(&dir, "few.json", r#"{"grid": 4, "link_prob": 0.5, "trials": 10}"#);
    assert_eq!(run(&["cycles"], &few).status.code(), Some(2));
}

#[test]
fn validate_passes_and_injected_fault_fails() {
    let o = bin().args(["validate", "--samples", "20000"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    for suite in ["state-algebra", "protocol", "distillation"] {
        assert!(text.lines().any(|l| l.starts_with("PASS") && l.contains(suite)), "{text}");
    }
    assert!(text.contains("six-step ladder"));
    let o = bin().args(["validate", "--samples", "2000", "--inject-fault"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
