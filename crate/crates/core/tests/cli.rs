use std::io::Write;
use std::process::{Command, Output, Stdio};

use hill_orbits::cli::VerifyReport;
use hill_orbits::OrbitRecord;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hill-orbits"))
}

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(run(&["--help"], "").status.code(), Some(0));
    assert_eq!(run(&["--version"], "").status.code(), Some(0));
}

#[test]
fn convert_all_representations() {
    let o = run(&["convert"], r#"{"orbital":{"a":1.2,"e":0.1,"inc":0.5,"Omega":1.0,"omega":2.0,"M":0.3}}"#);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let l = v["delaunay"]["L"].as_f64().unwrap();
    assert!((l - 1.2f64.sqrt()).abs() < 1e-15);
    let p1 = v["poincare"]["P1"].as_f64().unwrap();
    let p3 = v["poincare"]["P3"].as_f64().unwrap();
    assert!((p1 + p3 - l).abs() < 1e-14);
}

#[test]
fn convert_rejects_malformed_input() {
    assert_eq!(run(&["convert"], r#"{"keplerian":{}}"#).status.code(), Some(3));
    assert_eq!(run(&["convert"], r#"{"orbital":{"a":1.0,"e":1.5,"inc":0.1,"Omega":0,"omega":0,"M":0}}"#).status.code(), Some(3));
}

#[test]
fn hansen_appends_without_repeating_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hansen.csv");
    let out = path.to_str().unwrap();
    for _ in 0..2 {
        let o = run(&["--out", out, "hansen", "--n", "-3", "--m", "2", "--k-min", "-1", "--k-max", "3", "--e", "0.1,0.2"], "");
        assert_eq!(o.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,m,k,e,value");
    assert_eq!(lines.len(), 1 + 2 * 10);
    assert_eq!(lines.iter().filter(|l| l.starts_with('n')).count(), 1);
}

#[test]
fn average_check_reports_small_differences() {
    let o = run(&["average-check", "--points", "3", "--e", "0.05"], "");
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for r in rows {
        let diff: f64 = r.split(',').nth(4).unwrap().parse().unwrap();
        assert!(diff.abs() < 1e-8, "{r}");
    }
}

#[test]
fn find_orbit_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"params":{"epsilon_tilde":0.002},"p3_star":0.25}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "find-orbit"], "");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    let rec: OrbitRecord = serde_json::from_str(line.trim()).unwrap();
    assert!(rec.converged && rec.residual_norm <= 1e-10);
    assert_eq!(rec.p3_star, 0.25);

    let v = run(&["verify"], &line);
    assert_eq!(v.status.code(), Some(0), "{}", String::from_utf8_lossy(&v.stderr));
    let report: VerifyReport = serde_json::from_str(stdout(&v).trim()).unwrap();
    assert!(report.passed);
    assert!(report.recomputation_drift <= 1e-12);
}

#[test]
fn find_orbit_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"max_iter":1,"tolerances":{"integrate":1e-12,"newton":1e-16}}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "find-orbit"], "");
    assert_eq!(o.status.code(), Some(2));
    let rec: OrbitRecord = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(!rec.converged);
}

#[test]
fn invalid_config_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"config":{"i":0,"j":0,"k":2,"m":1}}"#).unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "find-orbit"], "").status.code(), Some(3));
    std::fs::write(&cfg, r#"{"unknown_key":true}"#).unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "find-orbit"], "").status.code(), Some(3));
}

#[test]
fn family_writes_one_record_per_value() {
    let o = run(&["family", "--parameter", "j2", "--values", "0,0.05,0.1"], "");
    assert_eq!(o.status.code(), Some(0));
    let recs: Vec<OrbitRecord> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 3);
    assert!((recs[2].params.j2() - 0.1).abs() < 1e-15);
    assert!(recs.iter().all(|r| r.converged));
}
