// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ratchet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratchet"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RATCHET_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value_of(table: &str, key: &str) -> String {
    table
        .lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some(key)).then(|| it.next().unwrap_or_default().to_string())
        })
        .unwrap_or_else(|| panic!("{key} missing from\n{table}"))
}

#[test]
fn derive_prints_fig1_scales() {
    let dir = tempfile::tempdir().unwrap();
    let o = ratchet(&["derive", "-N", "100000", "-m", "0.001", "--rho", "0.68"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(value_of(&out, "a"), "32000");
    assert_eq!(value_of(&out, "a_floor"), "32000");
    assert_eq!(value_of(&out, "c"), "2125");
    assert_eq!(value_of(&out, "u"), "10.24");
    assert_eq!(value_of(&out, "sigma"), "6800");
}

#[test]
fn derive_rejects_m_not_below_s() {
    let dir = tempfile::tempdir().unwrap();
    let o = ratchet(&["derive", "-N", "10", "-m", "0.2", "-s", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("m must be < s"), "{}", stderr(&o));
}

#[test]
fn derive_warns_outside_exponential_regime() {
    let dir = tempfile::tempdir().unwrap();
    let o = ratchet(&["derive", "-N", "100", "-m", "0.01", "--rho", "0.99"], dir.path());
    assert!(o.status.success());
    let err = stderr(&o);
    assert!(err.contains("u = ") && err.contains("< 1: outside exponential regime"), "{err}");
}

#[test]
fn derive_json_carries_params_and_scales() {
    let dir = tempfile::tempdir().unwrap();
    let o = ratchet(&["derive", "-N", "2000", "-m", "0.025", "--rho", "0.75", "--format", "json"], dir.path());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["derived"]["a_floor"], 500);
    assert_eq!(doc["params"]["n"], 2000);
}

#[test]
fn unknown_names_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ratchet(&["verify", "nonsense"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ratchet-poisson"), "{}", stderr(&o));
    let o = ratchet(&["sim", "moran"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = ratchet(&["derive", "--format", "xml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sim_records_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["sim", "y0", "--replicates", "8", "--seed", "7"];
    let one = ratchet(&[&base[..], &["--workers", "1", "--out", "w1"]].concat(), dir.path());
    let eight = ratchet(&[&base[..], &["--workers", "8", "--out", "w8"]].concat(), dir.path());
    assert!(one.status.success() && eight.status.success(), "{}", stderr(&one));
    let a = fs::read(dir.path().join("w1/records.csv")).unwrap();
    let b = fs::read(dir.path().join("w8/records.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# tool: ratchet-cli"), "{text}");
    assert!(text.contains("# seed: 7"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 9);
}

#[test]
fn sim_writes_thinned_paths() {
    let dir = tempfile::tempdir().unwrap();
    let o = ratchet(
        &["sim", "y0", "-N", "200", "-m", "0.05", "--rho", "0.5", "--replicates", "2", "--thin", "5", "--out", "p"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let path = fs::read_to_string(dir.path().join("p/paths/replicate-0001.csv")).unwrap();
    assert!(path.starts_with("# tool:"));
    assert!(path.contains("time,state\n0,100\n"), "{path}");
}

#[test]
fn analytics_dumps_potential_with_n_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = ratchet(
        &["analytics", "-N", "50", "-m", "0.1", "--rho", "0.5", "--dump-potential", "--out", "a"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("a/potential.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n,U,logR");
    assert_eq!(rows.len(), 51);
    let summary = fs::read_to_string(dir.path().join("a/analytics.csv")).unwrap();
    assert!(summary.starts_with("# tool:"));
    assert!(summary.contains("\nlog_e_n,"));
}

#[test]
fn analytics_keeps_log_e_n_when_linear_overflows() {
    let dir = tempfile::tempdir().unwrap();
    let o = ratchet(
        &["analytics", "-N", "100000", "-m", "0.01", "--rho", "0.1", "--format", "json", "--out", "big"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("big/analytics.json")).unwrap()).unwrap();
    assert!(doc["values"]["e_n"].is_null());
    assert!(doc["values"]["log_e_n"].as_f64().unwrap() > 709.0);
    assert_eq!(doc["metadata"]["params"]["n"], 100000);
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("runs");
    let o = Command::new(env!("CARGO_BIN_EXE_ratchet"))
        .args(["oracle", "-N", "30", "-m", "0.1", "--rho", "0.5"])
        .current_dir(dir.path())
        .env("RATCHET_OUT_DIR", &root)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let made: Vec<String> = fs::read_dir(&root)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(made.len(), 1);
    assert!(made[0].starts_with("oracle-"), "{made:?}");
    let sub = root.join(&made[0]);
    assert!(sub.join("oracle.csv").exists() && sub.join("oracle-summary.csv").exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.json"), r#"{"N": 50, "m": 0.1, "s": 0.2, "seed": 3}"#).unwrap();
    let o = ratchet(&["derive", "--config", "run.json", "-N", "60", "--rho", "0.25"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(value_of(&out, "N"), "60");
    assert_eq!(value_of(&out, "s"), "0.4");
    fs::write(dir.path().join("bad.json"), r#"{"population": 50}"#).unwrap();
    let o = ratchet(&["derive", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_writes_reports_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = ratchet(&["verify", "hitting-times", "--out", "v"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("v/reports.csv")).unwrap();
    assert!(csv.starts_with("# tool:"));
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(rows.len() >= 10);
    for row in rows {
        assert_eq!(row.split(',').count(), 10, "{row}");
    }
    assert!(stdout(&o).contains("0 failed"));
}
