use std::path::Path;
use std::process::{Command, Output};

fn bdqm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdqm")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", "{ not json");
    assert_eq!(bdqm(&["verify", "--config", &bad]).status.code(), Some(2));
    let unknown = write_config(dir.path(), "unknown.json", r#"{"sigmaa": [2]}"#);
    assert_eq!(bdqm(&["stage-table", "--config", &unknown]).status.code(), Some(2));
    assert_eq!(bdqm(&["stage-table", "--max-stage", "5"]).status.code(), Some(2));
    assert_eq!(bdqm(&["stage-table", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn uncorrected_unitary_bound_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "u.json", r#"{"uncorrected_unitary_bound": true, "samples": 4}"#);
    let out_path = dir.path().join("report.json");
    let out = bdqm(&["verify", "--config", &cfg, "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    let failed: Vec<&str> = report["failed"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(failed.contains(&"unitary.lipschitz.m=2"));
    assert!(failed.iter().all(|n| n.starts_with("unitary.lipschitz")));
}

#[test]
fn stage_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", r#"{"sigma": [2, 2, 2]}"#);
    let out = bdqm(&["stage-table", "--config", &cfg, "--max-stage", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["m", "boxtimes_sigma_m", "lip_u_prev", "k_m", "kappa_m", "beta_m", "consecutive_bound", "tail_bound"]);
    assert_eq!(rows.len(), 5);
    assert_eq!(&rows[2][3..5], ["1", "1"]);
    let k2: f64 = rows[3][3].parse().unwrap();
    let kappa2: f64 = rows[3][4].parse().unwrap();
    assert!((k2 - 3.6416).abs() < 1e-4 && (kappa2 - 0.2746).abs() < 1e-4);
    assert_eq!(rows[4][7], "1");
}

#[test]
fn baire_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.json", r#"{"baire_pairs": [[[2,2,2],[2,2,3]], [[2,5],[3,5]], [[2,2],[2,2]]]}"#);
    let out = bdqm(&["baire", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[1].ends_with(",3,0.125,4,4,1,8,false,0,true"), "{}", lines[1]);
    assert!(lines[2].ends_with(",1,0.5,16,16,1,32,false,0,true"), "{}", lines[2]);
    assert!(lines[3].ends_with(",,0,0,0,,0,true,0,true"), "{}", lines[3]);
}

#[test]
fn kantorovich_two_points_matches_distance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.json", r#"{"toy": {"kind": "line", "points": [0.0, 0.75]}}"#);
    let out = bdqm(&["kantorovich", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    let row = rows.iter().find(|r| r[0] == "delta0" && r[1] == "delta1").unwrap();
    assert_eq!(row[2], "0.75");
    assert_eq!(row[3], "0.75");
    for r in rows.iter().filter(|r| r.len() > 1 && r[0] == r[1]) {
        assert_eq!(r[2], "0");
    }
    let json = bdqm(&["kantorovich", "--config", &cfg, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["command", "config", "conventions", "rows"]);
    assert_eq!(v["conventions"]["norm_term"], "2^m * |a - E(a)|");
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        assert_eq!(bdqm(&["kantorovich", "--seed", "3", "--out", p.to_str().unwrap()]).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
