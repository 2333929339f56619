use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn slowfast(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slowfast"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run slowfast")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = slowfast(&["validate", "--model", "eq1"], dir.path());
    assert_eq!(code(&ok), 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("assumptions.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["report"]["curves"][0]["min_abs_fx"], 1.0);
    assert!(dir.path().join("run_metadata.txt").exists());

    assert_eq!(code(&slowfast(&["validate", "--model", "odd-contact"], dir.path())), 3);
    assert_eq!(code(&slowfast(&["validate", "--model", "odd-contact", "--relaxed"], dir.path())), 0);
    assert_eq!(code(&slowfast(&["validate", "--phi", "q=1,s1=1", "--relaxed"], dir.path())), 0);
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&slowfast(&["cycles"], dir.path())), 2);
    assert_eq!(code(&slowfast(&["cycles", "--model", "nope"], dir.path())), 2);
    assert_eq!(code(&slowfast(&["cycles", "--model", "eq1", "--eps", "0.5"], dir.path())), 2);
    assert_eq!(code(&slowfast(&["sweep", "--model", "eq1", "--eps", "0.05,0.1"], dir.path())), 2);
    assert_eq!(code(&slowfast(&["sweep", "--model", "eq1", "--eps", ""], dir.path())), 2);
    assert_eq!(code(&slowfast(&["basin", "--model", "eq1", "--grid", "3"], dir.path())), 2);
    assert_eq!(code(&slowfast(&["cycles", "--m", "1", "--k", "2", "--l", "4"], dir.path())), 2);
    assert_eq!(code(&slowfast(&["cycles", "--model", "eq1", "--phi", "q=1"], dir.path())), 2);
    assert_eq!(code(&slowfast(&["knots"], dir.path())), 2);
    assert_eq!(code(&slowfast(&["knots", "--pairs", "2,4"], dir.path())), 2);
}

#[test]
fn cycles_outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["cycles", "--model", "trefoil", "--eps", "0.1,0.05", "--restarts", "2", "--seed", "3"];
    assert_eq!(code(&slowfast(&args, a.path())), 0);
    assert_eq!(code(&slowfast(&args, b.path())), 0);
    for name in ["cycles.csv", "cycles_eps0.1.json", "orbits_eps0.05.csv", "curves.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let rows = csv_rows(&a.path().join("cycles.csv"));
    assert_eq!(rows.len(), 4);
    assert_eq!(column(&a.path().join("cycles.csv"), "rotation_number"), vec!["2/3"; 4]);
    let census: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("cycles_eps0.05.json")).unwrap()).unwrap();
    assert_eq!(census["census"]["attracting_count"], 1);
    assert_eq!(census["census"]["cycles"][0]["winding"]["k"], 3);
    assert!(census["errors"].as_array().unwrap().is_empty());
}

#[test]
fn sweep_rows_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&slowfast(&["sweep", "--model", "eq1"], dir.path())), 0);
    let path = dir.path().join("sweep.csv");
    assert_eq!(csv_rows(&path).len(), 8);
    let flags = column(&path, "gap_decreasing");
    assert_eq!(flags.iter().filter(|f| f.is_empty()).count(), 2);
    assert!(flags.iter().filter(|f| !f.is_empty()).all(|f| f == "true"));
    assert!(column(&path, "hausdorff_decreasing").iter().filter(|f| !f.is_empty()).all(|f| f == "true"));
    assert!(column(&path, "bracket_pass").iter().all(|f| f == "true"));

    let trefoil = tempfile::tempdir().unwrap();
    assert_eq!(code(&slowfast(&["sweep", "--model", "trefoil", "--eps", "0.1,0.05", "--format", "json"], trefoil.path())), 0);
    let rows: serde_json::Value = serde_json::from_str(&fs::read_to_string(trefoil.path().join("sweep.json")).unwrap()).unwrap();
    for r in rows.as_array().unwrap() {
        assert_eq!((r["winding_k"].as_i64(), r["winding_l"].as_i64()), (Some(3), Some(2)));
    }
}

#[test]
fn basin_and_sdi() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&slowfast(&["basin", "--m", "2", "--k", "1", "--l", "1", "--grid", "8"], dir.path())), 0);
    let path = dir.path().join("basin_eps0.05.csv");
    assert_eq!(csv_rows(&path).len(), 64);
    let omega = column(&path, "omega_index");
    assert!(omega.iter().any(|o| o == "0") && omega.iter().any(|o| o == "2"));
    assert!(!omega.iter().any(|o| o == "1" || o == "3"));

    assert_eq!(code(&slowfast(&["sdi", "--model", "odd-contact"], dir.path())), 0);
    let sdi: Vec<f64> = column(&dir.path().join("sdi.csv"), "sdi").iter().map(|v| v.parse().unwrap()).collect();
    assert!((sdi[0] + 3.0 * std::f64::consts::PI).abs() < 1e-7);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::write(&model, r#"{ "label": "doc-eq1", "f": { "sin": [[0,0,1],[0,0,0],[0,0,0]] } }"#).unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{ "model_file": "model.json", "eps": [0.2, 0.1], "format": "json" }"#).unwrap();
    let out = dir.path().join("res");
    let o = slowfast(&["sdi", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sdi.json")).unwrap()).unwrap();
    for r in rows.as_array().unwrap() {
        let sign = if r["stability"] == "attracting" { -1.0 } else { 1.0 };
        assert!((r["sdi"].as_f64().unwrap() - sign * std::f64::consts::TAU).abs() < 1e-8);
    }

    // flags win over the file
    let o = slowfast(&["cycles", "--config", cfg.to_str().unwrap(), "--eps", "0.1", "--format", "csv"], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(column(&out.join("cycles.csv"), "eps"), vec!["0.1", "0.1"]);

    fs::write(&cfg, r#"{ "model": "eq1", "bogus": 1 }"#).unwrap();
    assert_eq!(code(&slowfast(&["cycles", "--config", cfg.to_str().unwrap()], &out)), 2);
}

#[test]
fn detection_failure_keeps_error_rows() {
    // eps * g > 1: the fast flow never balances the slow drift, so there is
    // no cycle near either curve
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("drift.json");
    fs::write(&model, r#"{ "f": { "sin": [[0,0,1],[0,0,0],[0,0,0]] }, "g": { "cos": [[5]] } }"#).unwrap();
    let o = slowfast(&["cycles", "--model-file", model.to_str().unwrap(), "--eps", "0.25"], dir.path());
    assert_eq!(code(&o), 4);
    assert_eq!(column(&dir.path().join("cycles.csv"), "status"), vec!["error", "error"]);
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cycles_eps0.25.json")).unwrap()).unwrap();
    assert_eq!(record["errors"].as_array().unwrap().len(), 2);
    assert!(fs::read_to_string(dir.path().join("run_metadata.txt")).unwrap().contains("status: exit 4"));
}

#[test]
fn knots_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&slowfast(&["knots", "--model", "solomon", "--pairs", "3,2;2,3;0,0"], dir.path())), 0);
    let rows = csv_rows(&dir.path().join("knot_pairs.csv"));
    assert_eq!(rows.len(), 9);
    let iso = column(&dir.path().join("knot_pairs.csv"), "isotopic");
    assert_eq!(iso[1], "true");
    assert_eq!(iso[2], "false");
    assert_eq!(column(&dir.path().join("knots.csv"), "link_consistent"), vec!["true", "true"]);
    assert_eq!(column(&dir.path().join("knots.csv"), "winding_k"), vec!["5", "5"]);
}
