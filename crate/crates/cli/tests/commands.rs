use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn perfhom(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perfhom"))
        .args(args)
        .current_dir(dir)
        .env_remove("PERFHOM_CACHE")
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn cell_report_for_a_laminate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "cell.json", r#"{"cell": "empty", "material": "laminate", "h": 0.03125, "deltas": [1.0]}"#);
    let out = perfhom(dir.path(), &["cell", "--config", &cfg, "--out", "cell_report.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("cell_report.json")).unwrap()).unwrap();
    let a = &report["entries"][1]["tensor"]["a_hat"];
    assert!((a[0][0].as_f64().unwrap() - 1.6).abs() < 1e-8);
    assert!((a[1][1].as_f64().unwrap() - 2.5).abs() < 1e-8);
}

#[test]
fn two_scale_expansion_with_two_scales_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "e.json", r#"{"study": "expansion", "epsilons": [0.125, 0.0625]}"#);
    let out = perfhom(dir.path(), &["rates", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
    assert!(!dir.path().join("results.csv").exists());
}

#[test]
fn exit_status_follows_the_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = perfhom(dir.path(), &["rates", "--study", "contrast", "--out", "pass"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("pass/summary.md")).unwrap();
    assert!(!summary.contains("FAIL"));
    let csv = fs::read_to_string(dir.path().join("pass/results.csv")).unwrap();
    assert!(csv.starts_with("study,epsilon,delta,h,metric,value\n"));
    assert!(dir.path().join("pass/results.json").exists());

    let cfg = config(dir.path(), "strict.json", r#"{"study": "contrast", "thresholds": {"slope": {"min": 3.0}}}"#);
    let out = perfhom(dir.path(), &["rates", "--config", &cfg, "--out", "fail"]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL contrast: slope"));
    assert_eq!(stdout.matches("PASS").count(), 4);
}

#[test]
fn study_flag_must_match_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.json", r#"{"study": "contrast"}"#);
    let out = perfhom(dir.path(), &["rates", "--study", "green", "--config", &cfg]);
    assert!(!out.status.success());
    let out = perfhom(dir.path(), &["rates", "--study", "nope"]);
    assert!(!out.status.success());
}

#[test]
fn seeded_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "g.json", r#"{"study": "green", "deltas": [0.5, 1.0]}"#);
    for out_dir in ["a", "b"] {
        let out = perfhom(dir.path(), &["rates", "--config", &cfg, "--seed", "7", "--jobs", "2", "--out", out_dir]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir.path().join("a/results.csv")).unwrap();
    let b = fs::read(dir.path().join("b/results.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn solve_and_green_write_nodal_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "p.json", r#"{"epsilon": 0.25, "data": "affine"}"#);
    let out = perfhom(dir.path(), &["solve", "--config", &cfg, "--out", "u.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(dir.path().join("u.csv")).unwrap().starts_with("x,y,matrix,u\n"));

    let out = perfhom(dir.path(), &["green", "--config", &cfg, "--source", "0.25,0.5", "--source", "0.75, 0.25"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("symmetry g0/g1"));
    assert!(fs::read_to_string(dir.path().join("green.csv")).unwrap().starts_with("x,y,g0,g1\n"));

    let out = perfhom(dir.path(), &["green", "--source", "0.5"]);
    assert!(!out.status.success());
    // inside a hole
    let out = perfhom(dir.path(), &["green", "--config", &cfg, "--source", "0.125,0.125"]);
    assert!(!out.status.success());
}

#[test]
fn cache_directory_is_filled() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = Command::new(env!("CARGO_BIN_EXE_perfhom"))
        .args(["rates", "--study", "contrast"])
        .current_dir(dir.path())
        .env("PERFHOM_CACHE", &cache)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 5);
}
