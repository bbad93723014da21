//! Study runner contracts: config validation, CSV layout, determinism and
//! the corrector cache.

use perfhom::study::config::{CellConfig, CellPreset, MaterialConfig, MaterialPreset};
use perfhom::study::report::{render, CSV_HEADER};
use perfhom::study::{run_study, CorrectorCache, ReportFormat, RunContext, StudyConfig, StudyKind};
use perfhom::Error;

#[test]
fn contrast_study_reports_four_deltas_and_a_slope() {
    let cfg = StudyConfig::preset(StudyKind::Contrast);
    let result = run_study(&cfg, &RunContext::default()).unwrap();
    let csv = render(std::slice::from_ref(&result), ReportFormat::Csv).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    let deviation_rows: Vec<&str> = csv.lines().filter(|l| l.contains(",deviation,")).collect();
    // δ = 0 is the reference and has no deviation row of its own
    assert_eq!(deviation_rows.len(), 4, "{deviation_rows:?}");
    let slope = result.summary["slope"];
    assert!((slope - 2.0).abs() < 0.3, "{slope}");
    assert!(result.passed());
}

#[test]
fn two_scale_expansion_needs_three_scales() {
    let text = r#"{"study": "expansion", "epsilons": [0.125, 0.0625]}"#;
    assert!(matches!(StudyConfig::from_json(text), Err(Error::ConfigError(_))));
}

#[test]
fn failing_thresholds_fail_the_study() {
    let mut cfg = StudyConfig::preset(StudyKind::Contrast);
    cfg.deltas = vec![0.4, 0.2, 0.1];
    cfg.thresholds.insert("slope".into(), serde_json::from_str(r#"{"min": 3.0}"#).unwrap());
    let result = run_study(&cfg, &RunContext::default()).unwrap();
    assert!(!result.passed());
    let md = render(&[result], ReportFormat::MarkdownSummary).unwrap();
    assert!(md.contains("| FAIL |") && md.contains("0 of 1 studies passed"));
}

fn small_green() -> StudyConfig {
    let mut cfg = StudyConfig::preset(StudyKind::Green);
    cfg.deltas = vec![0.5, 1.0];
    cfg
}

#[test]
fn identical_configs_give_identical_csv() {
    let cfg = small_green();
    let a = render(&[run_study(&cfg, &RunContext::default()).unwrap()], ReportFormat::Csv).unwrap();
    let b = render(&[run_study(&cfg, &RunContext::default()).unwrap()], ReportFormat::Csv).unwrap();
    assert_eq!(a.as_bytes(), b.as_bytes());
}

#[test]
fn cached_runs_match_uncached_runs() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = RunContext {
        cache: Some(CorrectorCache::new(dir.path()).unwrap()),
    };
    let mut cfg = StudyConfig::preset(StudyKind::Contrast);
    cfg.cell = CellConfig::Preset(CellPreset::Disk);
    cfg.material = MaterialConfig::Preset(MaterialPreset::Oscillating);
    let plain = render(&[run_study(&cfg, &RunContext::default()).unwrap()], ReportFormat::Csv).unwrap();
    let cold = render(&[run_study(&cfg, &ctx).unwrap()], ReportFormat::Csv).unwrap();
    let warm = render(&[run_study(&cfg, &ctx).unwrap()], ReportFormat::Csv).unwrap();
    assert_eq!(plain, cold);
    assert_eq!(cold, warm);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 5);
}

#[test]
fn documented_expansion_config_parses() {
    let text = r#"{
      "study": "expansion",
      "cell": {"holes": [{"type": "disk", "center": [0.5, 0.5], "radius": 0.25}], "kappa": 0.2},
      "material": "oscillating",
      "epsilons": [0.125, 0.0625, 0.03125, 0.015625],
      "deltas": [0.0, 0.2, 1.0],
      "h_divisor": 8,
      "data": "sinusoidal",
      "seed": 0,
      "thresholds": {"min_slope": {"min": 0.2}, "max_floor_ratio": {"max": 0.3333333333333333}},
      "options": {"cutoff": {"inner": 1.0, "outer": 2.0}}
    }"#;
    let cfg = StudyConfig::from_json(text).unwrap();
    assert_eq!(cfg.epsilons.len(), 4);
    assert_eq!(cfg.cell.build().unwrap().holes.len(), 1);
    let accept = r#"{"seed": 1, "thresholds": {"flux_mean": {"max": 1e-10}}, "check_determinism": true}"#;
    assert_eq!(perfhom::study::AcceptConfig::from_json(accept).unwrap().seed, 1);
}
