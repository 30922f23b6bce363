mod common;

use std::fs;
use std::path::Path;

use microevent::runner::{parse_formats, run_pipeline, ExperimentConfig, CONFIG_SCHEMA};
use serde_json::Value;

fn fixture_config() -> ExperimentConfig {
    ExperimentConfig::load(&common::fixture_dir().join("experiment.json")).unwrap()
}

fn report_without_timestamp(dir: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    v["provenance"].as_object_mut().unwrap().remove("generated_at").expect("timestamp present");
    v
}

/// Both runs of the fixture, shared by the tests below.
fn two_runs() -> &'static (tempfile::TempDir, tempfile::TempDir) {
    static RUNS: std::sync::OnceLock<(tempfile::TempDir, tempfile::TempDir)> = std::sync::OnceLock::new();
    RUNS.get_or_init(|| {
        let formats = parse_formats("json,md,svg").unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_pipeline(fixture_config(), a.path(), &formats).unwrap();
        run_pipeline(fixture_config(), b.path(), &formats).unwrap();
        (a, b)
    })
}

#[test]
fn fixture_run_is_reproducible() {
    let (a, b) = two_runs();
    assert_eq!(report_without_timestamp(a.path()), report_without_timestamp(b.path()));
    for name in ["features.csv", "steps.csv", "report.md", "models/logistic.json", "evaluation.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn report_carries_required_fields() {
    let (a, _) = two_runs();
    let v = report_without_timestamp(a.path());
    assert_eq!(v["schema_version"], 1);
    assert!(v["dataset"].as_str().unwrap().starts_with("multiple "));
    assert_eq!(v["provenance"]["seed"], 7);
    assert_eq!(v["provenance"]["config_hash"].as_str().unwrap().len(), 64);
    let estimators = v["estimators"].as_array().unwrap();
    assert_eq!(estimators.len(), 3);
    for e in estimators {
        assert!(e["error"].is_null(), "{e}");
        let p = e["p_value"].as_f64().unwrap();
        assert!(p > 0.0 && p <= 1.0);
        assert!(e["metrics"]["pr_auc_mean"].as_f64().is_some(), "{e}");
    }
    assert!(v["lr_diagnostics"].is_object());
    for svg in ["odds_ratios.svg", "effect_sizes.svg", "coherence.svg"] {
        assert!(fs::read_to_string(a.path().join(svg)).unwrap().starts_with("<svg"), "{svg}");
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_object().unwrap();
    for name in ["messages.jsonl", "steps.csv", "features.csv", "report.json", "report.md"] {
        assert!(files.contains_key(name), "{name} missing from manifest");
    }
}

/// Set `MICROEVENT_UPDATE_GOLDEN=1` to rewrite the expected report.
#[test]
fn markdown_report_matches_golden() {
    let (a, _) = two_runs();
    let got = fs::read_to_string(a.path().join("report.md")).unwrap();
    let hash = report_without_timestamp(a.path())["provenance"]["config_hash"].as_str().unwrap().to_string();
    // The hash covers resolved absolute input paths, which vary by checkout.
    let got = got.replace(&hash, "<config-hash>");
    let golden = common::fixture_dir().join("report.golden.md");
    if std::env::var_os("MICROEVENT_UPDATE_GOLDEN").is_some() {
        fs::write(&golden, &got).unwrap();
    }
    let want = fs::read_to_string(&golden).expect("golden report present");
    assert_eq!(got, want);
    for heading in ["## Model performance", "## Logistic regression model", "| Predictor | Estimate | Std. Error | Z-value |"] {
        assert!(got.contains(heading), "{heading}");
    }
}

#[test]
fn fixture_config_satisfies_schema() {
    let schema: Value = serde_json::from_str(CONFIG_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let raw: Value = serde_json::from_str(&fs::read_to_string(common::fixture_dir().join("experiment.json")).unwrap()).unwrap();
    assert!(validator.is_valid(&raw));
    assert!(validator.is_valid(&fixture_config().canonical()));
    let mut bad = raw.clone();
    bad["evaluation"]["n_perm"] = Value::from("many");
    assert!(!validator.is_valid(&bad));
}

#[test]
fn missing_events_file_is_named() {
    let mut config = fixture_config();
    config.dataset.events = Some("/nonexistent/events.csv".into());
    let dir = tempfile::tempdir().unwrap();
    let e = run_pipeline(config, dir.path(), &parse_formats("json").unwrap()).unwrap_err();
    let msg = e.to_string();
    assert!(msg.contains("missing input") && msg.contains("events"), "{msg}");
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn output_directory_of_another_config_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = fixture_config();
    config.dataset.events = Some("/nonexistent/events.csv".into());
    let _ = run_pipeline(config.clone(), dir.path(), &parse_formats("json").unwrap());
    config.seed += 1;
    let e = run_pipeline(config, dir.path(), &parse_formats("json").unwrap()).unwrap_err();
    assert!(e.to_string().contains("current config is"), "{e}");
}
