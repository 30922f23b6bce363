//! One PASS/FAIL line per acceptance criterion. Exits nonzero when any
//! criterion fails.

mod common;

use std::fs;
use std::time::Instant;

use common::Check;
use microevent::learners::Family;
use microevent::runner::{parse_formats, run_pipeline, ExperimentConfig};
use microevent::synthlab::{detectability_sweep, SweepConfig, REFERENCE_BAND, REFERENCE_THRESHOLD};
use serde_json::Value;

const SWEEP_SEED: u64 = 42;
const CONTROL_SEEDS: [u64; 4] = [1, 2, 3, 4];

fn sweep_config(seed: u64, fractions: Vec<f64>) -> SweepConfig {
    let mut c = SweepConfig::default();
    c.synthetic.fractions = fractions;
    c.synthetic.n_instances = 5;
    c.synthetic.messages_per_step = 60;
    c.synthetic.n_steps = 335;
    c.synthetic.positive_ratio = 0.25;
    c.synthetic.seed = seed;
    c.estimators = Family::ALL.to_vec();
    c.control_cell = true;
    c
}

fn check_sweep() -> Check {
    let report = match detectability_sweep(&sweep_config(SWEEP_SEED, vec![0.10, 0.25, 0.45])) {
        Ok(r) => r,
        Err(e) => return Check::new(false, e.to_string()),
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for t in &report.thresholds {
        let rho = t.spearman.unwrap_or(f64::NAN);
        let worst = report.summary_for(t.estimator, 0.45).map_or(1.0, |s| s.worst_p);
        ok &= rho >= 0.8 && worst <= 0.05;
        let threshold = t.threshold.map_or("none".to_string(), |f| format!("{f:.2}"));
        parts.push(format!("{}: rho={rho:.2} p@0.45={worst:.4} threshold={threshold}", t.estimator.abbreviation()));
    }
    let mut quiet = 0;
    let mut seeds = 0;
    let mut control = vec![report.control_any_significant()];
    for s in CONTROL_SEEDS {
        control.push(detectability_sweep(&sweep_config(s, vec![0.0])).ok().and_then(|r| r.control_any_significant()));
    }
    for c in control {
        seeds += 1;
        if c == Some(false) {
            quiet += 1;
        }
    }
    ok &= quiet as f64 >= 0.9 * seeds as f64;
    parts.push(format!("control quiet in {quiet}/{seeds} seeds"));
    parts.push(format!(
        "reference threshold {REFERENCE_THRESHOLD:.2} +/- {REFERENCE_BAND:.2}, comparison only since the generator differs"
    ));
    Check::new(ok, parts.join("; "))
}

fn fixture_config() -> ExperimentConfig {
    ExperimentConfig::load(&common::fixture_dir().join("experiment.json")).expect("fixture config")
}

fn report_json(dir: &std::path::Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    if let Some(p) = v["provenance"].as_object_mut() {
        p.remove("generated_at");
    }
    v
}

fn check_determinism() -> Check {
    let formats = parse_formats("json,md").unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        if let Err(e) = run_pipeline(fixture_config(), d.path(), &formats) {
            return Check::new(false, e.to_string());
        }
    }
    let same_json = report_json(a.path()) == report_json(b.path());
    let same_md = fs::read(a.path().join("report.md")).unwrap() == fs::read(b.path().join("report.md")).unwrap();
    Check::new(same_json && same_md, format!("report.json identical: {same_json}, report.md identical: {same_md}"))
}

fn check_reporting() -> Check {
    let dir = tempfile::tempdir().unwrap();
    if let Err(e) = run_pipeline(fixture_config(), dir.path(), &parse_formats("json,md").unwrap()) {
        return Check::new(false, e.to_string());
    }
    let hash = report_json(dir.path())["provenance"]["config_hash"].as_str().unwrap_or_default().to_string();
    let md = fs::read_to_string(dir.path().join("report.md")).unwrap().replace(&hash, "<config-hash>");
    let golden = fs::read_to_string(common::fixture_dir().join("report.golden.md")).unwrap_or_default();
    let fields = [
        "Estimate",
        "Std. Error",
        "Z-value",
        "Pr(>\\|z\\|)",
        "VIF",
        "LLR Test Chi2",
        "LLR Test p-value",
        "Log Likelihood",
        "Null model Log Likelihood",
        "Adj. McFadden R2",
        "Cox-Snell R2",
        "Nagelkerke R2",
        "Tjur R2",
        "GBDT PRAUC",
        "GBDT P.test",
        "GBDT F1-score",
        "RF PRAUC",
        "RF P.test",
        "RF F1-score",
        "LR PRAUC",
        "LR P.test",
        "LR F1-score",
    ];
    let missing: Vec<&str> = fields.iter().copied().filter(|f| !md.contains(f)).collect();
    let matches = md == golden;
    Check::new(matches && missing.is_empty(), format!("golden match: {matches}, missing fields: {missing:?}"))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 9] = [
        ("statistical oracle suite", common::check_statistical_oracles),
        ("IRLS correctness", common::check_irls),
        ("LDA recovery and sampler", common::check_lda),
        ("C_V coherence toy corpus", common::check_coherence),
        ("time-step rule fixtures", common::check_timegrid),
        ("leakage guards", common::check_leakage),
        ("synthetic detectability", check_sweep),
        ("end-to-end determinism", check_determinism),
        ("reporting parity", check_reporting),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let c = check();
        let status = if c.ok { "PASS" } else { "FAIL" };
        failed += usize::from(!c.ok);
        println!("{status} criterion {}: {name} ({:.1}s) {}", i + 1, t.elapsed().as_secs_f64(), c.detail);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
