use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{instance_pools, synthetic_corpus, SyntheticConfig};
use crate::error::{Error, Result};
use crate::features::{mean, sample_sd};
use crate::learners::Family;
use crate::runner::evaluate::{evaluate_estimator, train_estimator, EstimatorSettings};
use crate::runner::featurize::featurize;
use crate::seed;
use crate::sentiment::Lexicon;
use crate::stats::{holm_bonferroni, HolmResult};
use crate::textprep::{Stopwords, TextConfig};
use crate::topics::TopicsConfig;

/// Published threshold of the reference generator, reported for comparison.
pub const REFERENCE_THRESHOLD: f64 = 0.25;
pub const REFERENCE_BAND: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub synthetic: SyntheticConfig,
    pub estimators: Vec<Family>,
    pub alpha: f64,
    /// Adds an `f = 0` cell, evaluated but kept out of the threshold and
    /// the rank correlation.
    pub control_cell: bool,
    pub text: TextConfig,
    pub topics: TopicsConfig,
    pub evaluation: EstimatorSettings,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let evaluation = EstimatorSettings {
            forest: crate::learners::ForestParams { n_trees: 100, ..Default::default() },
            boosted: crate::learners::BoostedParams { n_trees: 100, ..Default::default() },
            forest_grid: Default::default(),
            boosted_grid: Default::default(),
            ..EstimatorSettings::default()
        };
        Self {
            synthetic: SyntheticConfig::default(),
            estimators: Family::ALL.to_vec(),
            alpha: 0.05,
            control_cell: true,
            text: TextConfig::default(),
            topics: TopicsConfig { k: Some(10), burn_in: 100, total_iterations: 200, fold_in_sweeps: 30, ..TopicsConfig::default() },
            evaluation,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.synthetic.validate()?;
        self.evaluation.validate()?;
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators selected".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config("alpha must lie in (0, 1)".into()));
        }
        if self.topics.k.is_none() {
            return Err(Error::Config("the sweep needs a fixed topic count".into()));
        }
        Ok(())
    }

    /// Configured fractions, followed by `0` when the control cell is on
    /// and not already present.
    pub fn cells(&self) -> Vec<f64> {
        let mut f = self.synthetic.fractions.clone();
        if self.control_cell && !f.contains(&0.0) {
            f.push(0.0);
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub estimator: Family,
    pub f: f64,
    pub instance: usize,
    pub metric: Option<f64>,
    pub p_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionSummary {
    pub estimator: Family,
    pub f: f64,
    pub mean_metric: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Maximum p over instances; a failed cell counts as `p = 1`.
    pub worst_p: f64,
    pub n_failed: usize,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorThreshold {
    pub estimator: Family,
    /// Smallest configured fraction with worst-case `p <= alpha`.
    pub threshold: Option<f64>,
    /// Rank correlation of fraction and mean metric over configured cells.
    pub spearman: Option<f64>,
    pub reference_threshold: f64,
    pub within_reference_band: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub alpha: f64,
    pub metric: String,
    pub results: Vec<CellResult>,
    pub summary: Vec<FractionSummary>,
    pub thresholds: Vec<EstimatorThreshold>,
    /// Holm across estimators on the control cell's worst-case p-values.
    pub control_holm: Option<HolmResult>,
}

impl SweepReport {
    pub fn control_any_significant(&self) -> Option<bool> {
        self.control_holm.as_ref().map(|h| h.significant.iter().any(|&s| s))
    }

    pub fn summary_for(&self, estimator: Family, f: f64) -> Option<&FractionSummary> {
        self.summary.iter().find(|s| s.estimator == estimator && s.f == f)
    }
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of average ranks; `None` when either side is
/// constant or fewer than two pairs are given.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

fn t_interval(values: &[f64]) -> (f64, f64) {
    let m = mean(values);
    if values.len() < 2 {
        return (m, m);
    }
    let n = values.len() as f64;
    let t = StudentsT::new(0.0, 1.0, n - 1.0).expect("df > 0").inverse_cdf(0.975);
    let half = t * sample_sd(values) / n.sqrt();
    (m - half, m + half)
}

/// Every `(f, instance)` cell runs the full pipeline for each estimator.
/// Instance `i` uses `derive(seed, "synth_instance", i)` for every `f`, so
/// cells of one instance share vocabulary, message pools and step layout.
pub fn detectability_sweep(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let cells = config.cells();
    let max_f = cells.iter().copied().fold(0.0, f64::max);
    let stopwords = match &config.text.stopwords_path {
        Some(p) => Stopwords::from_lines(std::io::BufReader::new(
            std::fs::File::open(p).map_err(|e| Error::MissingInput(format!("stopwords {p}: {e}")))?,
        ))?,
        None => Stopwords::default(),
    };
    let lexicon = Lexicon::default();
    let syn = &config.synthetic;
    let instance_configs: Vec<SyntheticConfig> = (0..syn.n_instances)
        .map(|i| SyntheticConfig { seed: seed::derive(syn.seed, "synth_instance", i as u64), ..syn.clone() })
        .collect();
    let pools = instance_configs.par_iter().map(|c| instance_pools(c, max_f)).collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|fi| (0..syn.n_instances).map(move |i| (fi, i))).collect();
    let per_job: Vec<Vec<CellResult>> = jobs
        .par_iter()
        .map(|&(fi, i)| {
            let f = cells[fi];
            let ic = &instance_configs[i];
            let fail = |e: &Error| -> Vec<CellResult> {
                config
                    .estimators
                    .iter()
                    .map(|&estimator| CellResult { estimator, f, instance: i, metric: None, p_value: None, error: Some(e.to_string()) })
                    .collect()
            };
            let cell_seed = seed::derive(ic.seed, "pipeline", 0);
            let featurized = synthetic_corpus(ic, &pools[i], f).and_then(|corpus| {
                featurize(&corpus.messages, &corpus.dataset, &config.text, &config.topics, &stopwords, &lexicon, cell_seed)
            });
            let featurized = match featurized {
                Ok(x) => x,
                Err(e) => return fail(&e),
            };
            config
                .estimators
                .par_iter()
                .map(|&estimator| {
                    let outcome = train_estimator(estimator, &featurized.features, &config.evaluation, cell_seed)
                        .and_then(|t| evaluate_estimator(&t, &featurized.features, &config.evaluation, cell_seed));
                    match outcome {
                        Ok(ev) => CellResult {
                            estimator,
                            f,
                            instance: i,
                            metric: Some(ev.permutation.observed),
                            p_value: Some(ev.permutation.p_value),
                            error: None,
                        },
                        Err(e) => CellResult { estimator, f, instance: i, metric: None, p_value: None, error: Some(e.to_string()) },
                    }
                })
                .collect()
        })
        .collect();
    let mut results: Vec<CellResult> = per_job.into_iter().flatten().collect();
    results.sort_by(|a, b| {
        let ea = config.estimators.iter().position(|&e| e == a.estimator);
        let eb = config.estimators.iter().position(|&e| e == b.estimator);
        ea.cmp(&eb).then(a.f.total_cmp(&b.f)).then(a.instance.cmp(&b.instance))
    });

    let mut sorted_cells = cells.clone();
    sorted_cells.sort_by(f64::total_cmp);
    let mut summary = Vec::new();
    for &estimator in &config.estimators {
        for &f in &sorted_cells {
            let rows: Vec<&CellResult> = results.iter().filter(|r| r.estimator == estimator && r.f == f).collect();
            let metrics: Vec<f64> = rows.iter().filter_map(|r| r.metric).collect();
            let worst_p = rows.iter().map(|r| r.p_value.unwrap_or(1.0)).fold(0.0, f64::max);
            let ci = (!metrics.is_empty()).then(|| t_interval(&metrics));
            summary.push(FractionSummary {
                estimator,
                f,
                mean_metric: (!metrics.is_empty()).then(|| mean(&metrics)),
                ci_low: ci.map(|c| c.0),
                ci_high: ci.map(|c| c.1),
                worst_p,
                n_failed: rows.iter().filter(|r| r.error.is_some()).count(),
                significant: worst_p <= config.alpha,
            });
        }
    }

    let mut grid = syn.fractions.clone();
    grid.sort_by(f64::total_cmp);
    let thresholds = config
        .estimators
        .iter()
        .map(|&estimator| {
            let rows: Vec<&FractionSummary> =
                grid.iter().filter_map(|&f| summary.iter().find(|s| s.estimator == estimator && s.f == f)).collect();
            let threshold = rows.iter().find(|s| s.significant).map(|s| s.f);
            let pairs: Vec<(f64, f64)> = rows.iter().filter_map(|s| s.mean_metric.map(|m| (s.f, m))).collect();
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            EstimatorThreshold {
                estimator,
                threshold,
                spearman: spearman(&xs, &ys),
                reference_threshold: REFERENCE_THRESHOLD,
                within_reference_band: threshold.map(|t| (t - REFERENCE_THRESHOLD).abs() <= REFERENCE_BAND + 1e-12),
            }
        })
        .collect();

    let control_holm = cells.contains(&0.0).then(|| {
        let ps: Vec<f64> =
            config.estimators.iter().map(|&e| summary.iter().find(|s| s.estimator == e && s.f == 0.0).map_or(1.0, |s| s.worst_p)).collect();
        holm_bonferroni(&ps, config.alpha)
    });

    Ok(SweepReport {
        alpha: config.alpha,
        metric: config.evaluation.metric.as_str().to_string(),
        results,
        summary,
        thresholds,
        control_holm,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x:.6}"))
}

/// `estimator,f,instance,metric,p_value`
pub fn write_results_csv<W: Write>(report: &SweepReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["estimator", "f", "instance", "metric", "p_value"])?;
    for r in &report.results {
        w.write_record([r.estimator.abbreviation().to_string(), format!("{:.2}", r.f), r.instance.to_string(), opt(r.metric), opt(r.p_value)])?;
    }
    w.flush()?;
    Ok(())
}

/// `estimator,f,mean_metric,ci_low,ci_high,worst_p,n_failed,significant`
pub fn write_summary_csv<W: Write>(report: &SweepReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["estimator", "f", "mean_metric", "ci_low", "ci_high", "worst_p", "n_failed", "significant"])?;
    for s in &report.summary {
        w.write_record([
            s.estimator.abbreviation().to_string(),
            format!("{:.2}", s.f),
            opt(s.mean_metric),
            opt(s.ci_low),
            opt(s.ci_high),
            format!("{:.6}", s.worst_p),
            s.n_failed.to_string(),
            s.significant.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
