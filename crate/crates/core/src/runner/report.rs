use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::evaluate::FeatureImportance;
use super::svg::{forest_plot, scatter_plot, Interval, Series};
use crate::error::{Error, Result};
use crate::learners::Family;
use crate::stats::diagnostics::LrDiagnostics;
use crate::stats::{EffectSize, MetricReport};
use crate::synthlab::SweepReport;
use crate::tuning::ParamPoint;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Markdown,
    Svg,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

/// Parses a comma-separated format list. JSON is always included.
pub fn parse_formats(list: &str) -> Result<Vec<ReportFormat>> {
    let mut out = vec![ReportFormat::Json];
    for tok in list.split(',').filter(|t| !t.trim().is_empty()) {
        out.push(tok.parse()?);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub n_messages: usize,
    pub n_events: usize,
    pub n_train_steps: usize,
    pub n_test_steps: usize,
    pub n_train_positive: usize,
    pub n_test_positive: usize,
    pub dropped_steps: usize,
    pub split_instant: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub k: usize,
    pub coherence: f64,
    /// `(k, mean coherence)` when `k` was searched.
    pub coherence_curve: Vec<(usize, f64)>,
    pub no_elbow: bool,
    pub top_words: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub family: Family,
    pub error: Option<String>,
    pub metrics: Option<MetricReport>,
    pub p_value: Option<f64>,
    pub holm_significant: bool,
    pub holm_threshold: Option<f64>,
    pub selected_features: Vec<String>,
    pub tuned_params: Option<ParamPoint>,
    pub importance: Vec<FeatureImportance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub config: serde_json::Value,
    /// Wall-clock time of assembly; the only field that differs between
    /// reruns of one config.
    pub generated_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub dataset: String,
    pub correction_family: String,
    pub alpha: f64,
    pub data: DataSummary,
    pub topics: TopicSummary,
    pub estimators: Vec<EstimatorSummary>,
    pub lr_diagnostics: Option<LrDiagnostics>,
    pub lr_diagnostics_error: Option<String>,
    /// Holm decisions over the logistic coefficient p-values, intercept
    /// first.
    pub coefficient_significant: Vec<bool>,
    pub effect_sizes: Vec<EffectSize>,
    pub provenance: Provenance,
}

fn fmt_p(p: f64, star: bool) -> String {
    let s = if p < 0.001 { "<0.001".to_string() } else { format!("{p:.3}") };
    if star {
        s + "*"
    } else {
        s
    }
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|").replace('_', "\\_")
}

/// Column order of the performance table.
const TABLE_ORDER: [Family; 3] = [Family::Boosted, Family::Forest, Family::Logistic];

pub fn render_markdown(r: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}\n", r.dataset);
    let _ = writeln!(
        out,
        "Correction family: {} (alpha = {}). Config hash `{}`.\n",
        r.correction_family, r.alpha, r.provenance.config_hash
    );
    let _ = writeln!(out, "## Model performance\n");
    let present: Vec<&EstimatorSummary> =
        TABLE_ORDER.iter().filter_map(|f| r.estimators.iter().find(|e| e.family == *f)).collect();
    let mut head = String::from("| Dataset |");
    let mut rule = String::from("|---|");
    for e in &present {
        let a = e.family.abbreviation();
        let _ = write!(head, " {a} PRAUC | {a} P.test | {a} F1-score |");
        rule.push_str("---:|---:|---:|");
    }
    let _ = writeln!(out, "{head}\n{rule}");
    let mut row = format!("| {} |", md_escape(&r.dataset));
    for e in &present {
        match (&e.metrics, e.p_value) {
            (Some(m), Some(p)) => {
                let _ = write!(row, " {:.2} | {} | {:.2} |", m.pr_auc_mean, fmt_p(p, e.holm_significant), m.f1_mean);
            }
            _ => row.push_str(" NA | NA | NA |"),
        }
    }
    let _ = writeln!(out, "{row}\n");
    let _ = writeln!(out, "Significant entries after Holm-Bonferroni correction within the family are marked with a star (*).\n");

    for e in &r.estimators {
        if let Some(err) = &e.error {
            let _ = writeln!(out, "- {} failed: {}", e.family.abbreviation(), err);
        }
    }
    let _ = writeln!(out, "\n### Selected features\n");
    for e in r.estimators.iter().filter(|e| e.error.is_none()) {
        let feats: Vec<String> = e.selected_features.iter().map(|f| md_escape(f)).collect();
        let _ = writeln!(out, "- {}: {}", e.family.abbreviation(), feats.join(", "));
        if let Some(p) = &e.tuned_params {
            let _ = writeln!(out, "  - tuned: `{}`", serde_json::Value::Object(p.clone()));
        }
    }

    if let Some(d) = &r.lr_diagnostics {
        let _ = writeln!(out, "\n## Logistic regression model\n");
        let _ = writeln!(out, "| Predictor | Estimate | Std. Error | Z-value | Pr(>\\|z\\|) | VIF |");
        let _ = writeln!(out, "|---|---:|---:|---:|---:|---:|");
        for (i, c) in d.coefficients.iter().enumerate() {
            let star = r.coefficient_significant.get(i).copied().unwrap_or(false);
            let vif = c.vif.map_or_else(String::new, |v| format!("{v:.2}"));
            let _ = writeln!(
                out,
                "| {} | {:.2} | {:.2} | {:.2} | {} | {} |",
                md_escape(&c.name),
                c.estimate,
                c.std_error,
                c.z_value,
                fmt_p(c.p_value, star),
                vif
            );
        }
        let aic = 2.0 * (d.k as f64 + 1.0) - 2.0 * d.log_likelihood;
        let base = r.data.n_train_positive as f64 / r.data.n_train_steps.max(1) as f64;
        let _ = writeln!(out, "\n| Fit measurement | Value | Fit measurement | Value |");
        let _ = writeln!(out, "|---|---:|---|---:|");
        let _ = writeln!(out, "| LLR Test Chi2 | {:.1} | Observations | {} |", d.llr.chi2, d.n);
        let _ = writeln!(out, "| Log Likelihood | {:.0} | Null model Log Likelihood | {:.0} |", d.log_likelihood, d.null_log_likelihood);
        let _ = writeln!(out, "| LLR Test p-value | {} | Degrees of freedom | {} |", fmt_p(d.llr.p_value, false), d.llr.df);
        let _ = writeln!(out, "| AIC | {aic:.0} | Adj. McFadden R2 | {:.2} |", d.pseudo_r2.adj_mcfadden);
        let _ = writeln!(out, "| Null model base probability | {base:.2} | Cox-Snell R2 | {:.2} |", d.pseudo_r2.cox_snell);
        let _ = writeln!(out, "| | | Nagelkerke R2 | {:.2} |", d.pseudo_r2.nagelkerke);
        let _ = writeln!(out, "| | | Tjur R2 | {:.2} |", d.pseudo_r2.tjur);
        let _ = writeln!(out, "\nOdds ratios with {:.1}% intervals:\n", 100.0 * d.or_level);
        let _ = writeln!(out, "| Predictor | Odds ratio | Lower | Upper |");
        let _ = writeln!(out, "|---|---:|---:|---:|");
        for c in &d.coefficients {
            let _ = writeln!(out, "| {} | {:.3} | {:.3} | {:.3} |", md_escape(&c.name), c.odds_ratio, c.or_ci_low, c.or_ci_high);
        }
        if !d.vif_flagged.is_empty() {
            let _ = writeln!(out, "\nVIF above 10: {}", d.vif_flagged.join(", "));
        }
        let _ = writeln!(out, "\nLinearity of the logit (Box-Tidwell terms):\n");
        let _ = writeln!(out, "| Predictor | Estimate | p-value |");
        let _ = writeln!(out, "|---|---:|---:|");
        for t in &d.linearity {
            let _ = writeln!(out, "| {} | {:.3} | {} |", md_escape(&t.feature), t.estimate, fmt_p(t.p_value, false));
        }
        let o = &d.outlier;
        let _ = writeln!(
            out,
            "\nBonferroni outlier test: row {} rstudent {:.3}, unadjusted p {}, Bonferroni p {}.",
            o.row,
            o.rstudent,
            fmt_p(o.p_unadjusted, false),
            fmt_p(o.p_bonferroni, false)
        );
    } else if let Some(err) = &r.lr_diagnostics_error {
        let _ = writeln!(out, "\n## Logistic regression model\n\nDiagnostics unavailable: {err}");
    }

    if !r.effect_sizes.is_empty() {
        let _ = writeln!(out, "\n## Effect sizes (Cliff's delta, events vs controls)\n");
        let _ = writeln!(out, "| Feature | Delta | Lower | Upper |");
        let _ = writeln!(out, "|---|---:|---:|---:|");
        for e in &r.effect_sizes {
            let _ = writeln!(out, "| {} | {:.3} | {:.3} | {:.3} |", md_escape(&e.feature), e.delta, e.ci_low, e.ci_high);
        }
    }
    out
}

fn write_file(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, contents)?;
    written.push(p);
    Ok(())
}

/// Writes `report.json` plus the requested renderings and returns the
/// paths written.
pub fn emit_report(report: &ExperimentReport, formats: &[ReportFormat], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    write_file(dir, "report.json", &(serde_json::to_string_pretty(report)? + "\n"), &mut written)?;
    if formats.contains(&ReportFormat::Markdown) {
        write_file(dir, "report.md", &render_markdown(report), &mut written)?;
    }
    if formats.contains(&ReportFormat::Svg) {
        if let Some(d) = &report.lr_diagnostics {
            let rows: Vec<Interval> = d
                .coefficients
                .iter()
                .skip(1)
                .map(|c| Interval { label: c.name.clone(), estimate: c.odds_ratio, low: c.or_ci_low, high: c.or_ci_high })
                .collect();
            write_file(dir, "odds_ratios.svg", &forest_plot("Odds ratios", &rows, 1.0, true), &mut written)?;
        }
        if !report.effect_sizes.is_empty() {
            let rows: Vec<Interval> = report
                .effect_sizes
                .iter()
                .map(|e| Interval { label: e.feature.clone(), estimate: e.delta, low: e.ci_low, high: e.ci_high })
                .collect();
            write_file(dir, "effect_sizes.svg", &forest_plot("Cliff's delta", &rows, 0.0, false), &mut written)?;
        }
        if !report.topics.coherence_curve.is_empty() {
            let s = Series {
                name: "C_V".into(),
                points: report.topics.coherence_curve.iter().map(|&(k, c)| (k as f64, c, c, c)).collect(),
            };
            write_file(dir, "coherence.svg", &scatter_plot("Topic coherence", "topics", "mean C_V", &[s]), &mut written)?;
        }
    }
    Ok(written)
}

/// Scatter of mean metric against event fraction with CI bars, one series
/// per estimator.
pub fn sweep_svg(report: &SweepReport) -> String {
    let mut families: Vec<Family> = report.summary.iter().map(|s| s.estimator).collect();
    families.dedup();
    let series: Vec<Series> = families
        .iter()
        .map(|&f| Series {
            name: f.abbreviation().into(),
            points: report
                .summary
                .iter()
                .filter(|s| s.estimator == f)
                .filter_map(|s| Some((s.f, s.mean_metric?, s.ci_low?, s.ci_high?)))
                .collect(),
        })
        .collect();
    scatter_plot("Detectability", "event-related fraction", &report.metric, &series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_parsing() {
        assert_eq!(parse_formats("").unwrap(), [ReportFormat::Json]);
        assert_eq!(parse_formats("svg,md,json").unwrap(), [ReportFormat::Json, ReportFormat::Markdown, ReportFormat::Svg]);
        assert!(parse_formats("json,pdf").is_err());
    }

    #[test]
    fn p_formatting() {
        assert_eq!(fmt_p(0.0004, true), "<0.001*");
        assert_eq!(fmt_p(0.179, false), "0.179");
    }
}
