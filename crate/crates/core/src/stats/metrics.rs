use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check(y: &[bool], scores: &[f64]) -> Result<()> {
    if y.len() != scores.len() {
        return Err(Error::InvalidArgument("labels and scores differ in length".into()));
    }
    if !y.iter().any(|&b| b) || y.iter().all(|&b| b) {
        return Err(Error::UndefinedMetric("labels hold a single class".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::UndefinedMetric("scores contain NaN".into()));
    }
    Ok(())
}

/// Average precision with `true` as the positive class: the sum of
/// precision times recall increment over descending distinct thresholds.
pub fn average_precision(y: &[bool], scores: &[f64]) -> Result<f64> {
    check(y, scores)?;
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let total_pos = y.iter().filter(|&&b| b).count() as f64;
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if y[order[i]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let recall = tp / total_pos;
        ap += (recall - prev_recall) * tp / (tp + fp);
        prev_recall = recall;
    }
    Ok(ap)
}

/// PR-AUC for the chosen positive label; `false` flips labels and negates
/// scores.
pub fn pr_auc(y: &[bool], scores: &[f64], positive_label: bool) -> Result<f64> {
    if positive_label {
        average_precision(y, scores)
    } else {
        let flipped: Vec<bool> = y.iter().map(|&b| !b).collect();
        let negated: Vec<f64> = scores.iter().map(|&s| -s).collect();
        average_precision(&flipped, &negated)
    }
}

pub fn pr_auc_mean(y: &[bool], scores: &[f64]) -> Result<f64> {
    Ok(0.5 * (pr_auc(y, scores, true)? + pr_auc(y, scores, false)?))
}

/// Rank-statistic ROC-AUC; ties earn half credit.
pub fn roc_auc(y: &[bool], scores: &[f64]) -> Result<f64> {
    check(y, scores)?;
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; y.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    let n_pos = y.iter().filter(|&&b| b).count() as f64;
    let n_neg = y.len() as f64 - n_pos;
    let rank_sum: f64 = (0..y.len()).filter(|&i| y[i]).map(|i| ranks[i]).sum();
    Ok((rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / (self.tp + self.fp + self.tn + self.fn_) as f64
    }
}

/// Events are predicted when the score exceeds 0.5.
pub fn predict_labels(scores: &[f64]) -> Vec<bool> {
    scores.iter().map(|&s| s > 0.5).collect()
}

pub fn confusion(y: &[bool], predicted: &[bool]) -> Confusion {
    let mut c = Confusion::default();
    for (&t, &p) in y.iter().zip(predicted) {
        match (t, p) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    c
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let d = 2 * tp + fp + fn_;
    if d == 0 {
        0.0
    } else {
        2.0 * tp as f64 / d as f64
    }
}

/// F1 averaged over both polarities; an undefined F1 counts as 0.
pub fn f1_mean(y: &[bool], predicted: &[bool]) -> f64 {
    let c = confusion(y, predicted);
    0.5 * (f1(c.tp, c.fp, c.fn_) + f1(c.tn, c.fn_, c.fp))
}

pub fn no_information_rate(y: &[bool]) -> f64 {
    let pos = y.iter().filter(|&&b| b).count();
    pos.max(y.len() - pos) as f64 / y.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub pr_auc_mean: f64,
    pub pr_auc_events: f64,
    pub roc_auc: f64,
    pub f1_mean: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
    pub no_information_rate: f64,
}

pub fn metric_report(y: &[bool], scores: &[f64]) -> Result<MetricReport> {
    let predicted = predict_labels(scores);
    let c = confusion(y, &predicted);
    Ok(MetricReport {
        pr_auc_mean: pr_auc_mean(y, scores)?,
        pr_auc_events: pr_auc(y, scores, true)?,
        roc_auc: roc_auc(y, scores)?,
        f1_mean: f1_mean(y, &predicted),
        accuracy: c.accuracy(),
        confusion: c,
        no_information_rate: no_information_rate(y),
    })
}

/// Scalar metrics usable for selection and permutation testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    #[default]
    PrAucMean,
    PrAuc,
    RocAuc,
    F1Mean,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::PrAucMean => "pr_auc_mean",
            MetricKind::PrAuc => "pr_auc",
            MetricKind::RocAuc => "roc_auc",
            MetricKind::F1Mean => "f1_mean",
        }
    }

    pub fn eval(self, y: &[bool], scores: &[f64]) -> Result<f64> {
        match self {
            MetricKind::PrAucMean => pr_auc_mean(y, scores),
            MetricKind::PrAuc => pr_auc(y, scores, true),
            MetricKind::RocAuc => roc_auc(y, scores),
            MetricKind::F1Mean => {
                check(y, scores)?;
                Ok(f1_mean(y, &predict_labels(scores)))
            }
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pr_auc_mean" => Ok(MetricKind::PrAucMean),
            "pr_auc" => Ok(MetricKind::PrAuc),
            "roc_auc" => Ok(MetricKind::RocAuc),
            "f1_mean" => Ok(MetricKind::F1Mean),
            other => Err(Error::InvalidArgument(format!("unknown metric `{other}`"))),
        }
    }
}
