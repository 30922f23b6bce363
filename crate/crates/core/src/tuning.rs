//! Expanding-window time-series CV, recursive feature elimination with
//! CV, and exhaustive grid search.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{rank_by_scores, EstimatorSpec};
use crate::matrix::Matrix;
use crate::stats::MetricKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub folds: Vec<Fold>,
}

impl CvPlan {
    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    /// Every training row precedes every validation row, and validation
    /// blocks are disjoint and consecutive.
    pub fn check_leakage(&self) -> Result<()> {
        let mut prev_end: Option<usize> = None;
        for f in &self.folds {
            let (Some(&tmax), Some(&vmin), Some(&vmax)) = (f.train.iter().max(), f.validation.iter().min(), f.validation.iter().max()) else {
                return Err(Error::InvalidArgument("empty fold".into()));
            };
            if tmax >= vmin {
                return Err(Error::InvalidArgument("validation row precedes a training row".into()));
            }
            if vmax - vmin + 1 != f.validation.len() || prev_end.is_some_and(|e| vmin != e + 1) {
                return Err(Error::InvalidArgument("validation blocks are not consecutive".into()));
            }
            prev_end = Some(vmax);
        }
        Ok(())
    }
}

/// `n_folds + 1` consecutive blocks, remainder rows going to the earliest
/// blocks; fold `i` trains on blocks `0..=i` and validates on `i + 1`.
pub fn time_series_split(n_rows: usize, n_folds: usize) -> Result<CvPlan> {
    if n_folds == 0 {
        return Err(Error::InvalidArgument("n_folds must be positive".into()));
    }
    let blocks = n_folds + 1;
    if n_rows < blocks {
        return Err(Error::InvalidArgument(format!("{n_rows} rows cannot fill {blocks} blocks")));
    }
    let (base, extra) = (n_rows / blocks, n_rows % blocks);
    let mut bounds = vec![0];
    for b in 0..blocks {
        bounds.push(bounds[b] + base + usize::from(b < extra));
    }
    let folds = (0..n_folds)
        .map(|i| Fold { train: (0..bounds[i + 1]).collect(), validation: (bounds[i + 1]..bounds[i + 2]).collect() })
        .collect();
    let plan = CvPlan { folds };
    plan.check_leakage()?;
    Ok(plan)
}

fn take(y: &[bool], idx: &[usize]) -> Vec<bool> {
    idx.iter().map(|&i| y[i]).collect()
}

/// Per-fold validation metric; `None` when the fold could not be fit or
/// the metric is undefined on it.
pub fn cross_validate(
    spec: &EstimatorSpec,
    x: &Matrix,
    y: &[bool],
    plan: &CvPlan,
    metric: MetricKind,
    seed: u64,
) -> Vec<Option<f64>> {
    plan.folds
        .par_iter()
        .map(|f| {
            let model = spec.fit(&x.select_rows(&f.train), &take(y, &f.train), seed).ok()?;
            let scores = model.predict_proba(&x.select_rows(&f.validation)).ok()?;
            metric.eval(&take(y, &f.validation), &scores).ok()
        })
        .collect()
}

fn mean_defined(v: &[Option<f64>]) -> Option<f64> {
    let d: Vec<f64> = v.iter().flatten().copied().collect();
    (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EliminationStep {
    Count(usize),
    Fraction(f64),
}

impl EliminationStep {
    /// Features removed from a set of `n`.
    pub fn drop_count(self, n: usize) -> usize {
        let raw = match self {
            EliminationStep::Count(c) => c,
            EliminationStep::Fraction(f) => (f * n as f64).ceil() as usize,
        };
        raw.clamp(1, n.saturating_sub(1).max(1))
    }

    fn validate(self) -> Result<()> {
        match self {
            EliminationStep::Count(0) => Err(Error::InvalidArgument("elimination step must be >= 1".into())),
            EliminationStep::Fraction(f) if !(f > 0.0 && f < 1.0) => {
                Err(Error::InvalidArgument("elimination fraction must lie in (0, 1)".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n_features: usize,
    /// Mean validation metric; `None` when every fold was skipped.
    pub metric: Option<f64>,
    pub folds_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected: Vec<String>,
    pub selected_indices: Vec<usize>,
    pub curve: Vec<CurvePoint>,
    pub chosen_size: usize,
}

/// Feature importances from a full-train fit. A logistic fit that stops on
/// quasi-separation still ranks by the coefficients it reached.
fn importance_on(spec: &EstimatorSpec, x: &Matrix, y: &[bool], seed: u64) -> Result<Vec<f64>> {
    match spec.fit(x, y, seed) {
        Ok(m) => Ok(m.importance_scores()),
        Err(Error::QuasiSeparation { coefficients, .. }) => Ok(coefficients[1..].iter().map(|b| b.abs()).collect()),
        Err(e) => Err(e),
    }
}

pub fn rfecv(
    spec: &EstimatorSpec,
    x: &Matrix,
    y: &[bool],
    names: &[String],
    step: EliminationStep,
    plan: &CvPlan,
    metric: MetricKind,
    seed: u64,
) -> Result<SelectionResult> {
    step.validate()?;
    if names.len() != x.ncols() || x.ncols() == 0 {
        return Err(Error::InvalidArgument("rfecv needs named, nonempty feature columns".into()));
    }
    let mut current: Vec<usize> = (0..x.ncols()).collect();
    let mut curve = Vec::new();
    let mut subsets = Vec::new();
    loop {
        let sub = x.select_columns(&current);
        let folds = cross_validate(spec, &sub, y, plan, metric, seed);
        curve.push(CurvePoint {
            n_features: current.len(),
            metric: mean_defined(&folds),
            folds_used: folds.iter().flatten().count(),
        });
        subsets.push(current.clone());
        if current.len() == 1 {
            break;
        }
        let ranking = rank_by_scores(&importance_on(spec, &sub, y, seed)?);
        let drop: Vec<usize> = ranking[..step.drop_count(current.len())].to_vec();
        current = current.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, &c)| c).collect();
    }
    // ties go to the smallest subset, which appears last
    let best = curve
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.metric.map(|m| (i, m)))
        .fold(None, |acc: Option<(usize, f64)>, (i, m)| match acc {
            Some((_, bm)) if m < bm => acc,
            _ => Some((i, m)),
        })
        .ok_or_else(|| Error::UndefinedMetric("every CV fold was skipped at every subset size".into()))?;
    let mut selected_indices = subsets[best.0].clone();
    selected_indices.sort_unstable();
    Ok(SelectionResult {
        selected: selected_indices.iter().map(|&i| names[i].clone()).collect(),
        chosen_size: selected_indices.len(),
        selected_indices,
        curve,
    })
}

pub type ParamGrid = BTreeMap<String, Vec<serde_json::Value>>;
pub type ParamPoint = serde_json::Map<String, serde_json::Value>;

/// Cartesian product in lexicographic key order, last key varying fastest.
pub fn expand_grid(grid: &ParamGrid) -> Result<Vec<ParamPoint>> {
    if grid.values().any(Vec::is_empty) {
        return Err(Error::Config("grid parameter with no values".into()));
    }
    let mut points = vec![ParamPoint::new()];
    for (k, values) in grid {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(k.clone(), v.clone());
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub params: ParamPoint,
    pub fold: usize,
    pub metric: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_params: ParamPoint,
    pub best_spec: EstimatorSpec,
    /// `None` when every fold of every point failed.
    pub best_score: Option<f64>,
    pub rows: Vec<GridRow>,
    /// Mean per grid point in grid order; `None` when every fold failed.
    pub means: Vec<Option<f64>>,
}

pub fn grid_search(
    spec: &EstimatorSpec,
    grid: &ParamGrid,
    x: &Matrix,
    y: &[bool],
    plan: &CvPlan,
    metric: MetricKind,
    seed: u64,
) -> Result<GridResult> {
    let points = expand_grid(grid)?;
    let specs = points.iter().map(|p| spec.with_params(p)).collect::<Result<Vec<_>>>()?;
    let per_point: Vec<Vec<Option<f64>>> = specs.par_iter().map(|s| cross_validate(s, x, y, plan, metric, seed)).collect();
    let means: Vec<Option<f64>> = per_point.iter().map(|f| mean_defined(f)).collect();
    let key = |m: Option<f64>| m.unwrap_or(f64::NEG_INFINITY);
    let mut best = 0;
    for (i, &m) in means.iter().enumerate() {
        if key(m) > key(means[best]) {
            best = i;
        }
    }
    let rows = points
        .iter()
        .zip(&per_point)
        .flat_map(|(p, folds)| folds.iter().enumerate().map(|(fold, &metric)| GridRow { params: p.clone(), fold, metric }))
        .collect();
    Ok(GridResult { best_params: points[best].clone(), best_spec: specs[best].clone(), best_score: means[best], rows, means })
}

fn cell(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn metric_cell(m: Option<f64>) -> String {
    m.map_or_else(|| "NA".into(), |v| format!("{v:.12}"))
}

/// `params...,fold,metric`
pub fn write_grid_csv<W: Write>(result: &GridResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let keys: Vec<String> = result.rows.first().map(|r| r.params.keys().cloned().collect()).unwrap_or_default();
    let mut header = keys.clone();
    header.extend(["fold".into(), "metric".into()]);
    w.write_record(&header)?;
    for r in &result.rows {
        let mut rec: Vec<String> = keys.iter().map(|k| cell(&r.params[k])).collect();
        rec.push(r.fold.to_string());
        rec.push(metric_cell(r.metric));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `n_features,metric`
pub fn write_curve_csv<W: Write>(result: &SelectionResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_features", "metric"])?;
    for p in &result.curve {
        w.write_record([p.n_features.to_string(), metric_cell(p.metric)])?;
    }
    w.flush()?;
    Ok(())
}
