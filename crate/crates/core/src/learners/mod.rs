//! Logistic regression, random forests and gradient-boosted trees behind
//! one [`EstimatorSpec`] / [`FittedModel`] pair, plus feature rankings and
//! permutation importance.

mod boosted;
mod forest;
mod logistic;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use boosted::{fit_boosted, BoostedModel, BoostedParams};
pub use forest::{balanced_weights, fit_forest, ClassWeighting, ForestModel, ForestParams};
pub use logistic::{fit_logistic, logit, sigmoid, LogisticConfig, LogisticModel};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logistic,
    Forest,
    Boosted,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Logistic, Family::Forest, Family::Boosted];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Logistic => "logistic",
            Family::Forest => "forest",
            Family::Boosted => "boosted",
        }
    }

    /// Short label for tables.
    pub fn abbreviation(self) -> &'static str {
        match self {
            Family::Logistic => "LR",
            Family::Forest => "RF",
            Family::Boosted => "GBDT",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" | "lr" => Ok(Family::Logistic),
            "forest" | "rf" => Ok(Family::Forest),
            "boosted" | "gbdt" => Ok(Family::Boosted),
            other => Err(Error::InvalidArgument(format!("unknown estimator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorSpec {
    Logistic(LogisticConfig),
    Forest(ForestParams),
    Boosted(BoostedParams),
}

impl EstimatorSpec {
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Logistic => EstimatorSpec::Logistic(LogisticConfig::default()),
            Family::Forest => EstimatorSpec::Forest(ForestParams::default()),
            Family::Boosted => EstimatorSpec::Boosted(BoostedParams::default()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            EstimatorSpec::Logistic(_) => Family::Logistic,
            EstimatorSpec::Forest(_) => Family::Forest,
            EstimatorSpec::Boosted(_) => Family::Boosted,
        }
    }

    pub fn fit(&self, x: &Matrix, y: &[bool], seed: u64) -> Result<FittedModel> {
        Ok(match self {
            EstimatorSpec::Logistic(c) => FittedModel::Logistic(fit_logistic(x, y, c)?),
            EstimatorSpec::Forest(p) => FittedModel::Forest(fit_forest(x, y, p, seed)?),
            EstimatorSpec::Boosted(p) => FittedModel::Boosted(fit_boosted(x, y, p, seed)?),
        })
    }

    /// Copy with the named parameters replaced, e.g. `{"max_depth": 4}`.
    pub fn with_params(&self, params: &serde_json::Map<String, serde_json::Value>) -> Result<Self> {
        let mut value = serde_json::to_value(self)?;
        let obj = value.as_object_mut().expect("spec serializes to an object");
        for (k, v) in params {
            if k == "family" || !obj.contains_key(k) {
                return Err(Error::Config(format!("`{k}` is not a {} parameter", self.family())));
            }
            obj.insert(k.clone(), v.clone());
        }
        Ok(serde_json::from_value(value)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedModel {
    Logistic(LogisticModel),
    Forest(ForestModel),
    Boosted(BoostedModel),
}

impl FittedModel {
    pub fn family(&self) -> Family {
        match self {
            FittedModel::Logistic(_) => Family::Logistic,
            FittedModel::Forest(_) => Family::Forest,
            FittedModel::Boosted(_) => Family::Boosted,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            FittedModel::Logistic(m) => m.k,
            FittedModel::Forest(m) => m.n_features,
            FittedModel::Boosted(m) => m.n_features,
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            FittedModel::Logistic(m) => m.predict_proba(x),
            FittedModel::Forest(m) => m.predict_proba(x),
            FittedModel::Boosted(m) => m.predict_proba(x),
        }
    }

    /// |β_j| without the intercept, or tree importances.
    pub fn importance_scores(&self) -> Vec<f64> {
        match self {
            FittedModel::Logistic(m) => m.coefficients[1..].iter().map(|b| b.abs()).collect(),
            FittedModel::Forest(m) => m.importances.clone(),
            FittedModel::Boosted(m) => m.importances.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::json!({
            "schema_version": MODEL_SCHEMA_VERSION,
            "model": self,
        }))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Envelope {
            schema_version: u32,
            model: FittedModel,
        }
        let e: Envelope = serde_json::from_str(s)?;
        if e.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Malformed(format!("model schema version {}", e.schema_version)));
        }
        Ok(e.model)
    }
}

/// Column indices ordered least important first; ties keep column order.
pub fn rank_by_scores(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    idx
}

pub fn rank_features(model: &FittedModel) -> Vec<usize> {
    rank_by_scores(&model.importance_scores())
}

/// Mean metric drop when each column is shuffled, using seeded shuffles
/// `derive(seed, "permutation_importance", column * n_repeats + repeat)`.
pub fn permutation_importance<M>(model: &FittedModel, x: &Matrix, y: &[bool], metric: M, n_repeats: usize, seed: u64) -> Result<Vec<f64>>
where
    M: Fn(&[bool], &[f64]) -> Result<f64>,
{
    permutation_importance_with(model, x, y, metric, n_repeats, |col, rep, perm| {
        let mut rng = seed::stage_rng(seed, "permutation_importance", (col * n_repeats + rep) as u64);
        perm.shuffle(&mut rng);
    })
}

/// As [`permutation_importance`] with a caller-supplied permutation
/// source; `permute(column, repeat, rows)` rearranges `rows` in place.
pub fn permutation_importance_with<M, P>(
    model: &FittedModel,
    x: &Matrix,
    y: &[bool],
    metric: M,
    n_repeats: usize,
    permute: P,
) -> Result<Vec<f64>>
where
    M: Fn(&[bool], &[f64]) -> Result<f64>,
    P: Fn(usize, usize, &mut [usize]),
{
    if n_repeats == 0 {
        return Err(Error::InvalidArgument("n_repeats must be positive".into()));
    }
    let baseline = metric(y, &model.predict_proba(x)?)?;
    let mut drops = Vec::with_capacity(x.ncols());
    for c in 0..x.ncols() {
        let original = x.column(c);
        let mut total = 0.0;
        for rep in 0..n_repeats {
            let mut perm: Vec<usize> = (0..x.nrows()).collect();
            permute(c, rep, &mut perm);
            let mut shuffled = x.clone();
            let values: Vec<f64> = perm.iter().map(|&i| original[i]).collect();
            shuffled.set_column(c, &values);
            total += metric(y, &model.predict_proba(&shuffled)?)?;
        }
        drops.push(baseline - total / n_repeats as f64);
    }
    Ok(drops)
}
