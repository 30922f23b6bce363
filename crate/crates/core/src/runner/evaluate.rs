//! The per-estimator pipeline shared by real and synthetic experiments:
//! train-only preprocessing, recursive elimination, grid search, final fit,
//! test metrics and the label-permutation test.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Standardizer, TukeyCapper};
use crate::learners::{
    fit_logistic, permutation_importance, BoostedParams, EstimatorSpec, Family, FittedModel, ForestParams, LogisticConfig,
    LogisticModel,
};
use crate::seed;
use crate::stats::diagnostics::{lr_diagnostics, LrDiagnostics};
use crate::stats::{metric_report, permutation_test, MetricKind, MetricReport, PermutationTest};
use crate::timegrid::Partition;
use crate::tuning::{grid_search, rfecv, time_series_split, EliminationStep, GridResult, ParamGrid, SelectionResult};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSettings {
    pub metric: MetricKind,
    pub n_folds: usize,
    pub n_perm: usize,
    pub importance_repeats: usize,
    pub logistic: LogisticConfig,
    pub forest: ForestParams,
    pub boosted: BoostedParams,
    pub forest_grid: ParamGrid,
    pub boosted_grid: ParamGrid,
    pub logistic_step: EliminationStep,
    pub tree_step: EliminationStep,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        let forest_grid = ParamGrid::from([
            ("class_weighting".into(), vec![json!("balanced"), json!("subsample_balanced")]),
            ("max_depth".into(), vec![json!(6), json!(8)]),
            ("n_trees".into(), vec![json!(50), json!(200)]),
        ]);
        let boosted_grid = ParamGrid::from([
            ("depth".into(), vec![json!(4), json!(6)]),
            ("lambda".into(), vec![json!(3.0), json!(7.0)]),
            ("preserve_input_order".into(), vec![json!(false), json!(true)]),
        ]);
        Self {
            metric: MetricKind::PrAucMean,
            n_folds: 2,
            n_perm: 1000,
            importance_repeats: 10,
            logistic: LogisticConfig::default(),
            forest: ForestParams::default(),
            boosted: BoostedParams::default(),
            forest_grid,
            boosted_grid,
            logistic_step: EliminationStep::Count(1),
            tree_step: EliminationStep::Fraction(0.1),
        }
    }
}

impl EstimatorSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_folds < 2 {
            return Err(Error::Config("n_folds must be >= 2".into()));
        }
        if self.n_perm == 0 {
            return Err(Error::Config("n_perm must be positive".into()));
        }
        if self.importance_repeats == 0 {
            return Err(Error::Config("importance_repeats must be positive".into()));
        }
        Ok(())
    }

    pub fn spec(&self, family: Family) -> EstimatorSpec {
        match family {
            Family::Logistic => EstimatorSpec::Logistic(self.logistic),
            Family::Forest => EstimatorSpec::Forest(self.forest),
            Family::Boosted => EstimatorSpec::Boosted(self.boosted),
        }
    }

    fn grid(&self, family: Family) -> Option<&ParamGrid> {
        match family {
            Family::Logistic => None,
            Family::Forest => Some(&self.forest_grid),
            Family::Boosted => Some(&self.boosted_grid),
        }
    }
}

/// Fitted transformers, selection and model for one estimator family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedEstimator {
    pub family: Family,
    pub capper: Option<TukeyCapper>,
    pub standardizer: Standardizer,
    pub selection: SelectionResult,
    pub grid: Option<GridResult>,
    pub spec: EstimatorSpec,
    pub model: FittedModel,
}

impl TrainedEstimator {
    /// Applies the fitted transformers and keeps the selected columns.
    pub fn transform(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        let capped = match &self.capper {
            Some(c) => c.apply(m)?,
            None => m.clone(),
        };
        self.standardizer.apply(&capped)?.select_columns(&self.selection.selected)
    }

    pub fn predict(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        self.model.predict_proba(&self.transform(m)?.x)
    }
}

pub fn family_seed(seed: u64, family: Family) -> u64 {
    seed::derive(seed, family.as_str(), 0)
}

/// Logistic: Tukey capping, z-scores, elimination one feature at a time.
/// Trees: z-scores, elimination by a fraction, then grid search on the
/// surviving columns. Every fitted statistic sees training rows only. A
/// final logistic fit that stops on quasi-separation keeps the
/// coefficients it reached for scoring.
pub fn train_estimator(family: Family, features: &FeatureMatrix, settings: &EstimatorSettings, seed: u64) -> Result<TrainedEstimator> {
    let seed = family_seed(seed, family);
    let train = features.partition(Partition::Train);
    let capper = match family {
        Family::Logistic => Some(TukeyCapper::fit(&train)?),
        _ => None,
    };
    let capped = match &capper {
        Some(c) => c.apply(&train)?,
        None => train,
    };
    let standardizer = Standardizer::fit(&capped)?;
    let z = standardizer.apply(&capped)?;
    let plan = time_series_split(z.nrows(), settings.n_folds)?;
    plan.check_leakage()?;
    let base = settings.spec(family);
    let step = match family {
        Family::Logistic => settings.logistic_step,
        _ => settings.tree_step,
    };
    let selection = rfecv(&base, &z.x, &z.labels, &z.columns, step, &plan, settings.metric, seed)?;
    let selected = z.select_columns(&selection.selected)?;
    let grid = match settings.grid(family) {
        Some(g) if !g.is_empty() => Some(grid_search(&base, g, &selected.x, &selected.labels, &plan, settings.metric, seed)?),
        _ => None,
    };
    let spec = grid.as_ref().map_or(base, |g| g.best_spec.clone());
    let model = match spec.fit(&selected.x, &selected.labels, seed) {
        Err(Error::QuasiSeparation { coefficients, .. }) => {
            FittedModel::Logistic(LogisticModel::from_separated(&selected.x, &selected.labels, coefficients)?)
        }
        other => other?,
    };
    Ok(TrainedEstimator { family, capper, standardizer, selection, grid, spec, model })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorEvaluation {
    pub family: Family,
    pub metrics: MetricReport,
    pub permutation: PermutationTest,
    pub test_scores: Vec<f64>,
    /// Permutation importance on the test partition; empty for logistic
    /// models, which are read through their coefficients instead.
    pub importance: Vec<FeatureImportance>,
}

/// Test-partition metrics and a permutation test against frozen scores.
pub fn evaluate_estimator(
    trained: &TrainedEstimator,
    features: &FeatureMatrix,
    settings: &EstimatorSettings,
    seed: u64,
) -> Result<EstimatorEvaluation> {
    let seed = family_seed(seed, trained.family);
    let test = trained.transform(&features.partition(Partition::Test))?;
    let scores = trained.model.predict_proba(&test.x)?;
    let metrics = metric_report(&test.labels, &scores)?;
    let metric = settings.metric;
    let mut permutation = permutation_test(&test.labels, &scores, |y, s| metric.eval(y, s), settings.n_perm, seed)?;
    permutation.null.clear();
    let importance = match trained.family {
        Family::Logistic => vec![],
        _ => {
            let drops = permutation_importance(&trained.model, &test.x, &test.labels, |y, s| metric.eval(y, s), settings.importance_repeats, seed)?;
            test.columns.iter().zip(drops).map(|(f, d)| FeatureImportance { feature: f.clone(), importance: d }).collect()
        }
    };
    Ok(EstimatorEvaluation { family: trained.family, metrics, permutation, test_scores: scores, importance })
}

/// Diagnostics of the final logistic fit on its own (transformed) training
/// rows, with odds-ratio intervals widened for the number of coefficients.
pub fn diagnose_logistic(trained: &TrainedEstimator, features: &FeatureMatrix, alpha: f64, settings: &EstimatorSettings) -> Result<LrDiagnostics> {
    let FittedModel::Logistic(model) = &trained.model else {
        return Err(Error::InvalidArgument("diagnostics need a logistic model".into()));
    };
    if !model.converged {
        return Err(Error::InvalidArgument("the final logistic fit did not converge (quasi-separation or iteration limit); inference is undefined".into()));
    }
    let train = trained.transform(&features.partition(Partition::Train))?;
    let null_model = fit_logistic(&Matrix::zeros(train.nrows(), 0), &train.labels, &settings.logistic)?;
    lr_diagnostics(model, &null_model, &train.x, &train.labels, &train.columns, alpha, model.k, &settings.logistic)
}
