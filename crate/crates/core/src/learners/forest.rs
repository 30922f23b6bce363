use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_gini_tree, Tree, TreeParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    None,
    Balanced,
    SubsampleBalanced,
}

impl ClassWeighting {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassWeighting::None => "none",
            ClassWeighting::Balanced => "balanced",
            ClassWeighting::SubsampleBalanced => "subsample_balanced",
        }
    }
}

/// `n / (2 n_c)` per class, the usual balanced weights.
pub fn balanced_weights(y: &[bool]) -> [f64; 2] {
    let pos = y.iter().filter(|&&b| b).count() as f64;
    let neg = y.len() as f64 - pos;
    let n = y.len() as f64;
    [if neg > 0.0 { n / (2.0 * neg) } else { 1.0 }, if pos > 0.0 { n / (2.0 * pos) } else { 1.0 }]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub class_weighting: ClassWeighting,
    pub min_rows_leaf: usize,
    /// Features tried per split; `None` means `floor(sqrt(p))`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 200, max_depth: 6, class_weighting: ClassWeighting::Balanced, min_rows_leaf: 1, max_features: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub n_features: usize,
    pub trees: Vec<Tree>,
    /// Mean of per-tree normalized impurity decreases, normalized to 1
    /// when any split occurred.
    pub importances: Vec<f64>,
}

/// Bootstrap multiplicities for tree `t`.
fn bootstrap(y: &[bool], weighting: ClassWeighting, rng: &mut seed::Rng) -> Vec<u32> {
    let n = y.len();
    let mut counts = vec![0u32; n];
    if weighting == ClassWeighting::SubsampleBalanced {
        let pos: Vec<usize> = (0..n).filter(|&i| y[i]).collect();
        let neg: Vec<usize> = (0..n).filter(|&i| !y[i]).collect();
        let half = n / 2;
        for (class, m) in [(&neg, n - half), (&pos, half)] {
            for _ in 0..m {
                counts[class[rng.random_range(0..class.len())]] += 1;
            }
        }
    } else {
        for _ in 0..n {
            counts[rng.random_range(0..n)] += 1;
        }
    }
    counts
}

/// Tree `t` is grown from seed `derive(seed, "forest_tree", t)`, so a
/// larger forest extends a smaller one with the same seed.
pub fn fit_forest(x: &Matrix, y: &[bool], params: &ForestParams, seed: u64) -> Result<ForestModel> {
    if y.len() != x.nrows() {
        return Err(Error::InvalidArgument("label count differs from row count".into()));
    }
    if !y.iter().any(|&b| b) || y.iter().all(|&b| b) {
        return Err(Error::InvalidArgument("forest needs both classes".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("forest needs at least one tree".into()));
    }
    let p = x.ncols();
    let max_features = params.max_features.unwrap_or(((p as f64).sqrt().floor() as usize).max(1)).clamp(1, p.max(1));
    let class_w = match params.class_weighting {
        ClassWeighting::Balanced => balanced_weights(y),
        _ => [1.0, 1.0],
    };
    let tree_params = TreeParams { max_depth: params.max_depth, min_rows_leaf: params.min_rows_leaf, max_features };
    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::stage_rng(seed, "forest_tree", t as u64);
            let counts = bootstrap(y, params.class_weighting, &mut rng);
            let rows: Vec<usize> = (0..y.len()).filter(|&i| counts[i] > 0).collect();
            let w: Vec<f64> = (0..y.len()).map(|i| f64::from(counts[i]) * class_w[usize::from(y[i])]).collect();
            fit_gini_tree(x, y, &w, &rows, &tree_params, &mut rng)
        })
        .collect();
    let mut importances = vec![0.0; p];
    for t in &trees {
        let s: f64 = t.importances.iter().sum();
        if s > 0.0 {
            for (a, v) in importances.iter_mut().zip(&t.importances) {
                *a += v / s;
            }
        }
    }
    let s: f64 = importances.iter().sum();
    if s > 0.0 {
        importances.iter_mut().for_each(|v| *v /= s);
    }
    Ok(ForestModel { params: *params, n_features: p, trees, importances })
}

impl ForestModel {
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::SchemaMismatch { expected: self.n_features, got: x.ncols() });
        }
        let n = self.trees.len() as f64;
        Ok((0..x.nrows())
            .into_par_iter()
            .map(|r| self.trees.iter().map(|t| t.predict_row(x.row(r))).sum::<f64>() / n)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gapped() -> (Matrix, Vec<bool>) {
        let x: Vec<f64> = (0..40).map(|i| if i < 20 { i as f64 * 0.02 } else { 0.6 + (i - 20) as f64 * 0.02 }).collect();
        let y = x.iter().map(|&v| v > 0.5).collect();
        (Matrix::column_vector(&x), y)
    }

    #[test]
    fn stumps_fit_separable_data() {
        let (x, y) = gapped();
        let p = ForestParams { n_trees: 10, max_depth: 1, class_weighting: ClassWeighting::None, ..Default::default() };
        let m = fit_forest(&x, &y, &p, 1).unwrap();
        let pred = m.predict_proba(&x).unwrap();
        assert!(pred.iter().zip(&y).all(|(p, &t)| (*p > 0.5) == t));
        assert!((m.importances.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(m.trees.iter().all(|t| t.depth() <= 1));
    }

    #[test]
    fn depth_zero_predicts_majority() {
        let x = Matrix::column_vector(&(0..30).map(f64::from).collect::<Vec<_>>());
        let y: Vec<bool> = (0..30).map(|i| i % 6 == 0).collect();
        let p = ForestParams { n_trees: 1, max_depth: 0, class_weighting: ClassWeighting::None, ..Default::default() };
        let m = fit_forest(&x, &y, &p, 4).unwrap();
        assert!(m.predict_proba(&x).unwrap().iter().all(|&v| v < 0.5));
        assert_eq!(m.importances, [0.0]);
    }

    #[test]
    fn subsample_balanced_draws_equal_classes() {
        let y: Vec<bool> = (0..40).map(|i| i % 5 == 0).collect();
        let counts = bootstrap(&y, ClassWeighting::SubsampleBalanced, &mut seed::rng(2));
        let pos: u32 = (0..40).filter(|&i| y[i]).map(|i| counts[i]).sum();
        let neg: u32 = (0..40).filter(|&i| !y[i]).map(|i| counts[i]).sum();
        assert_eq!((pos, neg), (20, 20));
    }
}
