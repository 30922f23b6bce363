use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::forest::{balanced_weights, ClassWeighting};
use super::logistic::{logit, sigmoid};
use super::tree::{fit_newton_tree, Tree};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoostedParams {
    pub n_trees: usize,
    pub depth: usize,
    pub learning_rate: f64,
    /// Leaf L2 regularization.
    pub lambda: f64,
    pub class_weighting: ClassWeighting,
    /// Rows used per round.
    pub subsample: f64,
    /// Subsample contiguous chronological blocks instead of shuffled rows.
    pub preserve_input_order: bool,
    pub min_hessian: f64,
}

impl Default for BoostedParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            depth: 6,
            learning_rate: 0.1,
            lambda: 3.0,
            class_weighting: ClassWeighting::None,
            subsample: 0.8,
            preserve_input_order: false,
            min_hessian: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub params: BoostedParams,
    pub n_features: usize,
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub importances: Vec<f64>,
    /// Weighted mean log-loss on the training rows after each round,
    /// starting with the base score.
    pub train_loss: Vec<f64>,
}

fn log_loss(f: &[f64], y: &[bool], w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    f.iter()
        .zip(y)
        .zip(w)
        .map(|((&s, &t), &wi)| {
            let softplus = if s > 0.0 { s + (-s).exp().ln_1p() } else { s.exp().ln_1p() };
            wi * (softplus - if t { s } else { 0.0 })
        })
        .sum::<f64>()
        / total
}

/// Rows for round `round`. A chronological block starts at
/// `round * m mod n` and wraps only by restarting at row 0.
fn round_rows(n: usize, subsample: f64, preserve_order: bool, round: usize, rng: &mut seed::Rng) -> Vec<usize> {
    let m = ((subsample * n as f64).ceil() as usize).clamp(1, n);
    if m == n {
        return (0..n).collect();
    }
    if preserve_order {
        let start = (round * m) % (n - m + 1);
        (start..start + m).collect()
    } else {
        let mut rows = index::sample(rng, n, m).into_vec();
        rows.sort_unstable();
        rows
    }
}

pub fn fit_boosted(x: &Matrix, y: &[bool], params: &BoostedParams, seed: u64) -> Result<BoostedModel> {
    if !(params.learning_rate > 0.0) {
        return Err(Error::InvalidArgument("learning_rate must be positive".into()));
    }
    if !(params.subsample > 0.0 && params.subsample <= 1.0) {
        return Err(Error::InvalidArgument("subsample must lie in (0, 1]".into()));
    }
    if y.len() != x.nrows() {
        return Err(Error::InvalidArgument("label count differs from row count".into()));
    }
    if !y.iter().any(|&b| b) || y.iter().all(|&b| b) {
        return Err(Error::InvalidArgument("boosting needs both classes".into()));
    }
    let n = y.len();
    let cw = match params.class_weighting {
        ClassWeighting::None => [1.0, 1.0],
        _ => balanced_weights(y),
    };
    let w: Vec<f64> = y.iter().map(|&t| cw[usize::from(t)]).collect();
    let wpos: f64 = y.iter().zip(&w).filter(|(t, _)| **t).map(|(_, wi)| wi).sum();
    let base_score = logit(wpos / w.iter().sum::<f64>());
    let mut f = vec![base_score; n];
    let mut rng = seed::stage_rng(seed, "boosted_rows", 0);
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut importances = vec![0.0; x.ncols()];
    let mut train_loss = vec![log_loss(&f, y, &w)];
    let (mut g, mut h) = (vec![0.0; n], vec![0.0; n]);
    for round in 0..params.n_trees {
        for i in 0..n {
            let p = sigmoid(f[i]);
            g[i] = w[i] * (f64::from(u8::from(y[i])) - p);
            h[i] = w[i] * p * (1.0 - p);
        }
        let rows = round_rows(n, params.subsample, params.preserve_input_order, round, &mut rng);
        let mut tree = fit_newton_tree(x, &g, &h, &rows, params.depth, params.lambda, params.min_hessian);
        for node in &mut tree.nodes {
            if let super::tree::Node::Leaf { value } = node {
                *value *= params.learning_rate;
            }
        }
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += tree.predict_row(x.row(i));
        }
        for (a, v) in importances.iter_mut().zip(&tree.importances) {
            *a += v;
        }
        trees.push(tree);
        train_loss.push(log_loss(&f, y, &w));
    }
    let s: f64 = importances.iter().sum();
    if s > 0.0 {
        importances.iter_mut().for_each(|v| *v /= s);
    }
    Ok(BoostedModel { params: *params, n_features: x.ncols(), base_score, trees, importances, train_loss })
}

impl BoostedModel {
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::SchemaMismatch { expected: self.n_features, got: x.ncols() });
        }
        Ok(x.rows_iter()
            .map(|row| sigmoid(self.base_score + self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Matrix, Vec<bool>) {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<bool> = (0..10).map(|i| i >= 7).collect();
        (Matrix::column_vector(&x), y)
    }

    #[test]
    fn one_stump_is_a_newton_step_per_side() {
        let (x, y) = data();
        let p = BoostedParams { n_trees: 1, depth: 1, learning_rate: 1.0, lambda: 0.0, subsample: 1.0, min_hessian: 0.0, ..Default::default() };
        let m = fit_boosted(&x, &y, &p, 0).unwrap();
        let p0 = 0.3f64;
        assert!((m.base_score - logit(p0)).abs() < 1e-12);
        // left side: 7 negatives, step = sum(y - p) / sum p(1-p)
        let left = (7.0 * -p0) / (7.0 * p0 * (1.0 - p0));
        let right = (3.0 * (1.0 - p0)) / (3.0 * p0 * (1.0 - p0));
        let leaves: Vec<f64> = m.trees[0].leaves().collect();
        assert!((leaves[0] - left).abs() < 1e-12, "{leaves:?}");
        assert!((leaves[1] - right).abs() < 1e-12);
    }

    #[test]
    fn zero_rounds_and_huge_lambda_stay_at_base() {
        let (x, y) = data();
        let m0 = fit_boosted(&x, &y, &BoostedParams { n_trees: 0, ..Default::default() }, 0).unwrap();
        assert!(m0.predict_proba(&x).unwrap().iter().all(|&p| (p - 0.3).abs() < 1e-12));
        let p = BoostedParams { n_trees: 5, lambda: 1e12, ..Default::default() };
        let m = fit_boosted(&x, &y, &p, 0).unwrap();
        assert!(m.predict_proba(&x).unwrap().iter().all(|&p| (p - 0.3).abs() < 1e-9));
        assert!(fit_boosted(&x, &y, &BoostedParams { learning_rate: 0.0, ..Default::default() }, 0).is_err());
    }

    #[test]
    fn chronological_blocks() {
        let mut rng = seed::rng(0);
        assert_eq!(round_rows(10, 0.5, true, 0, &mut rng), [0, 1, 2, 3, 4]);
        assert_eq!(round_rows(10, 0.5, true, 1, &mut rng), [5, 6, 7, 8, 9]);
        assert_eq!(round_rows(10, 0.5, true, 2, &mut rng), [4, 5, 6, 7, 8]);
    }
}
