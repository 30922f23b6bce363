//! Binary trees shared by the forest (Gini, class-weighted) and the
//! boosted model (second-order gain on logistic loss).

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::seed::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    /// Unnormalized impurity decrease or gain per feature.
    pub importances: Vec<f64>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value } => Some(*value),
            Node::Split { .. } => None,
        })
    }
}

/// Candidate split chosen by a criterion.
struct Best {
    score: f64,
    feature: usize,
    threshold: f64,
    split_at: usize,
}

/// Additive per-row statistics that a criterion aggregates over a node.
trait Criterion {
    type Stat: Copy + Default;
    fn stat(&self, row: usize) -> Self::Stat;
    fn add(a: Self::Stat, b: Self::Stat) -> Self::Stat;
    fn sub(a: Self::Stat, b: Self::Stat) -> Self::Stat;
    /// Node score; a split's improvement is `left + right - parent`.
    fn score(&self, s: Self::Stat) -> f64;
    fn admissible(&self, s: Self::Stat) -> bool;
    fn leaf(&self, s: Self::Stat) -> f64;
    fn is_pure(&self, s: Self::Stat) -> bool;
}

struct Builder<'a, C: Criterion> {
    x: &'a Matrix,
    crit: C,
    max_depth: usize,
    min_rows_leaf: usize,
    max_features: usize,
    rng: Option<&'a mut Rng>,
    nodes: Vec<Node>,
    importances: Vec<f64>,
}

impl<C: Criterion> Builder<'_, C> {
    fn total(&self, rows: &[usize]) -> C::Stat {
        rows.iter().fold(C::Stat::default(), |acc, &r| C::add(acc, self.crit.stat(r)))
    }

    fn build(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let total = self.total(rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: self.crit.leaf(total) });
        if depth >= self.max_depth || rows.len() < 2 * self.min_rows_leaf || self.crit.is_pure(total) {
            return id;
        }
        let Some(best) = self.best_split(rows, total) else {
            return id;
        };
        let f = best.feature;
        rows.sort_by(|&a, &b| self.x.get(a, f).total_cmp(&self.x.get(b, f)).then(a.cmp(&b)));
        self.importances[f] += best.score;
        let (l, r) = rows.split_at_mut(best.split_at);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split { feature: f, threshold: best.threshold, left, right };
        id
    }

    fn best_split(&mut self, rows: &[usize], total: C::Stat) -> Option<Best> {
        let p = self.x.ncols();
        let mut features: Vec<usize> = (0..p).collect();
        if self.max_features < p {
            if let Some(rng) = self.rng.as_deref_mut() {
                features.shuffle(rng);
            }
            features.truncate(self.max_features);
        }
        let parent = self.crit.score(total);
        let mut best: Option<Best> = None;
        let mut sorted = rows.to_vec();
        for &f in &features {
            sorted.sort_by(|&a, &b| self.x.get(a, f).total_cmp(&self.x.get(b, f)).then(a.cmp(&b)));
            let mut left = C::Stat::default();
            for i in 0..sorted.len() - 1 {
                left = C::add(left, self.crit.stat(sorted[i]));
                let (lo, hi) = (self.x.get(sorted[i], f), self.x.get(sorted[i + 1], f));
                if lo == hi || i + 1 < self.min_rows_leaf || sorted.len() - i - 1 < self.min_rows_leaf {
                    continue;
                }
                let right = C::sub(total, left);
                if !self.crit.admissible(left) || !self.crit.admissible(right) {
                    continue;
                }
                let gain = self.crit.score(left) + self.crit.score(right) - parent;
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.score) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Best { score: gain, feature: f, threshold, split_at: i + 1 });
                }
            }
        }
        best
    }
}

/// Weighted class counts; score is the negated weighted Gini impurity,
/// so improvements equal the weighted impurity decrease.
struct Gini<'a> {
    y: &'a [bool],
    w: &'a [f64],
}

impl Criterion for Gini<'_> {
    type Stat = [f64; 2];

    fn stat(&self, row: usize) -> [f64; 2] {
        if self.y[row] {
            [0.0, self.w[row]]
        } else {
            [self.w[row], 0.0]
        }
    }

    fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        [a[0] + b[0], a[1] + b[1]]
    }

    fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        [a[0] - b[0], a[1] - b[1]]
    }

    fn score(&self, s: [f64; 2]) -> f64 {
        let t = s[0] + s[1];
        if t <= 0.0 {
            return 0.0;
        }
        // -t * gini = -t * (1 - p0^2 - p1^2)
        -(t - (s[0] * s[0] + s[1] * s[1]) / t)
    }

    fn admissible(&self, s: [f64; 2]) -> bool {
        s[0] + s[1] > 0.0
    }

    fn leaf(&self, s: [f64; 2]) -> f64 {
        let t = s[0] + s[1];
        if t > 0.0 {
            s[1] / t
        } else {
            0.5
        }
    }

    fn is_pure(&self, s: [f64; 2]) -> bool {
        s[0] <= 0.0 || s[1] <= 0.0
    }
}

/// Gradient/hessian sums; score is `G^2 / (H + lambda)`.
struct Newton<'a> {
    g: &'a [f64],
    h: &'a [f64],
    lambda: f64,
    min_hessian: f64,
}

impl Criterion for Newton<'_> {
    type Stat = [f64; 2];

    fn stat(&self, row: usize) -> [f64; 2] {
        [self.g[row], self.h[row]]
    }

    fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        [a[0] + b[0], a[1] + b[1]]
    }

    fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        [a[0] - b[0], a[1] - b[1]]
    }

    fn score(&self, s: [f64; 2]) -> f64 {
        let d = s[1] + self.lambda;
        if d <= 0.0 {
            0.0
        } else {
            s[0] * s[0] / d
        }
    }

    fn admissible(&self, s: [f64; 2]) -> bool {
        s[1] >= self.min_hessian
    }

    fn leaf(&self, s: [f64; 2]) -> f64 {
        let d = s[1] + self.lambda;
        if d <= 0.0 || !d.is_finite() {
            0.0
        } else {
            s[0] / d
        }
    }

    fn is_pure(&self, _: [f64; 2]) -> bool {
        false
    }
}

pub struct TreeParams {
    pub max_depth: usize,
    pub min_rows_leaf: usize,
    pub max_features: usize,
}

/// CART classifier over `rows` (repeats allowed only through `w`).
/// Leaves hold the weighted fraction of the positive class.
pub fn fit_gini_tree(x: &Matrix, y: &[bool], w: &[f64], rows: &[usize], params: &TreeParams, rng: &mut Rng) -> Tree {
    let mut b = Builder {
        x,
        crit: Gini { y, w },
        max_depth: params.max_depth,
        min_rows_leaf: params.min_rows_leaf.max(1),
        max_features: params.max_features.max(1),
        rng: Some(rng),
        nodes: vec![],
        importances: vec![0.0; x.ncols()],
    };
    let mut rows = rows.to_vec();
    b.build(&mut rows, 0);
    Tree { nodes: b.nodes, importances: b.importances }
}

/// Regression tree with leaf value `sum(g) / (sum(h) + lambda)`.
pub fn fit_newton_tree(x: &Matrix, g: &[f64], h: &[f64], rows: &[usize], max_depth: usize, lambda: f64, min_hessian: f64) -> Tree {
    let mut b = Builder {
        x,
        crit: Newton { g, h, lambda, min_hessian },
        max_depth,
        min_rows_leaf: 1,
        max_features: x.ncols(),
        rng: None,
        nodes: vec![],
        importances: vec![0.0; x.ncols()],
    };
    let mut rows = rows.to_vec();
    b.build(&mut rows, 0);
    Tree { nodes: b.nodes, importances: b.importances }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn stump_separates() {
        let x = Matrix::column_vector(&[0.1, 0.2, 0.3, 0.7, 0.8, 0.9]);
        let y = [false, false, false, true, true, true];
        let w = [1.0; 6];
        let rows: Vec<usize> = (0..6).collect();
        let p = TreeParams { max_depth: 1, min_rows_leaf: 1, max_features: 1 };
        let t = fit_gini_tree(&x, &y, &w, &rows, &p, &mut seed::rng(0));
        assert_eq!(t.depth(), 1);
        let Node::Split { threshold, .. } = t.nodes[0] else { panic!() };
        assert!((threshold - 0.5).abs() < 1e-12);
        assert_eq!(t.predict_row(&[0.0]), 0.0);
        assert_eq!(t.predict_row(&[1.0]), 1.0);
        // parent impurity 6 * 0.5 = 3, children pure
        assert!((t.importances[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn newton_leaf_formula() {
        let x = Matrix::column_vector(&[0.0, 1.0]);
        let t = fit_newton_tree(&x, &[0.5, -0.5], &[0.25, 0.25], &[0, 1], 1, 0.0, 0.0);
        assert_eq!(t.predict_row(&[0.0]), 2.0);
        assert_eq!(t.predict_row(&[1.0]), -2.0);
    }
}
