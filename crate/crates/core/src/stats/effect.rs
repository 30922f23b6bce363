use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub feature: String,
    pub delta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Two-sided confidence level after Bonferroni widening.
    pub level: f64,
}

/// Standard normal quantile.
pub fn z_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Two-sided normal tail probability of `|z|`.
pub fn normal_two_sided_p(z: f64) -> f64 {
    2.0 * Normal::standard().sf(z.abs())
}

/// `#(a > b) - #(a < b)` over all pairs, divided by `|a||b|`.
pub fn cliffs_delta_value(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0i64;
    for x in a {
        for y in b {
            s += match x.partial_cmp(y) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    s as f64 / (a.len() * b.len()) as f64
}

/// Cliff's consistent variance estimate of δ, floored at
/// `(1 - δ²) / (n m - 1)`.
pub fn cliffs_delta_variance(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let d = cliffs_delta_value(a, b);
    let dom = |x: f64, y: f64| -> f64 {
        match x.partial_cmp(&y) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Less) => -1.0,
            _ => 0.0,
        }
    };
    let floor = if n * m > 1 { (1.0 - d * d) / (n * m - 1) as f64 } else { 0.0 };
    if n < 2 || m < 2 {
        return floor;
    }
    let row: Vec<f64> = a.iter().map(|&x| b.iter().map(|&y| dom(x, y)).sum::<f64>() / m as f64).collect();
    let col: Vec<f64> = b.iter().map(|&y| a.iter().map(|&x| dom(x, y)).sum::<f64>() / n as f64).collect();
    let mut sq = 0.0;
    for &x in a {
        for &y in b {
            sq += (dom(x, y) - d).powi(2);
        }
    }
    let (nf, mf) = (n as f64, m as f64);
    let s2 = (mf * mf * row.iter().map(|v| (v - d).powi(2)).sum::<f64>()
        + nf * nf * col.iter().map(|v| (v - d).powi(2)).sum::<f64>()
        - sq)
        / (nf * mf * (nf - 1.0) * (mf - 1.0));
    s2.max(floor)
}

/// δ with an asymmetric normal-approximation CI at level `1 - alpha / m`.
pub fn cliffs_delta(feature: &str, a: &[f64], b: &[f64], alpha: f64, m: usize) -> Result<EffectSize> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("Cliff's delta needs two nonempty samples"));
    }
    let m = m.max(1);
    let d = cliffs_delta_value(a, b);
    let s2 = cliffs_delta_variance(a, b);
    let z = z_quantile(1.0 - alpha / (2.0 * m as f64));
    let denom = 1.0 - d * d + z * z * s2;
    let (lo, hi) = if denom <= 1e-15 {
        (d, d)
    } else {
        let centre = d - d * d * d;
        let half = z * s2.sqrt() * ((1.0 - d * d).powi(2) + z * z * s2).sqrt();
        ((centre - half) / denom, (centre + half) / denom)
    };
    Ok(EffectSize {
        feature: feature.to_string(),
        delta: d,
        ci_low: lo.clamp(-1.0, d),
        ci_high: hi.clamp(d, 1.0),
        level: 1.0 - alpha / m as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolmResult {
    pub significant: Vec<bool>,
    /// `alpha / (m - rank)` for each input position.
    pub thresholds: Vec<f64>,
}

/// Holm step-down: reject in ascending order while `p_(i) <= alpha / (m - i + 1)`.
pub fn holm_bonferroni(p_values: &[f64], alpha: f64) -> HolmResult {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut significant = vec![false; m];
    let mut thresholds = vec![0.0; m];
    let mut open = true;
    for (rank, &i) in order.iter().enumerate() {
        thresholds[i] = alpha / (m - rank) as f64;
        open = open && p_values[i] <= thresholds[i];
        significant[i] = open;
    }
    HolmResult { significant, thresholds }
}

pub fn bonferroni(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len() as f64;
    p_values.iter().map(|&p| p <= alpha / m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_examples() {
        assert_eq!(cliffs_delta_value(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]), -1.0);
        assert_eq!(cliffs_delta_value(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]), 0.0);
        assert_eq!(cliffs_delta_value(&[1.0, 3.0], &[2.0]), 0.0);
        let e = cliffs_delta("f", &[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], 0.05, 1).unwrap();
        assert!(e.ci_low <= e.delta && e.delta <= e.ci_high);
    }

    #[test]
    fn ci_brackets_delta_and_widens_with_m() {
        let a = [1.0, 4.0, 2.5, 3.0, 7.0, 0.5];
        let b = [2.0, 1.5, 0.2, 0.1, 3.5];
        let e1 = cliffs_delta("f", &a, &b, 0.05, 1).unwrap();
        let e5 = cliffs_delta("f", &a, &b, 0.05, 5).unwrap();
        assert!(e1.ci_low < e1.delta && e1.delta < e1.ci_high);
        assert!(e5.ci_low < e1.ci_low && e5.ci_high > e1.ci_high);
    }

    #[test]
    fn holm_examples() {
        let h = holm_bonferroni(&[0.01, 0.03, 0.04], 0.05);
        assert_eq!(h.significant, [true, false, false]);
        assert!((h.thresholds[0] - 0.05 / 3.0).abs() < 1e-15);
        assert_eq!(h.thresholds[1], 0.025);
        assert_eq!(h.thresholds[2], 0.05);
        assert_eq!(holm_bonferroni(&[0.2; 4], 0.05).significant, [false; 4]);
        assert_eq!(holm_bonferroni(&[0.04], 0.05).significant, [true]);
    }
}
