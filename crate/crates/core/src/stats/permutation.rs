use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub observed: f64,
    pub p_value: f64,
    pub n_perm: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub null: Vec<f64>,
}

/// Label-permutation test against frozen scores:
/// `p = (1 + #{null >= observed}) / (n_perm + 1)`. Permutation `r` shuffles
/// with seed `derive(seed, "permutation", r)`.
pub fn permutation_test<M>(y: &[bool], scores: &[f64], metric: M, n_perm: usize, seed: u64) -> Result<PermutationTest>
where
    M: Fn(&[bool], &[f64]) -> Result<f64> + Sync,
{
    if n_perm == 0 {
        return Err(Error::InvalidArgument("n_perm must be positive".into()));
    }
    let observed = metric(y, scores)?;
    let null = (0..n_perm)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::stage_rng(seed, "permutation", r as u64);
            let mut perm = y.to_vec();
            perm.shuffle(&mut rng);
            metric(&perm, scores)
        })
        .collect::<Result<Vec<f64>>>()?;
    // relative slack so that numerically equal statistics count as ties
    let bar = observed - 1e-12 * observed.abs().max(1.0);
    let hits = null.iter().filter(|&&v| v >= bar).count();
    Ok(PermutationTest { observed, p_value: (1 + hits) as f64 / (n_perm + 1) as f64, n_perm, null })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::metrics::pr_auc_mean;

    #[test]
    fn separating_scores_hit_the_floor() {
        let y: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let s: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let t = permutation_test(&y, &s, pr_auc_mean, 1000, 1).unwrap();
        assert_eq!(t.p_value, 1.0 / 1001.0);
    }

    #[test]
    fn constant_metric_gives_one() {
        let y = [true, false, true, false];
        let t = permutation_test(&y, &[0.5; 4], pr_auc_mean, 50, 1).unwrap();
        assert_eq!(t.p_value, 1.0);
    }
}
