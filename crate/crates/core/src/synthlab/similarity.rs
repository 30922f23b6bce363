use std::collections::HashMap;

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{mean, sample_sd};
use crate::seed::{self, Rng};

pub const HISTOGRAM_BINS: usize = 64;
pub const KL_EPSILON: f64 = 1e-10;

/// `|A ∩ B| / |A ∪ B|` of two sorted, deduplicated id lists; 1 when both
/// are empty.
fn jaccard_sorted(a: &[u32], b: &[u32]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Sorted, deduplicated ids of `post`, assigning new ids as needed.
fn intern<S: AsRef<str>>(ids: &mut HashMap<String, u32>, post: &[S]) -> Vec<u32> {
    let mut v: Vec<u32> = post
        .iter()
        .map(|t| {
            let n = ids.len() as u32;
            *ids.entry(t.as_ref().to_string()).or_insert(n)
        })
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

pub fn jaccard_similarity<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    let mut ids = HashMap::new();
    let (sa, sb) = (intern(&mut ids, a), intern(&mut ids, b));
    jaccard_sorted(&sa, &sb)
}

/// `Σ p ln(p / q)` after adding `epsilon` to every bin of both histograms
/// and renormalizing.
pub fn kl_divergence(p: &[f64], q: &[f64], epsilon: f64) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::InvalidArgument("histograms must share a nonempty binning".into()));
    }
    if p.iter().chain(q).any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidArgument("histogram masses must be nonnegative".into()));
    }
    let norm = |h: &[f64]| -> Vec<f64> {
        let s: f64 = h.iter().map(|v| v + epsilon).sum();
        h.iter().map(|v| (v + epsilon) / s).collect()
    };
    let (p, q) = (norm(p), norm(q));
    Ok(p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum::<f64>().max(0.0))
}

fn histogram(values: &[f64]) -> Vec<f64> {
    let mut h = vec![0.0; HISTOGRAM_BINS];
    for &v in values {
        let b = ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        h[b] += 1.0;
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// Mean pairwise `1 - Jaccard` between samples of A and B.
    pub novelty: f64,
    pub novelty_sd: f64,
    pub diversity_a: f64,
    pub diversity_a_sd: f64,
    pub diversity_b: f64,
    pub diversity_b_sd: f64,
    /// KL divergence of the A-B distance histogram from the B-B one.
    pub kl: f64,
    pub kl_sd: f64,
    pub sample_size: usize,
    pub repeats: usize,
    /// Set when a corpus had fewer than `2 * sample_size` posts and was
    /// sampled with replacement.
    pub with_replacement: bool,
}

fn sample_two(rng: &mut Rng, n: usize, s: usize) -> (Vec<usize>, Vec<usize>) {
    if n >= 2 * s {
        let idx = index::sample(rng, n, 2 * s).into_vec();
        (idx[..s].to_vec(), idx[s..].to_vec())
    } else {
        let mut draw = || (0..s).map(|_| rng.random_range(0..n)).collect::<Vec<_>>();
        (draw(), draw())
    }
}

fn refs(v: &[Vec<u32>]) -> Vec<&[u32]> {
    v.iter().map(Vec::as_slice).collect()
}

fn distances(a: &[&[u32]], b: &[&[u32]]) -> Vec<f64> {
    a.iter().flat_map(|x| b.iter().map(move |y| 1.0 - jaccard_sorted(x, y))).collect()
}

/// Novelty between corpora A and B, diversity within each, and the KL
/// divergence between the cross- and within-B distance distributions,
/// each averaged over `repeats` draws of `sample_size` posts. Repeat `r`
/// samples with `derive(seed, "similarity", r)`.
pub fn novelty_diversity<S: AsRef<str> + Sync>(
    corpus_a: &[Vec<S>],
    corpus_b: &[Vec<S>],
    sample_size: usize,
    repeats: usize,
    seed: u64,
) -> Result<SimilarityReport> {
    if corpus_a.is_empty() || corpus_b.is_empty() || sample_size == 0 || repeats == 0 {
        return Err(Error::InvalidArgument("novelty_diversity needs nonempty corpora, sample size and repeats".into()));
    }
    let mut ids = HashMap::new();
    let a: Vec<Vec<u32>> = corpus_a.iter().map(|p| intern(&mut ids, p)).collect();
    let b: Vec<Vec<u32>> = corpus_b.iter().map(|p| intern(&mut ids, p)).collect();
    let with_replacement = a.len() < 2 * sample_size || b.len() < 2 * sample_size;
    let per_repeat: Vec<[f64; 4]> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::stage_rng(seed, "similarity", r as u64);
            let (a1, a2) = sample_two(&mut rng, a.len(), sample_size);
            let (b1, b2) = sample_two(&mut rng, b.len(), sample_size);
            let pick = |c: &[Vec<u32>], idx: &[usize]| -> Vec<Vec<u32>> { idx.iter().map(|&i| c[i].clone()).collect() };
            let (a1, a2, b1, b2) = (pick(&a, &a1), pick(&a, &a2), pick(&b, &b1), pick(&b, &b2));
            let cross = distances(&refs(&a1), &refs(&b1));
            let within_a = distances(&refs(&a1), &refs(&a2));
            let within_b = distances(&refs(&b1), &refs(&b2));
            let kl = kl_divergence(&histogram(&cross), &histogram(&within_b), KL_EPSILON).expect("shared binning");
            [mean(&cross), mean(&within_a), mean(&within_b), kl]
        })
        .collect();
    let col = |i: usize| -> Vec<f64> { per_repeat.iter().map(|r| r[i]).collect() };
    let (n, da, db, kl) = (col(0), col(1), col(2), col(3));
    Ok(SimilarityReport {
        novelty: mean(&n),
        novelty_sd: sample_sd(&n),
        diversity_a: mean(&da),
        diversity_a_sd: sample_sd(&da),
        diversity_b: mean(&db),
        diversity_b_sd: sample_sd(&db),
        kl: mean(&kl),
        kl_sd: sample_sd(&kl),
        sample_size,
        repeats,
        with_replacement,
    })
}
