//! Deterministic inputs shared by the benchmarks.

use microevent::seed::splitmix64;
use microevent::Matrix;

/// Uniform draw in `[0, 1)` from a counter-based stream.
fn unit(seed: u64, i: u64) -> f64 {
    (splitmix64(seed ^ i.wrapping_mul(0x9E37_79B9)) >> 11) as f64 / (1u64 << 53) as f64
}

/// `n` rows of `p` features; a quarter of the rows are positive and shift
/// the first two features.
pub fn classification_data(n: usize, p: usize, seed: u64) -> (Matrix, Vec<bool>) {
    let y: Vec<bool> = (0..n).map(|r| r % 4 == 0).collect();
    let data = (0..n * p)
        .map(|i| {
            let (r, c) = (i / p, i % p);
            let shift = if y[r] && c < 2 { 0.8 } else { 0.0 };
            shift + unit(seed, i as u64) * 2.0 - 1.0
        })
        .collect();
    (Matrix::from_vec(n, p, data).expect("shape"), y)
}

/// Documents drawn from `k` disjoint word blocks of a `v`-word vocabulary.
pub fn topic_corpus(n_docs: usize, v: usize, k: usize, len: usize, seed: u64) -> Vec<Vec<u32>> {
    let block = v / k;
    (0..n_docs)
        .map(|d| {
            let t = d % k;
            (0..len).map(|j| (t * block + (unit(seed, (d * len + j) as u64) * block as f64) as usize) as u32).collect()
        })
        .collect()
}
