//! Master-seed fan-out.
//!
//! Every stochastic stage draws its seed as
//! `splitmix64(master ^ fnv1a(stage)) + counter` passed through one more
//! splitmix64 round, so a single number reproduces a whole run and
//! distinct stages or replicates never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Seed for replicate `counter` of `stage` under `master`.
pub fn derive(master: u64, stage: &str, counter: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(stage)).wrapping_add(counter))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stage_rng(master: u64, stage: &str, counter: u64) -> Rng {
    rng(derive(master, stage, counter))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stages_and_counters_differ() {
        let a = derive(7, "lda", 0);
        assert_ne!(a, derive(7, "lda", 1));
        assert_ne!(a, derive(7, "forest", 0));
        assert_ne!(a, derive(8, "lda", 0));
        assert_eq!(a, derive(7, "lda", 0));
    }
}
