mod common;

#[test]
fn two_topic_corpus_is_recovered() {
    for seed in [1, 2, 3] {
        let rate = common::recovery_rate(seed).unwrap();
        assert!(rate >= 0.95, "seed {seed}: {rate}");
    }
}

#[test]
fn sampler_matches_enumerated_posterior() {
    let exact = common::gibbs_exact(&[0, 1], 2, 2, 0.5, 0.5);
    let total: f64 = exact.values().sum();
    assert!((total - 1.0).abs() < 1e-12);
    let emp = common::gibbs_empirical(&[0, 1], 2, 2, 0.5, 0.5, 200_000, 5).unwrap();
    for (z, p) in &exact {
        let q = emp.get(z).copied().unwrap_or(0.0);
        assert!((p - q).abs() <= 0.02, "{z:?}: exact {p}, sampled {q}");
    }
}

#[test]
fn sampler_matches_enumeration_on_three_tokens() {
    let exact = common::gibbs_exact(&[0, 1, 0], 2, 2, 0.3, 0.2);
    let emp = common::gibbs_empirical(&[0, 1, 0], 2, 2, 0.3, 0.2, 200_000, 9).unwrap();
    for (z, p) in &exact {
        let q = emp.get(z).copied().unwrap_or(0.0);
        assert!((p - q).abs() <= 0.02, "{z:?}: exact {p}, sampled {q}");
    }
}
