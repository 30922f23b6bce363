mod common;

use microevent::features::{Standardizer, TukeyCapper};
use microevent::seed;
use microevent::stats::effect::cliffs_delta_value;
use microevent::stats::{holm_bonferroni, pr_auc, permutation_test};
use microevent::synthlab::{jaccard_similarity, kl_divergence, KL_EPSILON};
use microevent::timegrid::Partition;
use microevent::tuning::time_series_split;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn split_never_validates_before_training(folds in 1usize..10, extra in 0usize..400) {
        let n = folds + 1 + extra;
        let plan = time_series_split(n, folds).unwrap();
        prop_assert_eq!(plan.n_folds(), folds);
        for f in &plan.folds {
            prop_assert!(f.train.iter().max() < f.validation.iter().min());
        }
        let covered: usize = plan.folds.last().map(|f| f.train.len() + f.validation.len()).unwrap();
        prop_assert_eq!(covered, n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transformers_ignore_test_rows(seed_value in any::<u64>()) {
        let clean = common::random_features(40, 20, seed_value);
        let mut dirty = clean.clone();
        common::scramble_test_rows(&mut dirty, seed_value ^ 1);
        let (a, b) = (clean.partition(Partition::Train), dirty.partition(Partition::Train));
        prop_assert_eq!(Standardizer::fit(&a).unwrap(), Standardizer::fit(&b).unwrap());
        prop_assert_eq!(TukeyCapper::fit(&a).unwrap(), TukeyCapper::fit(&b).unwrap());
    }

    #[test]
    fn kl_is_nonnegative(p in prop::collection::vec(0.0f64..50.0, 1..30), q_seed in any::<u64>()) {
        let mut rng = seed::rng(q_seed);
        let q: Vec<f64> = p.iter().map(|_| rng.random::<f64>() * 50.0).collect();
        let kl = kl_divergence(&p, &q, KL_EPSILON).unwrap();
        prop_assert!(kl >= 0.0);
        prop_assert!(kl_divergence(&p, &p, KL_EPSILON).unwrap().abs() < 1e-12);
    }

    #[test]
    fn jaccard_is_symmetric_and_bounded(
        a in prop::collection::vec("[a-e]{1,2}", 0..12),
        b in prop::collection::vec("[a-e]{1,2}", 0..12),
    ) {
        let ab = jaccard_similarity(&a, &b);
        prop_assert_eq!(ab, jaccard_similarity(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        if !a.is_empty() {
            prop_assert_eq!(jaccard_similarity(&a, &a), 1.0);
        }
    }

    #[test]
    fn cliffs_delta_is_antisymmetric(
        a in prop::collection::vec(-5i32..5, 1..20),
        b in prop::collection::vec(-5i32..5, 1..20),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let d = cliffs_delta_value(&a, &b);
        prop_assert_eq!(d, -cliffs_delta_value(&b, &a));
        prop_assert_eq!(d, common::cliff_brute(&a, &b));
    }

    #[test]
    fn holm_matches_adjusted_p(p in prop::collection::vec(0.0f64..0.2, 1..15)) {
        prop_assert_eq!(holm_bonferroni(&p, 0.05).significant, common::holm_reference(&p, 0.05));
    }

    #[test]
    fn average_precision_matches_threshold_enumeration(
        pairs in prop::collection::vec((any::<bool>(), 0u8..8), 2..40),
    ) {
        let y: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        prop_assume!(y.iter().any(|&v| v) && y.iter().any(|&v| !v));
        let s: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        let got = pr_auc(&y, &s, true).unwrap();
        prop_assert!((got - common::ap_by_thresholds(&y, &s)).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&got));
    }
}

/// Under exchangeable labels the permutation p-value is uniform on the
/// grid `{1, ..., n+1} / (n+1)`; a one-sample KS test should not reject.
#[test]
fn permutation_p_values_are_uniform_under_null() {
    let mut rng = seed::rng(77);
    let mut ps: Vec<f64> = (0..400)
        .map(|r| {
            let y: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
            let s: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
            permutation_test(&y, &s, |y, s| pr_auc(y, s, true), 99, r).unwrap().p_value
        })
        .collect();
    ps.sort_by(f64::total_cmp);
    let n = ps.len() as f64;
    let d = ps
        .iter()
        .enumerate()
        .map(|(i, &p)| ((i as f64 + 1.0) / n - p).abs().max((p - i as f64 / n).abs()))
        .fold(0.0, f64::max);
    // Critical value at 1% is 1.63 / sqrt(n); the discrete grid adds 1/100.
    assert!(d < 1.63 / n.sqrt() + 0.01, "KS distance {d}");
}

#[test]
fn training_pipeline_ignores_test_rows() {
    let c = common::check_leakage();
    assert!(c.ok, "{}", c.detail);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn control_windows_never_hold_events(
        days in prop::collection::vec((0u32..90, 0usize..3), 0..12),
        target in 0usize..3,
        event_based in any::<bool>(),
    ) {
        use microevent::corpus::EventKind;
        use microevent::timegrid::{build_calendar_week_steps, build_event_based_steps};
        let kinds = [EventKind::Patch, EventKind::Minor, EventKind::Major];
        let msgs = common::daily_messages(91);
        let events: Vec<_> = days.iter().map(|&(d, k)| common::event(d, kinds[k])).collect();
        let steps = if event_based {
            build_event_based_steps(&msgs, &events, kinds[target]).unwrap()
        } else {
            build_calendar_week_steps(&msgs, &events, kinds[target]).unwrap()
        };
        for s in steps.iter().filter(|s| !s.label.is_event()) {
            prop_assert!(days.iter().all(|&(d, _)| !s.contains(common::day(d))), "{:?}", s);
        }
        for s in &steps {
            prop_assert_eq!((s.end_day - s.start_day).num_days(), 6);
        }
    }
}
