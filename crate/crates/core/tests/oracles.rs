mod common;

#[test]
fn statistical_routines_match_brute_force() {
    let c = common::check_statistical_oracles();
    assert!(c.ok, "{}", c.detail);
}

#[test]
fn irls_recovers_grouped_logits() {
    let c = common::check_irls();
    assert!(c.ok, "{}", c.detail);
}

#[test]
fn toy_coherence_matches_hand_computation() {
    let c = common::check_coherence();
    assert!(c.ok, "{}", c.detail);
}

#[test]
fn timegrid_fixtures() {
    let c = common::check_timegrid();
    assert!(c.ok, "{}", c.detail);
}

#[test]
fn holm_oracle_sanity() {
    // p = (0.01, 0.04, 0.03) at alpha 0.05: 0.03 > 0.05/2 stops the sequence.
    assert_eq!(common::holm_reference(&[0.01, 0.04, 0.03], 0.05), vec![true, false, false]);
    assert_eq!(common::holm_reference(&[0.01, 0.02, 0.04], 0.05), vec![true, true, true]);
}

#[test]
fn ap_oracle_sanity() {
    let y = [true, false, true, false];
    let s = [0.9, 0.8, 0.7, 0.1];
    // Precision 1 at recall 0.5, 2/3 at recall 1.
    assert!((common::ap_by_thresholds(&y, &s) - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-12);
}
