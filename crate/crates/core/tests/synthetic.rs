use microevent::learners::Family;
use microevent::synthlab::{
    detectability_sweep, event_messages_per_step, generate_background, novelty_diversity, write_summary_csv, SweepConfig,
};
use microevent::runner::featurize::featurize;
use microevent::sentiment::Lexicon;
use microevent::stats::{permutation_test, roc_auc};
use microevent::synthlab::{instance_pools, synthetic_corpus, SyntheticConfig};
use microevent::textprep::Stopwords;
use microevent::topics::TopicsConfig;

fn small_sweep(fractions: Vec<f64>, estimators: Vec<Family>) -> SweepConfig {
    let mut c = SweepConfig::default();
    c.synthetic.fractions = fractions;
    c.synthetic.n_steps = 80;
    c.synthetic.messages_per_step = 20;
    c.synthetic.n_instances = 2;
    c.synthetic.background_vocabulary = 300;
    c.synthetic.seed = 3;
    c.estimators = estimators;
    c.control_cell = false;
    c.topics = TopicsConfig { k: Some(4), burn_in: 20, total_iterations: 40, fold_in_sweeps: 10, ..TopicsConfig::default() };
    c.evaluation.forest.n_trees = 30;
    c.evaluation.boosted.n_trees = 30;
    c
}

#[test]
fn novelty_of_a_corpus_with_itself_is_its_diversity() {
    let mut c = SweepConfig::default().synthetic;
    c.seed = 8;
    let posts: Vec<Vec<String>> = generate_background(&c, 400)
        .unwrap()
        .into_iter()
        .map(|m| m.split_whitespace().map(str::to_string).collect())
        .collect();
    let r = novelty_diversity(&posts, &posts, 100, 5, 1).unwrap();
    assert!((r.novelty - r.diversity_a).abs() < 0.01, "{r:?}");
    assert!(r.novelty > 0.5 && r.novelty <= 1.0);
}

#[test]
fn bagging_counts() {
    assert_eq!(event_messages_per_step(0.45, 60), 27);
    assert_eq!(event_messages_per_step(0.1, 60), 6);
    assert_eq!(event_messages_per_step(0.01, 60), 1);
    assert_eq!(event_messages_per_step(0.0, 60), 0);
    assert_eq!(event_messages_per_step(1.0, 60), 60);
    let mut c = SweepConfig::default().synthetic;
    c.n_steps = 10;
    c.positive_ratio = 0.25;
    assert_eq!(c.n_positive(), 2);
}

#[test]
fn empty_fraction_grid_is_rejected() {
    let c = small_sweep(vec![], vec![Family::Forest]);
    let e = detectability_sweep(&c).unwrap_err();
    assert!(e.to_string().contains("fraction grid is empty"), "{e}");
}

#[test]
fn saturated_signal_reaches_the_smallest_p_value() {
    let mut c = small_sweep(vec![1.0], Family::ALL.to_vec());
    c.synthetic.n_instances = 1;
    c.synthetic.n_steps = 120;
    c.topics = TopicsConfig { k: Some(10), burn_in: 50, total_iterations: 100, fold_in_sweeps: 20, ..TopicsConfig::default() };
    c.evaluation.n_perm = 1000;
    let r = detectability_sweep(&c).unwrap();
    assert_eq!(r.results.len(), 3);
    for cell in &r.results {
        assert!(cell.metric.is_some_and(|m| m > 0.75), "{cell:?}");
        assert_eq!(cell.p_value, Some(1.0 / 1001.0), "{cell:?}");
    }
}

/// With no event-related messages the labels carry no information, so a
/// two-sided rank test on a pooled feature rejects at about the nominal
/// rate.
#[test]
fn control_steps_are_indistinguishable_on_pooled_features() {
    let base = small_sweep(vec![0.0], vec![Family::Logistic]);
    let mut quiet = 0;
    for s in 0..10 {
        let syn = SyntheticConfig { seed: 100 + s, ..base.synthetic.clone() };
        let pools = instance_pools(&syn, 0.0).unwrap();
        let corpus = synthetic_corpus(&syn, &pools, 0.0).unwrap();
        let f = featurize(&corpus.messages, &corpus.dataset, &base.text, &base.topics, &Stopwords::default(), &Lexicon::default(), s).unwrap();
        let col = f.features.column_index("sentiment_compound").unwrap();
        let x = f.features.x.column(col);
        let stat = |y: &[bool], v: &[f64]| roc_auc(y, v).map(|a| (a - 0.5).abs());
        let p = permutation_test(&f.features.labels, &x, stat, 199, s).unwrap().p_value;
        quiet += usize::from(p > 0.05);
    }
    assert!(quiet >= 9, "{quiet}/10 seeds quiet");
}

#[test]
fn fixed_seed_gives_identical_summary() {
    let c = small_sweep(vec![0.3], vec![Family::Logistic]);
    let render = || {
        let mut buf = Vec::new();
        write_summary_csv(&detectability_sweep(&c).unwrap(), &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    };
    let a = render();
    assert_eq!(a, render());
    assert!(a.lines().count() >= 2);
}
