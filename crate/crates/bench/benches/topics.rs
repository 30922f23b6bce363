use criterion::{criterion_group, criterion_main, Criterion};
use microevent::topics::{coherence_cv_for_topics, train_lda_traced, LdaConfig};
use microevent_bench::topic_corpus;
use std::hint::black_box;

fn topics(c: &mut Criterion) {
    let docs = topic_corpus(500, 1000, 10, 40, 1);
    let config = LdaConfig { k: 10, alpha: None, beta: 0.01, burn_in: 20, total_iterations: 50, seed: 2 };
    let mut group = c.benchmark_group("lda");
    group.sample_size(10);
    group.bench_function("gibbs_50_sweeps_500_docs", |b| b.iter(|| train_lda_traced(black_box(&docs), 1000, &config)));
    let (model, _) = train_lda_traced(&docs, 1000, &config).expect("lda");
    group.bench_function("fold_in_500_docs", |b| b.iter(|| model.infer_theta_batch(black_box(&docs), 20, 3)));
    group.finish();

    let top: Vec<Vec<u32>> = (0..10).map(|t| model.top_word_ids(t, 10)).collect();
    let reference: Vec<Vec<Option<u32>>> = docs.iter().map(|d| d.iter().map(|&w| Some(w)).collect()).collect();
    c.bench_function("coherence_cv_10_topics", |b| b.iter(|| coherence_cv_for_topics(black_box(&top), &reference, 10, 110)));
}

criterion_group!(benches, topics);
criterion_main!(benches);
