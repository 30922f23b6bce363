//! Independent reference implementations and fixtures shared by the
//! integration tests and the acceptance target.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, TimeZone, Utc};
use microevent::corpus::{EventKind, Message, ReleaseEvent};
use microevent::learners::{fit_logistic, LogisticConfig};
use microevent::seed;
use microevent::stats::diagnostics::{pseudo_r2, tjur};
use microevent::stats::effect::cliffs_delta_value;
use microevent::stats::{holm_bonferroni, pr_auc};
use microevent::timegrid::{build_calendar_week_steps, build_event_based_steps, StepLabel, TimeStep};
use microevent::topics::{coherence_cv_for_topics, GibbsState};
use microevent::{Matrix, Result};
use rand::Rng;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/fixture")
}

/// Result of one acceptance check.
pub struct Check {
    pub ok: bool,
    pub detail: String,
}

impl Check {
    pub fn new(ok: bool, detail: impl Into<String>) -> Self {
        Check { ok, detail: detail.into() }
    }
}

// ---------------------------------------------------------------- oracles

/// Cliff's delta by explicit pair counting.
pub fn cliff_brute(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0i64;
    for x in a {
        for y in b {
            s += match x.partial_cmp(y).unwrap() {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => 0,
            };
        }
    }
    s as f64 / (a.len() * b.len()) as f64
}

/// Holm decisions through step-down adjusted p-values:
/// `p_adj(i) = max_{j <= i} min(1, (m - j + 1) p_(j))`, reject iff `<= alpha`.
pub fn holm_reference(p: &[f64], alpha: f64) -> Vec<bool> {
    let m = p.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap().then(a.cmp(&b)));
    let mut out = vec![false; m];
    let mut running = 0.0f64;
    for (rank, &i) in idx.iter().enumerate() {
        running = running.max(((m - rank) as f64 * p[i]).min(1.0));
        out[i] = running <= alpha;
    }
    out
}

/// Average precision by recomputing precision and recall from scratch at
/// every distinct threshold.
pub fn ap_by_thresholds(y: &[bool], s: &[f64]) -> f64 {
    let mut thresholds: Vec<f64> = s.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let pos = y.iter().filter(|&&v| v).count() as f64;
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in thresholds {
        let tp = y.iter().zip(s).filter(|(&l, &v)| l && v >= t).count() as f64;
        let predicted = s.iter().filter(|&&v| v >= t).count() as f64;
        let recall = tp / pos;
        ap += (recall - prev_recall) * (tp / predicted);
        prev_recall = recall;
    }
    ap
}

/// Joint collapsed posterior of the assignments of a single document,
/// enumerated over all `k^len` states.
pub fn gibbs_exact(doc: &[usize], v: usize, k: usize, alpha: f64, beta: f64) -> HashMap<Vec<usize>, f64> {
    let n = doc.len();
    let mut out = HashMap::new();
    let mut total = 0.0;
    for code in 0..k.pow(n as u32) {
        let z: Vec<usize> = (0..n).map(|i| (code / k.pow(i as u32)) % k).collect();
        let mut ndk = vec![0usize; k];
        let mut nkw = vec![vec![0usize; v]; k];
        for (&t, &w) in z.iter().zip(doc) {
            ndk[t] += 1;
            nkw[t][w] += 1;
        }
        // Rising factorials stand in for the Gamma ratios.
        let rise = |a: f64, n: usize| (0..n).map(|i| a + i as f64).product::<f64>();
        let mut p = 1.0;
        for t in 0..k {
            p *= rise(alpha, ndk[t]);
            let nk: usize = nkw[t].iter().sum();
            for &c in &nkw[t] {
                p *= rise(beta, c);
            }
            p /= rise(v as f64 * beta, nk);
        }
        total += p;
        out.insert(z, p);
    }
    out.values_mut().for_each(|p| *p /= total);
    out
}

/// Empirical assignment frequencies from the sampler on one document.
pub fn gibbs_empirical(doc: &[u32], v: usize, k: usize, alpha: f64, beta: f64, sweeps: usize, seed_value: u64) -> Result<HashMap<Vec<usize>, f64>> {
    let mut rng = seed::rng(seed_value);
    let mut state = GibbsState::new(vec![doc.to_vec()], v, k, alpha, beta, &mut rng)?;
    let mut counts: HashMap<Vec<usize>, f64> = HashMap::new();
    for _ in 0..100 {
        state.sweep(&mut rng);
    }
    for _ in 0..sweeps {
        state.sweep(&mut rng);
        let z: Vec<usize> = state.assignments()[0].iter().map(|&t| t as usize).collect();
        *counts.entry(z).or_default() += 1.0;
    }
    counts.values_mut().for_each(|c| *c /= sweeps as f64);
    Ok(counts)
}

/// C_V by direct window enumeration: boolean windows, NPMI with additive
/// epsilon, one-set context vectors, cosine.
pub fn cv_reference(topics: &[Vec<u32>], docs: &[Vec<u32>], window: usize) -> Vec<f64> {
    const EPS: f64 = 1e-12;
    let mut windows: Vec<Vec<u32>> = Vec::new();
    for d in docs {
        if d.len() <= window {
            windows.push(d.clone());
        } else {
            for s in 0..=d.len() - window {
                windows.push(d[s..s + window].to_vec());
            }
        }
    }
    let n = windows.len() as f64;
    let p1 = |w: u32| windows.iter().filter(|win| win.contains(&w)).count() as f64 / n;
    let p2 = |a: u32, b: u32| windows.iter().filter(|win| win.contains(&a) && win.contains(&b)).count() as f64 / n;
    let npmi = |a: u32, b: u32| {
        let pab = p2(a, b);
        let denom = -(pab + EPS).ln();
        if denom.abs() < 1e-9 {
            1.0
        } else {
            ((pab + EPS) / (p1(a) * p1(b))).ln() / denom
        }
    };
    topics
        .iter()
        .map(|top| {
            let vecs: Vec<Vec<f64>> = top.iter().map(|&a| top.iter().map(|&b| npmi(a, b)).collect()).collect();
            let set: Vec<f64> = (0..top.len()).map(|j| vecs.iter().map(|v| v[j]).sum()).collect();
            let cos = |u: &[f64], w: &[f64]| {
                let dot: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
                dot / (u.iter().map(|a| a * a).sum::<f64>().sqrt() * w.iter().map(|a| a * a).sum::<f64>().sqrt())
            };
            vecs.iter().map(|v| cos(v, &set)).sum::<f64>() / vecs.len() as f64
        })
        .collect()
}

// ------------------------------------------------------- criterion checks

pub fn check_statistical_oracles() -> Check {
    let mut rng = seed::rng(11);
    let mut failures = Vec::new();
    for i in 0..100 {
        let n = rng.random_range(1..15);
        let m = rng.random_range(1..15);
        let a: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..6))).collect();
        let b: Vec<f64> = (0..m).map(|_| f64::from(rng.random_range(0..6))).collect();
        if cliffs_delta_value(&a, &b) != cliff_brute(&a, &b) {
            failures.push(format!("cliff case {i}"));
        }
    }
    for i in 0..50 {
        let m = rng.random_range(1..12);
        let p: Vec<f64> = (0..m).map(|_| rng.random::<f64>().powi(3)).collect();
        if holm_bonferroni(&p, 0.05).significant != holm_reference(&p, 0.05) {
            failures.push(format!("holm case {i}"));
        }
    }
    for i in 0..100 {
        let n = rng.random_range(2..40);
        let mut y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        y[0] = true;
        y[1] = false;
        let s: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 10.0).round() / 10.0).collect();
        let got = pr_auc(&y, &s, true).unwrap();
        if (got - ap_by_thresholds(&y, &s)).abs() > 1e-9 {
            failures.push(format!("pr-auc case {i}"));
        }
    }
    let mut worst_gap = f64::INFINITY;
    for i in 0..20 {
        let n = 80;
        let x: Vec<f64> = (0..n * 2).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let xm = Matrix::from_vec(n, 2, x).unwrap();
        let y: Vec<bool> = (0..n).map(|r| rng.random::<f64>() < 1.0 / (1.0 + (-(xm.get(r, 0) - 0.5 * xm.get(r, 1))).exp())).collect();
        let (Ok(model), Ok(null)) = (fit_logistic(&xm, &y, &LogisticConfig::default()), fit_logistic(&Matrix::zeros(n, 0), &y, &LogisticConfig::default())) else {
            failures.push(format!("fit {i}"));
            continue;
        };
        let p = model.predict_proba(&xm).unwrap();
        let r2 = pseudo_r2(model.log_likelihood, null.log_likelihood, n, 2, &y, &p);
        worst_gap = worst_gap.min(r2.nagelkerke - r2.cox_snell);
        let perfect: Vec<f64> = y.iter().map(|&b| f64::from(u8::from(b))).collect();
        let p0 = null.predict_proba(&Matrix::zeros(n, 0)).unwrap();
        let r0 = pseudo_r2(null.log_likelihood, null.log_likelihood, n, 0, &y, &p0);
        if (tjur(&y, &perfect) - 1.0).abs() > 1e-12 || r0.tjur.abs() > 1e-12 || r0.cox_snell.abs() > 1e-12 || r0.nagelkerke.abs() > 1e-12 {
            failures.push(format!("pseudo-r2 identity {i}"));
        }
        if r2.nagelkerke < r2.cox_snell {
            failures.push(format!("nagelkerke < cox-snell {i}"));
        }
    }
    Check::new(failures.is_empty(), if failures.is_empty() { format!("min(nagelkerke - cox_snell) = {worst_gap:.3e}") } else { failures.join(", ") })
}

/// Two groups of 50 rows at x = 0 and x = 1 with 10 and 40 events.
pub fn grouped_fixture() -> (Matrix, Vec<bool>) {
    let mut x = vec![];
    let mut y = vec![];
    for (xv, pos) in [(0.0, 10), (1.0, 40)] {
        for i in 0..50 {
            x.push(xv);
            y.push(i < pos);
        }
    }
    (Matrix::column_vector(&x), y)
}

pub fn check_irls() -> Check {
    let (x, y) = grouped_fixture();
    let m = match fit_logistic(&x, &y, &LogisticConfig::default()) {
        Ok(m) => m,
        Err(e) => return Check::new(false, e.to_string()),
    };
    // logit(0.2) and logit(0.8) - logit(0.2)
    let b0 = (0.2f64 / 0.8).ln();
    let b1 = (0.8f64 / 0.2).ln() - b0;
    let close = (m.coefficients[0] - b0).abs() < 1e-4 && (m.coefficients[1] - b1).abs() < 1e-4;
    let monotone = m.ll_history.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let sep_x: Vec<f64> = (0..20).map(|i| if i < 10 { -1.0 - i as f64 * 0.1 } else { 1.0 + i as f64 * 0.1 }).collect();
    let sep_y: Vec<bool> = (0..20).map(|i| i >= 10).collect();
    let separation = matches!(
        fit_logistic(&Matrix::column_vector(&sep_x), &sep_y, &LogisticConfig::default()),
        Err(microevent::Error::QuasiSeparation { .. })
    );
    Check::new(
        close && monotone && separation,
        format!(
            "beta = ({:.6}, {:.6}), LL monotone: {monotone}, separation detected: {separation}",
            m.coefficients[0], m.coefficients[1]
        ),
    )
}

/// 200 documents of 30 tokens, alternating between two disjoint 20-word
/// vocabularies.
pub fn recovery_corpus(seed_value: u64) -> (Vec<Vec<u32>>, Vec<usize>) {
    let mut rng = seed::rng(seed_value);
    let mut docs = Vec::new();
    let mut truth = Vec::new();
    for d in 0..200 {
        let t = d % 2;
        docs.push((0..30).map(|_| (t * 20 + rng.random_range(0..20)) as u32).collect());
        truth.push(t);
    }
    (docs, truth)
}

/// Fraction of documents with θ ≥ 0.9 on the topic matched to their true
/// vocabulary.
pub fn recovery_rate(seed_value: u64) -> Result<f64> {
    use microevent::topics::{train_lda_traced, LdaConfig};
    let (docs, truth) = recovery_corpus(seed_value);
    let config = LdaConfig { k: 2, alpha: Some(0.1), beta: 0.01, burn_in: 100, total_iterations: 300, seed: seed_value };
    let (model, _) = train_lda_traced(&docs, 40, &config)?;
    // Topic matched to vocabulary 0 is the one putting more mass on word 0..20.
    let mass0: f64 = (0..20).map(|w| model.phi(0, w)).sum();
    let topic_of = |t: usize| if mass0 > 0.5 { t } else { 1 - t };
    let thetas = model.infer_theta_batch(&docs, 50, seed_value);
    let good = thetas.iter().zip(&truth).filter(|(th, &t)| th[topic_of(t)] >= 0.9).count();
    Ok(good as f64 / docs.len() as f64)
}

pub fn check_lda() -> Check {
    let mut details = Vec::new();
    let mut ok = true;
    for s in [1, 2, 3] {
        match recovery_rate(s) {
            Ok(r) => {
                ok &= r >= 0.95;
                details.push(format!("seed {s}: {:.3}", r));
            }
            Err(e) => {
                ok = false;
                details.push(e.to_string());
            }
        }
    }
    let exact = gibbs_exact(&[0, 1], 2, 2, 0.5, 0.5);
    let emp = gibbs_empirical(&[0, 1], 2, 2, 0.5, 0.5, 200_000, 5).unwrap();
    let gap = exact.iter().map(|(z, p)| (p - emp.get(z).copied().unwrap_or(0.0)).abs()).fold(0.0, f64::max);
    ok &= gap <= 0.02;
    details.push(format!("max |Gibbs - exact| = {gap:.4}"));
    Check::new(ok, details.join(", "))
}

/// Three one-window documents; `a` and `b` co-occur in all of them, `c`
/// and `d` never meet.
pub fn toy_coherence_corpus() -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
    let (a, b, c, d, e) = (0, 1, 2, 3, 4);
    let docs = vec![vec![a, b, c], vec![a, b, d], vec![a, b, e]];
    (docs, vec![vec![a, b], vec![c, d]])
}

pub fn check_coherence() -> Check {
    let (docs, topics) = toy_coherence_corpus();
    let reference: Vec<Vec<Option<u32>>> = docs.iter().map(|d| d.iter().map(|&w| Some(w)).collect()).collect();
    let got = coherence_cv_for_topics(&topics, &reference, 2, 110).unwrap();
    let want = cv_reference(&topics, &docs, 110);
    let gap = got.per_topic.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ok = gap <= 1e-6 && (got.per_topic[0] - 1.0).abs() <= 1e-6 && got.per_topic[1] < 0.3 && got.per_topic[0] > got.per_topic[1];
    Check::new(ok, format!("per-topic {:?} vs oracle {:?}", got.per_topic, want))
}

// --------------------------------------------------------------- timegrid

pub fn day(d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 1, 1).unwrap() + chrono::Duration::days(i64::from(d))
}

/// Two messages on each of days `0..n` counted from Monday 2024-01-01.
pub fn daily_messages(n: u32) -> Vec<Message> {
    (0..n)
        .flat_map(|d| {
            (0..2).map(move |i| Message {
                id: format!("d{d:03}m{i}"),
                timestamp: Utc.from_utc_datetime(&day(d).and_hms_opt(8 + i, 0, 0).unwrap()),
                body_raw: String::new(),
                tags: vec![],
                packages: Default::default(),
            })
        })
        .collect()
}

pub fn event(d: u32, kind: EventKind) -> ReleaseEvent {
    ReleaseEvent {
        package: "p".into(),
        version: format!("{d}.0.0"),
        timestamp: Utc.from_utc_datetime(&day(d).and_hms_opt(12, 0, 0).unwrap()),
        kind,
    }
}

fn window(s: &TimeStep) -> (NaiveDate, NaiveDate) {
    (s.start_day, s.end_day)
}

pub fn check_timegrid() -> Check {
    let mut failures = Vec::new();
    let msgs = daily_messages(35);
    let mut expect = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };
    // Calendar weeks: minor + patch in week 0, nothing in week 1, major in week 2.
    let events = [event(1, EventKind::Minor), event(3, EventKind::Patch), event(16, EventKind::Major)];
    let steps = build_calendar_week_steps(&msgs, &events, EventKind::Minor).unwrap();
    let find = |d: u32| steps.iter().find(|s| s.start_day == day(d));
    expect(find(0).is_some_and(|s| s.label == StepLabel::Event(EventKind::Minor) && s.end_day == day(6)), "minor+patch week is minor");
    expect(find(7).is_some_and(|s| s.label == StepLabel::Control && s.message_ids.len() == 14), "event-free week is control");
    expect(find(14).is_none(), "major week excluded for minor target");

    // Event-based: overlap, second-week control, zero events.
    let ev = [event(10, EventKind::Minor), event(13, EventKind::Minor)];
    let steps = build_event_based_steps(&msgs, &ev, EventKind::Minor).unwrap();
    let pos: Vec<&TimeStep> = steps.iter().filter(|s| s.label.is_event()).collect();
    let shared = pos.len() == 2 && pos[0].message_ids.iter().filter(|m| pos[1].message_ids.contains(m)).count() == 8;
    expect(pos.len() == 2 && window(pos[0]) == (day(10), day(16)) && window(pos[1]) == (day(13), day(19)) && shared, "overlapping steps share days 13-16");

    let msgs40 = daily_messages(40);
    let ev = [event(19, EventKind::Patch)];
    let steps = build_event_based_steps(&msgs40, &ev, EventKind::Minor).unwrap();
    let controls: Vec<(NaiveDate, NaiveDate)> = steps.iter().filter(|s| !s.label.is_event()).map(window).collect();
    expect(controls.contains(&(day(27), day(33))) && !controls.iter().any(|&(s, _)| s >= day(20) && s < day(27)), "second week of 20-33 is control");

    let steps = build_event_based_steps(&msgs, &[], EventKind::Minor).unwrap();
    let w: Vec<(NaiveDate, NaiveDate)> = steps.iter().map(window).collect();
    expect(w == [(day(7), day(13)), (day(21), day(27))] && steps.iter().all(|s| !s.label.is_event()), "zero events: a control every 14 days");
    Check::new(failures.is_empty(), if failures.is_empty() { "6 fixtures reproduced".to_string() } else { failures.join("; ") })
}

// ---------------------------------------------------------------- leakage

/// Random train/test feature matrix with a weak signal in column 0.
pub fn random_features(n_train: usize, n_test: usize, seed_value: u64) -> microevent::features::FeatureMatrix {
    use microevent::features::FeatureMatrix;
    use microevent::timegrid::Partition;
    let mut rng = seed::rng(seed_value);
    let n = n_train + n_test;
    let cols = 4;
    let labels: Vec<bool> = (0..n).map(|i| i % 4 == 0).collect();
    let data: Vec<f64> = (0..n * cols)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let shift = if c == 0 && labels[r] { 1.5 } else { 0.0 };
            shift + rng.random::<f64>() * 2.0 - 1.0
        })
        .collect();
    let partitions = (0..n).map(|i| if i < n_train { Partition::Train } else { Partition::Test }).collect();
    FeatureMatrix::new(
        (0..n).map(|i| format!("s{i}")).collect(),
        (0..cols).map(|c| format!("f{c}")).collect(),
        Matrix::from_vec(n, cols, data).unwrap(),
        labels,
        partitions,
    )
    .unwrap()
}

/// Overwrites every test-partition cell with large noise.
pub fn scramble_test_rows(m: &mut microevent::features::FeatureMatrix, seed_value: u64) {
    use microevent::timegrid::Partition;
    let mut rng = seed::rng(seed_value);
    for r in m.indices(Partition::Test) {
        for v in m.x.row_mut(r) {
            *v = rng.random::<f64>() * 1000.0 - 500.0;
        }
    }
}

pub fn check_leakage() -> Check {
    use microevent::learners::Family;
    use microevent::runner::evaluate::{train_estimator, EstimatorSettings};
    use microevent::tuning::time_series_split;
    let mut rng = seed::rng(21);
    let mut plans = 0;
    for _ in 0..500 {
        let folds = rng.random_range(1..8);
        let n = rng.random_range(folds + 1..300);
        let plan = match time_series_split(n, folds) {
            Ok(p) => p,
            Err(e) => return Check::new(false, format!("split({n}, {folds}): {e}")),
        };
        let ok = plan.folds.iter().all(|f| f.train.iter().max() < f.validation.iter().min());
        if !ok {
            return Check::new(false, format!("split({n}, {folds}) leaks"));
        }
        plans += 1;
    }
    let settings = EstimatorSettings { forest_grid: Default::default(), boosted_grid: Default::default(), n_perm: 9, ..Default::default() };
    let clean = random_features(60, 30, 4);
    let mut dirty = clean.clone();
    scramble_test_rows(&mut dirty, 5);
    for family in [Family::Logistic, Family::Forest] {
        let (a, b) = match (train_estimator(family, &clean, &settings, 1), train_estimator(family, &dirty, &settings, 1)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return Check::new(false, format!("{family:?}: {e}")),
        };
        if a.standardizer != b.standardizer || a.capper != b.capper || a.selection != b.selection || a.model != b.model {
            return Check::new(false, format!("{family:?}: fitted state depends on test rows"));
        }
    }
    Check::new(true, format!("{plans} split plans, transformers and models unchanged under test-row mutation"))
}
