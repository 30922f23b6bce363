//! LDA by collapsed Gibbs sampling, fold-in inference, C_V coherence and
//! elbow-based topic count selection.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::seed::{self, Rng};
use crate::textprep::Vocabulary;

const NPMI_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means `50 / k`.
    #[serde(default)]
    pub alpha: Option<f64>,
    pub beta: f64,
    pub burn_in: usize,
    pub total_iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, alpha: None, beta: 0.01, burn_in: 200, total_iterations: 500, seed }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("LDA needs k >= 1".into()));
        }
        if !(self.alpha() > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidArgument("LDA priors must be positive".into()));
        }
        if self.total_iterations <= self.burn_in {
            return Err(Error::InvalidArgument("total_iterations must exceed burn_in".into()));
        }
        Ok(())
    }
}

/// Mutable sampler state for one chain over word-id documents.
#[derive(Debug, Clone)]
pub struct GibbsState {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u16>>,
    doc_topic: Vec<u32>,
    topic_word: Vec<u32>,
    topic_totals: Vec<u64>,
    weights: Vec<f64>,
}

impl GibbsState {
    /// Uniform random initial assignments.
    pub fn new(docs: Vec<Vec<u32>>, v: usize, k: usize, alpha: f64, beta: f64, rng: &mut Rng) -> Result<Self> {
        if docs.iter().all(Vec::is_empty) {
            return Err(Error::Empty("LDA corpus has no tokens"));
        }
        if k > u16::MAX as usize {
            return Err(Error::InvalidArgument(format!("k = {k} is too large")));
        }
        if let Some(w) = docs.iter().flatten().find(|w| **w as usize >= v) {
            return Err(Error::InvalidArgument(format!("word id {w} outside vocabulary of {v}")));
        }
        let mut s = Self {
            k,
            v,
            alpha,
            beta,
            z: Vec::with_capacity(docs.len()),
            doc_topic: vec![0; docs.len() * k],
            topic_word: vec![0; k * v],
            topic_totals: vec![0; k],
            weights: vec![0.0; k],
            docs,
        };
        for d in 0..s.docs.len() {
            let mut zd = Vec::with_capacity(s.docs[d].len());
            for i in 0..s.docs[d].len() {
                let w = s.docs[d][i] as usize;
                let t = rng.random_range(0..k);
                zd.push(t as u16);
                s.doc_topic[d * k + t] += 1;
                s.topic_word[t * v + w] += 1;
                s.topic_totals[t] += 1;
            }
            s.z.push(zd);
        }
        Ok(s)
    }

    /// One full pass resampling every token from its full conditional.
    pub fn sweep(&mut self, rng: &mut Rng) {
        let (k, v) = (self.k, self.v);
        let vbeta = v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i] as usize;
                let old = self.z[d][i] as usize;
                self.doc_topic[d * k + old] -= 1;
                self.topic_word[old * v + w] -= 1;
                self.topic_totals[old] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (f64::from(self.doc_topic[d * k + t]) + self.alpha)
                        * (f64::from(self.topic_word[t * v + w]) + self.beta)
                        / (self.topic_totals[t] as f64 + vbeta);
                    self.weights[t] = total;
                }
                let new = draw(&self.weights, total, rng);
                self.z[d][i] = new as u16;
                self.doc_topic[d * k + new] += 1;
                self.topic_word[new * v + w] += 1;
                self.topic_totals[new] += 1;
            }
        }
    }

    pub fn assignments(&self) -> &[Vec<u16>] {
        &self.z
    }

    pub fn doc_topic_counts(&self, d: usize) -> &[u32] {
        &self.doc_topic[d * self.k..(d + 1) * self.k]
    }

    pub fn topic_word_counts(&self) -> &[u32] {
        &self.topic_word
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    pub fn doc_len(&self, d: usize) -> usize {
        self.docs[d].len()
    }

    /// `ln p(w | z)` under the symmetric Dirichlet topic-word prior.
    pub fn log_likelihood(&self) -> f64 {
        let vbeta = self.v as f64 * self.beta;
        let lg_beta = ln_gamma(self.beta);
        let mut ll = 0.0;
        for t in 0..self.k {
            ll += ln_gamma(vbeta) - ln_gamma(self.topic_totals[t] as f64 + vbeta);
            for &c in &self.topic_word[t * self.v..(t + 1) * self.v] {
                if c > 0 {
                    ll += ln_gamma(f64::from(c) + self.beta) - lg_beta;
                }
            }
        }
        ll
    }
}

fn draw(cumulative: &[f64], total: f64, rng: &mut Rng) -> usize {
    let u = rng.random::<f64>() * total;
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub config: LdaConfig,
    pub k: usize,
    pub v: usize,
    alpha: f64,
    /// Row-major `k x v`.
    topic_word: Vec<u32>,
    topic_totals: Vec<u64>,
    #[serde(skip)]
    vocabulary: Option<Vocabulary>,
}

/// Log-likelihood after every sweep.
#[derive(Debug, Clone, Default)]
pub struct LdaTrace {
    pub log_likelihood: Vec<f64>,
}

pub fn train_lda(docs: &[Vec<u32>], vocabulary: &Vocabulary, config: &LdaConfig) -> Result<TopicModel> {
    train_lda_traced(docs, vocabulary.len(), config).map(|(m, _)| m.with_vocabulary(vocabulary.clone()))
}

pub fn train_lda_traced(docs: &[Vec<u32>], v: usize, config: &LdaConfig) -> Result<(TopicModel, LdaTrace)> {
    config.validate()?;
    let mut rng = seed::rng(config.seed);
    let mut state = GibbsState::new(docs.to_vec(), v, config.k, config.alpha(), config.beta, &mut rng)?;
    let mut trace = LdaTrace::default();
    for _ in 0..config.total_iterations {
        state.sweep(&mut rng);
        trace.log_likelihood.push(state.log_likelihood());
    }
    let model = TopicModel {
        config: config.clone(),
        k: config.k,
        v,
        alpha: config.alpha(),
        topic_word: state.topic_word,
        topic_totals: state.topic_totals,
        vocabulary: None,
    };
    Ok((model, trace))
}

impl TopicModel {
    pub fn from_counts(config: LdaConfig, v: usize, topic_word: Vec<u32>) -> Result<Self> {
        config.validate()?;
        if topic_word.len() != config.k * v {
            return Err(Error::InvalidArgument("topic-word count matrix has the wrong shape".into()));
        }
        let topic_totals = topic_word.chunks(v).map(|r| r.iter().map(|&c| u64::from(c)).sum()).collect();
        Ok(Self { k: config.k, alpha: config.alpha(), config, v, topic_word, topic_totals, vocabulary: None })
    }

    pub fn with_vocabulary(mut self, vocabulary: Vocabulary) -> Self {
        self.vocabulary = Some(vocabulary);
        self
    }

    pub fn vocabulary(&self) -> Option<&Vocabulary> {
        self.vocabulary.as_ref()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.config.beta
    }

    pub fn topic_word_counts(&self) -> &[u32] {
        &self.topic_word
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    pub fn phi(&self, topic: usize, word: usize) -> f64 {
        (f64::from(self.topic_word[topic * self.v + word]) + self.config.beta)
            / (self.topic_totals[topic] as f64 + self.v as f64 * self.config.beta)
    }

    pub fn phi_row(&self, topic: usize) -> Vec<f64> {
        (0..self.v).map(|w| self.phi(topic, w)).collect()
    }

    /// Top `n` word ids by descending φ, ties by lower id.
    pub fn top_word_ids(&self, topic: usize, n: usize) -> Vec<u32> {
        let row = &self.topic_word[topic * self.v..(topic + 1) * self.v];
        let mut ids: Vec<u32> = (0..self.v as u32).collect();
        ids.sort_by(|&a, &b| row[b as usize].cmp(&row[a as usize]).then(a.cmp(&b)));
        ids.truncate(n);
        ids
    }

    /// Top `n` tokens with their φ. Requires a bound vocabulary.
    pub fn top_words(&self, topic: usize, n: usize) -> Result<Vec<(String, f64)>> {
        let vocab = self.vocabulary.as_ref().ok_or(Error::MissingInput("topic model vocabulary".into()))?;
        Ok(self
            .top_word_ids(topic, n)
            .into_iter()
            .map(|id| (vocab.token(id).to_string(), self.phi(topic, id as usize)))
            .collect())
    }

    /// Fold-in θ for one document with the topic-word counts frozen.
    /// θ is averaged over the second half of the sweeps.
    pub fn infer_theta(&self, doc: &[u32], fold_in_sweeps: usize, seed: u64) -> Vec<f64> {
        let k = self.k;
        if doc.is_empty() || k == 1 {
            return vec![1.0 / k as f64; k];
        }
        let mut rng = seed::rng(seed);
        let vbeta = self.v as f64 * self.config.beta;
        let doc: Vec<usize> = doc.iter().map(|&w| w as usize).filter(|&w| w < self.v).collect();
        let mut counts = vec![0u32; k];
        let mut z: Vec<usize> = doc
            .iter()
            .map(|_| {
                let t = rng.random_range(0..k);
                counts[t] += 1;
                t
            })
            .collect();
        let denom = doc.len() as f64 + k as f64 * self.alpha;
        let sweeps = fold_in_sweeps.max(1);
        let keep_from = sweeps / 2;
        let mut theta = vec![0.0; k];
        let mut kept = 0usize;
        let mut weights = vec![0.0; k];
        for s in 0..sweeps {
            for (i, &w) in doc.iter().enumerate() {
                counts[z[i]] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (f64::from(counts[t]) + self.alpha)
                        * (f64::from(self.topic_word[t * self.v + w]) + self.config.beta)
                        / (self.topic_totals[t] as f64 + vbeta);
                    weights[t] = total;
                }
                z[i] = draw(&weights, total, &mut rng);
                counts[z[i]] += 1;
            }
            if s >= keep_from {
                for t in 0..k {
                    theta[t] += (f64::from(counts[t]) + self.alpha) / denom;
                }
                kept += 1;
            }
        }
        let sum: f64 = theta.iter().sum();
        theta.iter_mut().for_each(|x| *x /= sum);
        debug_assert!(kept > 0);
        theta
    }

    /// θ for many documents in parallel; document `i` uses seed
    /// `derive(seed, "theta", i)`.
    pub fn infer_theta_batch(&self, docs: &[Vec<u32>], fold_in_sweeps: usize, seed: u64) -> Vec<Vec<f64>> {
        docs.par_iter()
            .enumerate()
            .map(|(i, d)| self.infer_theta(d, fold_in_sweeps, seed::derive(seed, "theta", i as u64)))
            .collect()
    }

    /// Writes `<stem>.json` (header) and `<stem>.csv` (topic-word counts).
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let header = serde_json::json!({
            "schema_version": 1,
            "config": self.config,
            "k": self.k,
            "v": self.v,
            "alpha": self.alpha,
            "tokens": self.vocabulary.as_ref().map(|v| v.tokens().to_vec()),
        });
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_vec_pretty(&header)?)?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{stem}.csv")))?);
        for row in self.topic_word.chunks(self.v) {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            config: LdaConfig,
            v: usize,
        }
        let header: Header = serde_json::from_slice(&std::fs::read(dir.join(format!("{stem}.json")))?)?;
        let file = std::io::BufReader::new(std::fs::File::open(dir.join(format!("{stem}.csv")))?);
        let mut counts = Vec::with_capacity(header.config.k * header.v);
        for line in file.lines() {
            for cell in line?.split(',').filter(|c| !c.is_empty()) {
                counts.push(cell.parse().map_err(|_| Error::Malformed(format!("topic count `{cell}`")))?);
            }
        }
        Self::from_counts(header.config, header.v, counts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    pub per_topic: Vec<f64>,
    pub mean: f64,
    /// Topics scored over fewer than `top_n` in-corpus words.
    pub short_topics: Vec<usize>,
    /// Set when a word pair co-occurs in every window, where NPMI is
    /// undefined and taken as 1.
    pub degenerate: bool,
}

/// C_V coherence of `model` against reference streams of word ids.
/// Out-of-vocabulary positions should be passed as `None` so that window
/// geometry follows the raw streams.
pub fn coherence_cv(model: &TopicModel, reference: &[Vec<Option<u32>>], top_n: usize, window: usize) -> Result<Coherence> {
    let topics: Vec<Vec<u32>> = (0..model.k).map(|t| model.top_word_ids(t, top_n)).collect();
    coherence_cv_for_topics(&topics, reference, top_n, window)
}

/// C_V coherence for explicit top-word lists.
pub fn coherence_cv_for_topics(
    topics: &[Vec<u32>],
    reference: &[Vec<Option<u32>>],
    top_n: usize,
    window: usize,
) -> Result<Coherence> {
    if window == 0 {
        return Err(Error::InvalidArgument("coherence window must be positive".into()));
    }
    if topics.is_empty() {
        return Err(Error::Empty("no topics to score"));
    }
    let mut words: Vec<u32> = topics.iter().flatten().copied().collect::<HashSet<_>>().into_iter().collect();
    words.sort_unstable();
    let slot = |w: u32| words.binary_search(&w).ok();
    let m = words.len();
    let mut single = vec![0u64; m];
    let mut pair = vec![0u64; m * m];
    let mut n_windows = 0u64;
    let mut present = Vec::with_capacity(m);
    let mut in_window = vec![0u32; m];
    let mut add_window = |in_window: &[u32], present: &mut Vec<usize>| {
        present.clear();
        present.extend((0..m).filter(|&i| in_window[i] > 0));
        for &i in present.iter() {
            single[i] += 1;
            for &j in present.iter() {
                pair[i * m + j] += 1;
            }
        }
    };
    for doc in reference {
        let ids: Vec<Option<usize>> = doc.iter().map(|w| w.and_then(slot)).collect();
        if ids.is_empty() {
            continue;
        }
        in_window.iter_mut().for_each(|c| *c = 0);
        let span = window.min(ids.len());
        for s in ids[..span].iter().flatten() {
            in_window[*s] += 1;
        }
        add_window(&in_window, &mut present);
        n_windows += 1;
        for start in 1..=ids.len() - span {
            if let Some(s) = ids[start - 1] {
                in_window[s] -= 1;
            }
            if let Some(s) = ids[start + span - 1] {
                in_window[s] += 1;
            }
            add_window(&in_window, &mut present);
            n_windows += 1;
        }
    }
    if n_windows == 0 {
        return Err(Error::Empty("reference corpus has no windows"));
    }
    let n = n_windows as f64;
    let mut degenerate = n_windows < 2;
    let mut npmi = |i: usize, j: usize| -> f64 {
        let pi = single[i] as f64 / n;
        let pj = single[j] as f64 / n;
        let pij = pair[i * m + j] as f64 / n;
        let denom = -(pij + NPMI_EPSILON).ln();
        if denom.abs() < 1e-9 {
            degenerate = true;
            return 1.0;
        }
        ((pij + NPMI_EPSILON) / (pi * pj)).ln() / denom
    };
    let mut per_topic = Vec::with_capacity(topics.len());
    let mut short_topics = Vec::new();
    for (t, top) in topics.iter().enumerate() {
        let idx: Vec<usize> = top.iter().filter_map(|&w| slot(w)).filter(|&i| single[i] > 0).collect();
        if idx.len() < top_n {
            short_topics.push(t);
        }
        if idx.is_empty() {
            per_topic.push(0.0);
            continue;
        }
        let vectors: Vec<Vec<f64>> = idx.iter().map(|&i| idx.iter().map(|&j| npmi(i, j)).collect()).collect();
        let mut total = vec![0.0; idx.len()];
        for v in &vectors {
            for (a, b) in total.iter_mut().zip(v) {
                *a += b;
            }
        }
        let score = vectors.iter().map(|v| cosine(v, &total)).sum::<f64>() / vectors.len() as f64;
        per_topic.push(score);
    }
    let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(Coherence { per_topic, mean, short_topics, degenerate })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// Maps token streams to id streams with `None` at out-of-vocabulary
/// positions, as consumed by [`coherence_cv`].
pub fn reference_ids(vocabulary: &Vocabulary, streams: &[Vec<String>]) -> Vec<Vec<Option<u32>>> {
    streams.iter().map(|s| s.iter().map(|t| vocabulary.id(t)).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elbow {
    pub index: usize,
    pub distances: Vec<f64>,
    pub no_elbow: bool,
}

/// Point of maximum perpendicular distance from the chord joining the
/// first and last points. When every distance vanishes the argmax of `y`
/// is returned with `no_elbow` set.
pub fn elbow(points: &[(f64, f64)]) -> Result<Elbow> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument("elbow needs at least 3 points".into()));
    }
    let (x0, y0) = points[0];
    let (x1, y1) = points[points.len() - 1];
    let (dx, dy) = (x1 - x0, y1 - y0);
    let norm = dx.hypot(dy);
    let distances: Vec<f64> = points.iter().map(|&(x, y)| (dx * (y - y0) - dy * (x - x0)).abs() / norm).collect();
    let scale = points.iter().map(|p| p.0.abs().max(p.1.abs())).fold(0.0, f64::max).max(1.0);
    let best = argmax_first(&distances);
    if distances[best] <= 1e-9 * scale {
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        return Ok(Elbow { index: argmax_first(&ys), distances, no_elbow: true });
    }
    Ok(Elbow { index: best, distances, no_elbow: false })
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherencePoint {
    pub k: usize,
    pub seed: u64,
    pub coherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub chosen_k: usize,
    pub no_elbow: bool,
    pub points: Vec<CoherencePoint>,
    /// `(k, mean coherence)` in ascending `k`.
    pub mean_curve: Vec<(usize, f64)>,
}

/// Fits one model per `(k, seed)` and picks `k` at the elbow of the mean
/// coherence curve. Seeds are `derive(base.seed, "select_k", i)`.
pub fn select_k(
    docs: &[Vec<u32>],
    vocabulary: &Vocabulary,
    reference: &[Vec<Option<u32>>],
    candidate_ks: &[usize],
    n_seeds: usize,
    base: &LdaConfig,
    top_n: usize,
    window: usize,
) -> Result<KSelection> {
    if candidate_ks.len() < 3 || candidate_ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("select_k needs >= 3 ascending candidate k values".into()));
    }
    if n_seeds == 0 {
        return Err(Error::InvalidArgument("select_k needs at least one seed".into()));
    }
    let jobs: Vec<(usize, u64)> = candidate_ks
        .iter()
        .flat_map(|&k| (0..n_seeds as u64).map(move |i| (k, seed::derive(base.seed, "select_k", i))))
        .collect();
    let points = jobs
        .par_iter()
        .map(|&(k, seed)| {
            let config = LdaConfig { k, seed, ..base.clone() };
            let (model, _) = train_lda_traced(docs, vocabulary.len(), &config)?;
            let c = coherence_cv(&model, reference, top_n, window)?;
            Ok(CoherencePoint { k, seed, coherence: c.mean })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_curve: Vec<(usize, f64)> = candidate_ks
        .iter()
        .map(|&k| {
            let cs: Vec<f64> = points.iter().filter(|p| p.k == k).map(|p| p.coherence).collect();
            (k, cs.iter().sum::<f64>() / cs.len() as f64)
        })
        .collect();
    let curve: Vec<(f64, f64)> = mean_curve.iter().map(|&(k, c)| (k as f64, c)).collect();
    let e = elbow(&curve)?;
    Ok(KSelection { chosen_k: mean_curve[e.index].0, no_elbow: e.no_elbow, points, mean_curve })
}

pub fn write_coherence_csv<W: Write>(points: &[CoherencePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "seed", "coherence"])?;
    for p in points {
        w.write_record([p.k.to_string(), p.seed.to_string(), format!("{:.12}", p.coherence)])?;
    }
    w.flush()?;
    Ok(())
}

/// Topic-model settings used by the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopicsConfig {
    /// Fixed topic count; when absent `k_grid` is searched.
    pub k: Option<usize>,
    pub k_grid: Vec<usize>,
    pub n_seeds: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub burn_in: usize,
    pub total_iterations: usize,
    pub fold_in_sweeps: usize,
    pub top_n: usize,
    pub window: usize,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        Self {
            k: None,
            k_grid: vec![6, 10, 14, 18, 22, 26, 30],
            n_seeds: 3,
            alpha: None,
            beta: 0.01,
            burn_in: 200,
            total_iterations: 500,
            fold_in_sweeps: 50,
            top_n: 10,
            window: 110,
        }
    }
}

impl TopicsConfig {
    pub fn lda(&self, k: usize, seed: u64) -> LdaConfig {
        LdaConfig {
            k,
            alpha: self.alpha,
            beta: self.beta,
            burn_in: self.burn_in,
            total_iterations: self.total_iterations,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: usize) -> LdaConfig {
        LdaConfig { k, alpha: Some(0.1), beta: 0.01, burn_in: 5, total_iterations: 20, seed: 3 }
    }

    #[test]
    fn k1_is_smoothed_unigram() {
        let docs = vec![vec![0, 0, 1], vec![0, 2]];
        let (m, _) = train_lda_traced(&docs, 3, &cfg(1)).unwrap();
        assert_eq!(m.topic_word_counts(), [3, 1, 1]);
        assert!((m.phi(0, 0) - 3.01 / 5.03).abs() < 1e-12);
        assert_eq!(m.infer_theta(&[0, 1], 10, 1), [1.0]);
        assert_eq!(m.top_word_ids(0, 1), [0]);
    }

    #[test]
    fn counts_are_conserved() {
        let docs = vec![vec![0, 1, 2, 3], vec![3, 3, 1], vec![2]];
        let mut rng = seed::rng(9);
        let mut s = GibbsState::new(docs.clone(), 4, 3, 0.5, 0.1, &mut rng).unwrap();
        for _ in 0..20 {
            s.sweep(&mut rng);
            for d in 0..docs.len() {
                assert_eq!(s.doc_topic_counts(d).iter().sum::<u32>() as usize, s.doc_len(d));
            }
            for t in 0..3 {
                let row: u64 = s.topic_word_counts()[t * 4..(t + 1) * 4].iter().map(|&c| u64::from(c)).sum();
                assert_eq!(row, s.topic_totals()[t]);
            }
        }
    }

    #[test]
    fn empty_doc_theta_is_uniform() {
        let m = TopicModel::from_counts(cfg(4), 2, vec![1; 8]).unwrap();
        assert_eq!(m.infer_theta(&[], 10, 0), [0.25; 4]);
    }

    #[test]
    fn top_words_tie_break() {
        let m = TopicModel::from_counts(cfg(1), 3, vec![2, 5, 5]).unwrap();
        assert_eq!(m.top_word_ids(0, 2), [1, 2]);
        assert!(m.top_word_ids(0, 0).is_empty());
        assert_eq!(m.top_word_ids(0, 10).len(), 3);
    }

    #[test]
    fn elbow_examples() {
        let e = elbow(&[(5.0, 0.30), (10.0, 0.50), (15.0, 0.52), (20.0, 0.53)]).unwrap();
        assert_eq!(e.index, 1);
        assert!(!e.no_elbow);
        let flat = elbow(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]).unwrap();
        assert!(flat.no_elbow);
        assert_eq!(flat.index, 2);
    }

    #[test]
    fn persistence_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let m = TopicModel::from_counts(cfg(2), 3, vec![1, 2, 3, 4, 5, 6]).unwrap();
        m.save(dir.path(), "lda").unwrap();
        assert_eq!(TopicModel::load(dir.path(), "lda").unwrap(), m);
    }
}
