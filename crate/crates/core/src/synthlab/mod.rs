//! Synthetic forum corpora with a controlled share of event-related
//! messages, similarity checks between corpora, and the detectability
//! sweep over that share.

mod similarity;
mod sweep;

pub use similarity::{jaccard_similarity, kl_divergence, novelty_diversity, SimilarityReport, HISTOGRAM_BINS, KL_EPSILON};
pub use sweep::{
    detectability_sweep, spearman, write_results_csv, write_summary_csv, CellResult, EstimatorThreshold, FractionSummary, SweepConfig,
    SweepReport, REFERENCE_THRESHOLD, REFERENCE_BAND,
};

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::corpus::{EventKind, Message};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};
use crate::sentiment::Lexicon;
use crate::textprep::{porter_stem, Stopwords};
use crate::timegrid::{StepDataset, StepDesign, StepLabel, TimeStep, STEP_DAYS};

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Seed nouns in three compounds and the change verbs they combine with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedLexicon {
    pub rules: Vec<String>,
    pub people: Vec<String>,
    pub products: Vec<String>,
    pub addition_verbs: Vec<String>,
    pub removal_verbs: Vec<String>,
    /// Phrases drawn per instance.
    pub active: usize,
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

impl Default for SeedLexicon {
    fn default() -> Self {
        Self {
            rules: words("license policy guideline rule standard convention requirement regulation governance charter"),
            people: words("maintainer contributor developer reviewer committer author owner member team community"),
            products: words("package library module plugin feature release version api dependency framework"),
            addition_verbs: words("added introduced included adopted merged released joined integrated enabled shipped"),
            removal_verbs: words("removed dropped deprecated deleted retired disabled replaced reverted archived withdrawn"),
            active: 100,
        }
    }
}

impl SeedLexicon {
    pub fn nouns(&self) -> impl Iterator<Item = &String> {
        self.rules.iter().chain(&self.people).chain(&self.products)
    }

    pub fn verbs(&self) -> impl Iterator<Item = &String> {
        self.addition_verbs.iter().chain(&self.removal_verbs)
    }

    /// Every noun followed by every verb, as `"noun verb"`.
    pub fn phrases(&self) -> Vec<String> {
        self.nouns().flat_map(|n| self.verbs().map(move |v| format!("{n} {v}"))).collect()
    }

    /// `active` phrases drawn without replacement.
    pub fn active_subset(&self, rng: &mut Rng) -> Result<Vec<String>> {
        let all = self.phrases();
        if all.is_empty() {
            return Err(Error::Config("seed lexicon has no phrases".into()));
        }
        if self.active == 0 || self.active > all.len() {
            return Err(Error::Config(format!("active phrase count {} not in 1..={}", self.active, all.len())));
        }
        let mut picked = index::sample(rng, all.len(), self.active).into_vec();
        picked.sort_unstable();
        Ok(picked.into_iter().map(|i| all[i].clone()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    /// Pseudo-words in the background vocabulary.
    pub background_vocabulary: usize,
    /// Valence-lexicon words mixed into the background vocabulary.
    pub sentiment_words: usize,
    pub background_topics: usize,
    /// Symmetric Dirichlet parameter of per-message topic mixtures.
    pub topic_concentration: f64,
    /// Symmetric Dirichlet parameter of per-topic word distributions.
    pub word_concentration: f64,
    /// Message length is `min_length + Poisson(mean_length - min_length)`.
    pub mean_length: f64,
    pub min_length: usize,
    pub lexicon: SeedLexicon,
    /// Seed phrases injected into every event-related message.
    pub phrases_per_message: usize,
    pub fractions: Vec<f64>,
    pub n_steps: usize,
    pub messages_per_step: usize,
    pub positive_ratio: f64,
    pub train_fraction: f64,
    pub n_instances: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            background_vocabulary: 1500,
            sentiment_words: 150,
            background_topics: 10,
            topic_concentration: 0.3,
            word_concentration: 0.05,
            mean_length: 25.0,
            min_length: 8,
            lexicon: SeedLexicon::default(),
            phrases_per_message: 2,
            fractions: (2..=9).map(|i| f64::from(i) / 20.0).collect(),
            n_steps: 335,
            messages_per_step: 60,
            positive_ratio: 0.25,
            train_fraction: 0.6,
            n_instances: 15,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.fractions.is_empty() {
            return bad("fraction grid is empty");
        }
        if self.fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return bad("fractions must lie in [0, 1]");
        }
        if !(self.positive_ratio > 0.0 && self.positive_ratio < 1.0) {
            return bad("positive_ratio must lie in (0, 1)");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)");
        }
        if self.n_steps < 4 || self.messages_per_step == 0 || self.n_instances == 0 {
            return bad("n_steps >= 4, messages_per_step >= 1 and n_instances >= 1 are required");
        }
        if self.background_vocabulary == 0 || self.background_topics == 0 {
            return bad("background vocabulary and topic count must be positive");
        }
        if !(self.topic_concentration > 0.0 && self.word_concentration > 0.0) {
            return bad("Dirichlet parameters must be positive");
        }
        if !(self.mean_length >= self.min_length as f64) || self.min_length == 0 {
            return bad("need 1 <= min_length <= mean_length");
        }
        Ok(())
    }

    /// Steps labeled positive: `positive_ratio * n_steps` rounded to
    /// nearest, ties down.
    pub fn n_positive(&self) -> usize {
        round_half_down(self.positive_ratio * self.n_steps as f64)
    }
}

fn round_half_down(x: f64) -> usize {
    let f = x.floor();
    (if x - f > 0.5 { f + 1.0 } else { f }) as usize
}

/// Event-related messages in a positive step: `ceil(f * messages_per_step)`.
pub fn event_messages_per_step(f: f64, messages_per_step: usize) -> usize {
    let raw = f * messages_per_step as f64;
    // absorbs products such as 0.45 * 60 = 27.000000000000004
    let r = raw.round();
    let n = if (raw - r).abs() < 1e-9 { r } else { raw.ceil() };
    (n as usize).min(messages_per_step)
}

fn dirichlet(rng: &mut Rng, alpha: f64, k: usize) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).expect("alpha > 0");
    let mut v: Vec<f64> = (0..k).map(|_| g.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        v = vec![1.0 / k as f64; k];
    }
    v
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut Rng) -> usize {
    let u = rng.random::<f64>() * cdf.last().copied().unwrap_or(1.0);
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Vocabulary, topics and active phrases of one synthetic instance, all
/// derived from `config.seed`.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub vocabulary: Vec<String>,
    topic_cdfs: Vec<Vec<f64>>,
    pub active_phrases: Vec<String>,
}

impl SyntheticWorld {
    pub fn new(config: &SyntheticConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = seed::stage_rng(config.seed, "synth_world", 0);
        let stopwords = Stopwords::default();
        let lexicon = Lexicon::default();
        let seed_stems: BTreeSet<String> = config.lexicon.nouns().chain(config.lexicon.verbs()).map(|w| porter_stem(w)).collect();
        let reserved = |w: &str| stopwords.contains(w) || seed_stems.contains(&porter_stem(w));

        let mut vocab: BTreeSet<String> = BTreeSet::new();
        let mut attempts = 0usize;
        while vocab.len() < config.background_vocabulary {
            attempts += 1;
            if attempts > 100 * config.background_vocabulary + 1000 {
                return Err(Error::Config("cannot build that many distinct pseudo-words".into()));
            }
            let syllables = rng.random_range(2..=4);
            let w: String = (0..syllables)
                .flat_map(|_| [CONSONANTS[rng.random_range(0..CONSONANTS.len())], VOWELS[rng.random_range(0..VOWELS.len())]])
                .map(char::from)
                .collect();
            if lexicon.get(&w).is_none() && !reserved(&w) {
                vocab.insert(w);
            }
        }
        let mut vocabulary: Vec<String> = vocab.into_iter().collect();
        let candidates: Vec<&str> = lexicon
            .words()
            .into_iter()
            .filter(|w| w.len() >= 3 && w.chars().all(|c| c.is_ascii_lowercase()) && !reserved(w))
            .collect();
        let n_sent = config.sentiment_words.min(candidates.len());
        let mut picked = index::sample(&mut rng, candidates.len(), n_sent).into_vec();
        picked.sort_unstable();
        vocabulary.extend(picked.into_iter().map(|i| candidates[i].to_string()));
        vocabulary.shuffle(&mut rng);

        let topic_cdfs = (0..config.background_topics)
            .map(|_| cumulative(&dirichlet(&mut rng, config.word_concentration, vocabulary.len())))
            .collect();
        let active_phrases = config.lexicon.active_subset(&mut rng)?;
        Ok(Self { vocabulary, topic_cdfs, active_phrases })
    }

    fn background_tokens(&self, config: &SyntheticConfig, rng: &mut Rng) -> Vec<String> {
        let extra = config.mean_length - config.min_length as f64;
        let len = config.min_length + if extra > 0.0 { Poisson::new(extra).expect("rate > 0").sample(rng) as usize } else { 0 };
        let mix = cumulative(&dirichlet(rng, config.topic_concentration, self.topic_cdfs.len()));
        (0..len)
            .map(|_| {
                let t = draw(&mix, rng);
                self.vocabulary[draw(&self.topic_cdfs[t], rng)].clone()
            })
            .collect()
    }

    pub fn background(&self, config: &SyntheticConfig, n: usize, seed: u64) -> Vec<String> {
        let mut rng = seed::rng(seed);
        (0..n).map(|_| self.background_tokens(config, &mut rng).join(" ")).collect()
    }

    /// Background-style text with `phrases_per_message` active phrases
    /// inserted at random token positions.
    pub fn event_related(&self, config: &SyntheticConfig, n: usize, seed: u64) -> Result<Vec<String>> {
        if config.phrases_per_message == 0 {
            return Err(Error::Config("not event-related: phrases_per_message is 0".into()));
        }
        if self.active_phrases.is_empty() {
            return Err(Error::Config("seed lexicon has no phrases".into()));
        }
        let mut rng = seed::rng(seed);
        Ok((0..n)
            .map(|_| {
                let mut tokens = self.background_tokens(config, &mut rng);
                for _ in 0..config.phrases_per_message {
                    let phrase = &self.active_phrases[rng.random_range(0..self.active_phrases.len())];
                    let at = rng.random_range(0..=tokens.len());
                    tokens.insert(at, phrase.clone());
                }
                tokens.join(" ")
            })
            .collect())
    }
}

/// `n` background messages under `config.seed`.
pub fn generate_background(config: &SyntheticConfig, n: usize) -> Result<Vec<String>> {
    let world = SyntheticWorld::new(config)?;
    Ok(world.background(config, n, seed::derive(config.seed, "background", 0)))
}

/// `n` event-related messages under `config.seed`.
pub fn generate_event_related(config: &SyntheticConfig, n: usize) -> Result<Vec<String>> {
    let world = SyntheticWorld::new(config)?;
    world.event_related(config, n, seed::derive(config.seed, "event_related", 0))
}

/// Bagged steps together with the messages they reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticCorpus {
    pub messages: Vec<Message>,
    pub dataset: StepDataset,
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 1, 5).expect("valid date")
}

fn step_start(i: usize) -> NaiveDate {
    epoch() + Duration::days((i as u64 * STEP_DAYS) as i64)
}

fn message_time(step: usize, j: usize, per_step: usize) -> DateTime<Utc> {
    let start = Utc.from_utc_datetime(&step_start(step).and_hms_opt(0, 0, 0).expect("midnight"));
    let spacing = (STEP_DAYS as i64 * 86_400) / per_step as i64;
    start + Duration::seconds(spacing * j as i64 + spacing / 2)
}

/// Lays out `n_steps` weekly steps. `round(positive_ratio * n_steps)`
/// (ties down) of them, at random positions, hold
/// `ceil(f * messages_per_step)` event-related messages and background
/// messages for the rest; the others hold background messages only.
/// Messages are drawn without replacement. The first
/// `round(train_fraction * n_steps)` steps form the training partition.
#[allow(clippy::too_many_arguments)]
pub fn bag_timesteps(
    background: &[String],
    event_related: &[String],
    f: f64,
    n_steps: usize,
    positive_ratio: f64,
    messages_per_step: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<SyntheticCorpus> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidArgument(format!("event fraction {f} not in [0, 1]")));
    }
    if !(positive_ratio > 0.0 && positive_ratio < 1.0) {
        return Err(Error::InvalidArgument("positive_ratio must lie in (0, 1)".into()));
    }
    if messages_per_step == 0 || n_steps < 4 {
        return Err(Error::InvalidArgument("need messages_per_step >= 1 and n_steps >= 4".into()));
    }
    let n_pos = round_half_down(positive_ratio * n_steps as f64);
    let e = event_messages_per_step(f, messages_per_step);
    let need_event = n_pos * e;
    let need_background = n_steps * messages_per_step - need_event;
    if event_related.len() < need_event || background.len() < need_background {
        return Err(Error::InvalidArgument(format!(
            "message pool too small: need {need_background} background and {need_event} event-related, have {} and {}",
            background.len(),
            event_related.len()
        )));
    }
    let mut rng = seed::rng(seed);
    let mut positive = vec![false; n_steps];
    for i in index::sample(&mut rng, n_steps, n_pos) {
        positive[i] = true;
    }
    let mut bg_order: Vec<usize> = (0..background.len()).collect();
    bg_order.shuffle(&mut rng);
    let mut ev_order: Vec<usize> = (0..event_related.len()).collect();
    ev_order.shuffle(&mut rng);
    let (mut bg_next, mut ev_next) = (bg_order.into_iter(), ev_order.into_iter());

    let n_train = ((train_fraction * n_steps as f64).round() as usize).clamp(1, n_steps - 1);
    let mut messages = Vec::with_capacity(n_steps * messages_per_step);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (s, &is_pos) in positive.iter().enumerate() {
        let n_event = if is_pos { e } else { 0 };
        let mut bodies: Vec<&str> = (0..n_event)
            .map(|_| event_related[ev_next.next().expect("pool checked")].as_str())
            .chain((n_event..messages_per_step).map(|_| background[bg_next.next().expect("pool checked")].as_str()))
            .collect();
        bodies.shuffle(&mut rng);
        let mut ids = Vec::with_capacity(messages_per_step);
        for (j, body) in bodies.into_iter().enumerate() {
            let id = format!("s{s:04}m{j:04}");
            messages.push(Message {
                id: id.clone(),
                timestamp: message_time(s, j, messages_per_step),
                body_raw: body.to_string(),
                tags: vec![],
                packages: BTreeSet::new(),
            });
            ids.push(id);
        }
        let start = step_start(s);
        let step = TimeStep {
            start_day: start,
            end_day: start + Duration::days(STEP_DAYS as i64 - 1),
            design: StepDesign::CalendarWeek,
            message_ids: ids,
            label: if is_pos { StepLabel::Event(EventKind::Major) } else { StepLabel::Control },
            anchor_event: None,
        };
        if s < n_train {
            train.push(step);
        } else {
            test.push(step);
        }
    }
    for (part, steps) in [("train", &train), ("test", &test)] {
        let pos = steps.iter().filter(|s| s.label.is_event()).count();
        if pos == 0 || pos == steps.len() {
            return Err(Error::UnusablePartition(format!("synthetic {part} partition has a single class")));
        }
    }
    let split_instant = messages[n_train * messages_per_step - 1].timestamp;
    let dataset = StepDataset {
        name: format!("synthetic f={f:.2}"),
        target_kind: EventKind::Major,
        design: StepDesign::CalendarWeek,
        train,
        test,
        split_instant,
        dropped: 0,
    };
    Ok(SyntheticCorpus { messages, dataset })
}

/// Message pools of one instance, large enough for any `f <= max_f`.
#[derive(Debug, Clone)]
pub struct InstancePools {
    pub background: Vec<String>,
    pub event_related: Vec<String>,
}

pub fn instance_pools(config: &SyntheticConfig, max_f: f64) -> Result<InstancePools> {
    let world = SyntheticWorld::new(config)?;
    let n_pos = config.n_positive();
    let n_bg = config.n_steps * config.messages_per_step;
    let n_ev = n_pos * event_messages_per_step(max_f, config.messages_per_step);
    Ok(InstancePools {
        background: world.background(config, n_bg, seed::derive(config.seed, "background", 0)),
        event_related: if n_ev == 0 { vec![] } else { world.event_related(config, n_ev, seed::derive(config.seed, "event_related", 0))? },
    })
}

/// A bagged corpus for one `(instance, f)` cell.
pub fn synthetic_corpus(config: &SyntheticConfig, pools: &InstancePools, f: f64) -> Result<SyntheticCorpus> {
    let mut corpus = bag_timesteps(
        &pools.background,
        &pools.event_related,
        f,
        config.n_steps,
        config.positive_ratio,
        config.messages_per_step,
        config.train_fraction,
        seed::derive(config.seed, "bag", 0),
    )?;
    corpus.dataset.name = format!("synthetic f={f:.2} seed={}", config.seed);
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticConfig {
        SyntheticConfig { background_vocabulary: 200, sentiment_words: 20, ..SyntheticConfig::default() }
    }

    #[test]
    fn positive_count_rounds_half_down() {
        assert_eq!(SyntheticConfig::default().n_positive(), 84);
        assert_eq!(round_half_down(2.5), 2);
        assert_eq!(round_half_down(2.51), 3);
        assert_eq!(event_messages_per_step(0.25, 100), 25);
        assert_eq!(event_messages_per_step(0.45, 60), 27);
        assert_eq!(event_messages_per_step(0.10, 60), 6);
        assert_eq!(event_messages_per_step(0.11, 60), 7);
    }

    #[test]
    fn background_is_deterministic_and_free_of_event_verbs() {
        let c = small();
        assert!(generate_background(&c, 0).unwrap().is_empty());
        let a = generate_background(&c, 300).unwrap();
        assert_eq!(a, generate_background(&c, 300).unwrap());
        let verbs: BTreeSet<&String> = c.lexicon.verbs().collect();
        assert!(a.iter().flat_map(|m| m.split(' ')).all(|w| !verbs.contains(&w.to_string())));
    }

    #[test]
    fn event_messages_carry_active_phrases() {
        let c = small();
        let world = SyntheticWorld::new(&c).unwrap();
        for m in generate_event_related(&c, 100).unwrap() {
            assert!(world.active_phrases.iter().any(|p| m.contains(p.as_str())));
        }
        let other = SyntheticWorld::new(&SyntheticConfig { seed: 7, ..small() }).unwrap();
        assert_ne!(world.active_phrases, other.active_phrases);
        let zero = SyntheticConfig { phrases_per_message: 0, ..small() };
        assert!(generate_event_related(&zero, 5).unwrap_err().to_string().contains("not event-related"));
        let empty = SyntheticConfig { lexicon: SeedLexicon { addition_verbs: vec![], removal_verbs: vec![], ..SeedLexicon::default() }, ..small() };
        assert!(generate_event_related(&empty, 5).is_err());
    }

    #[test]
    fn bagging_layout() {
        let bg: Vec<String> = (0..335 * 100).map(|i| format!("b{i}")).collect();
        let ev: Vec<String> = (0..84 * 25).map(|i| format!("e{i}")).collect();
        let c = bag_timesteps(&bg, &ev, 0.25, 335, 0.25, 100, 0.6, 3).unwrap();
        let steps: Vec<&TimeStep> = c.dataset.steps().map(|(_, s)| s).collect();
        assert_eq!(steps.len(), 335);
        assert_eq!(steps.iter().filter(|s| s.label.is_event()).count(), 84);
        let body: std::collections::HashMap<&str, &str> = c.messages.iter().map(|m| (m.id.as_str(), m.body_raw.as_str())).collect();
        for s in steps {
            let n_ev = s.message_ids.iter().filter(|id| body[id.as_str()].starts_with('e')).count();
            assert_eq!(n_ev, if s.label.is_event() { 25 } else { 0 });
        }
        let distinct: BTreeSet<&str> = c.messages.iter().map(|m| m.body_raw.as_str()).collect();
        assert_eq!(distinct.len(), c.messages.len());
        assert!(c.messages.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
        assert!(bag_timesteps(&bg[..100], &ev, 0.25, 335, 0.25, 100, 0.6, 3).is_err());
    }
}
