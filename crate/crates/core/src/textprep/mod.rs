//! Markup stripping, tokenization, collocation detection and the bounded
//! vocabulary that feeds topic modeling and coherence scoring.

mod markup;
mod stem;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use markup::strip_markup;
pub use stem::porter_stem;

const DEFAULT_STOPWORDS: &str = include_str!("../../assets/stopwords.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub message_id: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn from_lines<R: BufRead>(r: R) -> Result<Self> {
        let mut set = HashSet::new();
        for line in r.lines() {
            let w = line?.trim().to_lowercase();
            if !w.is_empty() && !w.starts_with('#') {
                set.insert(w);
            }
        }
        Ok(Self(set))
    }

    pub fn contains(&self, w: &str) -> bool {
        self.0.contains(w)
    }

    pub fn empty() -> Self {
        Self(HashSet::new())
    }
}

impl Default for Stopwords {
    fn default() -> Self {
        Self::from_lines(DEFAULT_STOPWORDS.as_bytes()).expect("bundled stopwords")
    }
}

/// Lowercase, split on non-alphanumerics, drop short tokens, numbers and
/// stopwords, then stem.
pub fn tokenize_normalize(clean_text: &str, stopwords: &Stopwords) -> Vec<String> {
    clean_text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| t.chars().count() >= 3)
        .filter(|t| !t.chars().all(|c| c.is_numeric()))
        .filter(|t| !stopwords.contains(t))
        .map(|t| porter_stem(&t))
        .collect()
}

/// One collocation pass: adjacent pairs that score above threshold are
/// joined with `_`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PhraseModel {
    pub min_count: usize,
    pub threshold: f64,
    pub phrases: BTreeSet<(String, String)>,
}

impl PhraseModel {
    /// Scores every adjacent pair as
    /// `(count(a,b) - min_count) * V / (count(a) * count(b))` with `V` the
    /// number of distinct tokens.
    pub fn fit(streams: &[Vec<String>], min_count: usize, threshold: f64) -> Result<Self> {
        if min_count < 1 {
            return Err(Error::InvalidArgument("collocation min_count must be >= 1".into()));
        }
        let mut unigrams: HashMap<&str, usize> = HashMap::new();
        let mut bigrams: HashMap<(&str, &str), usize> = HashMap::new();
        for s in streams {
            for t in s {
                *unigrams.entry(t).or_default() += 1;
            }
            for w in s.windows(2) {
                *bigrams.entry((&w[0], &w[1])).or_default() += 1;
            }
        }
        let vocab = unigrams.len() as f64;
        let phrases = bigrams
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .filter(|((a, b), c)| {
                let score = (*c - min_count) as f64 * vocab / (unigrams[a] as f64 * unigrams[b] as f64);
                score >= threshold
            })
            .map(|((a, b), _)| (a.to_string(), b.to_string()))
            .collect();
        Ok(Self { min_count, threshold, phrases })
    }

    /// Greedy left-to-right joining.
    pub fn apply(&self, tokens: &[String]) -> Vec<String> {
        if self.phrases.is_empty() {
            return tokens.to_vec();
        }
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            if i + 1 < tokens.len() && self.phrases.contains(&(tokens[i].clone(), tokens[i + 1].clone())) {
                out.push(format!("{}_{}", tokens[i], tokens[i + 1]));
                i += 2;
            } else {
                out.push(tokens[i].clone());
                i += 1;
            }
        }
        out
    }
}

/// Two stacked phrase passes: bigrams, then bigrams over the joined
/// streams (yielding trigrams).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Collocations {
    pub bigrams: PhraseModel,
    pub trigrams: PhraseModel,
}

pub fn detect_collocations(streams: &[Vec<String>], min_count: usize, threshold: f64) -> Result<Collocations> {
    let bigrams = PhraseModel::fit(streams, min_count, threshold)?;
    let joined: Vec<Vec<String>> = streams.iter().map(|s| bigrams.apply(s)).collect();
    let trigrams = PhraseModel::fit(&joined, min_count, threshold)?;
    Ok(Collocations { bigrams, trigrams })
}

impl Collocations {
    pub fn apply(&self, tokens: &[String]) -> Vec<String> {
        self.trigrams.apply(&self.bigrams.apply(tokens))
    }
}

/// Dense token ids with document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    df: Vec<usize>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Tokens are kept when `df >= min_df` and `df / D <= max_df_fraction`;
    /// ids follow lexicographic token order.
    pub fn fit(train_streams: &[Vec<String>], min_df: usize, max_df_fraction: f64) -> Result<Self> {
        let n_docs = train_streams.len();
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for s in train_streams {
            let uniq: BTreeSet<&str> = s.iter().map(String::as_str).collect();
            for t in uniq {
                *df.entry(t).or_default() += 1;
            }
        }
        let (tokens, dfs): (Vec<String>, Vec<usize>) = df
            .into_iter()
            .filter(|(_, d)| *d >= min_df && (*d as f64) <= max_df_fraction * n_docs as f64)
            .map(|(t, d)| (t.to_string(), d))
            .unzip();
        if tokens.is_empty() {
            return Err(Error::Empty("vocabulary is empty after document-frequency bounds"));
        }
        Ok(Self::from_parts(tokens, dfs))
    }

    pub fn from_parts(tokens: Vec<String>, df: Vec<usize>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { tokens, df, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        if self.index.is_empty() && !self.tokens.is_empty() {
            return self.tokens.iter().position(|t| t == token).map(|i| i as u32);
        }
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn df(&self, id: u32) -> usize {
        self.df[id as usize]
    }

    /// Sparse counts sorted by id; out-of-vocabulary tokens are dropped.
    pub fn encode_bow(&self, stream: &[String]) -> Vec<(u32, u32)> {
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for t in stream {
            if let Some(id) = self.id(t) {
                *counts.entry(id).or_default() += 1;
            }
        }
        counts.into_iter().collect()
    }

    /// In-vocabulary token ids in stream order.
    pub fn encode_ids(&self, stream: &[String]) -> Vec<u32> {
        stream.iter().filter_map(|t| self.id(t)).collect()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, (t, d)) in self.tokens.iter().zip(&self.df).enumerate() {
            writeln!(out, "{t}\t{i}\t{d}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self> {
        let mut rows = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(t), Some(id), Some(df)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Malformed(format!("vocabulary row `{line}`")));
            };
            let id: usize = id.parse().map_err(|_| Error::Malformed(format!("vocabulary id `{id}`")))?;
            let df: usize = df.parse().map_err(|_| Error::Malformed(format!("vocabulary df `{df}`")))?;
            rows.push((id, t.to_string(), df));
        }
        rows.sort_by_key(|r| r.0);
        if rows.iter().enumerate().any(|(i, r)| r.0 != i) {
            return Err(Error::Malformed("vocabulary ids are not contiguous".into()));
        }
        let (tokens, df) = rows.into_iter().map(|(_, t, d)| (t, d)).unzip();
        Ok(Self::from_parts(tokens, df))
    }
}

/// Text pipeline settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TextConfig {
    pub min_df: usize,
    pub max_df_fraction: f64,
    pub collocation_min_count: usize,
    pub collocation_threshold: f64,
    /// Optional stopword file replacing the bundled list.
    pub stopwords_path: Option<String>,
}

impl Default for TextConfig {
    fn default() -> Self {
        Self {
            min_df: 5,
            max_df_fraction: 0.5,
            collocation_min_count: 20,
            collocation_threshold: 10.0,
            stopwords_path: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn tokenize_examples() {
        let sw = Stopwords::default();
        assert_eq!(tokenize_normalize("Testing tests!", &sw), ["test", "test"]);
        assert!(tokenize_normalize("a an the", &sw).is_empty());
        assert!(tokenize_normalize("x2 42", &sw).is_empty());
        assert!(tokenize_normalize("1234 2018", &sw).is_empty());
    }

    #[test]
    fn unit_test_is_joined() {
        // "unit" and "test" are always adjacent: count(unit,test) = 3,
        // count(unit) = count(test) = 3, V = 5 (unit test foo bar baz).
        // score = (3 - 2) * 5 / (3 * 3) = 0.5556.
        let streams = vec![toks("unit test foo"), toks("bar unit test"), toks("unit test baz")];
        let m = PhraseModel::fit(&streams, 2, 0.55).unwrap();
        assert_eq!(m.apply(&streams[1]), ["bar", "unit_test"]);
        let strict = PhraseModel::fit(&streams, 2, 0.56).unwrap();
        assert_eq!(strict.apply(&streams[1]), streams[1]);
    }

    #[test]
    fn trigram_from_second_pass() {
        let streams: Vec<_> = (0..4).map(|_| toks("django rest framework view")).collect();
        let c = detect_collocations(&streams, 1, 0.1).unwrap();
        let out = c.apply(&toks("django rest framework view"));
        // bigram pass joins (django, rest) and (framework, view); the second
        // pass joins the two bigrams
        assert_eq!(out, ["django_rest_framework_view"]);
    }

    #[test]
    fn infinite_threshold_is_identity() {
        let streams = vec![toks("a b a b"), toks("a b c")];
        let c = detect_collocations(&streams, 1, f64::INFINITY).unwrap();
        for s in &streams {
            assert_eq!(&c.apply(s), s);
        }
    }

    #[test]
    fn vocabulary_bounds_and_encoding() {
        let train = vec![toks("a b c"), toks("a b"), toks("a d"), toks("a c")];
        let v = Vocabulary::fit(&train, 1, 0.5).unwrap();
        // "a" occurs in every document and is excluded
        assert_eq!(v.tokens(), ["b", "c", "d"]);
        assert_eq!(v.encode_bow(&toks("b b c zzz")), [(0, 2), (1, 1)]);
        let v2 = Vocabulary::from_parts(vec!["a".into(), "b".into()], vec![1, 1]);
        assert_eq!(v2.encode_bow(&toks("a a b")), [(0, 2), (1, 1)]);
        assert!(Vocabulary::fit(&train, 10, 1.0).is_err());
    }

    #[test]
    fn vocabulary_tsv_roundtrip() {
        let v = Vocabulary::from_parts(vec!["x".into(), "y".into()], vec![3, 4]);
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "x\t0\t3\ny\t1\t4\n");
        assert_eq!(Vocabulary::read_tsv(&buf[..]).unwrap(), v);
    }
}
