//! Lexicon sentiment with negation handling.
//!
//! Valences are summed into `s` and squashed as `s / sqrt(s^2 + 15)`.
//! The three proportions follow the usual mass rule: a positive token
//! contributes `s + 1`, a negative one `|s - 1|`, any other token `1`.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_LEXICON: &str = include_str!("../assets/valence_lexicon.tsv");
const NORMALIZATION_ALPHA: f64 = 15.0;
const NEGATION_SCALAR: f64 = -0.74;
const NEGATION_WINDOW: usize = 3;

const NEGATORS: &[&str] = &[
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "dont", "hadnt", "hasnt",
    "havent", "isnt", "mightnt", "mustnt", "neither", "neednt", "never", "none", "nope", "nor", "not",
    "nothing", "nowhere", "oughtnt", "shant", "shouldnt", "uhuh", "wasnt", "werent", "without", "wont",
    "wouldnt", "rarely", "seldom", "despite",
];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SentimentScore {
    pub negative: f64,
    pub neutral: f64,
    pub positive: f64,
    pub compound: f64,
}

impl SentimentScore {
    pub const COMPONENTS: [&'static str; 4] = ["negative", "neutral", "positive", "compound"];

    pub fn to_array(self) -> [f64; 4] {
        [self.negative, self.neutral, self.positive, self.compound]
    }
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    valence: HashMap<String, f64>,
}

impl Lexicon {
    pub fn from_tsv<R: BufRead>(r: R) -> Result<Self> {
        let mut valence = HashMap::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(tok), Some(val)) = (parts.next(), parts.next()) else {
                return Err(Error::Malformed(format!("lexicon line {}", n + 1)));
            };
            let v: f64 = val
                .trim()
                .parse()
                .map_err(|_| Error::Malformed(format!("lexicon valence on line {}", n + 1)))?;
            if !(-4.0..=4.0).contains(&v) {
                return Err(Error::Malformed(format!("lexicon valence {v} outside [-4, 4]")));
            }
            valence.insert(tok.trim().to_lowercase(), v);
        }
        Ok(Self { valence })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::MissingInput(format!("lexicon {}: {e}", path.display())))?;
        Self::from_tsv(std::io::BufReader::new(f))
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        Self { valence: pairs.into_iter().map(|(t, v)| (t.to_string(), v)).collect() }
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.valence.get(token).copied()
    }

    /// Entries in lexicographic order.
    pub fn words(&self) -> Vec<&str> {
        let mut w: Vec<&str> = self.valence.keys().map(String::as_str).collect();
        w.sort_unstable();
        w
    }

    pub fn len(&self) -> usize {
        self.valence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valence.is_empty()
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::from_tsv(DEFAULT_LEXICON.as_bytes()).expect("bundled lexicon")
    }
}

fn words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'')
                .trim_matches('\'')
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

fn is_negator(word: &str) -> bool {
    let bare: String = word.chars().filter(|&c| c != '\'').collect();
    NEGATORS.contains(&bare.as_str()) || word.ends_with("n't")
}

pub fn compound(s: f64) -> f64 {
    s / (s * s + NORMALIZATION_ALPHA).sqrt()
}

pub fn score_sentiment(text: &str, lexicon: &Lexicon) -> SentimentScore {
    let words = words(text);
    if words.is_empty() {
        return SentimentScore::default();
    }
    let mut sum = 0.0;
    let (mut pos, mut neg, mut neu) = (0.0, 0.0, 0.0);
    for (i, w) in words.iter().enumerate() {
        let Some(mut v) = lexicon.get(w) else {
            neu += 1.0;
            continue;
        };
        let from = i.saturating_sub(NEGATION_WINDOW);
        if words[from..i].iter().any(|p| is_negator(p)) {
            v *= NEGATION_SCALAR;
        }
        sum += v;
        if v > 0.0 {
            pos += v + 1.0;
        } else if v < 0.0 {
            neg += v - 1.0;
        } else {
            neu += 1.0;
        }
    }
    let total = pos + neg.abs() + neu;
    SentimentScore {
        negative: neg.abs() / total,
        neutral: neu / total,
        positive: pos / total,
        compound: compound(sum),
    }
}
