use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::evaluate::EstimatorSettings;
use crate::corpus::{DumpFormat, EventKind};
use crate::error::{Error, Result};
use crate::learners::Family;
use crate::synthlab::SweepConfig;
use crate::textprep::TextConfig;
use crate::timegrid::StepDesign;
use crate::topics::TopicsConfig;

/// Prefix of environment overrides: `MICROEVENT__evaluation__n_perm=200`
/// sets `evaluation.n_perm`.
pub const ENV_PREFIX: &str = "MICROEVENT__";

/// JSON schema of [`ExperimentConfig`], shipped with the crate.
pub const CONFIG_SCHEMA: &str = include_str!("../../assets/config.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub messages: Option<String>,
    #[serde(default = "default_format")]
    pub format: DumpFormat,
    pub events: Option<String>,
    pub packages: Vec<String>,
    pub event_kind: EventKind,
    pub design: StepDesign,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
}

fn default_format() -> DumpFormat {
    DumpFormat::CanonicalJsonl
}

fn default_train_fraction() -> f64 {
    0.6
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SentimentConfig {
    /// Valence lexicon replacing the bundled one.
    pub lexicon_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub text: TextConfig,
    #[serde(default)]
    pub topics: TopicsConfig,
    #[serde(default)]
    pub sentiment: SentimentConfig,
    #[serde(default = "all_families")]
    pub estimators: Vec<Family>,
    #[serde(default)]
    pub evaluation: EstimatorSettings,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Label of the multiple-comparison family; defaults to the dataset name.
    #[serde(default)]
    pub correction_family: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: String,
    #[serde(default)]
    pub synth: SweepConfig,
}

fn all_families() -> Vec<Family> {
    Family::ALL.to_vec()
}

fn default_alpha() -> f64 {
    0.05
}

fn default_output() -> String {
    "out".into()
}

/// Parses `raw` as a JSON scalar when possible, else keeps it a string.
fn env_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Applies `MICROEVENT__a__b=v` pairs onto a config document.
pub fn apply_overrides<I: IntoIterator<Item = (String, String)>>(doc: &mut Value, vars: I) -> Result<()> {
    let mut vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (key, raw) in vars {
        let path: Vec<&str> = key[ENV_PREFIX.len()..].split("__").collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(Error::Config(format!("malformed override `{key}`")));
        }
        let mut node = &mut *doc;
        for (i, part) in path.iter().enumerate() {
            let obj = node.as_object_mut().ok_or_else(|| Error::Config(format!("override `{key}` descends into a non-object")))?;
            if i + 1 == path.len() {
                obj.insert(part.to_string(), env_value(&raw));
                break;
            }
            node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    /// Reads a config file, applies environment overrides and validates.
    /// Relative input paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::MissingInput(format!("config {}: {e}", path.display())))?;
        let mut doc: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        apply_overrides(&mut doc, std::env::vars())?;
        let mut config: ExperimentConfig = serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<String>| {
            if let Some(s) = p {
                let pb = PathBuf::from(&*s);
                if pb.is_relative() {
                    *s = base.join(pb).to_string_lossy().into_owned();
                }
            }
        };
        fix(&mut self.dataset.messages);
        fix(&mut self.dataset.events);
        fix(&mut self.sentiment.lexicon_path);
        fix(&mut self.text.stopwords_path);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dataset.packages.is_empty() {
            return bad("dataset.packages is empty".into());
        }
        let tf = self.dataset.train_fraction;
        if !(tf > 0.0 && tf < 1.0) {
            return bad(format!("dataset.train_fraction {tf} not in (0, 1)"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} not in (0, 1)", self.alpha));
        }
        if self.estimators.is_empty() {
            return bad("no estimators selected".into());
        }
        if !(self.text.max_df_fraction > 0.0 && self.text.max_df_fraction <= 1.0) {
            return bad("text.max_df_fraction must lie in (0, 1]".into());
        }
        match self.topics.k {
            Some(0) => return bad("topics.k must be positive".into()),
            None if self.topics.k_grid.len() < 3 => return bad("topics.k_grid needs >= 3 values".into()),
            _ => {}
        }
        if self.topics.fold_in_sweeps == 0 || self.topics.total_iterations <= self.topics.burn_in {
            return bad("topics: need fold_in_sweeps > 0 and total_iterations > burn_in".into());
        }
        self.evaluation.validate()?;
        self.synth.validate()
    }

    /// Input presence is checked when a stage needs it, so that the error
    /// names the missing input.
    pub fn messages_path(&self) -> Result<&str> {
        self.dataset.messages.as_deref().ok_or_else(|| Error::MissingInput("messages".into()))
    }

    pub fn events_path(&self) -> Result<&str> {
        self.dataset.events.as_deref().ok_or_else(|| Error::MissingInput("events".into()))
    }

    pub fn family_label(&self, dataset_name: &str) -> String {
        self.correction_family.clone().unwrap_or_else(|| dataset_name.to_string())
    }

    /// Canonical JSON of the settings that determine results: everything
    /// but the output directory, with input paths reduced to file names.
    pub fn canonical(&self) -> Value {
        let mut c = self.clone();
        c.output_dir = String::new();
        let file_name = |p: &mut Option<String>| {
            if let Some(s) = p {
                *s = Path::new(&*s).file_name().map_or_else(|| s.clone(), |f| f.to_string_lossy().into_owned());
            }
        };
        file_name(&mut c.dataset.messages);
        file_name(&mut c.dataset.events);
        file_name(&mut c.sentiment.lexicon_path);
        file_name(&mut c.text.stopwords_path);
        let mut v = serde_json::to_value(c).expect("config serializes");
        v.as_object_mut().expect("object").remove("output_dir");
        v
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.canonical()).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
