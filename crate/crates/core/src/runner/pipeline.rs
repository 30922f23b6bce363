//! Staged execution. Every stage reads the artifacts of its predecessors
//! from the output directory and writes its own, so each can run on its
//! own once the earlier ones have.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::evaluate::{diagnose_logistic, evaluate_estimator, train_estimator, EstimatorEvaluation, TrainedEstimator};
use super::featurize::featurize;
use super::report::{
    emit_report, sweep_svg, DataSummary, EstimatorSummary, ExperimentReport, Provenance, ReportFormat, TopicSummary,
    REPORT_SCHEMA_VERSION,
};
use crate::corpus::{
    chronological_split, filter_by_packages, import_events, import_messages, union_corpus, write_events, write_jsonl, DumpFormat,
    Message, ReleaseEvent,
};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::learners::Family;
use crate::seed;
use crate::sentiment::Lexicon;
use crate::stats::diagnostics::LrDiagnostics;
use crate::stats::{cliffs_delta, holm_bonferroni, EffectSize, HolmResult};
use crate::synthlab::{
    detectability_sweep, instance_pools, novelty_diversity, synthetic_corpus, write_results_csv, write_summary_csv, SimilarityReport,
    SweepReport,
};
use crate::textprep::{strip_markup, tokenize_normalize, Stopwords};
use crate::timegrid::{assemble_dataset, build_steps, dataset_name, steps_sidecar, write_steps_csv, Partition, StepDataset};
use crate::topics::write_coherence_csv;
use crate::tuning::{write_curve_csv, write_grid_csv};

const LOCK_FILE: &str = ".lock";
const MANIFEST: &str = "manifest.json";

/// JSON artifact wrapper tying a payload to the config that produced it.
#[derive(Serialize, Deserialize)]
struct Stamped<T> {
    config_hash: String,
    payload: T,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub stage: String,
    pub sha256: String,
}

/// Index of every file in an output directory with its content hash.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub files: BTreeMap<String, ManifestEntry>,
}

struct Lock(PathBuf);

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// An output directory opened for one config: holds the writer lock and
/// the manifest.
pub struct RunContext {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub hash: String,
    manifest: Manifest,
    _lock: Lock,
}

impl RunContext {
    /// Creates `out`, takes the lock and checks that any artifacts already
    /// present came from the same config.
    pub fn open(config: ExperimentConfig, out: &Path) -> Result<Self> {
        fs::create_dir_all(out)?;
        let lock_path = out.join(LOCK_FILE);
        let mut f = OpenOptions::new().write(true).create_new(true).open(&lock_path).map_err(|e| match e.kind() {
            std::io::ErrorKind::AlreadyExists => Error::Config(format!(
                "{} is locked by another run (remove {} if it is stale)",
                out.display(),
                lock_path.display()
            )),
            _ => Error::Io(e),
        })?;
        writeln!(f, "{}", std::process::id())?;
        let lock = Lock(lock_path);
        let hash = config.hash();
        let manifest_path = out.join(MANIFEST);
        let manifest = if manifest_path.exists() {
            let m: Manifest = serde_json::from_slice(&fs::read(&manifest_path)?)?;
            if m.config_hash != hash {
                return Err(Error::Config(format!(
                    "{} holds artifacts of config {}, current config is {}",
                    out.display(),
                    m.config_hash,
                    hash
                )));
            }
            m
        } else {
            Manifest { config_hash: hash.clone(), files: BTreeMap::new() }
        };
        let mut ctx = RunContext { config, out: out.to_path_buf(), hash, manifest, _lock: lock };
        let resolved = serde_json::to_value(&ctx.config)?;
        ctx.write_json("config", "config.json", &resolved)?;
        Ok(ctx)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn record(&mut self, stage: &str, name: &str) -> Result<()> {
        let digest = hex::encode(Sha256::digest(fs::read(self.path(name))?));
        self.manifest.files.insert(name.to_string(), ManifestEntry { stage: stage.to_string(), sha256: digest });
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        fs::write(self.path(MANIFEST), text)?;
        Ok(())
    }

    fn write_bytes(&mut self, stage: &str, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&p, bytes)?;
        self.record(stage, name)
    }

    fn write_with<F>(&mut self, stage: &str, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let p = self.path(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut w = BufWriter::new(File::create(&p)?);
        f(&mut w)?;
        w.flush()?;
        drop(w);
        self.record(stage, name)
    }

    fn write_json<T: Serialize>(&mut self, stage: &str, name: &str, payload: &T) -> Result<()> {
        let doc = Stamped { config_hash: self.hash.clone(), payload };
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        self.write_bytes(stage, name, text.as_bytes())
    }

    fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        let p = self.path(name);
        let bytes = fs::read(&p).map_err(|_| Error::MissingInput(format!("artifact {}", p.display())))?;
        let doc: Stamped<T> = serde_json::from_slice(&bytes)?;
        if doc.config_hash != self.hash {
            return Err(Error::Config(format!("{name} was produced by config {}, current is {}", doc.config_hash, self.hash)));
        }
        Ok(doc.payload)
    }

    fn open_artifact(&self, name: &str) -> Result<BufReader<File>> {
        let p = self.path(name);
        Ok(BufReader::new(File::open(&p).map_err(|_| Error::MissingInput(format!("artifact {}", p.display())))?))
    }

    fn messages(&self) -> Result<Vec<Message>> {
        Ok(import_messages(self.open_artifact("messages.jsonl")?, DumpFormat::CanonicalJsonl)?.messages)
    }

    fn features(&self) -> Result<FeatureMatrix> {
        FeatureMatrix::read_csv(self.open_artifact("features.csv")?)
    }

    fn stopwords(&self) -> Result<Stopwords> {
        match &self.config.text.stopwords_path {
            Some(p) => Stopwords::from_lines(BufReader::new(File::open(p).map_err(|_| Error::MissingInput(format!("stopwords {p}")))?)),
            None => Ok(Stopwords::default()),
        }
    }

    fn lexicon(&self) -> Result<Lexicon> {
        match &self.config.sentiment.lexicon_path {
            Some(p) => Lexicon::load(Path::new(p)),
            None => Ok(Lexicon::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub dataset: String,
    pub rows_read: usize,
    pub skipped: usize,
    pub duplicates: usize,
    pub parse_errors: Vec<String>,
    pub per_package: BTreeMap<String, usize>,
    pub n_messages: usize,
    pub n_events: usize,
    pub n_train_messages: usize,
    pub n_test_messages: usize,
    pub split_instant: DateTime<Utc>,
}

fn dataset_label(packages: &[String]) -> String {
    match packages {
        [one] => one.trim().to_lowercase(),
        _ => "multiple".into(),
    }
}

/// Reads the dump and the release history, keeps messages of the
/// configured packages and fixes the chronological split.
pub fn stage_ingest(ctx: &mut RunContext) -> Result<IngestSummary> {
    let cfg = &ctx.config.dataset;
    let mpath = ctx.config.messages_path()?.to_string();
    let epath = ctx.config.events_path()?.to_string();
    let mfile = File::open(&mpath).map_err(|_| Error::MissingInput(format!("messages ({mpath})")))?;
    let efile = File::open(&epath).map_err(|_| Error::MissingInput(format!("events ({epath})")))?;
    let import = import_messages(BufReader::new(mfile), cfg.format)?;
    let by_package = filter_by_packages(&import.messages, &cfg.packages)?;
    let messages = union_corpus(&by_package);
    let wanted: Vec<String> = cfg.packages.iter().map(|p| p.trim().to_lowercase()).collect();
    let events: Vec<ReleaseEvent> = import_events(BufReader::new(efile))?.into_iter().filter(|e| wanted.contains(&e.package)).collect();
    let split = chronological_split(&messages, cfg.train_fraction)?;
    let summary = IngestSummary {
        dataset: dataset_label(&cfg.packages),
        rows_read: import.messages.len() + import.skipped + import.duplicates,
        skipped: import.skipped,
        duplicates: import.duplicates,
        parse_errors: import.errors.iter().take(20).cloned().collect(),
        per_package: by_package.iter().map(|(k, v)| (k.clone(), v.len())).collect(),
        n_messages: messages.len(),
        n_events: events.len(),
        n_train_messages: split.train.len(),
        n_test_messages: split.test.len(),
        split_instant: split.split_instant,
    };
    ctx.write_with("ingest", "messages.jsonl", |w| write_jsonl(&messages, w))?;
    ctx.write_with("ingest", "events.csv", |w| write_events(&events, w))?;
    ctx.write_json("ingest", "ingest.json", &summary)?;
    Ok(summary)
}

/// Buckets messages into labeled steps and assigns partitions.
pub fn stage_timesteps(ctx: &mut RunContext) -> Result<StepDataset> {
    let ingest: IngestSummary = ctx.read_json("ingest.json")?;
    let messages = ctx.messages()?;
    let events = import_events(ctx.open_artifact("events.csv")?)?;
    let cfg = &ctx.config.dataset;
    let steps = build_steps(cfg.design, &messages, &events, cfg.event_kind)?;
    let name = dataset_name(&ingest.dataset, cfg.event_kind, cfg.design);
    let dataset = assemble_dataset(name, cfg.event_kind, cfg.design, steps, ingest.split_instant)?;
    write_dataset(ctx, "timesteps", &dataset)?;
    Ok(dataset)
}

fn write_dataset(ctx: &mut RunContext, stage: &str, dataset: &StepDataset) -> Result<()> {
    ctx.write_with(stage, "steps.csv", |w| write_steps_csv(dataset, w))?;
    ctx.write_json(stage, "steps.json", &steps_sidecar(dataset))?;
    ctx.write_json(stage, "dataset.json", dataset)
}

/// Text models, per-message vectors and pooled step features.
pub fn stage_features(ctx: &mut RunContext) -> Result<TopicSummary> {
    let dataset: StepDataset = ctx.read_json("dataset.json")?;
    let messages = ctx.messages()?;
    let (stopwords, lexicon) = (ctx.stopwords()?, ctx.lexicon()?);
    let c = &ctx.config;
    let f = featurize(&messages, &dataset, &c.text, &c.topics, &stopwords, &lexicon, seed::derive(c.seed, "features", 0))?;
    let top_words = (0..f.k)
        .map(|t| Ok(f.model.top_words(t, c.topics.top_n)?.into_iter().map(|(w, _)| w).collect()))
        .collect::<Result<Vec<Vec<String>>>>()?;
    let summary = TopicSummary {
        k: f.k,
        coherence: f.coherence.mean,
        coherence_curve: f.k_selection.as_ref().map_or_else(Vec::new, |s| s.mean_curve.clone()),
        no_elbow: f.k_selection.as_ref().is_some_and(|s| s.no_elbow),
        top_words,
    };
    ctx.write_with("features", "vocabulary.tsv", |w| f.vocabulary.write_tsv(w))?;
    ctx.write_json("features", "collocations.json", &f.collocations)?;
    f.model.save(&ctx.out, "lda")?;
    ctx.record("features", "lda.json")?;
    ctx.record("features", "lda.csv")?;
    let points = f.k_selection.as_ref().map_or_else(Vec::new, |s| s.points.clone());
    ctx.write_with("features", "coherence.csv", |w| write_coherence_csv(&points, w))?;
    ctx.write_json("features", "topics.json", &(&summary, &f.coherence))?;
    ctx.write_with("features", "features.csv", |w| f.features.write_csv(w))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub family: Family,
    pub error: Option<String>,
}

fn model_name(family: Family) -> String {
    format!("models/{}.json", family.as_str())
}

/// Fits every configured estimator; a failing estimator is recorded and
/// the others proceed.
pub fn stage_train(ctx: &mut RunContext) -> Result<Vec<TrainOutcome>> {
    let features = ctx.features()?;
    let seed = seed::derive(ctx.config.seed, "train", 0);
    let mut outcomes = Vec::new();
    for family in ctx.config.estimators.clone() {
        match train_estimator(family, &features, &ctx.config.evaluation, seed) {
            Ok(t) => {
                ctx.write_with("train", &format!("selection_{}.csv", family.as_str()), |w| write_curve_csv(&t.selection, w))?;
                if let Some(g) = &t.grid {
                    ctx.write_with("train", &format!("grid_{}.csv", family.as_str()), |w| write_grid_csv(g, w))?;
                }
                ctx.write_json("train", &model_name(family), &t)?;
                outcomes.push(TrainOutcome { family, error: None });
            }
            Err(e) => outcomes.push(TrainOutcome { family, error: Some(e.to_string()) }),
        }
    }
    ctx.write_json("train", "train.json", &outcomes)?;
    Ok(outcomes)
}

fn load_trained(ctx: &RunContext) -> Result<Vec<(Family, std::result::Result<TrainedEstimator, String>)>> {
    let outcomes: Vec<TrainOutcome> = ctx.read_json("train.json")?;
    outcomes
        .into_iter()
        .map(|o| match o.error {
            Some(e) => Ok((o.family, Err(format!("training failed: {e}")))),
            None => Ok((o.family, Ok(ctx.read_json(&model_name(o.family))?))),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutcome {
    pub family: Family,
    pub evaluation: Option<EstimatorEvaluation>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub correction_family: String,
    pub estimators: Vec<EvaluationOutcome>,
    /// Holm over the permutation p-values of the evaluated estimators, in
    /// the order of `estimators` with failures skipped.
    pub holm: Option<HolmResult>,
    /// Events versus controls on the training partition, per feature.
    pub effect_sizes: Vec<EffectSize>,
}

fn effect_sizes(features: &FeatureMatrix, alpha: f64) -> Result<Vec<EffectSize>> {
    let train = features.partition(Partition::Train);
    let m = train.columns.len();
    train
        .columns
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col = train.x.column(j);
            let (events, controls): (Vec<(f64, bool)>, Vec<(f64, bool)>) =
                col.iter().copied().zip(train.labels.iter().copied()).partition(|&(_, l)| l);
            let a: Vec<f64> = events.into_iter().map(|(v, _)| v).collect();
            let b: Vec<f64> = controls.into_iter().map(|(v, _)| v).collect();
            cliffs_delta(name, &a, &b, alpha, m)
        })
        .collect()
}

pub fn stage_evaluate(ctx: &mut RunContext) -> Result<EvaluationSummary> {
    let features = ctx.features()?;
    let dataset: StepDataset = ctx.read_json("dataset.json")?;
    let seed = seed::derive(ctx.config.seed, "evaluate", 0);
    let estimators: Vec<EvaluationOutcome> = load_trained(ctx)?
        .into_iter()
        .map(|(family, trained)| match trained.and_then(|t| evaluate_estimator(&t, &features, &ctx.config.evaluation, seed).map_err(|e| e.to_string())) {
            Ok(ev) => EvaluationOutcome { family, evaluation: Some(ev), error: None },
            Err(e) => EvaluationOutcome { family, evaluation: None, error: Some(e) },
        })
        .collect();
    let ps: Vec<f64> = estimators.iter().filter_map(|e| e.evaluation.as_ref().map(|v| v.permutation.p_value)).collect();
    let summary = EvaluationSummary {
        correction_family: ctx.config.family_label(&dataset.name),
        holm: (!ps.is_empty()).then(|| holm_bonferroni(&ps, ctx.config.alpha)),
        effect_sizes: effect_sizes(&features, ctx.config.alpha)?,
        estimators,
    };
    ctx.write_json("evaluate", "evaluation.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsOutcome {
    pub diagnostics: Option<LrDiagnostics>,
    pub error: Option<String>,
    /// Holm over the coefficient p-values, intercept first.
    pub coefficient_significant: Vec<bool>,
}

pub fn stage_diagnose(ctx: &mut RunContext) -> Result<DiagnosticsOutcome> {
    let features = ctx.features()?;
    let trained = load_trained(ctx)?.into_iter().find(|(f, _)| *f == Family::Logistic);
    let result = match trained {
        None => Err("logistic regression was not configured".to_string()),
        Some((_, t)) => t.and_then(|t| diagnose_logistic(&t, &features, ctx.config.alpha, &ctx.config.evaluation).map_err(|e| e.to_string())),
    };
    let outcome = match result {
        Ok(d) => {
            let ps: Vec<f64> = d.coefficients.iter().map(|c| c.p_value).collect();
            let coefficient_significant = holm_bonferroni(&ps, ctx.config.alpha).significant;
            DiagnosticsOutcome { diagnostics: Some(d), error: None, coefficient_significant }
        }
        Err(e) => DiagnosticsOutcome { diagnostics: None, error: Some(e), coefficient_significant: vec![] },
    };
    ctx.write_json("diagnose", "diagnostics.json", &outcome)?;
    Ok(outcome)
}

/// Assembles the report from the persisted artifacts and writes it in the
/// requested formats.
pub fn stage_report(ctx: &mut RunContext, formats: &[ReportFormat]) -> Result<ExperimentReport> {
    let ingest: IngestSummary = ctx.read_json("ingest.json").or_else(|_| ctx.read_json::<SynthSummary>("synth.json").map(IngestSummary::from))?;
    let dataset: StepDataset = ctx.read_json("dataset.json")?;
    let (topics, _): (TopicSummary, serde_json::Value) = ctx.read_json("topics.json")?;
    let trained = load_trained(ctx)?;
    let evaluation: EvaluationSummary = ctx.read_json("evaluation.json")?;
    let diagnostics: DiagnosticsOutcome = ctx.read_json("diagnostics.json")?;
    let count = |steps: &[crate::timegrid::TimeStep]| steps.iter().filter(|s| s.label.is_event()).count();

    let mut holm_pos = 0;
    let estimators = evaluation
        .estimators
        .iter()
        .map(|e| {
            let t = trained.iter().find(|(f, _)| *f == e.family).and_then(|(_, t)| t.as_ref().ok());
            let (holm_significant, holm_threshold) = match (&e.evaluation, &evaluation.holm) {
                (Some(_), Some(h)) => {
                    holm_pos += 1;
                    (h.significant[holm_pos - 1], Some(h.thresholds[holm_pos - 1]))
                }
                _ => (false, None),
            };
            EstimatorSummary {
                family: e.family,
                error: e.error.clone(),
                metrics: e.evaluation.as_ref().map(|v| v.metrics.clone()),
                p_value: e.evaluation.as_ref().map(|v| v.permutation.p_value),
                holm_significant,
                holm_threshold,
                selected_features: t.map_or_else(Vec::new, |t| t.selection.selected.clone()),
                tuned_params: t.and_then(|t| t.grid.as_ref().map(|g| g.best_params.clone())),
                importance: e.evaluation.as_ref().map_or_else(Vec::new, |v| v.importance.clone()),
            }
        })
        .collect();

    let report = ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        dataset: dataset.name.clone(),
        correction_family: evaluation.correction_family.clone(),
        alpha: ctx.config.alpha,
        data: DataSummary {
            n_messages: ingest.n_messages,
            n_events: ingest.n_events,
            n_train_steps: dataset.train.len(),
            n_test_steps: dataset.test.len(),
            n_train_positive: count(&dataset.train),
            n_test_positive: count(&dataset.test),
            dropped_steps: dataset.dropped,
            split_instant: dataset.split_instant.to_rfc3339_opts(SecondsFormat::Secs, true),
        },
        topics,
        estimators,
        lr_diagnostics: diagnostics.diagnostics,
        lr_diagnostics_error: diagnostics.error,
        coefficient_significant: diagnostics.coefficient_significant,
        effect_sizes: evaluation.effect_sizes,
        provenance: Provenance {
            config_hash: ctx.hash.clone(),
            seed: ctx.config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: ctx.config.canonical(),
            generated_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        },
    };
    for p in emit_report(&report, formats, &ctx.out)? {
        let name = p.strip_prefix(&ctx.out).unwrap_or(&p).to_string_lossy().into_owned();
        ctx.record("report", &name)?;
    }
    Ok(report)
}

pub const STAGES: [&str; 7] = ["ingest", "timesteps", "features", "train", "evaluate", "diagnose", "report"];

/// Runs one named stage, naming it in any error.
pub fn run_stage(ctx: &mut RunContext, stage: &str, formats: &[ReportFormat]) -> Result<()> {
    let r = match stage {
        "ingest" => stage_ingest(ctx).map(drop).map_err(|e| e.at_stage("ingest")),
        "timesteps" => stage_timesteps(ctx).map(drop).map_err(|e| e.at_stage("timesteps")),
        "features" => stage_features(ctx).map(drop).map_err(|e| e.at_stage("features")),
        "train" => stage_train(ctx).map(drop).map_err(|e| e.at_stage("train")),
        "evaluate" => stage_evaluate(ctx).map(drop).map_err(|e| e.at_stage("evaluate")),
        "diagnose" => stage_diagnose(ctx).map(drop).map_err(|e| e.at_stage("diagnose")),
        "report" => stage_report(ctx, formats).map(drop).map_err(|e| e.at_stage("report")),
        other => Err(Error::InvalidArgument(format!("unknown stage `{other}`"))),
    };
    r
}

/// All stages in order into `out`. Artifacts of completed stages are kept
/// when a later stage fails.
pub fn run_pipeline(config: ExperimentConfig, out: &Path, formats: &[ReportFormat]) -> Result<ExperimentReport> {
    let mut ctx = RunContext::open(config, out)?;
    for stage in &STAGES[..STAGES.len() - 1] {
        run_stage(&mut ctx, stage, formats)?;
    }
    stage_report(&mut ctx, formats).map_err(|e| e.at_stage("report"))
}

/// Detectability sweep over `config.synth`, writing per-cell and summary
/// CSVs, the full report and optionally the scatter plot.
pub fn run_synth_sweep(config: ExperimentConfig, out: &Path, formats: &[ReportFormat]) -> Result<SweepReport> {
    let mut ctx = RunContext::open(config, out)?;
    let report = detectability_sweep(&ctx.config.synth).map_err(|e| e.at_stage("sweep"))?;
    ctx.write_with("sweep", "sweep_results.csv", |w| write_results_csv(&report, w))?;
    ctx.write_with("sweep", "sweep_summary.csv", |w| write_summary_csv(&report, w))?;
    ctx.write_json("sweep", "sweep.json", &report)?;
    if formats.contains(&ReportFormat::Svg) {
        ctx.write_bytes("sweep", "sweep.svg", sweep_svg(&report).as_bytes())?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub f: f64,
    pub seed: u64,
    pub n_messages: usize,
    pub split_instant: DateTime<Utc>,
    /// Background posts of this instance against those of the next seed.
    pub similarity: SimilarityReport,
}

impl From<SynthSummary> for IngestSummary {
    fn from(s: SynthSummary) -> Self {
        IngestSummary {
            dataset: "synthetic".into(),
            rows_read: s.n_messages,
            skipped: 0,
            duplicates: 0,
            parse_errors: vec![],
            per_package: BTreeMap::new(),
            n_messages: s.n_messages,
            n_events: 0,
            n_train_messages: 0,
            n_test_messages: 0,
            split_instant: s.split_instant,
        }
    }
}

/// Writes one synthetic corpus at fraction `f` in place of the ingest and
/// timesteps stages, so that the remaining stages can run on it.
pub fn run_synth(ctx: &mut RunContext, f: f64, sample_size: usize, repeats: usize) -> Result<SynthSummary> {
    let syn = ctx.config.synth.synthetic.clone();
    syn.validate()?;
    let pools = instance_pools(&syn, f)?;
    let corpus = synthetic_corpus(&syn, &pools, f)?;
    let other = crate::synthlab::SyntheticConfig { seed: seed::derive(syn.seed, "similarity_reference", 0), ..syn.clone() };
    let other_pools = instance_pools(&other, 0.0)?;
    let stopwords = ctx.stopwords()?;
    let tok = |posts: &[String]| -> Vec<Vec<String>> { posts.iter().map(|p| tokenize_normalize(&strip_markup(p), &stopwords)).collect() };
    let similarity = novelty_diversity(&tok(&pools.background), &tok(&other_pools.background), sample_size, repeats, syn.seed)?;
    let summary = SynthSummary {
        f,
        seed: syn.seed,
        n_messages: corpus.messages.len(),
        split_instant: corpus.dataset.split_instant,
        similarity,
    };
    ctx.write_with("synth", "messages.jsonl", |w| write_jsonl(&corpus.messages, w))?;
    write_dataset(ctx, "synth", &corpus.dataset)?;
    ctx.write_json("synth", "synth.json", &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"dataset": {{"messages": "{0}/m.jsonl", "packages": ["django"], "event_kind": "minor", "design": "calendar_week"}}}}"#,
            dir.display()
        ))
        .unwrap()
    }

    #[test]
    fn missing_events_is_named() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("m.jsonl"), "").unwrap();
        let err = run_pipeline(config(dir.path()), &dir.path().join("out"), &[ReportFormat::Json]).unwrap_err();
        assert!(err.to_string().contains("missing input: events"), "{err}");
        assert!(err.to_string().contains("ingest"));
    }

    #[test]
    fn lock_and_hash_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let c = config(dir.path());
        let held = RunContext::open(c.clone(), &out).unwrap();
        assert!(RunContext::open(c.clone(), &out).is_err());
        drop(held);
        let other = ExperimentConfig { seed: 9, ..c };
        let err = RunContext::open(other, &out).err().unwrap();
        assert!(err.to_string().contains("holds artifacts of config"));
    }
}
