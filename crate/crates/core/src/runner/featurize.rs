//! Messages to per-step feature rows: markup stripping, collocations,
//! vocabulary, LDA, per-message θ and sentiment, mean pooling.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Message;
use crate::error::{Error, Result};
use crate::features::{build_feature_matrix, feature_columns, message_vector, FeatureMatrix};
use crate::seed;
use crate::sentiment::{score_sentiment, Lexicon};
use crate::textprep::{detect_collocations, strip_markup, tokenize_normalize, Collocations, Stopwords, TextConfig, Vocabulary};
use crate::timegrid::{Partition, StepDataset};
use crate::topics::{coherence_cv, reference_ids, select_k, train_lda, Coherence, KSelection, TopicModel, TopicsConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Featurized {
    pub vocabulary: Vocabulary,
    pub collocations: Collocations,
    pub model: TopicModel,
    pub k: usize,
    pub k_selection: Option<KSelection>,
    pub coherence: Coherence,
    pub features: FeatureMatrix,
}

struct Prepared<'a> {
    ids: Vec<&'a str>,
    clean: Vec<String>,
    streams: Vec<Vec<String>>,
    train_rows: Vec<usize>,
}

/// Messages referenced by the dataset, in step order without repeats;
/// rows of training steps are listed in `train_rows`.
fn prepare<'a>(messages: &'a [Message], dataset: &StepDataset, stopwords: &Stopwords) -> Result<Prepared<'a>> {
    let by_id: HashMap<&str, &Message> = messages.iter().map(|m| (m.id.as_str(), m)).collect();
    let mut order: BTreeMap<&str, (usize, bool)> = BTreeMap::new();
    let mut ids = Vec::new();
    for (part, step) in dataset.steps() {
        for id in &step.message_ids {
            let m = by_id.get(id.as_str()).ok_or_else(|| Error::MissingInput(format!("message {id}")))?;
            let entry = order.entry(m.id.as_str()).or_insert_with(|| {
                ids.push(m.id.as_str());
                (ids.len() - 1, false)
            });
            entry.1 |= part == Partition::Train;
        }
    }
    let clean: Vec<String> = ids.par_iter().map(|id| strip_markup(&by_id[id].body_raw)).collect();
    let streams: Vec<Vec<String>> = clean.par_iter().map(|t| tokenize_normalize(t, stopwords)).collect();
    let mut train_rows: Vec<usize> = order.values().filter(|(_, train)| *train).map(|(i, _)| *i).collect();
    train_rows.sort_unstable();
    Ok(Prepared { ids, clean, streams, train_rows })
}

/// Fits every text model on messages of training steps only and pools
/// message vectors for all steps. Seeds: `derive(seed, "lda", 0)` for the
/// topic model (and the k search), `derive(seed, "theta", 0)` for fold-in.
pub fn featurize(
    messages: &[Message],
    dataset: &StepDataset,
    text: &TextConfig,
    topics: &TopicsConfig,
    stopwords: &Stopwords,
    lexicon: &Lexicon,
    seed: u64,
) -> Result<Featurized> {
    let prep = prepare(messages, dataset, stopwords)?;
    if prep.train_rows.is_empty() {
        return Err(Error::Empty("no training messages"));
    }
    let train_raw: Vec<Vec<String>> = prep.train_rows.iter().map(|&i| prep.streams[i].clone()).collect();
    let collocations = detect_collocations(&train_raw, text.collocation_min_count, text.collocation_threshold)?;
    let streams: Vec<Vec<String>> = prep.streams.par_iter().map(|s| collocations.apply(s)).collect();
    let train_streams: Vec<Vec<String>> = prep.train_rows.iter().map(|&i| streams[i].clone()).collect();
    let vocabulary = Vocabulary::fit(&train_streams, text.min_df, text.max_df_fraction)?;
    let docs: Vec<Vec<u32>> = streams.iter().map(|s| vocabulary.encode_ids(s)).collect();
    let train_docs: Vec<Vec<u32>> = prep.train_rows.iter().map(|&i| docs[i].clone()).collect();
    let reference = reference_ids(&vocabulary, &train_streams);

    let lda_seed = seed::derive(seed, "lda", 0);
    let (k, k_selection) = match topics.k {
        Some(k) => (k, None),
        None => {
            let base = topics.lda(topics.k_grid[0], lda_seed);
            let sel = select_k(&train_docs, &vocabulary, &reference, &topics.k_grid, topics.n_seeds, &base, topics.top_n, topics.window)?;
            (sel.chosen_k, Some(sel))
        }
    };
    let model = train_lda(&train_docs, &vocabulary, &topics.lda(k, lda_seed))?;
    let coherence = coherence_cv(&model, &reference, topics.top_n, topics.window)?;

    let thetas = model.infer_theta_batch(&docs, topics.fold_in_sweeps, seed::derive(seed, "theta", 0));
    let vectors: HashMap<String, Vec<f64>> = prep
        .ids
        .par_iter()
        .zip(prep.clean.par_iter())
        .zip(thetas.par_iter())
        .map(|((id, clean), theta)| (id.to_string(), message_vector(theta, score_sentiment(clean, lexicon))))
        .collect();
    let features = build_feature_matrix(dataset, &vectors, feature_columns(k))?;
    Ok(Featurized { vocabulary, collocations, model, k, k_selection, coherence, features })
}
