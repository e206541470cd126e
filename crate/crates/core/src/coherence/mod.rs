//! Topic coherence (UMass and embedding-based TC-W2V) and the sweep over
//! candidate topic counts.

mod w2v;

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bow::PreparedCorpus;
use crate::error::ensure_config;
use crate::linalg::cosine;
use crate::preprocess::TokenizedDoc;
use crate::topics::{train_model, ModelKind, TrainParams};
use crate::{Error, Result};

pub use w2v::{train_word2vec, W2VConfig, W2VModel};

pub const DEFAULT_TOP_N: usize = 10;

/// UMass coherence with natural logs:
/// per topic the mean over ordered pairs `j < i` of
/// `ln((D(w_i, w_j) + 1) / D(w_j))`, averaged over topics. Pairs whose
/// conditioning term `w_j` occurs in no document are skipped.
pub fn umass_coherence(topics: &[Vec<String>], docs: &[TokenizedDoc]) -> Result<f64> {
    ensure_config!(
        topics.iter().all(|t| t.len() >= 2),
        "UMass coherence needs at least 2 terms per topic"
    );
    let wanted: HashSet<&str> = topics.iter().flatten().map(String::as_str).collect();
    let mut postings: HashMap<&str, Vec<u32>> = HashMap::new();
    for (d, doc) in docs.iter().enumerate() {
        let uniq: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for t in uniq {
            if wanted.contains(t) {
                postings.entry(t).or_default().push(d as u32);
            }
        }
    }
    let empty = Vec::new();
    let docs_of = |w: &str| postings.get(w).unwrap_or(&empty);

    let mut topic_scores = Vec::new();
    for terms in topics {
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 1..terms.len() {
            for j in 0..i {
                let dj = docs_of(&terms[j]);
                if dj.is_empty() {
                    continue;
                }
                let both = intersection_len(docs_of(&terms[i]), dj);
                sum += ((both as f64 + 1.0) / dj.len() as f64).ln();
                pairs += 1;
            }
        }
        if pairs > 0 {
            topic_scores.push(sum / pairs as f64);
        }
    }
    if topic_scores.is_empty() {
        return Err(Error::NoCoOccurrence);
    }
    Ok(topic_scores.iter().sum::<f64>() / topic_scores.len() as f64)
}

fn intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Mean pairwise cosine of the topic terms' embeddings, averaged over
/// topics. Terms without a vector are ignored; topics left with fewer than
/// two embedded terms are skipped.
pub fn tcw2v_coherence(topics: &[Vec<String>], w2v: &W2VModel) -> Result<f64> {
    let mut topic_scores = Vec::new();
    for terms in topics {
        let vecs: Vec<&[f64]> = terms.iter().filter_map(|t| w2v.vector(t)).collect();
        if vecs.len() < 2 {
            continue;
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..vecs.len() {
            for j in i + 1..vecs.len() {
                sum += cosine(vecs[i], vecs[j]);
                pairs += 1;
            }
        }
        topic_scores.push(sum / pairs as f64);
    }
    if topic_scores.is_empty() {
        return Err(Error::NoEmbeddedTopics);
    }
    Ok(topic_scores.iter().sum::<f64>() / topic_scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub model: ModelKind,
    pub scores: BTreeMap<usize, f64>,
    pub best_k: usize,
}

impl SweepResult {
    /// Picks the highest score; ties go to the smallest k.
    pub fn from_scores(model: ModelKind, scores: BTreeMap<usize, f64>) -> Result<Self> {
        let best_k = scores
            .iter()
            .fold(None, |best: Option<(usize, f64)>, (&k, &s)| match best {
                Some((_, bs)) if s <= bs => best,
                _ => Some((k, s)),
            })
            .map(|(k, _)| k)
            .ok_or_else(|| Error::Config("sweep needs at least one k".into()))?;
        Ok(SweepResult {
            model,
            scores,
            best_k,
        })
    }

    /// `k,score` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,score\n");
        for (k, s) in &self.scores {
            out.push_str(&format!("{k},{s}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub model: ModelKind,
    pub k_values: Vec<usize>,
    pub top_n: usize,
    pub train: TrainParams,
    pub w2v: W2VConfig,
}

impl SweepConfig {
    pub fn new(model: ModelKind, k_values: Vec<usize>, seed: u64) -> Self {
        SweepConfig {
            model,
            k_values,
            top_n: DEFAULT_TOP_N,
            train: TrainParams {
                seed,
                ..TrainParams::default()
            },
            w2v: W2VConfig {
                seed,
                ..W2VConfig::default()
            },
        }
    }
}

/// Trains one model per candidate k and scores it: UMass for LDA and LSA,
/// TC-W2V for NMF. Candidates are trained in parallel; each run is
/// single-threaded and seeded identically, so the result does not depend on
/// the thread count.
pub fn sweep(corpus: &PreparedCorpus, config: &SweepConfig) -> Result<SweepResult> {
    ensure_config!(!config.k_values.is_empty(), "sweep needs at least one k");
    ensure_config!(
        config.k_values.iter().all(|&k| k >= 2),
        "every candidate k must be >= 2"
    );
    ensure_config!(config.top_n >= 2, "coherence needs top_n >= 2");
    let w2v = match config.model {
        ModelKind::Nmf => Some(train_word2vec(&corpus.docs, &config.w2v)?),
        _ => None,
    };
    let scores: Vec<(usize, f64)> = config
        .k_values
        .par_iter()
        .map(|&k| {
            let model = train_model(corpus, config.model, k, &config.train)?;
            let terms = model.all_top_terms(config.top_n);
            let score = match &w2v {
                Some(w2v) => tcw2v_coherence(&terms, w2v)?,
                None => umass_coherence(&terms, &corpus.docs)?,
            };
            Ok((k, score))
        })
        .collect::<Result<_>>()?;
    SweepResult::from_scores(config.model, scores.into_iter().collect())
}
