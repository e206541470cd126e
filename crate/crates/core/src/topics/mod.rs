//! LSA, NMF and LDA topic models, keyword extraction and topic prediction.
//!
//! Topics are 0-based inside the crate; user-facing labels are 1-based with
//! 0 reserved for the "incomprehensible" class.

mod lda;
mod lsa;
mod nmf;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bow::{doc2bow, Dictionary, PreparedCorpus};
use crate::preprocess::TokenizedDoc;
use crate::{Error, Result};

pub use lda::{
    default_alpha, infer_lda, train_lda, InferConfig, LdaConfig, LdaModel, DEFAULT_BETA,
    DEFAULT_INFER_BURN, DEFAULT_INFER_ITERS, DEFAULT_ITERS,
};
pub use lsa::{train_lsa, LsaModel};
pub use nmf::{residual_norm, train_nmf, NmfConfig, NmfModel, DEFAULT_MAX_ITER, DEFAULT_TOL};

pub const DEFAULT_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lda,
    Nmf,
    Lsa,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Lda => "lda",
            ModelKind::Nmf => "nmf",
            ModelKind::Lsa => "lsa",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lda" => Ok(ModelKind::Lda),
            "nmf" => Ok(ModelKind::Nmf),
            "lsa" => Ok(ModelKind::Lsa),
            other => Err(Error::Config(format!(
                "unknown model type {other:?} (expected lda, nmf or lsa)"
            ))),
        }
    }
}

/// Any trained model, tagged by `"type"` in its JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TopicModel {
    Lda(LdaModel),
    Nmf(NmfModel),
    Lsa(LsaModel),
}

impl TopicModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TopicModel::Lda(_) => ModelKind::Lda,
            TopicModel::Nmf(_) => ModelKind::Nmf,
            TopicModel::Lsa(_) => ModelKind::Lsa,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            TopicModel::Lda(m) => m.k,
            TopicModel::Nmf(m) => m.k,
            TopicModel::Lsa(m) => m.k,
        }
    }

    pub fn vocab(&self) -> &[String] {
        match self {
            TopicModel::Lda(m) => &m.vocab,
            TopicModel::Nmf(m) => &m.vocab,
            TopicModel::Lsa(m) => &m.vocab,
        }
    }

    pub fn dictionary_hash(&self) -> &str {
        match self {
            TopicModel::Lda(m) => &m.dictionary_hash,
            TopicModel::Nmf(m) => &m.dictionary_hash,
            TopicModel::Lsa(m) => &m.dictionary_hash,
        }
    }

    /// Raw term weights of one topic: the phi row, the H row or the V^T row.
    pub fn topic_row(&self, topic: usize) -> Result<&[f64]> {
        let k = self.k();
        if topic >= k {
            return Err(Error::TopicOutOfRange { topic, k });
        }
        Ok(match self {
            TopicModel::Lda(m) => &m.phi[topic],
            TopicModel::Nmf(m) => &m.h[topic],
            TopicModel::Lsa(m) => &m.vt[topic],
        })
    }

    /// The `n` highest-weight terms of `topic` (0-based) in descending
    /// order. LSA ranks by absolute loading but reports the signed value.
    /// Ties go to the smaller term id.
    pub fn top_terms(&self, topic: usize, n: usize) -> Result<Vec<(String, f64)>> {
        let row = self.topic_row(topic)?;
        let key = |w: f64| match self {
            TopicModel::Lsa(_) => w.abs(),
            _ => w,
        };
        Ok(top_indices(row, n, key)
            .into_iter()
            .map(|j| (self.vocab().get(j).cloned().unwrap_or_else(|| j.to_string()), row[j]))
            .collect())
    }

    /// Top-n term strings for every topic.
    pub fn all_top_terms(&self, n: usize) -> Vec<Vec<String>> {
        (0..self.k())
            .map(|t| {
                self.top_terms(t, n)
                    .expect("topic in range")
                    .into_iter()
                    .map(|(w, _)| w)
                    .collect()
            })
            .collect()
    }

    pub fn as_lda(&self) -> Option<&LdaModel> {
        match self {
            TopicModel::Lda(m) => Some(m),
            _ => None,
        }
    }
}

/// Indices of the `n` largest `key(row[j])`, ties broken by smaller index.
pub(crate) fn top_indices(row: &[f64], n: usize, key: impl Fn(f64) -> f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| key(row[b]).total_cmp(&key(row[a])).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicPrediction {
    /// 1-based topic, or 0 for "incomprehensible".
    pub label: u32,
    pub theta: Vec<f64>,
    /// max(theta) - 1/k.
    pub confidence_margin: f64,
}

/// Applies the labeling rule to a topic distribution: the 1-based argmax,
/// unless the peak exceeds uniform by less than `margin`.
pub fn label_from_theta(theta: Vec<f64>, margin: f64) -> TopicPrediction {
    let k = theta.len();
    let (best, max) = theta
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let confidence_margin = max - 1.0 / k as f64;
    let label = if confidence_margin < margin { 0 } else { best as u32 + 1 };
    TopicPrediction {
        label,
        theta,
        confidence_margin,
    }
}

pub fn predict_topic(
    model: &LdaModel,
    dict: &Dictionary,
    doc: &TokenizedDoc,
    margin: f64,
    infer: &InferConfig,
) -> Result<TopicPrediction> {
    let (bow, _) = doc2bow(dict, doc);
    let theta = infer_lda(model, &bow, infer)?;
    Ok(label_from_theta(theta, margin))
}

/// Hyperparameters for any of the three model types. `alpha = None` means
/// the `50 / k` default.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iters: usize,
    pub nmf_max_iter: usize,
    pub nmf_tol: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            alpha: None,
            beta: DEFAULT_BETA,
            iters: DEFAULT_ITERS,
            nmf_max_iter: DEFAULT_MAX_ITER,
            nmf_tol: DEFAULT_TOL,
            seed: 0,
        }
    }
}

/// Trains one model: LDA on raw counts, NMF and LSA on TF-IDF.
pub fn train_model(
    corpus: &PreparedCorpus,
    kind: ModelKind,
    k: usize,
    params: &TrainParams,
) -> Result<TopicModel> {
    let vocab = corpus.dictionary.tokens();
    let hash = corpus.dictionary.content_hash();
    Ok(match kind {
        ModelKind::Lda => {
            let config = LdaConfig {
                k,
                alpha: params.alpha.unwrap_or_else(|| default_alpha(k)),
                beta: params.beta,
                iters: params.iters,
                seed: params.seed,
            };
            TopicModel::Lda(train_lda(&corpus.bows, vocab, &hash, &config)?)
        }
        ModelKind::Nmf => {
            let config = NmfConfig {
                k,
                max_iter: params.nmf_max_iter,
                tol: params.nmf_tol,
                seed: params.seed,
            };
            TopicModel::Nmf(train_nmf(&corpus.tfidf(), vocab, &hash, &config)?)
        }
        ModelKind::Lsa => TopicModel::Lsa(train_lsa(&corpus.tfidf(), k, vocab, &hash)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lda(phi: Vec<Vec<f64>>, vocab: &[&str]) -> TopicModel {
        TopicModel::Lda(LdaModel {
            k: phi.len(),
            alpha: 0.1,
            beta: 0.01,
            phi,
            vocab: vocab.iter().map(|s| s.to_string()).collect(),
            seed: 0,
            iters: 1,
            dictionary_hash: String::new(),
        })
    }

    #[test]
    fn top_terms_sorted() {
        let m = lda(vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]], &["diet", "gym", "go"]);
        assert_eq!(
            m.top_terms(0, 2).unwrap(),
            vec![("diet".to_string(), 0.5), ("gym".to_string(), 0.3)]
        );
        assert_eq!(m.top_terms(1, 10).unwrap().len(), 3);
        assert!(matches!(m.top_terms(2, 1), Err(Error::TopicOutOfRange { topic: 2, k: 2 })));
    }

    #[test]
    fn top_terms_ties_prefer_smaller_id() {
        let m = lda(vec![vec![0.25, 0.25, 0.5], vec![1.0 / 3.0; 3]], &["a", "b", "c"]);
        let terms: Vec<_> = m.top_terms(0, 3).unwrap().into_iter().map(|(t, _)| t).collect();
        assert_eq!(terms, ["c", "a", "b"]);
    }

    #[test]
    fn lsa_ranks_by_absolute_loading() {
        let m = TopicModel::Lsa(LsaModel {
            k: 1,
            u: vec![vec![1.0]],
            sigma: vec![1.0],
            vt: vec![vec![-0.9, 0.1]],
            vocab: vec!["a".into(), "b".into()],
            dictionary_hash: String::new(),
        });
        assert_eq!(m.top_terms(0, 1).unwrap(), vec![("a".to_string(), -0.9)]);
    }

    #[test]
    fn labeling_rule() {
        assert_eq!(label_from_theta(vec![0.89, 0.05, 0.03, 0.03], 0.05).label, 1);
        assert_eq!(label_from_theta(vec![0.25; 4], 0.05).label, 0);
        assert_eq!(label_from_theta(vec![0.26, 0.25, 0.25, 0.24], 0.05).label, 0);
        assert_eq!(label_from_theta(vec![0.1, 0.2, 0.7], 0.05).label, 3);
    }

    #[test]
    fn model_json_is_tagged() {
        let m = lda(vec![vec![0.5, 0.5], vec![0.5, 0.5]], &["a", "b"]);
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["type"], "lda");
        assert_eq!(v["k"], 2);
        assert_eq!(v["phi"][0][1], 0.5);
        let back: TopicModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
        assert_eq!("NMF".parse::<ModelKind>().unwrap(), ModelKind::Nmf);
        assert!("pca".parse::<ModelKind>().unwrap_err().is_config());
    }
}
